import struct

import pytest

from clipsift.wav import WavFormatError, verify_audio_format


def write_wav(
    path,
    seconds=1.0,
    sample_rate=44100,
    channels=1,
    bits=16,
    audio_format=1,
    extra_chunk=False,
):
    """Synthesize a silent WAV file with the given header parameters."""
    block_align = channels * bits // 8
    n_frames = int(round(seconds * sample_rate))
    data = b"\x00" * (n_frames * block_align)
    fmt = struct.pack(
        "<HHIIHH",
        audio_format,
        channels,
        sample_rate,
        sample_rate * block_align,
        block_align,
        bits,
    )
    chunks = b"fmt " + struct.pack("<I", len(fmt)) + fmt
    if extra_chunk:
        note = b"odd"  # 3 bytes: exercises chunk padding
        chunks += b"note" + struct.pack("<I", len(note)) + note + b"\x00"
    chunks += b"data" + struct.pack("<I", len(data)) + data
    body = b"WAVE" + chunks
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    return path


class TestConforming:
    def test_one_second_mono_16bit_44k1_passes(self, tmp_path):
        report = verify_audio_format(write_wav(tmp_path / "ok.wav"))
        assert report.ok
        assert report.violations == ()
        assert report.duration == pytest.approx(1.000, abs=1e-6)

    def test_boundary_durations_with_tolerance(self, tmp_path):
        low = verify_audio_format(write_wav(tmp_path / "low.wav", seconds=0.295))
        high = verify_audio_format(write_wav(tmp_path / "high.wav", seconds=30.005))
        assert low.ok and high.ok

    def test_extra_chunks_are_skipped(self, tmp_path):
        report = verify_audio_format(
            write_wav(tmp_path / "chunky.wav", extra_chunk=True)
        )
        assert report.ok


class TestRejections:
    def test_stereo_names_channels(self, tmp_path):
        report = verify_audio_format(write_wav(tmp_path / "st.wav", channels=2))
        assert not report.ok
        assert "channels" in report.violations
        assert report.channels == 2

    def test_8_bit_names_bit_depth(self, tmp_path):
        report = verify_audio_format(write_wav(tmp_path / "8b.wav", bits=8))
        assert "bit_depth" in report.violations

    def test_48k_names_sample_rate(self, tmp_path):
        report = verify_audio_format(write_wav(tmp_path / "48k.wav", sample_rate=48000))
        assert "sample_rate" in report.violations

    def test_non_pcm_names_codec(self, tmp_path):
        report = verify_audio_format(write_wav(tmp_path / "f.wav", audio_format=3))
        assert "codec" in report.violations

    def test_too_short_names_duration(self, tmp_path):
        report = verify_audio_format(write_wav(tmp_path / "short.wav", seconds=0.2))
        assert "duration" in report.violations
        assert report.duration == pytest.approx(0.2, abs=1e-6)

    def test_too_long_names_duration(self, tmp_path):
        report = verify_audio_format(write_wav(tmp_path / "long.wav", seconds=30.5))
        assert "duration" in report.violations

    def test_multiple_violations_all_reported(self, tmp_path):
        report = verify_audio_format(
            write_wav(tmp_path / "bad.wav", channels=2, bits=8, sample_rate=48000)
        )
        assert set(report.violations) >= {"channels", "bit_depth", "sample_rate"}


class TestContainerErrors:
    def test_non_riff_file(self, tmp_path):
        path = tmp_path / "x.wav"
        path.write_bytes(b"OggS" + b"\x00" * 64)
        with pytest.raises(WavFormatError, match="not a RIFF"):
            verify_audio_format(path)

    def test_riff_but_not_wave(self, tmp_path):
        path = tmp_path / "x.avi"
        path.write_bytes(b"RIFF" + struct.pack("<I", 4) + b"AVI ")
        with pytest.raises(WavFormatError, match="not WAVE"):
            verify_audio_format(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "t.wav"
        path.write_bytes(b"RI")
        with pytest.raises(WavFormatError, match="truncated"):
            verify_audio_format(path)

    def test_missing_data_chunk(self, tmp_path):
        fmt = struct.pack("<HHIIHH", 1, 1, 44100, 88200, 2, 16)
        body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
        path = tmp_path / "nodata.wav"
        path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
        with pytest.raises(WavFormatError, match="missing data"):
            verify_audio_format(path)

    def test_report_serialises(self, tmp_path):
        report = verify_audio_format(write_wav(tmp_path / "ok.wav"))
        d = report.to_json_dict()
        assert d["ok"] is True and d["sample_rate"] == 44100

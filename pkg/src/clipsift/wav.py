"""RIFF/WAVE header parsing and delivery-format verification.

The delivery format is PCM, 16-bit, mono, 44.1 kHz, with a duration
inside [0.3 s, 30 s] (10 ms tolerance).  Only the container header is
inspected; sample data is never decoded.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

PCM_FORMAT = 1

REQUIRED_CHANNELS = 1
REQUIRED_SAMPLE_RATE = 44100
REQUIRED_BIT_DEPTH = 16
DURATION_RANGE = (0.3, 30.0)
DURATION_TOLERANCE = 0.010


class WavFormatError(Exception):
    """File is not a parseable RIFF/WAVE container."""


@dataclass(frozen=True)
class FormatReport:
    """Parsed header parameters and the fields that violate the contract."""

    path: str
    audio_format: int
    channels: int
    sample_rate: int
    bits_per_sample: int
    duration: float
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json_dict(self) -> dict:
        return {
            "path": self.path,
            "audio_format": self.audio_format,
            "channels": self.channels,
            "sample_rate": self.sample_rate,
            "bits_per_sample": self.bits_per_sample,
            "duration": self.duration,
            "violations": list(self.violations),
            "ok": self.ok,
        }


def _read_exact(f, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise WavFormatError(f"truncated file while reading {what}")
    return data


def verify_audio_format(path: Union[str, Path]) -> FormatReport:
    """Parse the RIFF/WAVE header and check the delivery-format contract.

    Raises WavFormatError for non-WAV containers; otherwise returns a
    FormatReport whose ``violations`` tuple names every offending field
    ("codec", "channels", "sample_rate", "bit_depth", "duration").
    """
    path = Path(path)
    with open(path, "rb") as f:
        if _read_exact(f, 4, "RIFF id") != b"RIFF":
            raise WavFormatError(f"{path}: not a RIFF container")
        _read_exact(f, 4, "RIFF size")
        if _read_exact(f, 4, "WAVE id") != b"WAVE":
            raise WavFormatError(f"{path}: RIFF container is not WAVE")

        fmt = None
        data_size = None
        while fmt is None or data_size is None:
            header = f.read(8)
            if len(header) < 8:
                break
            chunk_id, chunk_size = struct.unpack("<4sI", header)
            if chunk_id == b"fmt ":
                if chunk_size < 16:
                    raise WavFormatError(f"{path}: fmt chunk too short")
                fmt = struct.unpack("<HHIIHH", _read_exact(f, 16, "fmt chunk"))
                f.seek(chunk_size - 16 + chunk_size % 2, 1)
            elif chunk_id == b"data":
                data_size = chunk_size
                f.seek(chunk_size + chunk_size % 2, 1)
            else:
                f.seek(chunk_size + chunk_size % 2, 1)
        if fmt is None:
            raise WavFormatError(f"{path}: missing fmt chunk")
        if data_size is None:
            raise WavFormatError(f"{path}: missing data chunk")

    audio_format, channels, sample_rate, _byte_rate, block_align, bits = fmt
    if channels < 1 or sample_rate < 1 or block_align < 1:
        raise WavFormatError(f"{path}: degenerate fmt parameters")
    duration = data_size / (sample_rate * block_align)

    violations = []
    if audio_format != PCM_FORMAT:
        violations.append("codec")
    if channels != REQUIRED_CHANNELS:
        violations.append("channels")
    if sample_rate != REQUIRED_SAMPLE_RATE:
        violations.append("sample_rate")
    if bits != REQUIRED_BIT_DEPTH:
        violations.append("bit_depth")
    low, high = DURATION_RANGE
    if not (low - DURATION_TOLERANCE <= duration <= high + DURATION_TOLERANCE):
        violations.append("duration")

    return FormatReport(
        path=str(path),
        audio_format=audio_format,
        channels=channels,
        sample_rate=sample_rate,
        bits_per_sample=bits,
        duration=duration,
        violations=tuple(violations),
    )

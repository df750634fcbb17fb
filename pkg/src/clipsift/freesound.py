"""Rate-limited platform API client with a resumable metadata cache.

Metadata is fetched page by page from the search endpoint with a duration
filter, persisted to an append-only JSONL cache before the page cursor
advances, and re-checked client-side against the duration window.  A JSON
state sidecar next to the cache records the next page to fetch plus
deleted/failed clip flags, so interrupted crawls resume exactly where
they stopped.  Audio downloads go through a pluggable external converter
command and are verified against the WAV delivery contract.
"""

from __future__ import annotations

import json
import logging
import shlex
import subprocess
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Optional, Sequence, Union

import requests

from .wav import FormatReport, WavFormatError, verify_audio_format

log = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://freesound.org/apiv2"
DEFAULT_FIELDS = "id,tags,description,duration,license,download"
DURATION_WINDOW = (0.3, 30.0)


class FreesoundError(Exception):
    """Base class for client failures."""


class AuthError(FreesoundError):
    """Credentials were rejected; fatal."""


class FetchAbortError(FreesoundError):
    """Retries exhausted; the crawl state is persisted and resumable."""


class ConversionError(FreesoundError):
    """The external converter failed or produced a non-conforming file."""


@dataclass(frozen=True)
class ClipRecord:
    """Metadata for one platform clip."""

    clip_id: str
    tags: tuple[str, ...]
    description: str
    duration: float
    license: str
    download_url: str

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"clip {self.clip_id!r}: duration must be positive")

    def to_json_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "tags": list(self.tags),
            "description": self.description,
            "duration": self.duration,
            "license": self.license,
            "download_url": self.download_url,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ClipRecord":
        return cls(
            clip_id=str(d["clip_id"]),
            tags=tuple(d.get("tags", ())),
            description=d.get("description", "") or "",
            duration=float(d["duration"]),
            license=d.get("license", "") or "",
            download_url=d.get("download_url", "") or "",
        )


class MetadataCache:
    """Append-only JSONL store of ClipRecord keyed by clip_id.

    Re-fetching an id overwrites the in-memory record (the newest line
    wins on load); iteration is deterministic, ascending by clip_id.
    """

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.state_path = Path(str(path) + ".state")
        self._records: dict[str, ClipRecord] = {}
        self._write_lock = threading.Lock()
        self.next_page = 1
        self.complete = False
        self.deleted: set[str] = set()
        self.failed: set[str] = set()
        self._load()

    def _load(self) -> None:
        if self.path.exists():
            with open(self.path, encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if not line:
                        continue
                    record = ClipRecord.from_json_dict(json.loads(line))
                    self._records[record.clip_id] = record
        if self.state_path.exists():
            state = json.loads(self.state_path.read_text(encoding="utf-8"))
            self.next_page = int(state.get("next_page", 1))
            self.complete = bool(state.get("complete", False))
            self.deleted = set(state.get("deleted", []))
            self.failed = set(state.get("failed", []))

    def _save_state(self) -> None:
        state = {
            "next_page": self.next_page,
            "complete": self.complete,
            "deleted": sorted(self.deleted),
            "failed": sorted(self.failed),
        }
        self.state_path.write_text(
            json.dumps(state, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def add_page(self, records: Sequence[ClipRecord], next_page: int) -> None:
        """Persist a fetched page, then advance the high-water mark."""
        with self._write_lock:
            with open(self.path, "a", encoding="utf-8") as f:
                for record in records:
                    f.write(json.dumps(record.to_json_dict(), sort_keys=True) + "\n")
            for record in records:
                self._records[record.clip_id] = record
            self.next_page = next_page
            self._save_state()

    def mark_complete(self) -> None:
        with self._write_lock:
            self.complete = True
            self._save_state()

    def mark_deleted(self, clip_id: str) -> None:
        with self._write_lock:
            self.deleted.add(clip_id)
            self._save_state()

    def mark_failed(self, clip_id: str) -> None:
        with self._write_lock:
            self.failed.add(clip_id)
            self._save_state()

    def get(self, clip_id: str) -> Optional[ClipRecord]:
        return self._records.get(clip_id)

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, clip_id: object) -> bool:
        return clip_id in self._records

    def __iter__(self) -> Iterator[ClipRecord]:
        for clip_id in sorted(self._records):
            yield self._records[clip_id]


class RateBudget:
    """Token pacing: at most ``rate_per_sec`` acquisitions per second.

    Thread-safe; the clock and sleep functions are injectable so tests
    can drive a virtual timeline.
    """

    def __init__(
        self,
        rate_per_sec: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if rate_per_sec <= 0:
            raise ValueError("rate_per_sec must be positive")
        self.interval = 1.0 / rate_per_sec
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next_allowed = 0.0

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            wait = self._next_allowed - now
            if wait > 0:
                self._sleep(wait)
                now = self._next_allowed
            self._next_allowed = max(now, self._next_allowed) + self.interval


class Converter:
    """External transcoder invoked from a command template.

    The template must contain ``{src}`` and ``{dst}`` placeholders, e.g.
    ``ffmpeg -y -i {src} -ac 1 -ar 44100 -sample_fmt s16 {dst}``.
    """

    def __init__(self, command_template: str):
        if "{src}" not in command_template or "{dst}" not in command_template:
            raise ValueError("converter template must contain {src} and {dst}")
        self.command_template = command_template

    def convert(self, src: Path, dst: Path) -> None:
        argv = [
            part.format(src=str(src), dst=str(dst))
            for part in shlex.split(self.command_template)
        ]
        result = subprocess.run(argv, capture_output=True)
        if result.returncode != 0:
            raise ConversionError(
                f"converter exited {result.returncode}: {result.stderr.decode(errors='replace')[:500]}"
            )


class FreesoundClient:
    """Search and download client sharing one rate budget.

    ``transport`` is a requests.Session-compatible object (``.get()``
    returning status_code/json()/content); tests inject fakes.
    """

    def __init__(
        self,
        api_key: str,
        transport=None,
        base_url: str = DEFAULT_BASE_URL,
        rate_per_sec: float = 1.0,
        max_retries: int = 5,
        backoff_base: float = 1.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
        timeout: float = 30.0,
    ):
        self.api_key = api_key
        self.transport = transport if transport is not None else requests.Session()
        self.base_url = base_url.rstrip("/")
        self.budget = RateBudget(rate_per_sec, clock=clock, sleep=sleep)
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self._sleep = sleep
        self.timeout = timeout

    def _get(self, url: str, params: Optional[dict] = None):
        """One rate-limited GET with exponential backoff on throttling."""
        last_error: Optional[Exception] = None
        for attempt in range(self.max_retries):
            self.budget.acquire()
            try:
                response = self.transport.get(url, params=params, timeout=self.timeout)
            except Exception as exc:  # network failure
                last_error = exc
                self._sleep(self.backoff_base * 2**attempt)
                continue
            if response.status_code in (401, 403):
                raise AuthError(f"credentials rejected ({response.status_code})")
            if response.status_code == 429 or response.status_code >= 500:
                last_error = FreesoundError(f"HTTP {response.status_code}")
                self._sleep(self.backoff_base * 2**attempt)
                continue
            return response
        raise FetchAbortError(f"retries exhausted for {url}: {last_error}")

    def fetch_metadata(
        self,
        cache: MetadataCache,
        duration_window: tuple[float, float] = DURATION_WINDOW,
        page_size: int = 150,
        fields: str = DEFAULT_FIELDS,
    ) -> Iterator[ClipRecord]:
        """Stream clip records, persisting each page before advancing.

        Resumes from the cache's high-water mark; records outside the
        duration window are re-checked and excluded client-side.
        Malformed pages are logged, skipped, and do not stall the crawl.
        """
        if cache.complete:
            return
        low, high = duration_window
        page = cache.next_page
        while True:
            response = self._get(
                f"{self.base_url}/search/text/",
                params={
                    "token": self.api_key,
                    "filter": f"duration:[{low} TO {high}]",
                    "page": page,
                    "page_size": page_size,
                    "fields": fields,
                },
            )
            if response.status_code == 404:  # past the last page
                cache.mark_complete()
                return
            if response.status_code != 200:
                raise FreesoundError(f"search returned HTTP {response.status_code}")
            try:
                payload = response.json()
                results = payload["results"]
                has_next = payload.get("next") is not None
            except Exception:
                log.warning("malformed page %d skipped", page)
                page += 1
                cache.add_page([], page)
                continue

            records = []
            for raw in results:
                try:
                    record = ClipRecord(
                        clip_id=str(raw["id"]),
                        tags=tuple(raw.get("tags", ())),
                        description=raw.get("description", "") or "",
                        duration=float(raw["duration"]),
                        license=raw.get("license", "") or "",
                        download_url=raw.get("download", "") or "",
                    )
                except (KeyError, TypeError, ValueError) as exc:
                    log.warning("page %d: skipping malformed record (%s)", page, exc)
                    continue
                if not (low <= record.duration <= high):
                    continue
                records.append(record)
            page += 1
            cache.add_page(records, page)
            yield from records
            if not has_next:
                cache.mark_complete()
                return

    def download_clip(
        self,
        clip_id: str,
        cache: MetadataCache,
        destination: Union[str, Path],
        converter: Converter,
    ) -> Optional[Path]:
        """Fetch, convert, and verify one clip; idempotent.

        Returns the verified WAV path, or None when the clip is deleted
        upstream (404, recorded) or conversion/verification fails
        (recorded, clip flagged).  An already-verified file short-circuits
        without any network traffic.
        """
        destination = Path(destination)
        destination.mkdir(parents=True, exist_ok=True)
        final_path = destination / f"{clip_id}.wav"
        if final_path.exists():
            try:
                if verify_audio_format(final_path).ok:
                    return final_path
            except WavFormatError:
                pass
        record = cache.get(clip_id)
        if record is None or not record.download_url:
            raise FreesoundError(f"clip {clip_id!r} is not in the cache")

        response = self._get(record.download_url)
        if response.status_code == 404:
            cache.mark_deleted(clip_id)
            log.info("clip %s deleted upstream", clip_id)
            return None
        if response.status_code != 200:
            raise FreesoundError(
                f"clip {clip_id}: download returned HTTP {response.status_code}"
            )
        raw_path = destination / f"{clip_id}.orig"
        raw_path.write_bytes(response.content)
        try:
            converter.convert(raw_path, final_path)
            report = verify_audio_format(final_path)
            if not report.ok:
                raise ConversionError(
                    f"clip {clip_id}: converted file violates {report.violations}"
                )
        except (ConversionError, WavFormatError) as exc:
            cache.mark_failed(clip_id)
            log.warning("clip %s flagged: %s", clip_id, exc)
            return None
        finally:
            raw_path.unlink(missing_ok=True)
        return final_path

    def download_many(
        self,
        clip_ids: Sequence[str],
        cache: MetadataCache,
        destination: Union[str, Path],
        converter: Converter,
        concurrency: int = 4,
    ) -> dict[str, Optional[Path]]:
        """Bounded-concurrency downloads sharing this client's rate budget."""
        results: dict[str, Optional[Path]] = {}
        with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
            futures = {
                clip_id: pool.submit(
                    self.download_clip, clip_id, cache, destination, converter
                )
                for clip_id in clip_ids
            }
            for clip_id, future in futures.items():
                results[clip_id] = future.result()
        return results


def verify_clip_file(path: Union[str, Path]) -> FormatReport:
    """Convenience re-export of the WAV delivery-format check."""
    return verify_audio_format(path)

"""Run configuration and machine-readable run reports.

One JSON config file plus per-flag overrides drive every subcommand;
flag overrides always take precedence over config-file values.
Credentials never live in the config: only the name of the environment
variable that holds the API key does.  Every run writes a JSON report
containing the seed, tau, input digests, and counts needed to reproduce
it; only the duration field varies between identical runs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from .curation import DEFAULT_MIN_COUNTS
from .noise import NoiseSpec

DEFAULT_CONVERTER = "ffmpeg -y -i {src} -ac 1 -ar 44100 -sample_fmt s16 {dst}"

# Config fields that point at input files and must exist once set.
_INPUT_PATH_FIELDS = (
    "ontology",
    "lexicon",
    "stop_words",
    "ground_truth_dev",
    "ground_truth_eval",
)


class ConfigError(Exception):
    """Invalid or incomplete configuration; names the offending field."""


@dataclass
class RunConfig:
    output_dir: Path = Path("out")
    ontology: Optional[Path] = None
    lexicon: Optional[Path] = None
    stop_words: Optional[Path] = None
    ground_truth_dev: Optional[Path] = None
    ground_truth_eval: Optional[Path] = None
    cache: Optional[Path] = None
    audio_dir: Optional[Path] = None
    tau: float = 0.5
    seed: int = 0
    noise: Optional[NoiseSpec] = None
    credentials_env: str = "FREESOUND_API_KEY"
    converter: str = DEFAULT_CONVERTER
    min_counts: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_MIN_COUNTS))
    rate_per_sec: float = 1.0
    page_size: int = 150

    def __post_init__(self):
        for name in (*_INPUT_PATH_FIELDS, "cache", "audio_dir", "output_dir"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, Path(value))
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau: must be in [0, 1], got {self.tau}")
        for name in _INPUT_PATH_FIELDS:
            value = getattr(self, name)
            if value is not None and not Path(value).exists():
                raise ConfigError(f"{name}: file not found: {value}")

    def require(self, *names: str) -> None:
        """Assert that the given fields are set (and, for paths, exist)."""
        for name in names:
            value = getattr(self, name)
            if value is None:
                raise ConfigError(f"{name}: required but not set")
            if name == "cache" and not Path(value).exists():
                raise ConfigError(f"cache: file not found: {value}")


def load_config(
    config_path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Build a RunConfig from an optional JSON file plus flag overrides.

    Precedence, total and documented: flag override > config file value >
    built-in default.  Unknown config keys are rejected.
    """
    values: dict[str, Any] = {}
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"config: file not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config: top-level value must be an object")
        known = {f.name for f in fields(RunConfig)}
        for key, value in raw.items():
            if key not in known:
                raise ConfigError(f"config: unknown key {key!r}")
            values[key] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    if isinstance(values.get("noise"), Mapping):
        values["noise"] = NoiseSpec(**values["noise"])
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(f"config: {exc}") from exc


def file_digest(path: Union[str, Path]) -> str:
    """SHA-256 hex digest of a file."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def write_report(
    output_dir: Union[str, Path],
    subcommand: str,
    config: RunConfig,
    inputs: Mapping[str, Union[str, Path]],
    counts: Mapping[str, int],
    dropped_classes: list[str],
    duration_ms: float,
) -> Path:
    """Write the run report; everything except duration_ms is deterministic."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "subcommand": subcommand,
        "seed": config.seed,
        "tau": config.tau,
        "input_digests": {
            name: file_digest(path) for name, path in sorted(inputs.items())
        },
        "counts": dict(sorted(counts.items())),
        "dropped_classes": sorted(dropped_classes),
        "duration_ms": duration_ms,
    }
    path = out / f"report-{subcommand}.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path

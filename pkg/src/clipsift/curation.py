"""Dataset curation: single-label reduction, count matching, manifests.

The clean dataset is derived from multi-label ground truth by dropping
multi-label clips, pruning ancestor classes, and enforcing per-split
instance minimums to a fixed point.  The noisy dataset is assembled from
retrieval output by excluding overlapping clips and sampling each class
down to the clean dataset's training count with a seeded generator;
classes that cannot be matched are dropped from both datasets.

Manifests serialize as a CSV (clip_id,label_id,label_name,split) plus a
JSON sidecar carrying name, seed, tau, source, tool_version,
dropped_classes, and per-class per-split counts.  Emission is
deterministic: identical manifests produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .ontology import LabelSet, Ontology, UnknownLabelError
from .retrieval import ScoredClip

SPLITS = ("train", "val", "test")

DEFAULT_MIN_COUNTS = {"train": 50, "val": 10, "test": 20}


class CurationError(Exception):
    """Base class for curation failures."""


class PairingError(CurationError):
    """Clean/noisy manifests disagree on a per-class count; names the class."""


@dataclass(frozen=True)
class GroundTruthEntry:
    """One multi-label ground-truth row."""

    clip_id: str
    labels: tuple[str, ...]
    split: str

    def __post_init__(self):
        if not self.labels:
            raise ValueError(f"clip {self.clip_id!r}: labels must be non-empty")
        if self.split not in SPLITS:
            raise ValueError(f"clip {self.clip_id!r}: invalid split {self.split!r}")


@dataclass(frozen=True)
class ManifestEntry:
    clip_id: str
    label_id: str
    label_name: str
    split: str


@dataclass
class DatasetManifest:
    """Labelled clip list with reproducibility provenance."""

    name: str
    entries: tuple[ManifestEntry, ...]
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.entries = tuple(self.entries)
        ids = [e.clip_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise CurationError(f"manifest {self.name!r} contains duplicate clip ids")

    def clip_ids(self) -> set[str]:
        return {e.clip_id for e in self.entries}

    def split_entries(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]

    def class_counts(self, split: Optional[str] = None) -> dict[str, int]:
        counts: dict[str, int] = {}
        for e in self.entries:
            if split is None or e.split == split:
                counts[e.label_id] = counts.get(e.label_id, 0) + 1
        return counts

    def label_names(self) -> dict[str, str]:
        return {e.label_id: e.label_name for e in self.entries}

    def validate_labels(self, label_set: LabelSet) -> None:
        unknown = {e.label_id for e in self.entries} - set(label_set.labels)
        if unknown:
            raise CurationError(
                f"manifest {self.name!r} carries labels outside the label set: "
                f"{sorted(unknown)}"
            )


def load_fsd50k_ground_truth(
    dev_csv: Union[str, Path], eval_csv: Union[str, Path]
) -> list[GroundTruthEntry]:
    """Read the published dev/eval ground-truth CSVs.

    dev rows are (fname, labels, mids, split) with split in {train, val};
    eval rows are (fname, labels, mids) and map to the test split.  The
    machine ids (mids) column supplies the ontology label ids.
    """
    entries: list[GroundTruthEntry] = []
    with open(dev_csv, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            entries.append(
                GroundTruthEntry(
                    clip_id=row["fname"],
                    labels=tuple(row["mids"].split(",")),
                    split=row["split"],
                )
            )
    with open(eval_csv, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            entries.append(
                GroundTruthEntry(
                    clip_id=row["fname"],
                    labels=tuple(row["mids"].split(",")),
                    split="test",
                )
            )
    return entries


def reduce_to_single_label(
    ground_truth: Sequence[GroundTruthEntry],
    ontology: Ontology,
    min_counts: Mapping[str, int] = DEFAULT_MIN_COUNTS,
) -> tuple[LabelSet, list[GroundTruthEntry]]:
    """Reduce multi-label ground truth to a single-label class universe.

    In order: drop multi-label clips; prune classes that are ontology
    ancestors of other surviving classes; iteratively remove classes with
    fewer than the per-split minimum instances until a fixed point.
    """
    for entry in ground_truth:
        for label in entry.labels:
            if label not in ontology:
                raise UnknownLabelError(
                    f"ground truth references unknown label {label!r}"
                )
    singles = [e for e in ground_truth if len(e.labels) == 1]
    classes = sorted({e.labels[0] for e in singles})
    kept = set(ontology.prune_ancestors(classes).labels)
    entries = [e for e in singles if e.labels[0] in kept]

    while True:
        counts: dict[str, dict[str, int]] = {c: dict.fromkeys(SPLITS, 0) for c in kept}
        for e in entries:
            counts[e.labels[0]][e.split] += 1
        removed = {
            c
            for c in kept
            if any(counts[c][s] < min_counts.get(s, 0) for s in SPLITS)
        }
        if not removed:
            break
        kept -= removed
        entries = [e for e in entries if e.labels[0] in kept]

    return LabelSet.from_ids(kept), entries


def manifest_from_ground_truth(
    entries: Sequence[GroundTruthEntry],
    ontology: Ontology,
    name: str,
    provenance: Optional[Mapping[str, Any]] = None,
) -> DatasetManifest:
    """Build the clean manifest from single-label ground-truth entries."""
    manifest_entries = tuple(
        ManifestEntry(e.clip_id, e.labels[0], ontology.node(e.labels[0]).name, e.split)
        for e in sorted(entries, key=lambda e: (SPLITS.index(e.split), e.labels[0], e.clip_id))
    )
    return DatasetManifest(name, manifest_entries, dict(provenance or {}))


def curate_noisy(
    scored: Iterable[ScoredClip],
    exclusion: set[str],
    clean_counts: Mapping[str, int],
    seed: int,
    label_names: Mapping[str, str],
    name: str = "noisy",
    provenance: Optional[Mapping[str, Any]] = None,
) -> DatasetManifest:
    """Sample the retrieval output down to the clean per-class counts.

    ``scored`` must already have passed the relevance threshold.  Excluded
    clip ids (the clean corpus) are removed first; each class with at
    least ``clean_counts[c]`` candidates contributes exactly that many
    clips, drawn without replacement by a PCG64 generator seeded with
    ``seed`` and consumed in canonical class order.  Classes with too few
    candidates are dropped and recorded in provenance["dropped_classes"];
    the same drops must then be applied to the clean manifest via
    pair_manifests.
    """
    pools: dict[str, list[str]] = {}
    total_candidates = 0
    for sc in scored:
        if sc.clip_id in exclusion:
            continue
        pools.setdefault(sc.label_id, []).append(sc.clip_id)
        total_candidates += 1
    if total_candidates == 0:
        raise CurationError("candidate pool is empty after exclusion")

    rng = np.random.default_rng(seed)
    entries: list[ManifestEntry] = []
    dropped: list[str] = []
    for label_id in sorted(clean_counts):
        need = clean_counts[label_id]
        pool = sorted(pools.get(label_id, []))
        if len(pool) < need:
            dropped.append(label_id)
            continue
        chosen = rng.choice(len(pool), size=need, replace=False)
        for clip_id in sorted(pool[i] for i in chosen):
            entries.append(
                ManifestEntry(clip_id, label_id, label_names.get(label_id, label_id), "train")
            )

    prov = dict(provenance or {})
    prov.update({"seed": seed, "dropped_classes": dropped})
    return DatasetManifest(name, tuple(entries), prov)


def pair_manifests(
    clean: DatasetManifest,
    noisy: DatasetManifest,
    dropped: Sequence[str],
) -> tuple[DatasetManifest, DatasetManifest]:
    """Remove dropped classes from both manifests and verify count parity.

    After the drop, the per-class training counts of the two manifests
    must be equal; a mismatch raises PairingError naming the class.
    """
    drop = set(dropped)
    clean_entries = tuple(e for e in clean.entries if e.label_id not in drop)
    noisy_entries = tuple(e for e in noisy.entries if e.label_id not in drop)
    clean_out = DatasetManifest(
        clean.name,
        clean_entries,
        {**clean.provenance, "dropped_classes": sorted(drop), "paired_with": noisy.name},
    )
    # The noisy dataset carries no val/test entries of its own; evaluation
    # uses the clean counterpart's splits.
    noisy_out = DatasetManifest(
        noisy.name,
        noisy_entries,
        {
            **noisy.provenance,
            "dropped_classes": sorted(drop),
            "paired_with": clean.name,
            "val_test_source": clean.name,
        },
    )
    clean_counts = clean_out.class_counts("train")
    noisy_counts = noisy_out.class_counts("train")
    for label_id in sorted(set(clean_counts) | set(noisy_counts)):
        a = clean_counts.get(label_id, 0)
        b = noisy_counts.get(label_id, 0)
        if a != b:
            raise PairingError(
                f"class {label_id!r}: clean has {a} training clips, noisy has {b}"
            )
    return clean_out, noisy_out


def emit_manifest(manifest: DatasetManifest, destination: Union[str, Path]) -> list[Path]:
    """Write <name>.csv and <name>.json under ``destination``.

    Deterministic: repeated emission of the same manifest is
    byte-identical, and parse_manifest on the result reproduces the
    manifest exactly.
    """
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)
    csv_path = dest / f"{manifest.name}.csv"
    json_path = dest / f"{manifest.name}.json"

    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["clip_id", "label_id", "label_name", "split"])
        for e in manifest.entries:
            writer.writerow([e.clip_id, e.label_id, e.label_name, e.split])

    counts: dict[str, dict[str, int]] = {}
    for e in manifest.entries:
        counts.setdefault(e.label_id, dict.fromkeys(SPLITS, 0))[e.split] += 1
    sidecar = {"name": manifest.name, **manifest.provenance, "counts": counts}
    json_path.write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return [csv_path, json_path]


def parse_manifest(destination: Union[str, Path], name: str) -> DatasetManifest:
    """Read back a manifest emitted by emit_manifest."""
    dest = Path(destination)
    sidecar = json.loads((dest / f"{name}.json").read_text(encoding="utf-8"))
    with open(dest / f"{name}.csv", newline="", encoding="utf-8") as f:
        entries = tuple(
            ManifestEntry(row["clip_id"], row["label_id"], row["label_name"], row["split"])
            for row in csv.DictReader(f)
        )
    provenance = {k: v for k, v in sidecar.items() if k not in ("name", "counts")}
    return DatasetManifest(sidecar["name"], entries, provenance)


def with_name(manifest: DatasetManifest, name: str) -> DatasetManifest:
    return replace(manifest, name=name)

"""Label-noise laboratory: synthetic injection, substitution mixing, rates.

Synthetic noise relabels a proportion rho of training examples to
(k + i) mod K, with the offset i drawn either uniformly over {1..K-1} or
from a geometric distribution (resampled when i mod K == 0 so the label
always changes).  Substitution mixing replaces a proportion rho of clean
training examples with identically-labelled examples from the paired
noisy manifest, scaling the effective noise rate linearly.

Noise-rate estimates are derived from listening-test judgment tables:
clips are Present-and-predominant (PP), Present-not-predominant (PNP),
Not-present (NP) or Unsure (U), with PNP/NP split by whether the other
sounds are in-vocabulary (IV) or out-of-vocabulary (OOV).  Unsure
judgments are excluded from the denominator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .curation import DatasetManifest, ManifestEntry, PairingError

CATEGORIES = ("PP", "PNP/IV", "PNP/OOV", "NP/IV", "NP/OOV", "U")

SYNTHETIC_KINDS = ("uniform", "conditional")
NOISE_KINDS = SYNTHETIC_KINDS + ("substitution",)

# Two-sided normal quantiles for the supported confidence levels.
_Z_BY_CONFIDENCE = {0.90: 1.644854, 0.95: 1.959964, 0.99: 2.575829}


@dataclass(frozen=True)
class NoiseSpec:
    """Parameters of one noise operation."""

    kind: str
    rho: float
    p_geometric: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [0, 1], got {self.rho}")
        if self.kind == "conditional" and not 0.0 < self.p_geometric < 1.0:
            raise ValueError(f"p_geometric must be in (0, 1), got {self.p_geometric}")

    def to_json_dict(self) -> dict:
        d = {"kind": self.kind, "rho": self.rho, "seed": self.seed}
        if self.kind == "conditional":
            d["p_geometric"] = self.p_geometric
        return d


def selection_size(rho: float, n: int) -> int:
    """Number of entries selected at proportion rho: floor(rho * n + 0.5)."""
    return int(math.floor(rho * n + 0.5))


def draw_offset(kind: str, class_count: int, rng: np.random.Generator, p: float = 0.5) -> int:
    """Draw one label offset.

    uniform: discrete uniform on {1, ..., K-1}.  conditional: geometric
    with success probability p on support {1, 2, ...}, resampled until
    i mod K != 0 so the relabelled class always differs.
    """
    if class_count < 2:
        raise ValueError("at least two classes are required")
    if kind == "uniform":
        return int(rng.integers(1, class_count))
    if kind == "conditional":
        offset = int(rng.geometric(p))
        while offset % class_count == 0:
            offset = int(rng.geometric(p))
        return offset
    raise ValueError(f"unknown offset kind {kind!r}")


def inject_synthetic(
    manifest: DatasetManifest,
    spec: NoiseSpec,
    class_count: int | None = None,
) -> DatasetManifest:
    """Relabel a proportion rho of training entries to (k + i) mod K.

    Classes are indexed 0..K-1 in canonical (sorted label id) order.
    PCG64(seed) is consumed as: one without-replacement selection draw,
    then one offset per selected entry in manifest order.  Validation and
    test entries are untouched.
    """
    if spec.kind not in SYNTHETIC_KINDS:
        raise ValueError(f"synthetic noise requires kind in {SYNTHETIC_KINDS}")
    classes = sorted({e.label_id for e in manifest.entries})
    k_total = len(classes)
    if class_count is not None and class_count != k_total:
        raise ValueError(f"manifest has {k_total} classes, expected {class_count}")
    if k_total < 2:
        raise ValueError("at least two classes are required")
    class_index = {label: i for i, label in enumerate(classes)}
    names = manifest.label_names()

    train_positions = [i for i, e in enumerate(manifest.entries) if e.split == "train"]
    n_train = len(train_positions)
    n_selected = selection_size(spec.rho, n_train)

    rng = np.random.default_rng(spec.seed)
    selected = set()
    if n_selected:
        picks = rng.choice(n_train, size=n_selected, replace=False)
        selected = {train_positions[i] for i in picks}

    entries = list(manifest.entries)
    for pos in sorted(selected):
        entry = entries[pos]
        k = class_index[entry.label_id]
        offset = draw_offset(spec.kind, k_total, rng, spec.p_geometric)
        new_label = classes[(k + offset) % k_total]
        entries[pos] = ManifestEntry(
            entry.clip_id, new_label, names.get(new_label, new_label), entry.split
        )

    provenance = {
        **manifest.provenance,
        "noise": {**spec.to_json_dict(), "changed": n_selected, "class_count": k_total},
    }
    return DatasetManifest(
        f"{manifest.name}-{spec.kind}-{spec.rho:g}", tuple(entries), provenance
    )


def mix_substitution(
    clean: DatasetManifest,
    noisy: DatasetManifest,
    rho: float,
    seed: int,
    reference_noise_rate: float = 0.464,
) -> DatasetManifest:
    """Replace a proportion rho of clean training entries with noisy ones.

    Manifests must be paired (equal per-class training counts) and the
    noisy pool disjoint from the clean clip ids.  Each selected entry is
    replaced by a distinct, previously unused noisy entry with the same
    label, drawn uniformly; per-class per-split counts are preserved
    exactly.  Provenance records the effective expected noise rate
    rho * reference_noise_rate.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must be in [0, 1], got {rho}")
    clean_counts = clean.class_counts("train")
    noisy_counts = noisy.class_counts("train")
    for label_id in sorted(set(clean_counts) | set(noisy_counts)):
        if clean_counts.get(label_id, 0) != noisy_counts.get(label_id, 0):
            raise PairingError(
                f"class {label_id!r}: manifests are not paired "
                f"({clean_counts.get(label_id, 0)} vs {noisy_counts.get(label_id, 0)})"
            )
    overlap = clean.clip_ids() & {e.clip_id for e in noisy.entries if e.split == "train"}
    if overlap:
        raise PairingError(
            f"noisy training pool overlaps clean clip ids, e.g. {sorted(overlap)[:5]}"
        )

    train_positions = [i for i, e in enumerate(clean.entries) if e.split == "train"]
    n_train = len(train_positions)
    n_selected = selection_size(rho, n_train)

    rng = np.random.default_rng(seed)
    entries = list(clean.entries)
    if n_selected:
        picks = rng.choice(n_train, size=n_selected, replace=False)
        selected = sorted(train_positions[i] for i in picks)
        pools: dict[str, list[ManifestEntry]] = {}
        for e in noisy.entries:
            if e.split == "train":
                pools.setdefault(e.label_id, []).append(e)
        for label_id in pools:
            pools[label_id].sort(key=lambda e: e.clip_id)
        for pos in selected:
            label_id = entries[pos].label_id
            pool = pools.get(label_id, [])
            if not pool:
                raise PairingError(
                    f"class {label_id!r}: no unused noisy examples left"
                )
            j = int(rng.integers(len(pool)))
            replacement = pool.pop(j)
            entries[pos] = ManifestEntry(
                replacement.clip_id, label_id, replacement.label_name, "train"
            )

    provenance = {
        **clean.provenance,
        "mix": {
            "rho": rho,
            "seed": seed,
            "substituted": n_selected,
            "reference_noise_rate": reference_noise_rate,
            "effective_noise_rate": rho * reference_noise_rate,
            "noisy_source": noisy.name,
        },
    }
    return DatasetManifest(f"{clean.name}-mix-{rho:g}", tuple(entries), provenance)


@dataclass(frozen=True)
class JudgmentTable:
    """Pooled listening-test proportions for the six judgment categories.

    PP/OOV is structurally absent: a clip whose labelled sound is present
    and predominant is in-vocabulary by definition.  Proportions built
    from counts sum to exactly 1; tables quoted from rounded figures may
    fall slightly short, so the constructor accepts sum <= 1 + 1e-9.
    """

    pp_iv: float
    pnp_iv: float
    pnp_oov: float
    np_iv: float
    np_oov: float
    unsure: float
    n: int

    def __post_init__(self):
        values = self.proportions()
        if any(v < 0 or v > 1 for v in values.values()):
            raise ValueError("proportions must lie in [0, 1]")
        total = sum(values.values())
        if not 0.0 < total <= 1.0 + 1e-9:
            raise ValueError(f"proportions sum to {total}, expected (0, 1]")
        if self.n < 1:
            raise ValueError("n must be at least 1")

    def proportions(self) -> dict[str, float]:
        return {
            "PP": self.pp_iv,
            "PNP/IV": self.pnp_iv,
            "PNP/OOV": self.pnp_oov,
            "NP/IV": self.np_iv,
            "NP/OOV": self.np_oov,
            "U": self.unsure,
        }

    @classmethod
    def from_counts(cls, counts: Mapping[str, int]) -> "JudgmentTable":
        unknown = set(counts) - set(CATEGORIES)
        if unknown:
            raise ValueError(f"unknown judgment categories: {sorted(unknown)}")
        n = sum(counts.values())
        if n < 1:
            raise ValueError("at least one judgment is required")
        share = {c: counts.get(c, 0) / n for c in CATEGORIES}
        return cls(
            pp_iv=share["PP"],
            pnp_iv=share["PNP/IV"],
            pnp_oov=share["PNP/OOV"],
            np_iv=share["NP/IV"],
            np_oov=share["NP/OOV"],
            unsure=share["U"],
            n=n,
        )


@dataclass(frozen=True)
class NoiseEstimate:
    """Noise rates with 95% normal-approximation half-widths."""

    rate_pnp_incorrect: float
    halfwidth_pnp_incorrect: float
    rate_pnp_correct: float
    halfwidth_pnp_correct: float
    oov_share: float
    confidence: float = 0.95

    def to_json_dict(self) -> dict:
        return {
            "rate_pnp_incorrect": self.rate_pnp_incorrect,
            "halfwidth_pnp_incorrect": self.halfwidth_pnp_incorrect,
            "rate_pnp_correct": self.rate_pnp_correct,
            "halfwidth_pnp_correct": self.halfwidth_pnp_correct,
            "oov_share": self.oov_share,
            "confidence": self.confidence,
        }


def confidence_interval(p_hat: float, n: int, confidence: float = 0.95) -> float:
    """Normal-approximation half-width z * sqrt(p(1-p)/n)."""
    if not 0.0 <= p_hat <= 1.0:
        raise ValueError(f"p_hat must be in [0, 1], got {p_hat}")
    if n < 1:
        raise ValueError("n must be at least 1")
    z = _Z_BY_CONFIDENCE.get(round(confidence, 6))
    if z is None:
        raise ValueError(
            f"unsupported confidence {confidence}; choose from {sorted(_Z_BY_CONFIDENCE)}"
        )
    return z * math.sqrt(p_hat * (1.0 - p_hat) / n)


def noise_breakdown(table: JudgmentTable, confidence: float = 0.95) -> NoiseEstimate:
    """Noise rates from a judgment table, with Unsure excluded.

    With denominator (1 - U): the PNP-as-incorrect rate counts everything
    except PP as wrong; the PNP-as-correct rate counts only NP as wrong.
    The OOV share is the fraction of incorrect clips (PNP counted
    incorrect) that involve an out-of-vocabulary sound; it is 0 when
    nothing is incorrect.
    """
    denom = 1.0 - table.unsure
    if denom <= 0.0:
        raise ValueError("all judgments are Unsure; the noise rate is undefined")
    incorrect = table.pnp_iv + table.pnp_oov + table.np_iv + table.np_oov
    rate_incorrect = incorrect / denom
    rate_correct = (table.np_iv + table.np_oov) / denom
    oov_share = ((table.pnp_oov + table.np_oov) / incorrect) if incorrect > 0 else 0.0
    return NoiseEstimate(
        rate_pnp_incorrect=rate_incorrect,
        halfwidth_pnp_incorrect=confidence_interval(rate_incorrect, table.n, confidence),
        rate_pnp_correct=rate_correct,
        halfwidth_pnp_correct=confidence_interval(rate_correct, table.n, confidence),
        oov_share=oov_share,
        confidence=confidence,
    )

"""Keyword relevance scoring: queries, vocabulary, vectors, label assignment.

A label's query is its own preprocessed name concatenated with the
preprocessed names of all its ontology descendants.  The vocabulary is the
deduplicated concatenation of all queries; documents are mapped to binary
membership vectors over it, and the relevance of a label to a clip is the
cosine similarity between the query vector and the sum of the tag and
description vectors.  Scores lie in [0, 1].

Dot products and squared norms are computed in exact integer arithmetic,
so identical documents score exactly 1.0 and disjoint ones exactly 0.0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import FrozenSet, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .ontology import Ontology
from .text import Document, LemmaLexicon, preprocess, tokenise

# Binary/count vector over the vocabulary (int64, length |V|).
DocVector = np.ndarray


@dataclass(frozen=True)
class Query:
    """The search query derived from one label and its descendants."""

    label_id: str
    words: Document


@dataclass(frozen=True)
class ScoredClip:
    """A clip together with its best-matching label and relevance score."""

    clip_id: str
    label_id: str
    score: float


class Vocabulary:
    """Ordered, duplicate-free global word list with word -> index lookup."""

    def __init__(self, words: Iterable[str]):
        self.words: tuple[str, ...] = tuple(words)
        self.index: dict[str, int] = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("vocabulary words must be unique")

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: object) -> bool:
        return word in self.index


def root_query(
    name: str, lexicon: LemmaLexicon, stop_words: FrozenSet[str]
) -> Document:
    """Preprocessed word sequence of a single label name."""
    return preprocess(tokenise(name), lexicon, stop_words, origin="label")


def build_query(
    label_id: str,
    ontology: Ontology,
    lexicon: LemmaLexicon,
    stop_words: FrozenSet[str],
) -> Query:
    """Concatenate the label's root query with its descendants' root queries.

    Descendants are visited in canonical (lexicographic id) order and the
    concatenation is deduplicated keeping first occurrence.
    """
    ids = [label_id] + sorted(ontology.descendants(label_id))
    seen: set[str] = set()
    words: list[str] = []
    for node_id in ids:
        for word in root_query(ontology.node(node_id).name, lexicon, stop_words):
            if word not in seen:
                seen.add(word)
                words.append(word)
    return Query(label_id, Document(tuple(words), origin="label"))


def build_queries(
    label_ids: Iterable[str],
    ontology: Ontology,
    lexicon: LemmaLexicon,
    stop_words: FrozenSet[str],
) -> list[Query]:
    """Queries for a whole label set, in canonical label order."""
    return [
        build_query(label_id, ontology, lexicon, stop_words)
        for label_id in sorted(set(label_ids))
    ]


def build_vocabulary(queries: Sequence[Query]) -> Vocabulary:
    """Concatenate query words in canonical label order, deduplicated."""
    if not queries:
        raise ValueError("cannot build a vocabulary from an empty query set")
    seen: set[str] = set()
    words: list[str] = []
    for query in sorted(queries, key=lambda q: q.label_id):
        for word in query.words:
            if word not in seen:
                seen.add(word)
                words.append(word)
    return Vocabulary(words)


def vectorise(words: Iterable[str], vocab: Vocabulary) -> DocVector:
    """Binary membership vector: position i is 1 iff vocabulary word i occurs."""
    vec = np.zeros(len(vocab), dtype=np.int64)
    for word in words:
        i = vocab.index.get(word)
        if i is not None:
            vec[i] = 1
    return vec


def cosine(a: DocVector, b: DocVector) -> float:
    """Cosine similarity with the zero-norm convention: either norm 0 -> 0.0."""
    dot = int(a @ b)
    a2 = int(a @ a)
    b2 = int(b @ b)
    if a2 == 0 or b2 == 0:
        return 0.0
    return dot / math.sqrt(a2 * b2)


def relevance_score(
    query: Query, d_tags: Document, d_desc: Document, vocab: Vocabulary
) -> float:
    """sim(v(q), v(d_tags) + v(d_desc)) in [0, 1]."""
    q = vectorise(query.words, vocab)
    d = vectorise(d_tags.words, vocab) + vectorise(d_desc.words, vocab)
    return cosine(q, d)


class LabelScorer:
    """Scores clips against every label using a precomputed query matrix.

    Queries are held in canonical label order, so argmax ties resolve to
    the smallest label id.  Pure and immutable: safe to share across
    threads for per-clip parallel scoring.
    """

    def __init__(self, queries: Sequence[Query], vocab: Vocabulary):
        if not queries:
            raise ValueError("at least one query is required")
        self.queries = tuple(sorted(queries, key=lambda q: q.label_id))
        self.vocab = vocab
        self._matrix = np.stack([vectorise(q.words, vocab) for q in self.queries])
        self._norm2 = (self._matrix * self._matrix).sum(axis=1)

    @property
    def label_ids(self) -> tuple[str, ...]:
        return tuple(q.label_id for q in self.queries)

    def scores(self, d_tags: Document, d_desc: Document) -> np.ndarray:
        """Relevance score for every label, in canonical label order."""
        d = vectorise(d_tags.words, vocab=self.vocab) + vectorise(
            d_desc.words, vocab=self.vocab
        )
        b2 = int(d @ d)
        out = np.zeros(len(self.queries), dtype=np.float64)
        if b2 == 0:
            return out
        dots = self._matrix @ d
        denom2 = self._norm2 * b2
        np.divide(dots, np.sqrt(denom2), out=out, where=denom2 > 0)
        return out

    def best(self, d_tags: Document, d_desc: Document) -> tuple[str, float]:
        """Argmax label and its score; ties go to the smallest label id."""
        scores = self.scores(d_tags, d_desc)
        i = int(np.argmax(scores))
        return self.queries[i].label_id, float(scores[i])


def assign_label(
    clip_id: str,
    d_tags: Document,
    d_desc: Document,
    scorer: LabelScorer,
    tau: float,
) -> Optional[ScoredClip]:
    """Assign the most relevant label, or None when the best score is below tau."""
    label_id, score = scorer.best(d_tags, d_desc)
    if score < tau:
        return None
    return ScoredClip(clip_id, label_id, score)


class Labeller:
    """End-to-end labelling of clip records (anything with clip_id/tags/description)."""

    def __init__(
        self,
        queries: Sequence[Query],
        vocab: Vocabulary,
        lexicon: LemmaLexicon,
        stop_words: FrozenSet[str],
        tau: float = 0.5,
    ):
        self.scorer = LabelScorer(queries, vocab)
        self.lexicon = lexicon
        self.stop_words = stop_words
        self.tau = tau

    def _documents(self, clip) -> tuple[Document, Document]:
        from .text import description_document, tag_document

        return (
            tag_document(clip.tags, self.lexicon, self.stop_words),
            description_document(clip.description, self.lexicon, self.stop_words),
        )

    def score(self, clip) -> ScoredClip:
        """Best label and score regardless of the threshold."""
        d_tags, d_desc = self._documents(clip)
        label_id, score = self.scorer.best(d_tags, d_desc)
        return ScoredClip(clip.clip_id, label_id, score)

    def assign(self, clip) -> Optional[ScoredClip]:
        """Best label, or None (discarded) when the best score is below tau."""
        d_tags, d_desc = self._documents(clip)
        return assign_label(clip.clip_id, d_tags, d_desc, self.scorer, self.tau)


def write_scored_csv(path: Union[str, Path], scored: Iterable[ScoredClip]) -> None:
    """Write the scored-clips interchange CSV (scores with 6 decimal places)."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["clip_id", "label_id", "score"])
        for s in scored:
            writer.writerow([s.clip_id, s.label_id, f"{s.score:.6f}"])


def read_scored_csv(path: Union[str, Path]) -> list[ScoredClip]:
    with open(path, newline="", encoding="utf-8") as f:
        return [
            ScoredClip(row["clip_id"], row["label_id"], float(row["score"]))
            for row in csv.DictReader(f)
        ]


@dataclass(frozen=True)
class EvaluationReport:
    """Label quality against ground truth at a given threshold."""

    tau: float
    total_clips: int
    retrieved_clips: int
    retrieval_rate: float
    accuracy: float
    per_class_accuracy: dict[str, Optional[float]]
    classes_above_90: int
    mean_accuracy_above_90: float
    mean_accuracy_rest: float

    def to_json_dict(self) -> dict:
        return {
            "tau": self.tau,
            "total_clips": self.total_clips,
            "retrieved_clips": self.retrieved_clips,
            "retrieval_rate": self.retrieval_rate,
            "accuracy": self.accuracy,
            "per_class_accuracy": self.per_class_accuracy,
            "classes_above_90": self.classes_above_90,
            "mean_accuracy_above_90": self.mean_accuracy_above_90,
            "mean_accuracy_rest": self.mean_accuracy_rest,
        }


def evaluate_labels(
    assigned: Iterable[ScoredClip],
    ground_truth: Mapping[str, str],
    tau: float,
) -> EvaluationReport:
    """Compare unthresholded best-label assignments with ground truth.

    A ground-truth clip counts as retrieved when its best score is >= tau;
    accuracy is measured among retrieved clips only.  Clips absent from
    ``assigned`` count as not retrieved.
    """
    if not ground_truth:
        raise ValueError("ground truth is empty")
    by_clip = {s.clip_id: s for s in assigned}
    total = len(ground_truth)
    retrieved = 0
    correct = 0
    class_retrieved: dict[str, int] = {}
    class_correct: dict[str, int] = {}
    for clip_id, true_label in ground_truth.items():
        class_retrieved.setdefault(true_label, 0)
        class_correct.setdefault(true_label, 0)
        scored = by_clip.get(clip_id)
        if scored is None or scored.score < tau:
            continue
        retrieved += 1
        class_retrieved[true_label] += 1
        if scored.label_id == true_label:
            correct += 1
            class_correct[true_label] += 1

    per_class: dict[str, Optional[float]] = {}
    for label in sorted(class_retrieved):
        n = class_retrieved[label]
        per_class[label] = (class_correct[label] / n) if n else None

    scored_classes = [a for a in per_class.values() if a is not None]
    above = [a for a in scored_classes if a > 0.9]
    rest = [a for a in scored_classes if a <= 0.9]
    return EvaluationReport(
        tau=tau,
        total_clips=total,
        retrieved_clips=retrieved,
        retrieval_rate=retrieved / total,
        accuracy=(correct / retrieved) if retrieved else 0.0,
        per_class_accuracy=per_class,
        classes_above_90=len(above),
        mean_accuracy_above_90=(sum(above) / len(above)) if above else 0.0,
        mean_accuracy_rest=(sum(rest) / len(rest)) if rest else 0.0,
    )

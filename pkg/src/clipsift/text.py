"""Tokenisation and preprocessing of tags, descriptions, and label names.

A "document" is the preprocessed word sequence for one source text: tokens
are lowercased, canonicalised to their shortest lemma via a TSV-backed
lexicon, stripped of stop words, and deduplicated keeping first occurrence.
Everything here is a pure function over immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import FrozenSet, Iterable, Mapping, Union

ORIGINS = ("tags", "description", "label")


@dataclass(frozen=True)
class Document:
    """Preprocessed word sequence.

    Invariants: no duplicates, no stop words, every word non-empty,
    all-lowercase, letters only.
    """

    words: tuple[str, ...]
    origin: str = "description"

    def __iter__(self):
        return iter(self.words)

    def __len__(self) -> int:
        return len(self.words)


@dataclass(frozen=True)
class LemmaLexicon:
    """Surface word -> set of (part-of-speech, lemma) pairs.

    When a word has several lemmas the shortest is chosen, ties broken
    lexicographically; out-of-lexicon words pass through unchanged.
    """

    entries: Mapping[str, frozenset[tuple[str, str]]] = field(default_factory=dict)

    def lemma(self, word: str) -> str:
        pairs = self.entries.get(word)
        if not pairs:
            return word
        return min((lemma for _, lemma in pairs), key=lambda l: (len(l), l))

    def fixed_point_violations(self) -> list[str]:
        """Surface words whose chosen lemma is not itself a lemma fixed point."""
        return [w for w in self.entries if self.lemma(self.lemma(w)) != self.lemma(w)]

    @classmethod
    def load(cls, source: Union[str, Path]) -> "LemmaLexicon":
        """Load a UTF-8 TSV with columns word/pos/lemma; '#' lines are comments."""
        entries: dict[str, set[tuple[str, str]]] = {}
        text = Path(source).read_text(encoding="utf-8")
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"lexicon line {lineno}: expected 3 tab-separated columns")
            word, pos, lemma = parts
            if not lemma or lemma != lemma.lower() or not lemma.isalpha():
                raise ValueError(f"lexicon line {lineno}: lemma {lemma!r} is not a lowercase token")
            entries.setdefault(word.lower(), set()).add((pos, lemma))
        return cls({w: frozenset(p) for w, p in entries.items()})

    @classmethod
    def bundled(cls) -> "LemmaLexicon":
        with resources.as_file(resources.files("clipsift.data") / "lemmas.tsv") as path:
            return cls.load(path)


def load_stop_words(source: Union[str, Path]) -> frozenset[str]:
    """Load a stop-word file, one word per line."""
    lines = Path(source).read_text(encoding="utf-8").splitlines()
    return frozenset(l.strip().lower() for l in lines if l.strip() and not l.startswith("#"))


def bundled_stop_words() -> frozenset[str]:
    with resources.as_file(resources.files("clipsift.data") / "stopwords.txt") as path:
        return load_stop_words(path)


def tokenise(text: str) -> list[str]:
    """Split on every non-alphabetic character, dropping empty fragments.

    Punctuation and digits act purely as separators, so the result contains
    alphabetic-only tokens in their original order and case.  Unicode
    letters count as alphabetic.
    """
    tokens: list[str] = []
    current: list[str] = []
    for ch in text:
        if ch.isalpha():
            current.append(ch)
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    return tokens


def preprocess(
    tokens: Iterable[str],
    lexicon: LemmaLexicon,
    stop_words: FrozenSet[str],
    origin: str = "description",
) -> Document:
    """Lowercase, lemmatise, remove stop words, deduplicate keeping first.

    Tokens are expected to be alphabetic strings (the tokeniser's output);
    tags, being word lists already, enter here without tokenisation.
    """
    if origin not in ORIGINS:
        raise ValueError(f"origin must be one of {ORIGINS}, got {origin!r}")
    seen: set[str] = set()
    words: list[str] = []
    for token in tokens:
        word = lexicon.lemma(token.lower())
        if not word or word in stop_words or word in seen:
            continue
        seen.add(word)
        words.append(word)
    return Document(tuple(words), origin)


def tag_document(
    tags: Iterable[str], lexicon: LemmaLexicon, stop_words: FrozenSet[str]
) -> Document:
    """Build the tags document.

    Tags are already word lists, but platform tags may still carry internal
    whitespace, digits, or punctuation, so each tag passes through tokenise
    (identity for a well-formed single-word tag) before preprocessing.
    """
    tokens = [token for tag in tags for token in tokenise(tag)]
    return preprocess(tokens, lexicon, stop_words, origin="tags")


def description_document(
    text: str, lexicon: LemmaLexicon, stop_words: FrozenSet[str]
) -> Document:
    """Tokenise and preprocess a free-text description."""
    return preprocess(tokenise(text), lexicon, stop_words, origin="description")

"""Class ontology: parsing, descendant traversal, and ancestor pruning.

The ontology file is a JSON array of records with ``id``, ``name``,
``child_ids`` and (optionally) ``description`` fields.  Parent-child edges
form a DAG, not a tree: a node may have several parents, so descendant
enumeration deduplicates.  All structures are immutable after parsing and
safe for concurrent reads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, Union


class OntologyError(Exception):
    """Base class for ontology failures."""


class OntologyParseError(OntologyError):
    """A record could not be parsed; carries the record index."""

    def __init__(self, index: int, reason: str):
        super().__init__(f"record {index}: {reason}")
        self.index = index


class OntologyIntegrityError(OntologyError):
    """A child id does not resolve to any node."""


class OntologyCycleError(OntologyError):
    """The child graph contains a cycle; names one involved id."""


class UnknownLabelError(OntologyError, KeyError):
    """A label id is not present in the ontology."""

    def __str__(self) -> str:  # KeyError would repr() the message
        return self.args[0] if self.args else ""


@dataclass(frozen=True)
class OntologyNode:
    """One ontology record."""

    id: str
    name: str
    child_ids: tuple[str, ...] = ()
    description: str = ""


@dataclass(frozen=True)
class LabelSet:
    """A label vocabulary in canonical (lexicographic-by-id) order.

    Invariant after pruning: no member is an ancestor of another member.
    """

    labels: tuple[str, ...]

    @classmethod
    def from_ids(cls, ids: Iterable[str]) -> "LabelSet":
        return cls(tuple(sorted(set(ids))))

    def __iter__(self) -> Iterator[str]:
        return iter(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label_id: object) -> bool:
        return label_id in set(self.labels)

    def write(self, path: Union[str, Path]) -> None:
        """Write one id per line (the plain-text interchange format)."""
        Path(path).write_text("".join(f"{l}\n" for l in self.labels), encoding="utf-8")

    @classmethod
    def read(cls, path: Union[str, Path]) -> "LabelSet":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls.from_ids(l.strip() for l in lines if l.strip())


class Ontology:
    """Immutable node collection with verified referential integrity."""

    def __init__(self, nodes: Iterable[OntologyNode]):
        self._nodes: dict[str, OntologyNode] = {}
        for node in nodes:
            if node.id in self._nodes:
                raise OntologyIntegrityError(f"duplicate node id {node.id!r}")
            self._nodes[node.id] = node
        self._check_integrity()
        self._check_acyclic()

    def _check_integrity(self) -> None:
        for node in self._nodes.values():
            for child_id in node.child_ids:
                if child_id not in self._nodes:
                    raise OntologyIntegrityError(
                        f"node {node.id!r} references unknown child id {child_id!r}"
                    )

    def _check_acyclic(self) -> None:
        # Iterative three-colour DFS; grey-on-grey means a back edge.
        WHITE, GREY, BLACK = 0, 1, 2
        colour = {node_id: WHITE for node_id in self._nodes}
        for root in self._nodes:
            if colour[root] != WHITE:
                continue
            stack: list[tuple[str, int]] = [(root, 0)]
            colour[root] = GREY
            while stack:
                node_id, child_pos = stack[-1]
                children = self._nodes[node_id].child_ids
                if child_pos == len(children):
                    colour[node_id] = BLACK
                    stack.pop()
                    continue
                stack[-1] = (node_id, child_pos + 1)
                child = children[child_pos]
                if colour[child] == GREY:
                    raise OntologyCycleError(f"cycle through node id {child!r}")
                if colour[child] == WHITE:
                    colour[child] = GREY
                    stack.append((child, 0))

    def __len__(self) -> int:
        return len(self._nodes)

    def __iter__(self) -> Iterator[OntologyNode]:
        return iter(self._nodes.values())

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._nodes

    def node(self, node_id: str) -> OntologyNode:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownLabelError(f"unknown ontology id {node_id!r}") from None

    def descendants(self, node_id: str) -> list[str]:
        """All ids reachable via child edges, excluding the node itself.

        Order is deterministic: depth-first, children in stored order, each
        id reported once even when reachable along several paths.
        """
        self.node(node_id)
        seen: set[str] = set()
        out: list[str] = []
        stack = list(reversed(self._nodes[node_id].child_ids))
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            out.append(current)
            stack.extend(reversed(self._nodes[current].child_ids))
        return out

    def is_ancestor(self, ancestor_id: str, descendant_id: str) -> bool:
        return descendant_id in self.descendants(ancestor_id)

    def prune_ancestors(self, candidate_labels: Iterable[str]) -> LabelSet:
        """Drop every candidate that has another candidate among its descendants.

        A candidate is pruned if *any* path makes it an ancestor of another
        candidate (multi-parent nodes prune on any-path reachability).
        """
        candidates = sorted(set(candidate_labels))
        for label in candidates:
            self.node(label)
        candidate_set = set(candidates)
        kept = [
            label
            for label in candidates
            if not any(d in candidate_set for d in self.descendants(label))
        ]
        return LabelSet(tuple(kept))


def parse_ontology(source: Union[bytes, str, IO[bytes], Path]) -> Ontology:
    """Parse ontology records and verify integrity and acyclicity.

    Accepts raw bytes/str of the JSON document, an open binary stream, or a
    filesystem path.
    """
    if isinstance(source, Path):
        raw: Union[bytes, str] = source.read_bytes()
    elif hasattr(source, "read"):
        raw = source.read()  # type: ignore[union-attr]
    else:
        raw = source
    try:
        records = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise OntologyParseError(0, f"invalid JSON: {exc}") from exc
    if not isinstance(records, list):
        raise OntologyParseError(0, "top-level value must be an array of records")

    nodes = []
    for index, record in enumerate(records):
        if not isinstance(record, dict):
            raise OntologyParseError(index, "record is not an object")
        try:
            node_id = record["id"]
            name = record["name"]
        except KeyError as exc:
            raise OntologyParseError(index, f"missing field {exc.args[0]!r}") from None
        child_ids = record.get("child_ids", [])
        if (
            not isinstance(node_id, str)
            or not isinstance(name, str)
            or not isinstance(child_ids, list)
            or not all(isinstance(c, str) for c in child_ids)
        ):
            raise OntologyParseError(index, "id/name must be strings, child_ids a string array")
        description = record.get("description", "") or ""
        nodes.append(OntologyNode(node_id, name, tuple(child_ids), str(description)))
    return Ontology(nodes)

import json
import os
import random
from pathlib import Path

import pytest

from clipsift.ontology import (
    LabelSet,
    Ontology,
    OntologyCycleError,
    OntologyIntegrityError,
    OntologyNode,
    OntologyParseError,
    UnknownLabelError,
    parse_ontology,
)

FIXTURE_PATH = Path(__file__).parent / "fixtures" / "ontology.json"


def chain_json() -> bytes:
    return json.dumps(
        [
            {"id": "A", "name": "Alpha", "child_ids": ["B"]},
            {"id": "B", "name": "Beta", "child_ids": ["C"]},
            {"id": "C", "name": "Gamma", "child_ids": []},
        ]
    ).encode()


def random_dag(rng: random.Random, n: int) -> Ontology:
    """Random DAG: edges only from lower to higher index, so acyclic."""
    nodes = []
    for i in range(n):
        children = [f"n{j}" for j in range(i + 1, n) if rng.random() < 0.15]
        nodes.append(OntologyNode(f"n{i}", f"node {i}", tuple(children)))
    return Ontology(nodes)


def brute_force_reachable(ontology: Ontology, start: str) -> set[str]:
    """Transitive closure by repeated edge expansion (order-free oracle)."""
    reached = set(ontology.node(start).child_ids)
    while True:
        expanded = set(reached)
        for node_id in reached:
            expanded.update(ontology.node(node_id).child_ids)
        if expanded == reached:
            return reached
        reached = expanded


class TestParse:
    def test_three_node_chain(self):
        ontology = parse_ontology(chain_json())
        assert len(ontology) == 3
        assert ontology.node("A").child_ids == ("B",)
        assert ontology.node("B").child_ids == ("C",)
        assert ontology.node("C").child_ids == ()

    def test_dangling_child_names_the_id(self):
        records = [{"id": "A", "name": "Alpha", "child_ids": ["X"]}]
        with pytest.raises(OntologyIntegrityError, match="'X'"):
            parse_ontology(json.dumps(records).encode())

    def test_cycle_names_an_involved_id(self):
        records = [
            {"id": "A", "name": "Alpha", "child_ids": ["B"]},
            {"id": "B", "name": "Beta", "child_ids": ["A"]},
        ]
        with pytest.raises(OntologyCycleError, match="'A'|'B'"):
            parse_ontology(json.dumps(records).encode())

    def test_self_loop_is_a_cycle(self):
        records = [{"id": "A", "name": "Alpha", "child_ids": ["A"]}]
        with pytest.raises(OntologyCycleError):
            parse_ontology(json.dumps(records).encode())

    def test_malformed_record_reports_index(self):
        records = [{"id": "A", "name": "Alpha"}, {"name": "no id"}]
        with pytest.raises(OntologyParseError, match="record 1"):
            parse_ontology(json.dumps(records).encode())

    def test_duplicate_id_rejected(self):
        records = [
            {"id": "A", "name": "Alpha"},
            {"id": "A", "name": "Alpha again"},
        ]
        with pytest.raises(OntologyIntegrityError, match="duplicate"):
            parse_ontology(json.dumps(records).encode())

    def test_accepts_stream_and_path(self):
        with open(FIXTURE_PATH, "rb") as f:
            from_stream = parse_ontology(f)
        from_path = parse_ontology(FIXTURE_PATH)
        assert len(from_stream) == len(from_path)

    def test_fixture_file_node_count_matches_record_count(self):
        # Independent record count straight off the raw JSON document.
        raw = json.loads(FIXTURE_PATH.read_text(encoding="utf-8"))
        raw_ids = {record["id"] for record in raw}
        ontology = parse_ontology(FIXTURE_PATH)
        assert len(ontology) == len(raw) == len(raw_ids)

    @pytest.mark.skipif(
        "AUDIOSET_ONTOLOGY_JSON" not in os.environ,
        reason="set AUDIOSET_ONTOLOGY_JSON to check against the published ontology file",
    )
    def test_real_ontology_file_parses_cleanly(self):
        path = Path(os.environ["AUDIOSET_ONTOLOGY_JSON"])
        raw = json.loads(path.read_text(encoding="utf-8"))
        ontology = parse_ontology(path)
        assert len(ontology) == len(raw)


class TestDescendants:
    def test_leaf_has_no_descendants(self, ontology):
        assert ontology.descendants("/fx/cello") == []

    def test_bowed_strings_cover_cello_and_double_bass(self, ontology):
        descendants = ontology.descendants("/fx/bowed")
        assert "/fx/cello" in descendants
        assert "/fx/double_bass" in descendants

    def test_excludes_self(self, ontology):
        assert "/fx/guitar" not in ontology.descendants("/fx/guitar")

    def test_diamond_reports_each_id_once(self, ontology):
        # acoustic/electric guitar are reachable via guitar and plucked.
        descendants = ontology.descendants("/fx/instrument")
        assert len(descendants) == len(set(descendants))
        assert descendants.count("/fx/acoustic_guitar") == 1

    def test_unknown_id_raises(self, ontology):
        with pytest.raises(UnknownLabelError):
            ontology.descendants("/fx/nope")

    def test_matches_brute_force_closure_on_random_dags(self):
        rng = random.Random(1234)
        for _ in range(25):
            ontology = random_dag(rng, 50)
            for start in ("n0", "n10", "n25"):
                assert set(ontology.descendants(start)) == brute_force_reachable(
                    ontology, start
                )

    def test_transitive_consistency(self, ontology):
        for node in ontology:
            mine = set(ontology.descendants(node.id))
            for child in mine:
                assert set(ontology.descendants(child)) <= mine

    def test_deterministic_order(self, ontology):
        first = ontology.descendants("/fx/instrument")
        assert all(
            ontology.descendants("/fx/instrument") == first for _ in range(3)
        )


class TestPruneAncestors:
    def test_guitar_dropped_when_children_present(self, ontology):
        pruned = ontology.prune_ancestors(
            ["/fx/guitar", "/fx/acoustic_guitar", "/fx/electric_guitar"]
        )
        assert pruned.labels == ("/fx/acoustic_guitar", "/fx/electric_guitar")

    def test_unrelated_leaves_unchanged(self, ontology):
        leaves = ["/fx/cello", "/fx/dog", "/fx/piano", "/fx/rain"]
        assert ontology.prune_ancestors(leaves).labels == tuple(sorted(leaves))

    def test_unknown_candidate_raises(self, ontology):
        with pytest.raises(UnknownLabelError):
            ontology.prune_ancestors(["/fx/cello", "/fx/bogus"])

    def test_matches_pairwise_oracle_on_random_sets(self, ontology):
        rng = random.Random(99)
        all_ids = sorted(node.id for node in ontology)
        for _ in range(50):
            candidates = rng.sample(all_ids, rng.randint(2, 12))
            kept = set(ontology.prune_ancestors(candidates).labels)
            # O(n^2) oracle: drop a if any other candidate is reachable from it.
            expected = {
                a
                for a in candidates
                if not any(
                    b in brute_force_reachable(ontology, a)
                    for b in candidates
                    if b != a
                )
            }
            assert kept == expected

    def test_output_satisfies_no_ancestor_invariant(self, ontology):
        rng = random.Random(7)
        all_ids = sorted(node.id for node in ontology)
        for _ in range(25):
            kept = ontology.prune_ancestors(rng.sample(all_ids, 8))
            for a in kept:
                for b in kept:
                    if a != b:
                        assert b not in ontology.descendants(a)


class TestLabelSet:
    def test_canonical_order_is_lexicographic(self):
        labels = LabelSet.from_ids(["b", "a", "c", "a"])
        assert labels.labels == ("a", "b", "c")

    def test_round_trip_via_text_file(self, tmp_path):
        labels = LabelSet.from_ids(["/fx/dog", "/fx/cat"])
        path = tmp_path / "labels.txt"
        labels.write(path)
        assert path.read_text() == "/fx/cat\n/fx/dog\n"
        assert LabelSet.read(path) == labels

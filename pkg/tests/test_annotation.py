from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from clipsift.annotation import (
    AnnotationError,
    AnnotationService,
    AnnotationStore,
    ConflictError,
    UnknownSessionError,
    create_app,
)
from clipsift.curation import DatasetManifest, ManifestEntry
from clipsift.noise import CATEGORIES, JudgmentTable, noise_breakdown


def audit_manifest(n=30):
    entries = [
        ManifestEntry(f"a{i:03d}", f"L{i % 3}", f"Label {i % 3}", "train")
        for i in range(n)
    ]
    return DatasetManifest("audit", entries, {})


def clean_manifest():
    entries = [
        ManifestEntry(f"ref-{label}-{i}", label, f"Label {label[-1]}", "train")
        for label in ("L0", "L1", "L2")
        for i in range(5)
    ]
    return DatasetManifest("clean", entries, {})


@pytest.fixture
def service(tmp_path):
    store = AnnotationStore(tmp_path / "store")
    return AnnotationService(
        store,
        audit_manifest(),
        clean_manifest(),
        descriptions={"L0": "Zeroth label", "L1": "First label", "L2": "Second label"},
    )


class TestSessions:
    def test_sample_of_100_allows_duplicates(self, service):
        session = service.create_session("ann1", sample_size=100, seed=1)
        assert len(session.sample) == 100
        assert len(set(session.sample)) < 100  # 30 distinct clips, so must repeat

    def test_singleton_session(self, service):
        session = service.create_session("ann1", sample_size=1, seed=1)
        assert len(session.sample) == 1

    def test_fixed_seed_reproduces_sample(self, service):
        a = service.create_session("ann1", sample_size=50, seed=99)
        b = service.create_session("ann2", sample_size=50, seed=99)
        assert a.sample == b.sample
        assert a.session_id != b.session_id

    def test_empty_manifest_rejected(self, tmp_path):
        with pytest.raises(AnnotationError):
            AnnotationService(
                AnnotationStore(tmp_path / "s"), DatasetManifest("empty", [], {})
            )

    def test_zero_sample_size_rejected(self, service):
        with pytest.raises(ValueError):
            service.create_session("ann1", sample_size=0, seed=1)


class TestNextItem:
    def test_fresh_session_starts_at_position_zero(self, service):
        session = service.create_session("ann1", 5, seed=2)
        item = service.next_item(session.session_id)
        assert item["position"] == 0
        assert item["total"] == 5
        assert item["clip_id"] == session.sample[0]
        assert item["categories"] == list(CATEGORIES)

    def test_payload_carries_description_and_examples(self, service):
        session = service.create_session("ann1", 5, seed=2)
        item = service.next_item(session.session_id)
        assert item["description"]
        assert 1 <= len(item["examples"]) <= 3

    def test_reference_examples_carry_the_item_label_in_clean_manifest(self, service):
        clean_labels = {e.clip_id: e.label_id for e in clean_manifest().entries}
        session = service.create_session("ann1", 20, seed=3)
        for _ in range(20):
            item = service.next_item(session.session_id)
            for example in item["examples"]:
                assert clean_labels[example["clip_id"]] == item["label_id"]
            service.record_judgment(session.session_id, item["position"], "PP")

    def test_fully_judged_session_returns_done(self, service):
        session = service.create_session("ann1", 2, seed=4)
        for position in range(2):
            service.record_judgment(session.session_id, position, "PP")
        assert service.next_item(session.session_id) is None

    def test_unknown_session_raises(self, service):
        with pytest.raises(UnknownSessionError):
            service.next_item("missing")


class TestRecordJudgment:
    def test_valid_judgment_advances_cursor(self, service):
        session = service.create_session("ann1", 3, seed=5)
        ack = service.record_judgment(session.session_id, 0, "PNP/IV")
        assert ack["cursor"] == 1

    def test_exact_duplicate_is_acknowledged_without_new_row(self, service):
        session = service.create_session("ann1", 3, seed=5)
        service.record_judgment(session.session_id, 0, "NP/OOV")
        rows_before = len(service.store.judgments)
        ack = service.record_judgment(session.session_id, 0, "NP/OOV")
        assert ack["cursor"] == 1
        assert len(service.store.judgments) == rows_before

    def test_same_position_different_category_conflicts(self, service):
        session = service.create_session("ann1", 3, seed=5)
        service.record_judgment(session.session_id, 0, "PP")
        with pytest.raises(ConflictError):
            service.record_judgment(session.session_id, 0, "U")

    def test_position_ahead_of_cursor_conflicts(self, service):
        session = service.create_session("ann1", 3, seed=5)
        with pytest.raises(ConflictError):
            service.record_judgment(session.session_id, 1, "PP")

    def test_invalid_category_rejected(self, service):
        session = service.create_session("ann1", 3, seed=5)
        with pytest.raises(ValueError, match="category"):
            service.record_judgment(session.session_id, 0, "MAYBE")

    def test_clip_drawn_twice_is_judged_twice(self, tmp_path):
        store = AnnotationStore(tmp_path / "s")
        manifest = DatasetManifest(
            "one", [ManifestEntry("only", "L0", "Label 0", "train")], {}
        )
        service = AnnotationService(store, manifest)
        session = service.create_session("ann1", 2, seed=1)
        assert session.sample == ("only", "only")
        service.record_judgment(session.session_id, 0, "PP")
        service.record_judgment(session.session_id, 1, "NP/IV")
        assert len(store.judgments) == 2


class TestEstimate:
    def scripted_counts(self):
        # The pooled 300-judgment tally: 158/7/4/26/100/3 hits the
        # published proportions within rounding.
        return {"PP": 158, "PNP/IV": 7, "PNP/OOV": 4, "NP/IV": 26, "NP/OOV": 100, "U": 5}

    def test_estimate_equals_breakdown_of_tally(self, service):
        session = service.create_session("ann1", 300, seed=8)
        schedule = [
            category
            for category, count in self.scripted_counts().items()
            for _ in range(count)
        ]
        for position, category in enumerate(schedule):
            service.record_judgment(session.session_id, position, category)
        table, estimate = service.compute_estimate()
        expected_table = JudgmentTable.from_counts(self.scripted_counts())
        assert table == expected_table
        assert estimate == noise_breakdown(expected_table)

    def test_all_pp_gives_zero_noise(self, service):
        session = service.create_session("ann1", 10, seed=9)
        for position in range(10):
            service.record_judgment(session.session_id, position, "PP")
        _, estimate = service.compute_estimate()
        assert estimate.rate_pnp_incorrect == 0.0
        assert estimate.rate_pnp_correct == 0.0

    def test_single_unsure_judgment_has_empty_denominator(self, service):
        session = service.create_session("ann1", 1, seed=10)
        service.record_judgment(session.session_id, 0, "U")
        with pytest.raises(ValueError, match="Unsure"):
            service.compute_estimate()

    def test_no_judgments_rejected(self, service):
        with pytest.raises(AnnotationError):
            service.compute_estimate()


class TestReplay:
    def test_log_replay_reconstructs_cursors(self, tmp_path):
        store = AnnotationStore(tmp_path / "store")
        service = AnnotationService(store, audit_manifest(), clean_manifest())
        s1 = service.create_session("ann1", 5, seed=1)
        s2 = service.create_session("ann2", 5, seed=2)
        for position in range(3):
            service.record_judgment(s1.session_id, position, "PP")
        service.record_judgment(s2.session_id, 0, "NP/IV")

        reloaded = AnnotationStore(tmp_path / "store")
        assert reloaded.session(s1.session_id).cursor == 3
        assert reloaded.session(s2.session_id).cursor == 1
        assert len(reloaded.judgments) == 4


class TestHttpApi:
    @pytest.fixture
    def client(self, service):
        return TestClient(create_app(service))

    def start(self, client, sample_size=3, seed=1):
        response = client.post(
            "/sessions",
            json={"annotator_id": "ann1", "sample_size": sample_size, "seed": seed},
        )
        assert response.status_code == 200
        return response.json()["session_id"]

    def test_full_round_trip(self, client):
        session_id = self.start(client)
        for position in range(3):
            item = client.get(f"/sessions/{session_id}/next").json()
            assert item["done"] is False
            assert item["item"]["position"] == position
            ack = client.post(
                f"/sessions/{session_id}/judgments",
                json={"position": position, "category": "PP"},
            )
            assert ack.status_code == 200
            assert ack.json()["cursor"] == position + 1
        assert client.get(f"/sessions/{session_id}/next").json() == {"done": True}
        estimate = client.get("/estimate")
        assert estimate.status_code == 200
        assert estimate.json()["table"]["PP"] == 1.0

    def test_unknown_session_is_404(self, client):
        assert client.get("/sessions/nope/next").status_code == 404

    def test_conflict_is_409(self, client):
        session_id = self.start(client)
        client.post(
            f"/sessions/{session_id}/judgments", json={"position": 0, "category": "PP"}
        )
        response = client.post(
            f"/sessions/{session_id}/judgments", json={"position": 0, "category": "U"}
        )
        assert response.status_code == 409

    def test_invalid_category_is_422(self, client):
        session_id = self.start(client)
        response = client.post(
            f"/sessions/{session_id}/judgments",
            json={"position": 0, "category": "WHAT"},
        )
        assert response.status_code == 422

    def test_estimate_before_any_judgment_is_409(self, client):
        assert client.get("/estimate").status_code == 409

    def test_token_auth_when_configured(self, service):
        client = TestClient(create_app(service, token="sekrit"))
        refused = client.post(
            "/sessions", json={"annotator_id": "a", "sample_size": 1, "seed": 0}
        )
        assert refused.status_code == 401
        allowed = client.post(
            "/sessions",
            json={"annotator_id": "a", "sample_size": 1, "seed": 0},
            headers={"X-Auth-Token": "sekrit"},
        )
        assert allowed.status_code == 200

    def test_audio_files_served_from_audio_dir(self, service, tmp_path):
        from .test_wav import write_wav

        audio_dir = tmp_path / "audio"
        audio_dir.mkdir()
        write_wav(audio_dir / "a000.wav")
        client = TestClient(create_app(service, audio_dir=audio_dir))
        ok = client.get("/audio/a000.wav")
        assert ok.status_code == 200
        assert ok.headers["content-type"] == "audio/wav"
        assert client.get("/audio/missing.wav").status_code == 404
        assert client.get("/audio/..%2Fsecret.wav").status_code == 404


UI_BUNDLE = Path(__file__).parent.parent / "frontend" / "dist"


@pytest.mark.skipif(
    not (UI_BUNDLE / "index.html").exists(),
    reason="frontend bundle not built (cd frontend && npm run build)",
)
class TestUiBundleServing:
    def test_bundle_and_api_coexist(self, service):
        client = TestClient(create_app(service, static_dir=UI_BUNDLE))
        index = client.get("/")
        assert index.status_code == 200
        assert '<main id="app">' in index.text
        module = client.get("/src/main.js")
        assert module.status_code == 200
        assert "SessionController" in module.text
        created = client.post(
            "/sessions", json={"annotator_id": "a", "sample_size": 1, "seed": 0}
        )
        assert created.status_code == 200

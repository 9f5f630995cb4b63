"""HTTP surface: routes, error-code mapping, the holdout gate over the
wire, and the data/lattice boundary."""

import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from symlattice.service import SessionStore, create_app


def toy_csv(n=80, seed=0) -> str:
    rng = np.random.default_rng(seed)
    lines = ["x0,x1,y"]
    for _ in range(n):
        a = float(rng.uniform(-1, 1))
        b = float(rng.uniform(-1, 1))
        lines.append(f"{a!r},{b!r},{1 if a + b > 0 else 0}")
    return "\n".join(lines) + "\n"


SPLIT = {"fractions": [0.6, 0.2, 0.2], "stratify_by": "y", "seed": 1}


@pytest.fixture
def store() -> SessionStore:
    return SessionStore()


@pytest.fixture
def client(store) -> TestClient:
    with TestClient(create_app(store)) as c:
        yield c


def new_session(client, **config) -> str:
    r = client.post("/v1/sessions", json=config or {"seed": 11})
    assert r.status_code == 200
    return r.json()["session_id"]


def loaded_session(client) -> str:
    sid = new_session(client)
    r = client.post(f"/v1/sessions/{sid}/data", json={"csv": toy_csv(), "split": SPLIT})
    assert r.status_code == 200
    return sid


def posed(client, sid, **extra) -> str:
    body = {
        "inputs": ["x0", "x1"],
        "output": "y",
        "task": "classifier",
        "max_depth": 1,
        "capacity": 8,
        **extra,
    }
    r = client.post(f"/v1/sessions/{sid}/qgraph", json=body)
    assert r.status_code == 200, r.text
    return r.json()["pool_id"]


class TestSessions:
    def test_create_echoes_config(self, client):
        r = client.post("/v1/sessions", json={"width": 6, "depth": 3, "seed": 4})
        body = r.json()
        assert r.status_code == 200
        assert body["lattice"]["width"] == 6
        assert body["lattice"]["depth"] == 3
        assert len(body["session_id"]) == 16

    def test_create_with_empty_body(self, client):
        r = client.post("/v1/sessions")
        assert r.status_code == 200
        assert r.json()["lattice"]["width"] == 8

    def test_unknown_config_key(self, client):
        r = client.post("/v1/sessions", json={"rows": 9})
        assert r.status_code == 400
        assert r.json()["type"] == "ConfigError"

    def test_listing(self, client):
        a = new_session(client)
        b = new_session(client)
        ids = client.get("/v1/sessions").json()["sessions"]
        assert set(ids) >= {a, b}

    def test_unknown_session_404(self, client):
        r = client.get("/v1/sessions/deadbeef")
        assert r.status_code == 404
        body = r.json()
        assert body["kind"] == "session"
        assert body["type"] == "UnknownIdError"

    def test_overview(self, client):
        sid = loaded_session(client)
        r = client.get(f"/v1/sessions/{sid}")
        assert r.status_code == 200
        body = r.json()
        assert body["id"] == sid
        assert body["datasets"]["data"]["sizes"] == {
            "train": 48,
            "valid": 16,
            "holdout": 16,
        }


class TestData:
    def test_missing_csv_field(self, client):
        sid = new_session(client)
        r = client.post(f"/v1/sessions/{sid}/data", json={"label": "d"})
        assert r.status_code == 400
        assert "'csv'" in r.json()["error"]

    def test_parse_error_maps_to_400(self, client):
        sid = new_session(client)
        r = client.post(f"/v1/sessions/{sid}/data", json={"csv": "a,a\n1,2\n"})
        assert r.status_code == 400
        assert r.json()["type"] == "ParseError"

    def test_duplicate_label(self, client):
        sid = loaded_session(client)
        r = client.post(f"/v1/sessions/{sid}/data", json={"csv": toy_csv(), "split": SPLIT})
        assert r.status_code == 400
        assert "already loaded" in r.json()["error"]

    def test_default_split_is_60_20_20(self, client):
        sid = new_session(client)
        r = client.post(f"/v1/sessions/{sid}/data", json={"csv": toy_csv()})
        assert r.status_code == 200
        assert r.json()["sizes"] == {"train": 48, "valid": 16, "holdout": 16}


class TestQuestions:
    def test_pose_returns_pool_and_spec(self, client):
        sid = loaded_session(client)
        r = client.post(
            f"/v1/sessions/{sid}/qgraph",
            json={"inputs": ["x0", "x1"], "output": "y", "task": "classifier"},
        )
        body = r.json()
        assert r.status_code == 200
        assert body["pool_id"] == "q0"
        assert body["capacity"] == 200
        assert body["sort_criterion"] == "cross_entropy"
        assert body["spec"]["inputs"] == [["x0", "numerical"], ["x1", "numerical"]]

    def test_missing_fields(self, client):
        sid = loaded_session(client)
        r = client.post(f"/v1/sessions/{sid}/qgraph", json={"inputs": ["x0"]})
        assert r.status_code == 400
        assert "'output'" in r.json()["error"]

    def test_unknown_column_404(self, client):
        sid = loaded_session(client)
        r = client.post(
            f"/v1/sessions/{sid}/qgraph",
            json={"inputs": ["price"], "output": "y", "task": "classifier"},
        )
        assert r.status_code == 404
        assert r.json()["kind"] == "column"

    def test_criterion_override(self, client):
        sid = loaded_session(client)
        r = client.post(
            f"/v1/sessions/{sid}/qgraph",
            json={
                "inputs": ["x0", "x1"],
                "output": "y",
                "task": "classifier",
                "capacity": 8,
                "criterion": "aic",
            },
        )
        assert r.json()["sort_criterion"] == "aic"

    def test_filter_starvation_maps_to_422(self, client):
        sid = loaded_session(client)
        r = client.post(
            f"/v1/sessions/{sid}/qgraph",
            json={
                "inputs": ["x0", "x1"],
                "output": "y",
                "task": "classifier",
                "max_depth": 1,
                "capacity": 4,
                "filters": [
                    {"type": "contains", "feature": "x0"},
                    {"type": "contains", "feature": "x1"},
                    {"type": "functions", "kinds": ["tanh"]},
                ],
            },
        )
        assert r.status_code == 422
        body = r.json()
        assert body["type"] == "FilterStarvationError"
        assert body["attempts"] == 1000
        assert body["accepted"] == 0
        assert body["acceptance_rate"] == 0.0


class TestFitUpdateGraphs:
    def test_fit_rounds(self, client):
        sid = loaded_session(client)
        pid = posed(client, sid)
        r = client.post(f"/v1/sessions/{sid}/qgraph/{pid}/fit", json={"rounds": 2})
        body = r.json()
        assert r.status_code == 200
        assert body["pool_id"] == pid
        assert [row["round"] for row in body["rounds"]] == [1, 2]

    def test_fit_default_body(self, client):
        sid = loaded_session(client)
        pid = posed(client, sid)
        r = client.post(f"/v1/sessions/{sid}/qgraph/{pid}/fit")
        assert r.status_code == 200
        assert len(r.json()["rounds"]) == 1

    def test_unknown_pool_404(self, client):
        sid = loaded_session(client)
        r = client.post(f"/v1/sessions/{sid}/qgraph/q9/fit", json={})
        assert r.status_code == 404
        assert r.json()["kind"] == "pool"

    def test_graph_listing(self, client):
        sid = loaded_session(client)
        pid = posed(client, sid)
        client.post(f"/v1/sessions/{sid}/qgraph/{pid}/fit", json={})
        r = client.get(f"/v1/sessions/{sid}/qgraph/{pid}/graphs", params={"n": 3})
        body = r.json()
        assert r.status_code == 200
        assert len(body["graphs"]) == 3
        row = body["graphs"][0]
        assert row["fitted"] is True
        assert "structure" in row

    def test_update(self, client):
        sid = loaded_session(client)
        pid = posed(client, sid)
        client.post(f"/v1/sessions/{sid}/qgraph/{pid}/fit", json={})
        gid = client.get(f"/v1/sessions/{sid}/qgraph/{pid}/graphs", params={"n": 1}).json()[
            "graphs"
        ][0]["id"]
        r = client.post(
            f"/v1/sessions/{sid}/update", json={"graph_ids": [gid], "pool_id": pid}
        )
        assert r.status_code == 200
        assert r.json() == {"updated": 1}

    def test_update_empty_ids(self, client):
        sid = loaded_session(client)
        r = client.post(f"/v1/sessions/{sid}/update", json={"graph_ids": []})
        assert r.status_code == 400

    def test_update_unknown_graph(self, client):
        sid = loaded_session(client)
        pid = posed(client, sid)
        client.post(f"/v1/sessions/{sid}/qgraph/{pid}/fit", json={})
        r = client.post(f"/v1/sessions/{sid}/update", json={"graph_ids": [4096]})
        assert r.status_code == 404
        assert r.json()["kind"] == "graph"


class TestEquation:
    def test_payload_and_determinism(self, client):
        sid = loaded_session(client)
        pid = posed(client, sid)
        client.post(f"/v1/sessions/{sid}/qgraph/{pid}/fit", json={})
        gid = client.get(
            f"/v1/sessions/{sid}/qgraph/{pid}/graphs", params={"n": 1}
        ).json()["graphs"][0]["id"]
        url = f"/v1/sessions/{sid}/qgraph/{pid}/graphs/{gid}/equation"
        a = client.get(url, params={"signif": 6})
        b = client.get(url, params={"signif": 6})
        assert a.status_code == 200
        assert a.content == b.content  # byte-identical across calls
        body = a.json()
        assert body["graph_id"] == gid
        assert body["equation"].startswith("logistic(")
        latex = client.get(url, params={"format": "latex"}).json()
        assert "\\operatorname{logistic}" in latex["equation"]

    def test_bad_signif_rejected(self, client):
        sid = loaded_session(client)
        pid = posed(client, sid)
        client.post(f"/v1/sessions/{sid}/qgraph/{pid}/fit", json={})
        gid = client.get(
            f"/v1/sessions/{sid}/qgraph/{pid}/graphs", params={"n": 1}
        ).json()["graphs"][0]["id"]
        r = client.get(
            f"/v1/sessions/{sid}/qgraph/{pid}/graphs/{gid}/equation",
            params={"signif": 0},
        )
        assert r.status_code == 422  # request validation, before the handler


class TestPlots:
    def fitted(self, client):
        sid = loaded_session(client)
        pid = posed(client, sid)
        client.post(f"/v1/sessions/{sid}/qgraph/{pid}/fit", json={})
        gid = client.get(
            f"/v1/sessions/{sid}/qgraph/{pid}/graphs", params={"n": 1}
        ).json()["graphs"][0]["id"]
        return sid, pid, gid

    def test_roc(self, client):
        sid, pid, gid = self.fitted(client)
        r = client.get(f"/v1/sessions/{sid}/qgraph/{pid}/graphs/{gid}/plot/roc")
        body = r.json()
        assert r.status_code == 200
        assert body["kind"] == "roc"
        assert 0.0 <= body["payload"]["auc"] <= 1.0
        assert body["meta"]["split"] == "train"

    def test_probability_scores(self, client):
        sid, pid, gid = self.fitted(client)
        r = client.get(
            f"/v1/sessions/{sid}/qgraph/{pid}/graphs/{gid}/plot/probability_scores",
            params={"dataset": "valid", "bins": 8},
        )
        body = r.json()
        assert r.status_code == 200
        assert len(body["payload"]["edges"]) == 9
        assert body["meta"]["split"] == "valid"

    def test_segmented_loss(self, client):
        sid, pid, gid = self.fitted(client)
        r = client.get(
            f"/v1/sessions/{sid}/qgraph/{pid}/graphs/{gid}/plot/segmented_loss",
            params={"bins": 5},
        )
        assert r.status_code == 200
        assert sum(r.json()["payload"]["counts"]) == 48

    def test_partial2d_defaults(self, client):
        sid = loaded_session(client)
        pid = posed(client, sid, max_depth=2, filters=[
            {"type": "contains", "feature": "x0"},
            {"type": "contains", "feature": "x1"},
        ])
        client.post(f"/v1/sessions/{sid}/qgraph/{pid}/fit", json={})
        gid = client.get(
            f"/v1/sessions/{sid}/qgraph/{pid}/graphs", params={"n": 1}
        ).json()["graphs"][0]["id"]
        r = client.get(
            f"/v1/sessions/{sid}/qgraph/{pid}/graphs/{gid}/plot/partial2d",
            params={"resolution": 5},
        )
        assert r.status_code == 200, r.text
        body = r.json()
        assert len(body["payload"]["grid"]) == 5
        assert body["meta"]["fx"] == "x0"

    def test_unknown_kind_400(self, client):
        sid, pid, gid = self.fitted(client)
        r = client.get(f"/v1/sessions/{sid}/qgraph/{pid}/graphs/{gid}/plot/violin")
        assert r.status_code == 400
        assert "unknown plot kind" in r.json()["error"]


class TestHoldoutGate:
    def test_blocked_then_unlocked(self, client):
        sid = loaded_session(client)
        pid = posed(client, sid)
        client.post(f"/v1/sessions/{sid}/qgraph/{pid}/fit", json={})
        gid = client.get(
            f"/v1/sessions/{sid}/qgraph/{pid}/graphs", params={"n": 1}
        ).json()["graphs"][0]["id"]
        url = f"/v1/sessions/{sid}/qgraph/{pid}/graphs/{gid}/plot/roc"
        r = client.get(url, params={"dataset": "holdout"})
        assert r.status_code == 409
        assert r.json()["type"] == "HoldoutLockedError"
        r2 = client.post(f"/v1/sessions/{sid}/holdout/unlock")
        assert r2.status_code == 200
        assert r2.json() == {"holdout_unlocked": True, "already_unlocked": False}
        r3 = client.get(url, params={"dataset": "holdout"})
        assert r3.status_code == 200
        r4 = client.post(f"/v1/sessions/{sid}/holdout/unlock")
        assert r4.json()["already_unlocked"] is True

    def test_exactly_one_unlock_event(self, client):
        sid = loaded_session(client)
        client.post(f"/v1/sessions/{sid}/holdout/unlock")
        client.post(f"/v1/sessions/{sid}/holdout/unlock")
        events = client.get(f"/v1/sessions/{sid}/history").json()["events"]
        unlocks = [e for e in events if e["event"] == "holdout-unlocked"]
        assert len(unlocks) == 1


class TestHistory:
    def test_one_event_per_fit_round_and_update(self, client):
        sid = loaded_session(client)
        pid = posed(client, sid)
        client.post(f"/v1/sessions/{sid}/qgraph/{pid}/fit", json={"rounds": 3})
        gid = client.get(
            f"/v1/sessions/{sid}/qgraph/{pid}/graphs", params={"n": 1}
        ).json()["graphs"][0]["id"]
        client.post(f"/v1/sessions/{sid}/update", json={"graph_ids": [gid], "pool_id": pid})
        events = client.get(f"/v1/sessions/{sid}/history").json()["events"]
        kinds = [e["event"] for e in events]
        assert kinds.count("fit-round") == 3
        assert kinds.count("update-applied") == 1
        assert kinds[0] == "session-created"


class TestLatticeBoundary:
    SENTINEL = "xq_POISON_VALUE_93f1"

    def test_raw_data_never_reaches_lattice_state(self, client, store):
        # a categorical cell value acts as the tracer: it may live in
        # datasets and graph parameters, never in lattice state
        sid = new_session(client)
        rng = np.random.default_rng(0)
        rows = ["site,x0,y"]
        for i in range(60):
            site = self.SENTINEL if i % 3 == 0 else f"s{i % 5}"
            rows.append(f"{site},{float(rng.uniform(-1, 1))!r},{i % 2}")
        client.post(
            f"/v1/sessions/{sid}/data",
            json={"csv": "\n".join(rows), "split": {"seed": 0}},
        )
        r = client.post(
            f"/v1/sessions/{sid}/qgraph",
            json={
                "inputs": ["site", "x0"],
                "output": "y",
                "task": "classifier",
                "capacity": 6,
            },
        )
        pid = r.json()["pool_id"]
        client.post(f"/v1/sessions/{sid}/qgraph/{pid}/fit", json={"auto_update": True})
        session = store.get(sid)
        blob = json.dumps(session.lattice.snapshot())
        assert self.SENTINEL not in blob
        # while the fitted graphs legitimately carry it in their tables
        carrier = json.dumps(session.pool(pid).to_json())
        assert self.SENTINEL in carrier


class TestStaticMount:
    def test_serves_ui_bundle(self, tmp_path):
        (tmp_path / "index.html").write_text("<!doctype html><title>lab</title>")
        app = create_app(static_dir=str(tmp_path))
        with TestClient(app) as c:
            r = c.get("/")
            assert r.status_code == 200
            assert "lab" in r.text
            # API routes still win over the mount
            assert c.post("/v1/sessions").status_code == 200

"""HTTP layer: routes, error mapping, finalize jobs, restart recovery."""

import pytest
from fastapi.testclient import TestClient

from wordbench.service import create_app


@pytest.fixture
def client(corrupted_copy):
    """Serve the data dir holding the one prepared workspace."""
    return TestClient(create_app(corrupted_copy.root.parent))


def make_session(client, s=3, k=4):
    r = client.post("/workspaces/ws/sessions", json={"s": s, "k": k})
    assert r.status_code == 200
    return r.json()


def test_health_and_workspace_info(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "workspaces": ["ws"]}
    r = client.get("/workspaces/ws")
    body = r.json()
    assert body["round"] == 0
    assert body["has_model"] is True
    assert body["src_lang"] == "src" and body["tgt_lang"] == "tgt"
    assert client.get("/workspaces/none").status_code == 404


def test_create_workspace_over_http(client, tmp_path):
    from wordbench.synth import SyntheticTaskSpec, generate_task

    paths = generate_task(
        SyntheticTaskSpec(seed=4, n_train=16, n_test=8, n_unlabeled=8), tmp_path / "t"
    )
    payload = {
        "name": "fresh",
        "src_emb": str(paths.src_emb),
        "tgt_emb": str(paths.tgt_emb),
        "src_lang": "src",
        "tgt_lang": "tgt",
        "train": str(paths.train),
    }
    r = client.post("/workspaces", json=payload)
    assert r.status_code == 200
    assert r.json() == {"workspace": "fresh", "round": 0, "has_model": False}
    # Without a trained model, sessions are refused.
    r = client.post("/workspaces/fresh/sessions", json={})
    assert r.status_code == 400
    assert "model" in r.json()["detail"]
    # Duplicate names and missing fields are preconditions.
    assert client.post("/workspaces", json=payload).status_code == 400
    assert client.post("/workspaces", json={"name": "x"}).status_code == 400


def test_session_flow(client):
    body = make_session(client)
    sid = body["id"]
    assert body["state"] == "open"
    assert body["n_cards"] == 3
    card = body["first_card"]
    assert card["index"] == 0 and card["total"] == 3

    r = client.get(f"/sessions/{sid}/cards/1")
    assert r.status_code == 200
    assert client.get(f"/sessions/{sid}/cards/99").status_code == 404
    assert client.get("/sessions/nope").status_code == 404

    kw = card["keyword"]["surface"]
    word = card["columns"]["tgt"][0]["surface"]
    r = client.post(
        f"/sessions/{sid}/marks",
        json={"keyword": kw, "word": word, "lang": "tgt", "mark": "accept"},
    )
    assert r.status_code == 200
    assert r.json()["columns"]["tgt"][0]["mark"] == "accepted"
    r = client.post(
        f"/sessions/{sid}/marks",
        json={"keyword": kw, "word": word, "lang": "tgt", "mark": "clear"},
    )
    assert r.json()["columns"]["tgt"][0]["mark"] == "unmarked"

    # Error mapping: 400 bad action / missing field, 404 unknown word.
    bad = {"keyword": kw, "word": word, "lang": "tgt", "mark": "huh"}
    assert client.post(f"/sessions/{sid}/marks", json=bad).status_code == 400
    assert (
        client.post(f"/sessions/{sid}/marks", json={"keyword": kw}).status_code == 400
    )
    missing = {"keyword": kw, "word": "zzz", "lang": "tgt", "mark": "accept"}
    assert client.post(f"/sessions/{sid}/marks", json=missing).status_code == 404


def test_add_word_and_concordance(client):
    body = make_session(client)
    sid = body["id"]
    card = body["first_card"]
    kw = card["keyword"]["surface"]
    onboard = {e["surface"] for e in card["columns"]["tgt"]}
    fresh = next(
        s for s in ("tgt0w00", "tgt0w01", "tgt1w00", "tgt1w01") if s not in onboard and s != kw
    )
    r = client.post(
        f"/sessions/{sid}/words",
        json={"keyword": kw, "surface": fresh, "lang": "tgt", "mark": "reject"},
    )
    assert r.status_code == 200
    added = r.json()["columns"]["tgt"][-1]
    assert added["surface"] == fresh and added["added"] and added["mark"] == "rejected"
    r = client.post(
        f"/sessions/{sid}/words",
        json={"keyword": kw, "surface": "nonsense", "lang": "tgt", "mark": "accept"},
    )
    assert r.status_code == 400
    assert "not in vocabulary" in r.json()["detail"]

    r = client.get("/concordance", params={"word": kw, "lang": "src", "limit": 2})
    assert r.status_code == 200
    snippets = r.json()["snippets"]
    assert 1 <= len(snippets) <= 2
    assert kw in snippets[0]["text"].split()
    assert client.get("/concordance", params={"word": "zzz", "lang": "src"}).status_code == 404


def test_finalize_job_and_report(client):
    body = make_session(client)
    sid = body["id"]
    card = body["first_card"]
    kw = card["keyword"]["surface"]
    word = card["columns"]["tgt"][0]["surface"]

    # Finalizing an unmarked session is a precondition failure.
    assert client.post(f"/sessions/{sid}/finalize", json={}).status_code == 400
    assert client.get(f"/sessions/{sid}/report").status_code == 404

    client.post(
        f"/sessions/{sid}/marks",
        json={"keyword": kw, "word": word, "lang": "tgt", "mark": "accept"},
    )
    r = client.post(f"/sessions/{sid}/finalize", json={"seeds": [0, 1]})
    assert r.status_code == 200
    job = r.json()
    assert job["state"] == "done"
    jr = client.get(f"/jobs/{job['job']}")
    assert jr.status_code == 200
    assert jr.json()["session"] == sid
    assert "report" in jr.json()
    assert client.get("/jobs/none").status_code == 404

    assert client.get(f"/sessions/{sid}").json()["state"] == "closed"
    report = client.get(f"/sessions/{sid}/report")
    assert report.status_code == 200
    assert set(report.json()["conditions"]) == {"base", "refined"}
    assert client.get("/workspaces/ws").json()["round"] == 1

    # Mutations after close map to 409; a second finalize too.
    r = client.post(
        f"/sessions/{sid}/marks",
        json={"keyword": kw, "word": word, "lang": "tgt", "mark": "accept"},
    )
    assert r.status_code == 409
    assert client.post(f"/sessions/{sid}/finalize", json={}).status_code == 409


def test_colliding_session_ids_need_workspace_param(client, corrupted_copy):
    import shutil

    # A second workspace whose first session also gets the id s1.
    shutil.copytree(corrupted_copy.root, corrupted_copy.root.parent / "ws2")
    twin = TestClient(create_app(corrupted_copy.root.parent))
    sid = make_session(twin)["id"]
    r = twin.post("/workspaces/ws2/sessions", json={"s": 3, "k": 4})
    assert r.status_code == 200
    assert r.json()["id"] == sid

    r = twin.get(f"/sessions/{sid}")
    assert r.status_code == 400
    assert "several workspaces" in r.json()["detail"]
    for name in ("ws", "ws2"):
        r = twin.get(f"/sessions/{sid}", params={"workspace": name})
        assert r.status_code == 200
    assert twin.get(f"/sessions/{sid}", params={"workspace": "nope"}).status_code == 404
    assert twin.get("/sessions/zzz", params={"workspace": "ws"}).status_code == 404


def test_restart_recovers_sessions_from_disk(client, corrupted_copy):
    body = make_session(client)
    sid = body["id"]
    kw = body["first_card"]["keyword"]["surface"]
    word = body["first_card"]["columns"]["tgt"][0]["surface"]
    client.post(
        f"/sessions/{sid}/marks",
        json={"keyword": kw, "word": word, "lang": "tgt", "mark": "accept"},
    )

    fresh = TestClient(create_app(corrupted_copy.root.parent))
    r = fresh.get(f"/sessions/{sid}")
    assert r.status_code == 200
    assert r.json()["n_marks"] == 1
    # And the recovered session remains fully usable.
    r = fresh.post(
        f"/sessions/{sid}/marks",
        json={"keyword": kw, "word": word, "lang": "tgt", "mark": "reject"},
    )
    assert r.status_code == 200

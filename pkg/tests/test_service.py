import threading

import pytest
from fastapi.testclient import TestClient

from adaptivity.engine import Engine
from adaptivity.events import replay, EventRecord, read_log
from adaptivity.planner import SessionResult
from adaptivity.profile import StudentProfile
from adaptivity.service import create_app, load_service_config

from builders import graph_doc, lexicon_doc

CHAIN = graph_doc([("a", 0, 1), ("b", 1, 2), ("c", 2, 3)], [("a", "b"), ("b", "c")], graph_id="chain")
CHAIN_LEX = lexicon_doc({"a": 20, "b": 20, "c": 20})


@pytest.fixture
def client():
    c = TestClient(create_app(Engine()))
    assert c.post("/models", json={"graph": CHAIN, "lexicon": CHAIN_LEX}).status_code == 201
    return c


def new_student(client, age=1):
    r = client.post("/students", json={"age_level": age, "graph_id": "chain"})
    assert r.status_code == 201
    return r.json()["student_id"]


def test_register_model_errors(client):
    assert client.post("/models", json={"graph": CHAIN, "lexicon": CHAIN_LEX}).status_code == 409
    cyclic = graph_doc(["x", "y"], [("x", "y"), ("y", "x")], graph_id="cyc")
    r = client.post("/models", json={"graph": cyclic, "lexicon": lexicon_doc({})})
    assert (r.status_code, r.json()["error"]) == (400, "CycleDetected")
    r = client.post("/models", json={"graph": CHAIN, "lexicon": CHAIN_LEX, "extra": 1})
    assert (r.status_code, r.json()["error"]) == (400, "MalformedDocument")
    r = client.post("/models", content=b"not json")
    assert r.status_code == 400


def test_create_student(client):
    sid = new_student(client, age=2)
    states = client.get(f"/students/{sid}").json()["states"]
    assert {k: (v["status"], v["mastery"]) for k, v in states.items()} == {
        "a": ("mastered", 10.0), "b": ("open", 5.0), "c": ("locked", 0.0)}


@pytest.mark.parametrize("body, status", [
    ({"age_level": 1, "graph_id": "nope"}, 404),
    ({"age_level": -1, "graph_id": "chain"}, 422),
    ({"age_level": "two", "graph_id": "chain"}, 422),
    ({"age_level": 1, "graph_id": "chain", "name": "x"}, 400),
    ({"graph_id": "chain"}, 400),
])
def test_create_student_errors(client, body, status):
    assert client.post("/students", json=body).status_code == status


def test_next_session(client):
    sid = new_student(client)
    plan = client.get(f"/students/{sid}/next-session").json()
    assert (plan["feature_id"], plan["game_type"], len(plan["content"])) == ("a", "accuracy", 7)
    assert client.get(f"/students/{sid}/next-session").json() == plan
    assert client.get("/students/ghost/next-session").status_code == 404


def test_nothing_playable_is_409(client):
    sid = new_student(client, age=4)
    r = client.get(f"/students/{sid}/next-session")
    assert (r.status_code, r.json()["error"]) == (409, "NoPlayableFeature")


def test_no_content_is_409(client):
    g = graph_doc(["solo"], [], graph_id="bare")
    client.post("/models", json={"graph": g, "lexicon": lexicon_doc({}, "empty")})
    sid = client.post("/students", json={"age_level": 1, "graph_id": "bare"}).json()["student_id"]
    r = client.get(f"/students/{sid}/next-session")
    assert (r.status_code, r.json()["error"]) == (409, "NoContentForFeature")


def test_results(client):
    sid = new_student(client)
    r = client.post(f"/students/{sid}/results", json={"feature_id": "a", "items": [{"correct": True}] * 7})
    assert r.status_code == 200
    assert r.json()["new_mastery"] == pytest.approx(8.0)
    assert r.json()["newly_opened"] == ["b"]


@pytest.mark.parametrize("body, status", [
    ({"feature_id": "c", "items": [{"correct": True}]}, 409),
    ({"feature_id": "a", "items": []}, 422),
    ({"feature_id": "zz", "items": [{"correct": True}]}, 422),
    ({"feature_id": "a", "items": [{"correct": 1}]}, 400),
    ({"feature_id": "a", "items": [{"correct": True, "ms": 300}]}, 400),
    ({"feature_id": "a", "items": [], "score": 10}, 400),
])
def test_result_errors_are_atomic(client, body, status):
    sid = new_student(client)
    snap = client.get(f"/students/{sid}").json()
    events = client.get(f"/students/{sid}/events").json()
    assert client.post(f"/students/{sid}/results", json=body).status_code == status
    assert client.get(f"/students/{sid}").json() == snap
    assert client.get(f"/students/{sid}/events").json() == events


def test_unknown_student_results(client):
    r = client.post("/students/ghost/results", json={"feature_id": "a", "items": [{"correct": True}]})
    assert r.status_code == 404


def test_events_and_replay(client):
    sid = new_student(client)
    events = client.get(f"/students/{sid}/events", params={"since": 0}).json()
    assert [e["kind"] for e in events] == ["profile_created"]
    assert client.get(f"/students/{sid}/events", params={"since": 1}).json() == []
    for n in (7, 7, 3, 3, 3):
        plan = client.get(f"/students/{sid}/next-session").json()
        items = [{"correct": i < n} for i in range(7)]
        client.post(f"/students/{sid}/results", json={"feature_id": plan["feature_id"], "items": items})
    events = client.get(f"/students/{sid}/events").json()
    assert [e["sequence_no"] for e in events] == list(range(1, len(events) + 1))
    kinds = {e["kind"] for e in events}
    assert {"session_planned", "result_submitted", "feature_opened"} <= kinds
    rebuilt = replay(EventRecord.from_doc(e) for e in events)
    assert rebuilt.to_doc() == client.get(f"/students/{sid}").json()
    tail = client.get(f"/students/{sid}/events", params={"since": 3}).json()
    assert tail == events[3:]


def test_persistence_round_trip(tmp_path):
    engine = Engine(data_dir=tmp_path)
    engine.register_model(CHAIN, CHAIN_LEX)
    sid = engine.create_student("chain", 1).student_id
    plan = engine.next_session(sid)
    engine.submit(sid, SessionResult(plan.feature_id, (True,) * 7))
    again = Engine(data_dir=tmp_path)
    assert again.profile(sid) == engine.profile(sid)
    assert again.events(sid) == engine.events(sid)
    assert read_log(engine.log_path(sid)) == engine.events(sid)
    assert again.next_session(sid).session_ordinal == 2


def test_failed_append_leaves_state(tmp_path, monkeypatch):
    engine = Engine(data_dir=tmp_path)
    engine.register_model(CHAIN, CHAIN_LEX)
    sid = engine.create_student("chain", 1).student_id
    before = engine.profile(sid)

    def boom(*a, **k):
        raise OSError("disk full")

    monkeypatch.setattr(engine.store, "append", boom)
    with pytest.raises(OSError):
        engine.submit(sid, SessionResult("a", (True,) * 7))
    monkeypatch.undo()
    assert engine.profile(sid) == before
    assert len(engine.events(sid)) == 1


def test_concurrent_submissions_keep_sequence_dense():
    engine = Engine()
    engine.register_model(CHAIN, CHAIN_LEX)
    sids = [engine.create_student("chain", 1).student_id for _ in range(4)]

    def worker(sid):
        for _ in range(15):
            plan = engine.next_session(sid)
            engine.submit(sid, SessionResult(plan.feature_id, (True, True, False)))

    threads = [threading.Thread(target=worker, args=(s,)) for s in sids for _ in range(2)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for sid in sids:
        events = engine.events(sid)
        assert [e.sequence_no for e in events] == list(range(1, len(events) + 1))
        assert engine.profile(sid).session_counter == 30
        assert replay(events) == engine.profile(sid)


def test_service_config(tmp_path, monkeypatch):
    cfg = tmp_path / "svc.json"
    cfg.write_text('{"port": 9001, "data_dir": "/tmp/x", "adaptation": {"ema": {"alpha": 0.55}}}')
    settings = load_service_config(cfg)
    assert (settings["port"], settings["data_dir"], settings["adaptation"].ema.alpha) == (9001, "/tmp/x", 0.55)
    monkeypatch.setenv("ADAPTIVITY_PORT", "9100")
    monkeypatch.setenv("ADAPTIVITY_DATA_DIR", str(tmp_path))
    settings = load_service_config(cfg)
    assert (settings["port"], settings["data_dir"]) == (9100, str(tmp_path))


def test_snapshot_matches_schema(client):
    sid = new_student(client, 2)
    doc = client.get(f"/students/{sid}").json()
    assert StudentProfile.from_doc(doc).to_doc() == doc

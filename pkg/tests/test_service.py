"""Live service: WebSocket frames, broadcast, operator control."""

import json
import os
import time

import pytest
from fastapi.testclient import TestClient

from lunarsim.runner.frames import Frame
from lunarsim.runner.scenario import ScenarioSpec
from lunarsim.runner.service import create_app

ASSETS = os.path.join(os.path.dirname(__file__), "..", "src", "lunarsim", "assets")
NAV = os.path.join(ASSETS, "lunar_nav.plx")


@pytest.fixture()
def client():
    spec = ScenarioSpec(scene_path=NAV, seed=3)
    app = create_app(spec, pace=0.0)  # flat out: tests never wait on pacing
    with TestClient(app) as c:
        yield c


def recv_frame(ws, want_type=None, tries=200):
    for _ in range(tries):
        frame = json.loads(ws.receive_text())
        if want_type is None or frame["type"] == want_type:
            return frame
    raise AssertionError(f"no {want_type} frame within {tries} messages")


def test_health_and_scenario(client):
    assert client.get("/health").json()["status"] == "ok"
    info = client.get("/scenario").json()
    assert info["mode"] == "rover_nav"
    assert "Rock" in info["targets"]


def test_hello_frame_has_terrain_and_camera(client):
    with client.websocket_connect("/ws") as ws:
        hello = json.loads(ws.receive_text())
        assert hello["type"] == "state"
        assert hello["payload"]["terrain"] is not None
        assert hello["payload"]["camera_png_b64"]
        Frame.model_validate(hello)  # schema round trip


def test_task_streams_skill_events_in_order(client):
    with client.websocket_connect("/ws") as ws:
        ws.receive_text()  # hello
        ws.send_text(json.dumps({"type": "task",
                                 "payload": {"text": "Drive to the rock."}}))
        ack = recv_frame(ws, "task")
        assert ack["payload"]["accepted"]
        skills = []
        seqs = []
        for _ in range(2000):
            frame = json.loads(ws.receive_text())
            seqs.append(frame["seq"])
            if frame["type"] == "skill":
                skills.append(frame["payload"])
                if frame["payload"]["command"] == "Finish()":
                    break
        assert skills, "no skill frames observed"
        assert skills[-1]["command"] == "Finish()"
        assert seqs == sorted(seqs)  # never reordered


def test_two_viewers_share_identical_state(client):
    with client.websocket_connect("/ws") as a, client.websocket_connect("/ws") as b:
        a.receive_text()
        b.receive_text()
        a.send_text(json.dumps({"type": "task",
                                "payload": {"text": "Drive to the rock."}}))
        recv_frame(a, "task")
        fa = recv_frame(a, "state")
        fb = recv_frame(b, "state")
        # both observers see the same stream (allow for drop offsets)
        assert fa["payload"]["targets"] == fb["payload"]["targets"]
        while fb["seq"] < fa["seq"]:
            fb = recv_frame(b, "state")
        while fa["seq"] < fb["seq"]:
            fa = recv_frame(a, "state")
        assert fa == fb


def test_malformed_frame_keeps_connection(client):
    with client.websocket_connect("/ws") as ws:
        ws.receive_text()
        ws.send_text("this is not json")
        err = recv_frame(ws, "error")
        assert err["payload"]["code"] == "bad_message"
        ws.send_text(json.dumps({"type": "task", "payload": {"text": ""}}))
        err2 = recv_frame(ws, "error")
        assert err2["payload"]["code"] == "bad_message"
        # still alive: a valid message is acknowledged
        ws.send_text(json.dumps({"type": "task",
                                 "payload": {"text": "Drive to the rock."}}))
        assert recv_frame(ws, "task")["payload"]["accepted"]


def test_pause_control(client):
    with client.websocket_connect("/ws") as ws:
        ws.receive_text()
        session = client.app.state.session
        ws.send_text(json.dumps({"type": "control",
                                 "payload": {"action": "pause"}}))
        for _ in range(100):
            if session._paused.is_set():
                break
            time.sleep(0.01)
        assert session._paused.is_set()
        ws.send_text(json.dumps({"type": "control",
                                 "payload": {"action": "resume"}}))
        for _ in range(100):
            if not session._paused.is_set():
                break
            time.sleep(0.01)
        assert not session._paused.is_set()


def test_more_information_flow(client):
    with client.websocket_connect("/ws") as ws:
        ws.receive_text()
        ws.send_text(json.dumps({"type": "task",
                                 "payload": {"text": "Drive to a target"}}))
        session = client.app.state.session
        for _ in range(500):
            if session.awaiting_clarification:
                break
            time.sleep(0.02)
        assert session.awaiting_clarification
        ws.send_text(json.dumps({"type": "task",
                                 "payload": {"text": "The rock."}}))
        saw_finish = False
        for _ in range(3000):
            frame = json.loads(ws.receive_text())
            if frame["type"] == "skill" and frame["payload"]["command"] == "Finish()":
                saw_finish = True
                break
        assert saw_finish


def test_index_serves_fallback_without_console(client):
    resp = client.get("/")
    assert resp.status_code == 200
    assert "lunarsim" in resp.text

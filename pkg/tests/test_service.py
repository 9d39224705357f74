"""Control endpoint: status, injection, SSE trace stream."""

import json
import threading
import time

import pytest
from fastapi.testclient import TestClient

from cosim.scenariofile import parse_scenario_doc
from cosim.service import RunController, create_app

from conftest import ramp_collector_doc


def make_controller(rt_factor=None, until=6, step_size=1):
    raw = ramp_collector_doc(until=until, step_size=step_size)
    if rt_factor is not None:
        raw["world"]["rt_factor"] = rt_factor
    return RunController(parse_scenario_doc(raw))


class TestStatus:
    def test_idle_before_start(self):
        controller = make_controller()
        client = TestClient(create_app(controller))
        body = client.get("/status").json()
        assert body["state"] == "idle"
        assert body["until"] == 6

    def test_done_after_fast_run(self):
        controller = make_controller()
        client = TestClient(create_app(controller))
        controller.start_background()
        assert controller.wait(10) == 0
        body = client.get("/status").json()
        assert body["state"] == "done"
        assert body["seq"] == len(controller.trace)

    def test_current_tick_monotone_during_rt_run(self):
        controller = make_controller(rt_factor=0.02, until=10)
        client = TestClient(create_app(controller))
        controller.start_background()
        seen = []
        for _ in range(6):
            seen.append(client.get("/status").json()["current_tick"])
            time.sleep(0.03)
        controller.wait(10)
        assert seen == sorted(seen)
        assert seen[-1] > 0


class TestInjection:
    def test_fast_mode_returns_409(self):
        controller = make_controller()
        client = TestClient(create_app(controller))
        controller.start_background()
        # race-free: even after completion the rt_disabled answer is a 409
        response = client.post("/events", json={"sid": "ramp-0", "time": 3})
        assert response.status_code == 409
        controller.wait(10)

    def test_rt_injection_roundtrip(self):
        controller = make_controller(rt_factor=0.02, until=20, step_size=100)
        client = TestClient(create_app(controller))
        controller.start_background()
        time.sleep(0.06)
        response = client.post("/events", json={"sid": "ramp-0", "time": 15})
        assert response.status_code == 202
        body = response.json()
        assert body["scheduled_tick"] == 15
        assert controller.wait(10) == 0
        external = [r for r in controller.trace.snapshot()
                    if r.action == "step" and "external" in r.causes]
        assert [r.tick for r in external] == [15]
        injects = [r for r in controller.trace.snapshot() if r.action == "inject"]
        assert len(injects) == 1 and injects[0].next_step == 15

    def test_unknown_sid_404(self):
        controller = make_controller(rt_factor=0.02, until=20)
        client = TestClient(create_app(controller))
        controller.start_background()
        time.sleep(0.05)
        response = client.post("/events", json={"sid": "ghost", "time": 5})
        assert response.status_code == 404
        controller.wait(10)

    def test_beyond_until_409(self):
        controller = make_controller(rt_factor=0.02, until=10)
        client = TestClient(create_app(controller))
        controller.start_background()
        time.sleep(0.05)
        response = client.post("/events", json={"sid": "ramp-0", "time": 99})
        assert response.status_code == 409
        assert response.json()["reason"] == "beyond_until"
        controller.wait(10)

    def test_not_running_409(self):
        controller = make_controller(rt_factor=1.0)
        client = TestClient(create_app(controller))
        response = client.post("/events", json={"sid": "ramp-0", "time": 3})
        assert response.status_code == 409
        assert response.json()["reason"] == "not_running"


class TestTraceStream:
    def read_sse(self, client, after=0, headers=None, limit=10_000):
        events = []
        with client.stream("GET", "/trace", params={"after": after}, headers=headers or {}) as r:
            current = {}
            for line in r.iter_lines():
                if line.startswith("id: "):
                    current["id"] = int(line[4:])
                elif line.startswith("event: "):
                    current["event"] = line[7:]
                elif line.startswith("data: "):
                    current["data"] = line[6:]
                elif line == "":
                    if current:
                        events.append(current)
                        if current.get("event") == "end" or len(events) >= limit:
                            return events
                        current = {}
        return events

    def test_stream_delivers_all_records_in_seq_order(self):
        controller = make_controller()
        client = TestClient(create_app(controller))
        controller.start_background()
        controller.wait(10)
        events = self.read_sse(client)
        assert events[-1].get("event") == "end"
        seqs = [e["id"] for e in events if "id" in e]
        assert seqs == sorted(seqs)
        assert len(seqs) == len(controller.trace)
        parsed = [json.loads(e["data"]) for e in events if "id" in e]
        assert parsed[0]["action"] == "step"

    def test_resume_by_last_event_id(self):
        controller = make_controller()
        client = TestClient(create_app(controller))
        controller.start_background()
        controller.wait(10)
        total = len(controller.trace)
        events = self.read_sse(client, headers={"Last-Event-ID": str(total - 2)})
        seqs = [e["id"] for e in events if "id" in e]
        assert seqs == [total - 1, total]

    def test_resume_by_query_param(self):
        controller = make_controller()
        client = TestClient(create_app(controller))
        controller.start_background()
        controller.wait(10)
        total = len(controller.trace)
        events = self.read_sse(client, after=total)
        assert [e for e in events if "id" in e] == []
        assert events[-1].get("event") == "end"

    def test_live_streaming_sees_records_before_completion(self):
        controller = make_controller(rt_factor=0.05, until=8)
        app = create_app(controller)
        client = TestClient(app)
        controller.start_background()
        got = []

        def consume():
            with client.stream("GET", "/trace") as r:
                for line in r.iter_lines():
                    if line.startswith("data: ") and "step" in line:
                        got.append(time.monotonic())
                        if len(got) >= 2:
                            return

        t = threading.Thread(target=consume, daemon=True)
        t.start()
        t.join(timeout=5)
        assert len(got) >= 2, "stream should deliver records while running"
        controller.wait(10)


class TestConsoleMount:
    def test_console_served_when_dir_given(self, tmp_path):
        (tmp_path / "index.html").write_text("<html><body>console</body></html>")
        controller = make_controller()
        client = TestClient(create_app(controller, console_dir=str(tmp_path)))
        response = client.get("/console/")
        assert response.status_code == 200
        assert "console" in response.text

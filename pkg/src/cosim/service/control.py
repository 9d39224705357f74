"""Run orchestration behind the HTTP app.

One controller owns one scenario run: it materializes the World, executes
the scheduler (blocking or in a worker thread) and gives the endpoint
handlers thread-safe access to status, trace log and the external-event
inbox.  Handlers never touch scheduler internals directly.
"""

from __future__ import annotations

import logging
import threading
from typing import Optional

from ..errors import ExternalEventError, LoopLimitError, ProtocolError, WireError
from ..channel import SimRequestError
from ..scenariofile import ScenarioDoc, build_world
from ..scheduler import RunResult, RunStatus, Scheduler
from ..trace import TraceLog

log = logging.getLogger("cosim.service")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_LOOP_LIMIT = 2
EXIT_PROTOCOL = 3


class RunController:
    def __init__(
        self,
        doc: ScenarioDoc,
        trace_path=None,
        rt_factor_override: float | None = None,
        until_override: int | None = None,
        listen_port: int | None = None,
    ):
        self.doc = doc
        self.until = until_override if until_override is not None else doc.until
        if self.until is None:
            raise ValueError("scenario has no until and no override was given")
        self.trace = TraceLog(trace_path)
        self.status = RunStatus(until=self.until)
        self._rt_override = rt_factor_override
        self._listen_port = listen_port
        self._scheduler: Optional[Scheduler] = None
        self._thread: Optional[threading.Thread] = None
        self._lock = threading.Lock()
        self.exit_code: Optional[int] = None
        self.result: Optional[RunResult] = None

    # -- lifecycle ------------------------------------------------------

    def run_blocking(self) -> int:
        world = build_world(
            self.doc, rt_factor_override=self._rt_override, listen_port=self._listen_port
        )
        try:
            self.result = world.run(
                self.until,
                trace=self.trace,
                status=self.status,
                scheduler_hook=self._adopt_scheduler,
            )
            self.exit_code = EXIT_OK
        except LoopLimitError as exc:
            log.error("run aborted: %s", exc)
            self.exit_code = EXIT_LOOP_LIMIT
        except (ProtocolError, SimRequestError, WireError) as exc:
            log.error("run aborted: %s", exc)
            self.exit_code = EXIT_PROTOCOL
        finally:
            with self._lock:
                self._scheduler = None
            world.shutdown()
            self.trace.close()
        return self.exit_code

    def start_background(self) -> threading.Thread:
        if self._thread is not None:
            raise RuntimeError("run already started")
        self._thread = threading.Thread(target=self.run_blocking, daemon=True)
        self._thread.start()
        return self._thread

    def wait(self, timeout: float | None = None) -> Optional[int]:
        if self._thread is not None:
            self._thread.join(timeout)
        return self.exit_code

    # -- handler-facing surface ------------------------------------------

    def inject(self, sid: str, time: int) -> int:
        with self._lock:
            scheduler = self._scheduler
        if scheduler is None:
            raise ExternalEventError("no active run", reason="not_running")
        return scheduler.external_event(sid, time, source="inject")

    def status_snapshot(self) -> dict:
        snap = self.status.snapshot()
        snap["seq"] = len(self.trace)
        return snap

    def _adopt_scheduler(self, scheduler: Scheduler) -> None:
        with self._lock:
            self._scheduler = scheduler

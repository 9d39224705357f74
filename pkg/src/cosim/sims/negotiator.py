"""Midpoint-bisection negotiator: the same-time-loop participant.

Two negotiators wired in a loop (one edge weak) exchange offers within a
single tick.  Midpoint bisection makes the number of exchanges until
|own - received| <= tolerance analytically checkable.

Proposals are held as exact rationals and only rounded to float on the
wire: the distance to a received offer halves exactly per exchange and
never collapses to zero by rounding, so with tolerance 0 and distinct
openings the loop genuinely does not terminate (the scheduler's iteration
limit is the only way out).

Declared hybrid so the pair bootstraps itself: hybrid components start at
tick 0, where a negotiator with no incoming offer opens with its own
proposal.  After that opening it behaves exactly like an event-based
component (all-trigger input, transient output, no self-stepping).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from ..api import API_VERSION, InputBundle, OutputBundle, Simulator


class NegotiatorSim(Simulator):
    component_type = "hybrid"
    model = "Negotiator"

    def __init__(self):
        super().__init__()
        self.proposal: dict[str, Fraction] = {}
        self.tolerance: dict[str, Fraction] = {}
        self.rounds: dict[str, int] = {}
        self.opened: dict[str, bool] = {}
        self._emit: list[str] = []
        self._time = 0

    def init(self, sid: str, time_resolution: float, **sim_params) -> dict:
        self.sid = sid
        return {
            "api_version": API_VERSION,
            "component_type": self.component_type,
            "models": {
                self.model: {
                    "public": True,
                    "params": ["start", "tolerance"],
                    "attrs": ["offer"],
                    "trigger": ["offer"],
                    "non_persistent": ["offer"],
                }
            },
        }

    def create(self, num: int, model: str, start: float = 0.0, tolerance: float = 1.0) -> list[dict]:
        if tolerance < 0:
            raise ValueError("tolerance must be >= 0")
        made = []
        for _ in range(num):
            eid = f"{model}-{len(self.proposal)}"
            self.proposal[eid] = Fraction(start)
            self.tolerance[eid] = Fraction(tolerance)
            self.rounds[eid] = 0
            self.opened[eid] = False
            made.append({"eid": eid, "model": model, "children": []})
        return made

    def step(self, time: int, inputs: InputBundle, max_advance: int) -> Optional[int]:
        self._time = time
        self._emit = []
        for eid in self.proposal:
            pairs = inputs.get(eid, {}).get("offer", [])
            if not pairs:
                if not self.opened[eid]:
                    self.opened[eid] = True
                    self._emit.append(eid)
                continue
            self.opened[eid] = True
            received = Fraction(pairs[-1][1])
            if abs(self.proposal[eid] - received) > self.tolerance[eid]:
                self.proposal[eid] = (self.proposal[eid] + received) / 2
                self.rounds[eid] += 1
                self._emit.append(eid)
            # converged: emit nothing, the loop ends
        return None

    def get_data(self, outputs: dict[str, list[str]]) -> OutputBundle:
        data = {}
        for eid in self._emit:
            if eid in outputs and "offer" in outputs[eid]:
                data[eid] = {"offer": float(self.proposal[eid])}
        # current step time keeps a same-time loop alive
        return OutputBundle(data=data, output_time=self._time if data else None)

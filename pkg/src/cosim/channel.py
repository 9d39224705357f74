"""Uniform request channel to a simulator, in-process edition.

The scheduler talks to every simulator through `SimConnection.request`;
whether the other end is a Python object in this process or a remote
process behind the wire protocol is invisible above this layer.
`dispatch_to_simulator` is the single mapping from protocol methods to the
Python `Simulator` API and is reused verbatim by the wire host, so both
attachment modes exercise identical code on the simulator side.
"""

from __future__ import annotations

from typing import Any, Protocol

from .api import InputBundle, OutputBundle, SimContext, Simulator
from .errors import ProtocolError
from .protocol import REQUEST_METHODS, inputs_from_wire


class SimRequestError(ProtocolError):
    """The simulator answered a request with an error."""


class SimConnection(Protocol):
    def request(self, method: str, params: dict) -> Any: ...
    def close(self) -> None: ...


def dispatch_to_simulator(sim: Simulator, method: str, params: dict) -> Any:
    """Apply one protocol request to a Simulator instance."""
    if method == "init":
        return sim.init(
            params["sid"],
            params["time_resolution"],
            **params.get("sim_params", {}),
        )
    if method == "create":
        return sim.create(params["num"], params["model"], **params.get("model_params", {}))
    if method == "step":
        inputs = params.get("inputs", {})
        if not _is_native_inputs(inputs):
            inputs = inputs_from_wire(inputs)
        next_step = sim.step(params["time"], inputs, params["max_advance"])
        return {"next_step": next_step}
    if method == "get_data":
        bundle = sim.get_data(params.get("outputs", {}))
        if isinstance(bundle, OutputBundle):
            return bundle.to_payload()
        if isinstance(bundle, dict) and "data" in bundle:
            return {"data": bundle["data"], "output_time": bundle.get("output_time")}
        if isinstance(bundle, dict):
            return {"data": bundle, "output_time": None}
        raise ProtocolError(f"get_data returned {type(bundle).__name__}, expected OutputBundle or dict")
    if method == "stop":
        sim.stop()
        return True
    raise SimRequestError(f"unknown method {method!r}")


def _is_native_inputs(inputs: Any) -> bool:
    """True when input pair lists already hold (src, value) tuples."""
    if not isinstance(inputs, dict):
        return False
    for by_attr in inputs.values():
        for pairs in by_attr.values():
            for pair in pairs:
                return isinstance(pair, tuple)
    return True


class InProcessConnection:
    """SimConnection over a Simulator living in this interpreter."""

    def __init__(self, sim: Simulator):
        self.sim = sim
        self._stopped = False

    def bind_context(self, context: SimContext) -> None:
        self.sim.bind(context)

    def request(self, method: str, params: dict) -> Any:
        if method not in REQUEST_METHODS:
            raise SimRequestError(f"unknown method {method!r}")
        if self._stopped and method != "stop":
            raise SimRequestError(f"simulator already stopped, cannot handle {method!r}")
        if method == "stop":
            if self._stopped:
                return True  # idempotent
            self._stopped = True
        try:
            return dispatch_to_simulator(self.sim, method, params)
        except (ProtocolError, SimRequestError):
            raise
        except Exception as exc:
            raise SimRequestError(f"{type(exc).__name__}: {exc}") from exc

    def close(self) -> None:
        self._stopped = True

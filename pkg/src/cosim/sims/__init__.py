"""Built-in simulators covering all three component types.

These double as the conformance corpus: every one of them must behave
identically when attached in-process and when hosted over the wire.
"""

from __future__ import annotations

from ..api import Simulator
from .collector import CollectorSim
from .delay_net import DelayNetSim
from .gain import GainSim
from .negotiator import NegotiatorSim
from .ramp import HybridRampSim, RampSim

BUILTINS: dict[str, type[Simulator]] = {
    "ramp": RampSim,
    "hybrid_ramp": HybridRampSim,
    "gain": GainSim,
    "delay_net": DelayNetSim,
    "negotiator": NegotiatorSim,
    "collector": CollectorSim,
}


def make_builtin(kind: str) -> Simulator:
    try:
        return BUILTINS[kind]()
    except KeyError:
        raise KeyError(f"unknown builtin simulator {kind!r}; available: {sorted(BUILTINS)}") from None

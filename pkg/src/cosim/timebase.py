"""Integer tick timeline, global time resolution and superdense time.

The engine's clock is a dimensionless non-negative integer tick; a single
scenario-wide resolution maps ticks to seconds.  Activations within one tick
are ordered by a second integer, the same-time-loop iteration, giving the
(tick, iteration) superdense time pair used everywhere in the scheduler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

DEFAULT_TIME_RESOLUTION = 1.0


def validate_tick(value: int, what: str = "tick") -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValueError(f"{what} must be an integer, got {value!r}")
    if value < 0:
        raise ValueError(f"{what} must be >= 0, got {value}")
    return value


def validate_resolution(seconds_per_tick: float) -> float:
    res = float(seconds_per_tick)
    if not math.isfinite(res) or res <= 0:
        raise ValueError(f"time_resolution must be a positive finite number, got {seconds_per_tick!r}")
    return res


def ticks_to_seconds(tick: int, seconds_per_tick: float) -> float:
    """Seconds represented by `tick` under the given resolution."""
    validate_tick(tick)
    validate_resolution(seconds_per_tick)
    return tick * seconds_per_tick


def resolution_fraction(seconds_per_tick: float) -> Fraction:
    """The resolution as the exact rational its decimal literal denotes.

    A resolution written 0.001 means one millisecond, i.e. exactly 1/1000,
    not the nearest binary float; interpreting the shortest decimal repr
    keeps tick arithmetic exact.
    """
    validate_resolution(seconds_per_tick)
    return Fraction(str(seconds_per_tick))


def seconds_to_ticks(seconds: float, seconds_per_tick: float) -> int:
    """Tick already begun at wall instant `seconds` (floor division).

    Exact rational arithmetic so the floor never drifts across an integer
    boundary for adversarial float inputs.
    """
    res = resolution_fraction(seconds_per_tick)
    if not math.isfinite(seconds) or seconds < 0:
        raise ValueError(f"seconds must be >= 0 and finite, got {seconds!r}")
    return int(Fraction(seconds) / res)


@dataclass(frozen=True, order=True)
class SuperdenseTime:
    """(tick, iteration) pair; ordering is lexicographic, tick first.

    iteration > 0 only ever arises from weak-edge propagation inside a
    same-time loop.
    """

    tick: int
    iteration: int = 0

    def __post_init__(self):
        validate_tick(self.tick)
        validate_tick(self.iteration, "iteration")

    def next_iteration(self) -> "SuperdenseTime":
        return SuperdenseTime(self.tick, self.iteration + 1)

    def as_pair(self) -> tuple[int, int]:
        return (self.tick, self.iteration)


def sdt_compare(a: SuperdenseTime, b: SuperdenseTime) -> int:
    """-1, 0 or 1 for a<b, a==b, a>b in superdense order."""
    if a.as_pair() < b.as_pair():
        return -1
    if a.as_pair() > b.as_pair():
        return 1
    return 0

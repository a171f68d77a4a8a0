"""Conventional (absolute power) and incremental-power carrier sensing.

Both decision procedures are pure functions of a per-observer
:class:`PowerTrace`, the query time and a :class:`CsConfig`. Equality with
the threshold counts as idle in both.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable

from .geometry import Point2D, distance
from .rfmodel import ActiveFrame, Direction, RadioParams, csr_from_pth, path_gain, pth_from_csr


class Mechanism(str, enum.Enum):
    CONVENTIONAL = "conventional"
    IPCS = "ipcs"


@dataclass(frozen=True)
class PowerEvent:
    time: float
    delta: float
    source_link: int
    direction: Direction

    def __post_init__(self):
        if self.delta == 0:
            raise ValueError("power event with zero increment")


@dataclass
class PowerTrace:
    observer: int
    events: list[PowerEvent] = field(default_factory=list)

    def __post_init__(self):
        events, self.events = self.events, []
        for ev in events:
            self.append(ev)

    def append(self, ev: PowerEvent) -> None:
        if self.events and ev.time <= self.events[-1].time:
            raise ValueError(
                f"power events for observer {self.observer} must be strictly time-ordered "
                f"({ev.time!r} after {self.events[-1].time!r})"
            )
        self.events.append(ev)

    def total_at(self, t: float) -> float:
        # fsum keeps the running total exact enough that a fully drained trace reads 0
        total = math.fsum(ev.delta for ev in self.events if ev.time <= t)
        return max(total, 0.0)

    @property
    def total(self) -> float:
        return max(math.fsum(ev.delta for ev in self.events), 0.0)

    def rows(self):
        """(t_k, delta, source, direction, total_after) per event."""
        parts: list[float] = []
        for ev in self.events:
            parts.append(ev.delta)
            yield ev.time, ev.delta, ev.source_link, ev.direction.value, max(math.fsum(parts), 0.0)


@dataclass(frozen=True)
class CsConfig:
    """Sensing mechanism plus its threshold, given both as power and as range.

    ``ack_increments`` decides whether an IPCS observer also registers the
    power steps of ACK frames. Off by default: only the increments caused by
    transmitters starting DATA frames are needed to keep every pair of
    concurrent transmitters ``csr`` apart, and counting ACK steps lets a
    link that just finished always beat its neighbours back onto the medium.
    Conventional sensing always sees the full power.
    """

    mechanism: Mechanism
    pth: float
    csr: float
    t_packet: float
    ack_increments: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mechanism", Mechanism(self.mechanism))
        if not (self.pth > 0 and self.csr > 0 and self.t_packet > 0):
            raise ValueError("pth, csr and t_packet must all be positive")

    @classmethod
    def from_csr(cls, mechanism, radio: RadioParams, csr: float, t_packet: float, **kw) -> "CsConfig":
        return cls(Mechanism(mechanism), pth_from_csr(radio, csr), csr, t_packet, **kw)

    @classmethod
    def from_pth(cls, mechanism, radio: RadioParams, pth: float, t_packet: float, **kw) -> "CsConfig":
        return cls(Mechanism(mechanism), pth, csr_from_pth(radio, pth), t_packet, **kw)

    def check(self, radio: RadioParams, rel_tol: float = 1e-9) -> None:
        expected = pth_from_csr(radio, self.csr)
        if not math.isclose(self.pth, expected, rel_tol=rel_tol):
            raise ValueError(f"pth {self.pth!r} does not match csr {self.csr!r} (expected {expected!r})")


def conventional_idle(trace: PowerTrace, t: float, cfg: CsConfig) -> bool:
    return trace.total_at(t) <= cfg.pth


def ipcs_idle(trace: PowerTrace, t: float, cfg: CsConfig) -> bool:
    lo = t - cfg.t_packet
    for ev in trace.events:
        if lo <= ev.time <= t and ev.delta > cfg.pth:
            return False
    return True


def channel_idle(trace: PowerTrace, t: float, cfg: CsConfig) -> bool:
    if cfg.mechanism is Mechanism.IPCS:
        return ipcs_idle(trace, t, cfg)
    return conventional_idle(trace, t, cfg)


def sense_power(observer: Point2D, frames: Iterable[ActiveFrame], radio: RadioParams) -> float:
    total = 0.0
    for f in frames:
        total += radio.pt * path_gain(distance(observer, f.sender), radio.alpha)
    return total


def trace_from_sequence(
    observer: int,
    observer_pos: Point2D,
    steps: Iterable[tuple[float, ActiveFrame, bool]],
    radio: RadioParams,
) -> PowerTrace:
    """Build a trace from ``(time, frame, starting)`` tuples."""
    trace = PowerTrace(observer)
    for t, frame, starting in steps:
        p = radio.pt * path_gain(distance(observer_pos, frame.sender), radio.alpha)
        trace.append(PowerEvent(t, p if starting else -p, frame.link, frame.direction))
    return trace


TRACE_HEADER = "t_k,delta_mW,source_link,direction,total_after"


def format_trace(trace: PowerTrace) -> str:
    lines = [TRACE_HEADER]
    for t, d, src, direction, total in trace.rows():
        lines.append(f"{t!r},{d!r},{src},{direction},{total!r}")
    return "\n".join(lines) + "\n"

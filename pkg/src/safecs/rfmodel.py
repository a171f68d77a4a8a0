"""Log-distance channel, SIR feasibility and the safe carrier-sensing range.

Distances are in meters and powers in milliwatts throughout. The model is
deterministic path loss ``G(d) = d**-alpha`` with no fading; gains above
one for ``d < 1`` m are used as-is.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .geometry import Point2D, Topology, distance

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class RadioParams:
    pt: float = 100.0
    alpha: float = 4.0
    gamma0: float = 20.0
    noise: float = 0.0

    def __post_init__(self):
        if not self.pt > 0:
            raise ValueError("transmit power must be positive")
        if not self.alpha > 2:
            raise ValueError(f"path-loss exponent must exceed 2, got {self.alpha}")
        if not self.gamma0 > 0:
            raise ValueError("SIR threshold must be positive")
        if self.noise < 0:
            raise ValueError("noise power must be non-negative")


class Direction(str, enum.Enum):
    DATA = "DATA"
    ACK = "ACK"


@dataclass(frozen=True)
class ActiveFrame:
    """A frame on the air. ``sender`` is T_j for DATA and R_j for ACK."""

    link: int
    direction: Direction
    sender: Point2D

    @classmethod
    def of(cls, topo: Topology, link: int, direction: Direction | str) -> "ActiveFrame":
        direction = Direction(direction)
        geom = topo.links[link]
        return cls(link, direction, geom.tx if direction is Direction.DATA else geom.rx)


@dataclass
class FeasibilityReport:
    gamma0: float
    data_sir: dict[int, float] = field(default_factory=dict)
    ack_sir: dict[int, float] = field(default_factory=dict)

    def link_feasible(self, link: int) -> bool:
        ok = True
        if link in self.data_sir:
            ok = ok and self.data_sir[link] >= self.gamma0
        if link in self.ack_sir:
            ok = ok and self.ack_sir[link] >= self.gamma0
        return ok

    @property
    def per_link(self) -> dict[int, bool]:
        return {l: self.link_feasible(l) for l in sorted(set(self.data_sir) | set(self.ack_sir))}

    @property
    def feasible(self) -> bool:
        return all(self.per_link.values())


def path_gain(d: float, alpha: float) -> float:
    if not d > 0:
        raise ValueError(f"path gain undefined at distance {d} (co-located nodes)")
    return d ** -alpha


def received_power(radio: RadioParams, a: Point2D, b: Point2D) -> float:
    return radio.pt * path_gain(distance(a, b), radio.alpha)


def sir(signal: float, interference: float, noise: float = 0.0) -> float:
    """SIR with ``inf`` standing for an interference-free, noiseless receiver."""
    denom = noise + interference
    if denom <= 0.0:
        return math.inf
    return signal / denom


def check_feasible(
    frames: Iterable[ActiveFrame],
    topo: Topology,
    radio: RadioParams,
    which: str = "both",
) -> FeasibilityReport:
    """Evaluate the SIR conditions of every link that has a frame in ``frames``.

    ``which`` selects the receptions checked for each such link: ``"data"``
    (at R_i), ``"ack"`` (at T_i), ``"both"``, or ``"frame"`` for just the
    direction each frame is actually carrying. In every case the
    interferers are the senders of all the *other* frames.
    """
    frames = list(frames)
    which = which.lower()
    if which not in ("data", "ack", "both", "frame"):
        raise ValueError(f"unknown reception selector {which!r}")
    seen = set()
    for f in frames:
        if f.link in seen:
            raise ValueError(f"more than one frame for link {f.link}")
        seen.add(f.link)
        geom = topo.links[f.link]
        expected = geom.tx if f.direction is Direction.DATA else geom.rx
        if f.sender != expected:
            raise ValueError(f"frame sender for link {f.link} does not match its {f.direction.value} endpoint")

    report = FeasibilityReport(radio.gamma0)
    for f in frames:
        geom = topo.links[f.link]
        wanted = []
        if which in ("data", "both") or (which == "frame" and f.direction is Direction.DATA):
            wanted.append((Direction.DATA, geom.tx, geom.rx))
        if which in ("ack", "both") or (which == "frame" and f.direction is Direction.ACK):
            wanted.append((Direction.ACK, geom.rx, geom.tx))
        for direction, src, dst in wanted:
            signal = received_power(radio, src, dst)
            interference = sum(received_power(radio, g.sender, dst) for g in frames if g.link != f.link)
            value = sir(signal, interference, radio.noise)
            if direction is Direction.DATA:
                report.data_sir[f.link] = value
            else:
                report.ack_sir[f.link] = value
    return report


def safe_csr_pairwise(radio: RadioParams, d_max: float) -> float:
    return (radio.gamma0 ** (1.0 / radio.alpha) + 2.0) * d_max


def hex_factor(alpha: float) -> float:
    """``1 + (2/sqrt 3)**alpha / (alpha - 2)``: the six-neighbour layer sum in units of the first layer."""
    if not alpha > 2:
        raise ValueError(f"hexagonal interference sum diverges for alpha={alpha} <= 2")
    return 1.0 + (2.0 / SQRT3) ** alpha / (alpha - 2.0)


def k_factor(gamma0: float, alpha: float) -> float:
    """Normalised first-layer separation ``K`` (in units of d_max)."""
    return (6.0 * gamma0 * hex_factor(alpha)) ** (1.0 / alpha)


def safe_csr_cumulative(radio: RadioParams, d_max: float) -> float:
    return (k_factor(radio.gamma0, radio.alpha) + 2.0) * d_max


def csr_ratio(radio: RadioParams) -> float:
    return safe_csr_cumulative(radio, 1.0) / safe_csr_pairwise(radio, 1.0)


def csr_ratio_limit(alpha: float) -> float:
    return (6.0 * hex_factor(alpha)) ** (1.0 / alpha)


def pth_from_csr(radio: RadioParams, csr: float) -> float:
    if not csr > 0:
        raise ValueError("carrier-sensing range must be positive")
    return radio.pt * csr ** -radio.alpha


def csr_from_pth(radio: RadioParams, pth: float) -> float:
    if not pth > 0:
        raise ValueError("power threshold must be positive")
    return (radio.pt / pth) ** (1.0 / radio.alpha)


def unit_area(csr: float) -> float:
    """Area per transmitter in a triangular packing with side ``csr``."""
    return SQRT3 / 2.0 * csr * csr


def hex_interference_bound(
    k: float,
    alpha: float,
    radio: RadioParams,
    d_max: float,
    layers: int | None = None,
) -> float:
    """Worst-case cumulative interference from hexagonally packed senders.

    Layer 1 holds six senders at ``k*d_max``; layer ``n >= 2`` holds at
    most ``6n`` senders no closer than ``(sqrt3/2)*n*k*d_max``. With
    ``layers=None`` the infinite tail is replaced by its zeta-function
    bound ``sum_{n>=2} n**(1-alpha) <= 1/(alpha-2)``.
    """
    if not alpha > 2:
        raise ValueError(f"hexagonal interference sum diverges for alpha={alpha} <= 2")
    if not k > 0:
        raise ValueError("K must be positive")
    scale = radio.pt * d_max ** -alpha
    if layers is None:
        return 6.0 * k ** -alpha * hex_factor(alpha) * scale
    if layers < 1:
        raise ValueError("need at least one layer")
    n = np.arange(2, int(layers) + 1, dtype=float)
    tail = np.sum(6.0 * n * (SQRT3 / 2.0 * n * k) ** -alpha) if n.size else 0.0
    # add the small terms first so the total does not lose them
    return float((tail + 6.0 * k ** -alpha) * scale)


CSR_TABLE_HEADER = "gamma0,alpha,csr_pairwise,csr_cumulative,ratio,ratio_limit"


def csr_rows(gammas: Sequence[float], alphas: Sequence[float], d_max: float = 1.0):
    for alpha in alphas:
        for g in gammas:
            radio = RadioParams(gamma0=g, alpha=alpha)
            yield (
                g,
                alpha,
                safe_csr_pairwise(radio, d_max),
                safe_csr_cumulative(radio, d_max),
                csr_ratio(radio),
                csr_ratio_limit(alpha),
            )


def csr_table(gammas: Sequence[float], alphas: Sequence[float], d_max: float = 1.0) -> str:
    lines = [CSR_TABLE_HEADER]
    for row in csr_rows(gammas, alphas, d_max):
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"

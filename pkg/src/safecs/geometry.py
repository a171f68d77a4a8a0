"""Points, links and topologies.

Random topologies follow the usual desk setup for CSMA spatial-reuse
studies: transmitters scattered uniformly over a square, each receiver
dropped at a uniform angle and a uniform radius from its transmitter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np


class Point2D(NamedTuple):
    x: float
    y: float


def distance(a: Point2D, b: Point2D) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True)
class LinkGeometry:
    id: int
    tx: Point2D
    rx: Point2D
    length: float = field(init=False)

    def __post_init__(self):
        for v in (*self.tx, *self.rx):
            if not math.isfinite(v):
                raise ValueError(f"link {self.id}: non-finite coordinate")
        length = distance(self.tx, self.rx)
        if length <= 0:
            raise ValueError(f"link {self.id}: transmitter and receiver are co-located")
        object.__setattr__(self, "length", length)


@dataclass(frozen=True)
class Topology:
    """An ordered link set inside a ``width x height`` arena anchored at the origin.

    Only transmitters are required to lie in the arena; receivers near the
    edge are allowed to spill over.
    """

    links: tuple[LinkGeometry, ...]
    arena: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        w, h = self.arena
        if not (w > 0 and h > 0):
            raise ValueError(f"arena must have positive area, got {self.arena}")
        for idx, link in enumerate(self.links):
            if link.id != idx:
                raise ValueError(f"link ids must equal their position, got id {link.id} at {idx}")
            x, y = link.tx
            if not (0.0 <= x <= w and 0.0 <= y <= h):
                raise ValueError(f"transmitter of link {idx} lies outside the arena")

    def __len__(self):
        return len(self.links)

    @property
    def d_max(self) -> float:
        return max((l.length for l in self.links), default=0.0)

    @property
    def area(self) -> float:
        return self.arena[0] * self.arena[1]

    def tx_array(self) -> np.ndarray:
        return np.array([l.tx for l in self.links], dtype=float).reshape(-1, 2)

    def rx_array(self) -> np.ndarray:
        return np.array([l.rx for l in self.links], dtype=float).reshape(-1, 2)

    def transformed(self, scale=1.0, angle=0.0, shift=(0.0, 0.0)) -> "Topology":
        """Rotate about the origin, scale, then translate every node.

        The arena check is skipped by re-anchoring the arena to the new
        bounding box, so this is meant for invariance tests.
        """
        c, s = math.cos(angle), math.sin(angle)

        def f(p):
            x, y = p
            return Point2D(scale * (c * x - s * y) + shift[0], scale * (s * x + c * y) + shift[1])

        links = [LinkGeometry(l.id, f(l.tx), f(l.rx)) for l in self.links]
        return _anchored(links)


def _anchored(links: list[LinkGeometry]) -> Topology:
    # translate so transmitters sit in the positive quadrant
    xs = [l.tx.x for l in links]
    ys = [l.tx.y for l in links]
    dx, dy = -min(xs), -min(ys)
    if dx == 0.0 and dy == 0.0:
        moved = links
    else:
        moved = [
            LinkGeometry(l.id, Point2D(l.tx.x + dx, l.tx.y + dy), Point2D(l.rx.x + dx, l.rx.y + dy))
            for l in links
        ]
    w = max(l.tx.x for l in moved)
    h = max(l.tx.y for l in moved)
    pad = max(l.length for l in moved)
    return Topology(tuple(moved), (w + pad, h + pad))


@dataclass(frozen=True)
class TopologyConfig:
    """Random topology recipe.

    ``n_links`` is the exact link count, or the Poisson mean when
    ``poisson`` is set.
    """

    arena_side: float = 300.0
    n_links: float = 100
    length_min: float = 10.0
    length_max: float = 20.0
    seed: int = 0
    poisson: bool = False

    def __post_init__(self):
        if not self.arena_side > 0:
            raise ValueError("arena must have positive area")
        if not 0 < self.length_min <= self.length_max:
            raise ValueError("need 0 < length_min <= length_max")
        if self.n_links < 0:
            raise ValueError("n_links must be non-negative")


def generate_topology(cfg: TopologyConfig) -> Topology:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
    if cfg.poisson:
        n = int(rng.poisson(cfg.n_links))
    else:
        n = int(round(cfg.n_links))
    side = float(cfg.arena_side)
    tx = rng.uniform(0.0, side, size=(n, 2))
    # uniform length, not uniform over the annulus area
    r = rng.uniform(cfg.length_min, cfg.length_max, size=n)
    theta = rng.uniform(0.0, 2 * math.pi, size=n)
    rx = tx + np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    links = tuple(
        LinkGeometry(i, Point2D(float(tx[i, 0]), float(tx[i, 1])), Point2D(float(rx[i, 0]), float(rx[i, 1])))
        for i in range(n)
    )
    return Topology(links, (side, side))


SCENARIOS = ("fig1-three-link", "fig3-conventional", "fig3-ipcs", "appendixA-capture")


def build_scenario(name: str, d_max: float = 1.0, csr: float | None = None, alpha: float = 4.0) -> Topology:
    """Exact-coordinate topologies for the canonical worked examples.

    ``links[0]`` is l1, ``links[1]`` is l2 and so on.

    fig1-three-link
        Collinear embedding, all links of length ``d_max``. Along the x axis
        (units of d_max): T3=0, R3=1, T1=5, R1=6, R2=8, T2=9. This gives
        d(T1,T2)=4, d(R1,R2)=2, d(T1,R3)=4, d(T3,T1)=5, d(T3,R1)=6 and
        d(T3,R2)=8, all exactly representable.
    fig3-conventional / fig3-ipcs
        T1 and T2 exactly ``csr`` apart on a horizontal line; the third
        transmitter sits on their perpendicular bisector, at distance
        2**(1/alpha)*csr from both (conventional placement) or at distance
        csr from both (l3', incremental placement). Non-exact distances are
        stretched by 1e-9 relative so rounding never pushes them inside the
        boundary. Receivers point away from the group.
    appendixA-capture
        T1 and T2 slightly more than ``csr`` apart, with R2 between them
        and inside ``csr`` of T1.
    """
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    d = float(d_max)
    if name == "fig1-three-link":
        xs = [(5, 6), (9, 8), (0, 1)]
        links = [LinkGeometry(i, Point2D(t * d, 0.0), Point2D(r * d, 0.0)) for i, (t, r) in enumerate(xs)]
        return Topology(tuple(links), (10 * d, d))

    if csr is None:
        raise ValueError(f"scenario {name} needs csr")
    margin = 1.0 + 1e-9
    if name == "appendixA-capture":
        sep = 1.05 * csr
        if sep - d >= csr:
            raise ValueError("csr too large relative to d_max for a capture geometry")
        y0 = d
        links = [
            LinkGeometry(0, Point2D(0.0, y0), Point2D(-d, y0)),
            LinkGeometry(1, Point2D(sep, y0), Point2D(sep - d, y0)),
        ]
        return Topology(tuple(links), (sep + d, 2 * d))

    half = csr / 2.0
    base = 2.0 * csr  # height of the T1-T2 line
    if name == "fig3-conventional":
        reach = 2.0 ** (1.0 / alpha) * csr * margin
        y3 = base - math.sqrt(reach * reach - half * half)
        r3 = Point2D(half, y3 - d)
    else:
        reach = csr * margin
        y3 = base + math.sqrt(reach * reach - half * half)
        r3 = Point2D(half, y3 + d)
    links = [
        LinkGeometry(0, Point2D(0.0, base), Point2D(-d, base)),
        LinkGeometry(1, Point2D(csr, base), Point2D(csr + d, base)),
        LinkGeometry(2, Point2D(half, y3), r3),
    ]
    return Topology(tuple(links), (csr + d, 4.0 * csr))


def format_topology(topo: Topology) -> str:
    lines = [f"# arena {topo.arena[0]:.6f} {topo.arena[1]:.6f}", "# id tx_x tx_y rx_x rx_y"]
    for l in topo.links:
        lines.append(f"{l.id} {l.tx.x:.6f} {l.tx.y:.6f} {l.rx.x:.6f} {l.rx.y:.6f}")
    return "\n".join(lines) + "\n"


def parse_topology(text: str, arena: tuple[float, float] | None = None) -> Topology:
    links = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] == "arena" and arena is None:
                arena = (float(parts[1]), float(parts[2]))
            continue
        f = line.split()
        if len(f) != 5:
            raise ValueError(f"bad topology line: {raw!r}")
        links.append(LinkGeometry(int(f[0]), Point2D(float(f[1]), float(f[2])), Point2D(float(f[3]), float(f[4]))))
    if arena is None:
        raise ValueError("topology text carries no arena line and none was given")
    return Topology(tuple(links), arena)


def save_topology(topo: Topology, path: str | Path) -> None:
    Path(path).write_text(format_topology(topo))


def load_topology(path: str | Path) -> Topology:
    return parse_topology(Path(path).read_text())


def pairwise_tx_distances(points: Iterable[Point2D]) -> np.ndarray:
    p = np.asarray(list(points), dtype=float).reshape(-1, 2)
    diff = p[:, None, :] - p[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])

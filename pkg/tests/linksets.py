"""Random link sets whose transmitters respect a minimum separation."""

import math

import numpy as np

from safecs.geometry import LinkGeometry, Point2D, Topology
from safecs.rfmodel import ActiveFrame, Direction


def separated_points(rng, n, sep, side):
    """Dart throwing in a square; returns at most ``n`` points pairwise >= sep apart."""
    pts = np.empty((0, 2))
    tries = 0
    while len(pts) < n and tries < 200 * n:
        tries += 1
        c = rng.uniform(0, side, 2)
        if len(pts) == 0 or np.min(np.hypot(*(pts - c).T)) >= sep:
            pts = np.vstack([pts, c])
    return pts


def lattice_points(rng, rings, sep):
    """Jittered triangular lattice: spacing slightly above ``sep`` so no pair is closer."""
    pts = []
    a = sep * (1 + rng.uniform(0, 0.02))
    for i in range(-rings, rings + 1):
        for j in range(-rings, rings + 1):
            if abs(i + j) <= rings:
                pts.append((a * (i + 0.5 * j), a * (math.sqrt(3) / 2 * j)))
    pts = np.array(pts)
    # random rotation keeps every pairwise distance
    th = rng.uniform(0, 2 * math.pi)
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    return pts @ rot.T - pts.min(axis=0) + 1.0


def random_link_set(rng, sep, d_max, lattice=None):
    """Topology plus one frame per link with random directions."""
    if lattice is None:
        lattice = rng.random() < 0.4
    if lattice:
        tx = lattice_points(rng, int(rng.integers(1, 4)), sep)
    else:
        n = int(rng.integers(2, 30))
        tx = separated_points(rng, n, sep, sep * math.sqrt(n) * rng.uniform(0.8, 1.5))
    tx = tx - tx.min(axis=0) + 2 * d_max
    r = d_max * (1 - rng.random(len(tx)))  # (0, d_max]
    th = rng.uniform(0, 2 * math.pi, len(tx))
    rx = tx + np.column_stack([r * np.cos(th), r * np.sin(th)])
    links = tuple(
        LinkGeometry(i, Point2D(*map(float, tx[i])), Point2D(*map(float, rx[i]))) for i in range(len(tx))
    )
    w, h = tx.max(axis=0) + 2 * d_max
    topo = Topology(links, (float(w), float(h)))
    dirs = [Direction.DATA if u < 0.5 else Direction.ACK for u in rng.random(len(tx))]
    frames = [ActiveFrame.of(topo, i, dirs[i]) for i in range(len(tx))]
    return topo, frames

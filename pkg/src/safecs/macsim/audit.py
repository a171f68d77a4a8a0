"""Post-run analysis of the event log: hidden-node audit and metrics."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from ..geometry import Topology
from ..rfmodel import RadioParams, safe_csr_cumulative, unit_area
from .config import SimConfig
from .engine import SimResult, simulate

EVENTLOG_HEADER = "# safecs-eventlog v1"
EVENTLOG_COLUMNS = "time,event_type,link,detail"
METRICS_HEADER = {"format": "safecs-metrics", "version": 1}

_STARTS = {"DATA_START": "DATA", "ACK_START": "ACK"}
_ENDS = {"DATA_END": "DATA", "ACK_END": "ACK"}


@dataclass
class SimMetrics:
    unit_area: float
    spatial_reuse: float
    throughput_per_unit_area: float
    delivered: int
    hidden_collisions: int
    offered_density: float
    attempts: int = 0
    data_failures: int = 0
    ack_failures: int = 0
    duration: float = 0.0
    n_links: int = 0
    min_admission_separation: float = float("inf")

    def to_json(self) -> str:
        d = asdict(self)
        if d["min_admission_separation"] == float("inf"):
            d["min_admission_separation"] = None
        return json.dumps(d, sort_keys=True)


class _SetChecker:
    """Definition-style feasibility of a concurrent frame set, cached per set.

    Gains are recomputed here from coordinates so the audit does not share
    arithmetic with the engine.
    """

    def __init__(self, topo: Topology, radio: RadioParams):
        n = len(topo)
        self.n = n
        tx, rx = topo.tx_array(), topo.rx_array()
        self.tx, self.rx = tx, rx
        self.radio = radio
        self.cache: dict[frozenset, bool] = {}

    def feasible(self, frames: dict[int, str]) -> bool:
        key = frozenset(frames.items())
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        links = np.fromiter(frames.keys(), dtype=int, count=len(frames))
        is_data = np.fromiter((d == "DATA" for d in frames.values()), dtype=bool, count=len(frames))
        senders = np.where(is_data[:, None], self.tx[links], self.rx[links])
        a, g0, pt = self.radio.alpha, self.radio.gamma0, self.radio.pt
        ok = True
        # DATA reception at each R_i, then ACK reception at each T_i
        for dst, src in ((self.rx[links], self.tx[links]), (self.tx[links], self.rx[links])):
            sig = pt * np.hypot(*(src - dst).T) ** -a
            dd = np.hypot(senders[:, None, 0] - dst[None, :, 0], senders[:, None, 1] - dst[None, :, 1])
            np.fill_diagonal(dd, np.inf)
            interf = (pt * dd ** -a).sum(axis=0) + self.radio.noise
            with np.errstate(divide="ignore"):
                sir = sig / interf
            if np.any(sir < g0):
                ok = False
                break
        self.cache[key] = ok
        return ok


def concurrent_intervals(log: Iterable[tuple[float, str, int, str]]):
    """Yield ``(t_start, t_end, {link: direction})`` for every maximal constant-set interval."""
    active: dict[int, str] = {}
    last_t = None
    for t, kind, link, _ in log:
        if last_t is not None and t > last_t and active:
            yield last_t, t, dict(active)
        if kind in _STARTS:
            active[link] = _STARTS[kind]
        elif kind in _ENDS:
            active.pop(link, None)
        last_t = t


def collision_audit(log: Sequence[tuple[float, str, int, str]], topo: Topology, radio: RadioParams) -> int:
    """Number of maximal concurrent intervals whose frame set is not interference-safe."""
    if not log:
        return 0
    checker = _SetChecker(topo, radio)
    bad = 0
    for _, _, frames in concurrent_intervals(log):
        if len(frames) > 1 and not checker.feasible(frames):
            bad += 1
    return bad


def compute_metrics(result: SimResult, audit: bool = True) -> SimMetrics:
    """Spatial reuse and throughput, both normalised to the unit area.

    A link counts as active from its DATA start to the end of its exchange.
    With ``audit=False`` the hidden-collision count is reported as -1.
    """
    cfg, topo, log = result.config, result.topology, result.log
    end = cfg.duration
    csr = safe_csr_cumulative(cfg.radio, cfg.reference_length(topo))
    a = unit_area(csr)
    scale = a / topo.area
    busy_time = 0.0
    started: dict[int, float] = {}
    delivered = attempts = data_fail = ack_fail = 0
    for t, kind, link, detail in log:
        if kind == "DATA_START":
            started[link] = t
            attempts += 1
        elif kind == "DATA_END" and detail == "fail":
            busy_time += t - started.pop(link)
            data_fail += 1
        elif kind == "ACK_END":
            busy_time += t - started.pop(link)
            if detail == "ok":
                delivered += 1
            else:
                ack_fail += 1
    for t0 in started.values():
        busy_time += end - t0
    bits = delivered * cfg.timing.payload * 8
    collisions = collision_audit(log, topo, cfg.radio) if audit else -1
    return SimMetrics(
        unit_area=a,
        spatial_reuse=float(busy_time / end * scale),
        throughput_per_unit_area=float(bits / end * scale),
        delivered=delivered,
        hidden_collisions=collisions,
        offered_density=float(len(topo) * scale),
        attempts=attempts,
        data_failures=data_fail,
        ack_failures=ack_fail,
        duration=end,
        n_links=len(topo),
        min_admission_separation=float(result.min_admission_separation),
    )


def run_simulation(cfg: SimConfig, audit: bool = True) -> SimResult:
    result = simulate(cfg)
    result.metrics = compute_metrics(result, audit)
    return result


def format_event_log(log: Iterable[tuple[float, str, int, str]]) -> str:
    lines = [EVENTLOG_HEADER, EVENTLOG_COLUMNS]
    lines.extend(f"{t!r},{kind},{link},{detail}" for t, kind, link, detail in log)
    return "\n".join(lines) + "\n"


def parse_event_log(text: str) -> list[tuple[float, str, int, str]]:
    lines = text.splitlines()
    if not lines or lines[0] != EVENTLOG_HEADER:
        raise ValueError("not a safecs event log (missing version header)")
    if len(lines) < 2 or lines[1] != EVENTLOG_COLUMNS:
        raise ValueError("event log column header mismatch")
    out = []
    for line in lines[2:]:
        if not line:
            continue
        t, kind, link, detail = line.split(",", 3)
        out.append((float(t), kind, int(link), detail))
    return out


def format_metrics_records(records: Iterable[SimMetrics]) -> str:
    lines = [json.dumps(METRICS_HEADER, sort_keys=True)]
    lines.extend(m.to_json() for m in records)
    return "\n".join(lines) + "\n"

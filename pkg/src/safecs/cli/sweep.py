"""Monte-Carlo density sweeps over the dense-network setup."""

from __future__ import annotations

import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..carriersense import Mechanism
from ..macsim import DOT11B_LONG_PREAMBLE, MacTiming, SimMetrics, paper_setup, run_simulation
from ..rfmodel import RadioParams, safe_csr_cumulative, unit_area

SWEEP_MAGIC = "# safecs-sweep v1"
SWEEP_COLUMNS = (
    "density,mechanism,spatial_reuse,throughput_per_unit_area,collisions,"
    "spatial_reuse_std,throughput_std,n_links,runs"
)

ARENA_SIDE = 300.0
LENGTH_MAX = 20.0
TIMINGS = {"dot11b": DOT11B_LONG_PREAMBLE, "bare": MacTiming()}


def unit_area_for_setup() -> float:
    return unit_area(safe_csr_cumulative(RadioParams(pt=100.0, alpha=4.0, gamma0=20.0), LENGTH_MAX))


def density_of(n_links: int) -> float:
    return n_links * unit_area_for_setup() / ARENA_SIDE**2


def links_for(density: float) -> int:
    return max(1, int(round(density * ARENA_SIDE**2 / unit_area_for_setup())))


def default_densities(points: int = 20, max_links: int = 200) -> tuple[float, ...]:
    counts = np.unique(np.rint(np.linspace(1, max_links, points)).astype(int))
    return tuple(density_of(int(n)) for n in counts)


@dataclass(frozen=True)
class SweepSpec:
    densities: tuple[float, ...] = field(default_factory=default_densities)
    seeds: int = 30
    mechanisms: tuple[str, ...] = ("ipcs", "conventional")
    out_dir: str = "."
    base_seed: int = 0
    duration: float = 0.3
    backoff: str = "slotted"
    timing: str = "dot11b"
    ack_increments: bool = False
    audit: bool = True

    def __post_init__(self):
        if not self.densities:
            raise ValueError("density grid is empty")
        if self.seeds < 1:
            raise ValueError("need at least one seed per point")
        if self.timing not in TIMINGS:
            raise ValueError(f"unknown timing preset {self.timing!r}")
        for m in self.mechanisms:
            Mechanism(m)
        object.__setattr__(self, "densities", tuple(float(d) for d in self.densities))
        object.__setattr__(self, "mechanisms", tuple(self.mechanisms))

    def to_json(self) -> str:
        d = asdict(self)
        d.pop("out_dir")  # where the output goes does not change it
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text: str, **extra) -> "SweepSpec":
        d = json.loads(text)
        d["densities"] = tuple(d["densities"])
        d["mechanisms"] = tuple(d["mechanisms"])
        d.update(extra)
        return cls(**d)

    def jobs(self):
        for mech in self.mechanisms:
            for dens in self.densities:
                for k in range(self.seeds):
                    yield mech, dens, self.base_seed + k


@dataclass(frozen=True)
class RunRecord:
    mechanism: str
    density: float
    seed: int
    metrics: SimMetrics


def _run_one(spec: SweepSpec, mech: str, dens: float, seed: int) -> RunRecord:
    cfg = paper_setup(
        mech,
        links_for(dens),
        seed=seed,
        duration=spec.duration,
        backoff=spec.backoff,
        timing=TIMINGS[spec.timing],
        ack_increments=spec.ack_increments,
    )
    return RunRecord(mech, dens, seed, run_simulation(cfg, audit=spec.audit).metrics)


def _run_batch(args):
    spec, batch = args
    return [_run_one(spec, *job) for job in batch]


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[RunRecord]:
    """Every (mechanism, density, seed) run, in grid order regardless of ``workers``."""
    jobs = list(spec.jobs())
    if workers <= 1:
        return [_run_one(spec, *job) for job in jobs]
    # one batch per (mechanism, density) keeps pickling overhead low
    batches = [jobs[i : i + spec.seeds] for i in range(0, len(jobs), spec.seeds)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_run_batch, [(spec, b) for b in batches])
        return [r for part in parts for r in part]


@dataclass(frozen=True)
class PointSummary:
    density: float
    mechanism: str
    spatial_reuse: float
    throughput: float
    collisions: int
    spatial_reuse_std: float
    throughput_std: float
    n_links: int
    runs: int


def _std(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1)) if x.size > 1 else 0.0


def summarize(records: Sequence[RunRecord]) -> list[PointSummary]:
    groups: dict[tuple[str, float], list[SimMetrics]] = {}
    for r in records:
        groups.setdefault((r.mechanism, r.density), []).append(r.metrics)
    out = []
    for (mech, dens), ms in groups.items():
        reuse = np.array([m.spatial_reuse for m in ms])
        thr = np.array([m.throughput_per_unit_area for m in ms])
        out.append(
            PointSummary(
                dens, mech, float(reuse.mean()), float(thr.mean()),
                sum(m.hidden_collisions for m in ms), _std(reuse), _std(thr), ms[0].n_links, len(ms),
            )
        )
    return out


def format_sweep_csv(spec: SweepSpec, points: Sequence[PointSummary]) -> str:
    buf = io.StringIO()
    buf.write(SWEEP_MAGIC + "\n")
    buf.write("# config " + spec.to_json() + "\n")
    buf.write(SWEEP_COLUMNS + "\n")
    for p in points:
        buf.write(
            f"{p.density!r},{p.mechanism},{p.spatial_reuse!r},{p.throughput!r},{p.collisions},"
            f"{p.spatial_reuse_std!r},{p.throughput_std!r},{p.n_links},{p.runs}\n"
        )
    return buf.getvalue()


def read_sweep_csv(text: str) -> tuple[SweepSpec | None, list[dict[str, str]]]:
    """Parse an emitted sweep CSV into its embedded spec and its data rows."""
    lines = text.splitlines()
    spec = None
    body = []
    for line in lines:
        if line.startswith("# config "):
            spec = SweepSpec.from_json(line[len("# config ") :])
        elif line.startswith("#") or not line.strip():
            continue
        else:
            body.append(line)
    if not body or body[0] != SWEEP_COLUMNS:
        raise ValueError("not a sweep table: column header mismatch")
    cols = body[0].split(",")
    rows = []
    for line in body[1:]:
        vals = line.split(",")
        if len(vals) != len(cols):
            raise ValueError(f"malformed sweep row: {line!r}")
        rows.append(dict(zip(cols, vals)))
    return spec, rows


def write_sweep(spec: SweepSpec, workers: int = 1, name: str = "sweep.csv") -> tuple[Path, list[RunRecord]]:
    records = run_sweep(spec, workers)
    text = format_sweep_csv(spec, summarize(records))
    out = Path(spec.out_dir) / name
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
    except OSError as e:
        raise OSError(f"cannot write sweep table to {out}: {e.strerror or e}") from e
    return out, records


def densest(points: Sequence[PointSummary], mechanism: str) -> PointSummary:
    cand = [p for p in points if p.mechanism == mechanism]
    if not cand:
        raise ValueError(f"no points for mechanism {mechanism!r}")
    return max(cand, key=lambda p: p.density)


def ratio(a: float, b: float) -> float:
    return a / b if b > 0 else math.inf

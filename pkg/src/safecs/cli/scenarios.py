"""Canonical worked examples, each reduced to expected-vs-actual checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..carriersense import CsConfig, Mechanism, channel_idle, sense_power, trace_from_sequence
from ..geometry import Topology, build_scenario
from ..macsim import MacTiming, SimConfig, run_simulation
from ..rfmodel import (
    ActiveFrame,
    RadioParams,
    check_feasible,
    pth_from_csr,
    safe_csr_cumulative,
    safe_csr_pairwise,
)

# fig1 runs at these numbers: unit power, unit link length
FIG1_RADIO = RadioParams(pt=1.0, alpha=3.0, gamma0=8.0)
FIG1_CSR = 4.0
# the larger scenarios use the dense-network radio
SECTION_RADIO = RadioParams(pt=100.0, alpha=4.0, gamma0=20.0)
SECTION_D_MAX = 20.0


@dataclass(frozen=True)
class Check:
    name: str
    expected: object
    actual: object
    rel_tol: float = 0.0

    @property
    def ok(self) -> bool:
        if isinstance(self.expected, bool) or not isinstance(self.expected, (int, float)):
            return self.actual == self.expected
        return math.isclose(self.actual, self.expected, rel_tol=self.rel_tol, abs_tol=0.0)

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        fmt = (lambda v: f"{v:.6g}") if isinstance(self.expected, float) else str
        tol = f" (rel tol {self.rel_tol:g})" if self.rel_tol else ""
        return f"[{status}] {self.name}: expected {fmt(self.expected)}, got {fmt(self.actual)}{tol}"


def fig1_checks() -> list[Check]:
    topo = build_scenario("fig1-three-link")
    r = FIG1_RADIO
    l1, l2, l3 = topo.links
    frames = [ActiveFrame.of(topo, 0, "DATA"), ActiveFrame.of(topo, 1, "ACK"), ActiveFrame.of(topo, 2, "DATA")]
    rep = check_feasible(frames, topo, r, which="frame")
    sensed = sense_power(l3.tx, frames[:2], r)
    pth = pth_from_csr(r, FIG1_CSR)
    unit = r.pt * topo.d_max ** -r.alpha
    return [
        Check("SIR at R1 with l2-ACK and l3-DATA on air", 7.714, rep.data_sir[0], 1e-3),
        Check("SIR at R1 below gamma0", True, rep.data_sir[0] < r.gamma0),
        Check("power sensed at T3 / (Pt d_max^-a)", 0.00995, sensed / unit, 1e-3),
        Check("pth for CSR=4 d_max / (Pt d_max^-a)", 0.015625, pth / unit, 1e-9),
        Check("T3 sees the channel idle", True, sensed <= pth),
        Check("pairwise safe CSR equals 4 d_max", 4.0, safe_csr_pairwise(r, topo.d_max), 1e-12),
    ]


def _order_idle(topo: Topology, order, mechanism, radio, csr):
    """Start the first two links of ``order`` and ask whether the third may join."""
    cfg = CsConfig.from_csr(mechanism, radio, csr, t_packet=10.0)
    steps = [(float(k), ActiveFrame.of(topo, link, "DATA"), True) for k, link in enumerate(order[:2])]
    last = topo.links[order[2]]
    trace = trace_from_sequence(order[2], last.tx, steps, radio)
    return channel_idle(trace, 2.0, cfg), trace.total_at(2.0), cfg.pth


def fig3_checks() -> list[Check]:
    radio, d = SECTION_RADIO, SECTION_D_MAX
    csr = safe_csr_cumulative(radio, d)
    conv = build_scenario("fig3-conventional", d, csr, radio.alpha)
    alt = build_scenario("fig3-ipcs", d, csr, radio.alpha)
    c = Mechanism.CONVENTIONAL
    idle_bad, total, pth = _order_idle(conv, (1, 2, 0), c, radio, csr)
    idle_good, _, _ = _order_idle(conv, (0, 1, 2), c, radio, csr)
    out = [
        Check("conventional: T1 power after {l2,l3} / pth", 1.5, total / pth, 1e-3),
        Check("conventional: order {l2,l3,l1} blocks l1", False, idle_bad),
        Check("conventional: order {l1,l2,l3} admits l3", True, idle_good),
    ]
    for order in ((1, 2, 0), (0, 1, 2)):
        ok, _, _ = _order_idle(alt, order, Mechanism.IPCS, radio, csr)
        name = "{" + ",".join(f"l{i + 1}" for i in order) + "}"
        out.append(Check(f"incremental at l3': order {name} admits the last link", True, ok))
    frames = [ActiveFrame.of(alt, i, "DATA") for i in range(3)]
    out.append(Check("l3' set is interference-safe", True, check_feasible(frames, alt, radio).feasible))
    return out


def capture_outcome(rs_mode: bool) -> dict[int, str]:
    """Run the capture geometry with l1 first and l2 shortly after; return per-link DATA results."""
    radio, d = SECTION_RADIO, SECTION_D_MAX
    csr = safe_csr_cumulative(radio, d)
    topo = build_scenario("appendixA-capture", d, csr, radio.alpha)
    timing = MacTiming()
    cfg = SimConfig(
        topology=topo,
        radio=radio,
        cs=CsConfig.from_csr(Mechanism.IPCS, radio, csr, timing.t_packet),
        timing=timing,
        duration=20 * timing.t_packet,
        rs_mode=rs_mode,
        script={0: (0.0,), 1: (timing.t_data / 4,)},
    )
    log = run_simulation(cfg, audit=False).log
    return {link: detail for _, kind, link, detail in log if kind == "DATA_END"}


def capture_checks() -> list[Check]:
    off, on = capture_outcome(False), capture_outcome(True)
    return [
        Check("RS off: l2 DATA", "fail", off.get(1)),
        Check("RS on: l2 DATA", "ok", on.get(1)),
        Check("RS on: l1 DATA", "ok", on.get(0)),
    ]


CHECKS = {
    "fig1-three-link": fig1_checks,
    "fig3-order": fig3_checks,
    "appendixA-capture": capture_checks,
}
SCENARIO_NAMES = tuple(CHECKS)


def run_checks(name: str) -> list[Check]:
    try:
        fn = CHECKS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIO_NAMES)}") from None
    return fn()

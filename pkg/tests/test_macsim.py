from collections import Counter

import numpy as np
import pytest

from safecs.carriersense import CsConfig, Mechanism, conventional_idle, ipcs_idle
from safecs.geometry import LinkGeometry, Point2D, Topology, build_scenario
from safecs.macsim import (
    DOT11B_LONG_PREAMBLE,
    MacTiming,
    SimConfig,
    collision_audit,
    compute_metrics,
    concurrent_intervals,
    format_event_log,
    format_metrics_records,
    paper_setup,
    parse_event_log,
    run_simulation,
    simulate,
)
from safecs.rfmodel import (
    ActiveFrame,
    RadioParams,
    check_feasible,
    safe_csr_cumulative,
    safe_csr_pairwise,
    unit_area,
)

FIG1_RADIO = RadioParams(pt=1.0, alpha=3.0, gamma0=8.0)


def test_timing_arithmetic():
    t = MacTiming()
    assert t.t_data == pytest.approx(1460 * 8 / 11e6)
    assert t.t_packet == pytest.approx(t.t_data + 10e-6 + 112 / 11e6)
    assert t.mean_backoff == pytest.approx(15.5 * 20e-6)
    assert DOT11B_LONG_PREAMBLE.t_data > t.t_data
    with pytest.raises(ValueError):
        MacTiming(cw_min=64, cw_max=32)
    with pytest.raises(ValueError):
        MacTiming(slot=0)


def test_config_validation():
    cfg = paper_setup("ipcs", 10)
    with pytest.raises(ValueError, match="ten packet"):
        paper_setup("ipcs", 10, duration=1e-3)
    with pytest.raises(ValueError, match="backoff"):
        paper_setup("ipcs", 10, backoff="random")
    with pytest.raises(ValueError, match="does not match"):
        SimConfig(cfg.topology, cfg.radio, CsConfig(Mechanism.IPCS, cfg.cs.pth * 3, cfg.cs.csr, cfg.cs.t_packet))
    with pytest.raises(ValueError, match="window"):
        SimConfig(cfg.topology, cfg.radio, CsConfig(Mechanism.IPCS, cfg.cs.pth, cfg.cs.csr, 1e-4), cfg.timing)
    with pytest.raises(ValueError, match="csr rule"):
        paper_setup("ipcs", 10, csr_rule="vibes")


def test_setup_numbers():
    cfg = paper_setup("ipcs", 200)
    assert cfg.cs.csr == pytest.approx(117.6, rel=1e-3)
    assert cfg.cs.pth == pytest.approx(5.23e-7, rel=5e-3)
    assert paper_setup("ipcs", 200, csr_rule="pairwise").cs.csr == pytest.approx(safe_csr_pairwise(cfg.radio, 20))


def test_config_dict_roundtrip():
    cfg = paper_setup("conventional", 30, seed=4, backoff="continuous", script=None)
    assert SimConfig.from_dict(cfg.to_dict()) == cfg
    topo = build_scenario("fig1-three-link")
    c2 = SimConfig(
        topo, FIG1_RADIO, CsConfig.from_csr("ipcs", FIG1_RADIO, 4.0, MacTiming().t_packet),
        script={0: (0.0, 0.01)}, duration=0.05,
    )
    back = SimConfig.from_dict(c2.to_dict())
    assert back.script == c2.script and back.resolve_topology() == topo


@pytest.mark.parametrize("mech", ["ipcs", "conventional"])
@pytest.mark.parametrize("backoff", ["slotted", "continuous"])
def test_determinism(mech, backoff):
    cfg = paper_setup(mech, 60, seed=11, duration=0.05, backoff=backoff)
    a, b = simulate(cfg), simulate(cfg)
    assert a.log == b.log
    c = simulate(paper_setup(mech, 60, seed=12, duration=0.05, backoff=backoff))
    assert c.log != a.log


@pytest.mark.parametrize("mech", ["ipcs", "conventional"])
def test_every_data_frame_has_one_outcome(mech):
    res = simulate(paper_setup(mech, 80, seed=2, duration=0.08))
    starts = Counter()
    outcomes = Counter()
    open_ = {}
    for t, kind, link, detail in res.log:
        if kind == "DATA_START":
            assert link not in open_, "new DATA while the previous exchange is unresolved"
            open_[link] = t
            starts[link] += 1
        elif (kind == "DATA_END" and detail == "fail") or kind == "ACK_END":
            del open_[link]
            outcomes[link] += 1
    for link, n in starts.items():
        assert n - outcomes[link] == (1 if link in open_ else 0)


def test_log_is_time_ordered():
    res = simulate(paper_setup("ipcs", 50, seed=1, duration=0.05))
    times = [e[0] for e in res.log]
    assert times == sorted(times)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("backoff", ["slotted", "continuous"])
def test_ipcs_admission_separation_and_no_collisions(seed, backoff):
    cfg = paper_setup("ipcs", 150, seed=seed, duration=0.1, backoff=backoff)
    res = run_simulation(cfg)
    assert res.min_admission_separation >= cfg.cs.csr
    assert res.metrics.hidden_collisions == 0
    assert res.metrics.data_failures == 0 and res.metrics.ack_failures == 0


def test_ipcs_literal_ack_rule_is_also_safe():
    cfg = paper_setup("ipcs", 150, seed=3, duration=0.1, ack_increments=True)
    res = run_simulation(cfg)
    assert res.min_admission_separation >= cfg.cs.csr
    assert res.metrics.hidden_collisions == 0


def _admissions(log, link):
    return [t for t, kind, l, _ in log if kind == "DATA_START" and l == link]


@pytest.mark.parametrize("mech", ["ipcs", "conventional"])
def test_engine_decisions_match_pure_sensing(mech):
    """Every admission is idle according to the stand-alone functions applied to the recorded trace."""
    observers = (0, 5, 9, 17)
    cfg = paper_setup(mech, 70, seed=6, duration=0.1, record_traces=observers)
    res = simulate(cfg)
    decide = ipcs_idle if mech == "ipcs" else conventional_idle
    checked = 0
    for obs in observers:
        trace = res.traces[obs]
        for t in _admissions(res.log, obs):
            # the decision covers the whole DIFS before the backoff finished
            for probe in (t, t - cfg.timing.difs / 2):
                assert decide(trace, probe, cfg.cs), (obs, t)
            checked += 1
    assert checked > 10


def test_ipcs_trace_skips_ack_steps_by_default():
    res = simulate(paper_setup("ipcs", 40, seed=1, duration=0.05, record_traces=(3,)))
    assert {e.direction.value for e in res.traces[3].events} == {"DATA"}
    res = simulate(paper_setup("conventional", 40, seed=1, duration=0.05, record_traces=(3,)))
    assert {e.direction.value for e in res.traces[3].events} == {"DATA", "ACK"}


@pytest.mark.parametrize("backoff", ["slotted", "continuous"])
def test_single_link_saturation_throughput(backoff):
    topo = Topology((LinkGeometry(0, Point2D(50, 50), Point2D(65, 50)),), (100, 100))
    timing = MacTiming()
    radio = RadioParams()
    cfg = SimConfig(
        topo, radio, CsConfig.from_csr("ipcs", radio, 117.6, timing.t_packet),
        timing=timing, backoff=backoff, duration=3.0, seed=1,
    )
    res = simulate(cfg)
    delivered = sum(1 for e in res.log if e[1] == "ACK_END" and e[3] == "ok")
    cycle = timing.difs + timing.mean_backoff + timing.t_packet
    want = timing.payload * 8 / cycle
    got = delivered * timing.payload * 8 / cfg.duration
    assert got == pytest.approx(want, rel=0.02)


def _fig1_script_config(mech, csr, timing=MacTiming()):
    topo = build_scenario("fig1-three-link")
    # l2 first; l1 joins mid-way through l2's DATA (T1 sits exactly at the range, so idle);
    # l3 fires halfway through l2's ACK while l1 is still sending DATA
    script = {
        1: (0.0,),
        0: (timing.t_data / 2,),
        2: (timing.t_data + timing.sifs + timing.ack_duration / 2,),
    }
    return SimConfig(
        topo, FIG1_RADIO, CsConfig.from_csr(mech, FIG1_RADIO, csr, timing.t_packet),
        timing=timing, duration=20 * timing.t_packet, script=script,
    )


@pytest.mark.parametrize("mech", ["conventional", "ipcs"])
def test_fig1_pairwise_range_collides(mech):
    cfg = _fig1_script_config(mech, safe_csr_pairwise(FIG1_RADIO, 1.0))
    res = run_simulation(cfg)
    data_end = {l: d for _, k, l, d in res.log if k == "DATA_END"}
    assert data_end[0] == "fail"
    assert res.metrics.hidden_collisions >= 1


def test_fig1_safe_range_ipcs_defers():
    cfg = _fig1_script_config("ipcs", safe_csr_cumulative(FIG1_RADIO, 1.0))
    res = run_simulation(cfg)
    assert res.metrics.hidden_collisions == 0
    assert any(k == "DEFER" for _, k, _, _ in res.log)
    assert all(d == "ok" for _, k, _, d in res.log if k in ("DATA_END", "ACK_END"))


def test_script_rejects_unknown_link():
    cfg = _fig1_script_config("ipcs", 4.0)
    bad = SimConfig(cfg.topology, cfg.radio, cfg.cs, cfg.timing, duration=cfg.duration, script={7: (0.0,)})
    with pytest.raises(ValueError, match="unknown link"):
        simulate(bad)


def _capture_config(rs_mode):
    radio, d = RadioParams(), 20.0
    csr = safe_csr_cumulative(radio, d)
    topo = build_scenario("appendixA-capture", d, csr)
    timing = MacTiming()
    return SimConfig(
        topo, radio, CsConfig.from_csr("conventional", radio, csr, timing.t_packet),
        timing=timing, duration=20 * timing.t_packet, rs_mode=rs_mode,
        script={0: (0.0,), 1: (timing.t_data / 4,)},
    )


@pytest.mark.parametrize("rs_mode,l2", [(False, "fail"), (True, "ok")])
def test_capture(rs_mode, l2):
    log = simulate(_capture_config(rs_mode)).log
    results = {l: d for _, k, l, d in log if k == "DATA_END"}
    assert results[1] == l2
    assert results[0] == "ok"


def test_noise_floor_kills_weak_link():
    topo = Topology((LinkGeometry(0, Point2D(10, 10), Point2D(30, 10)),), (50, 50))
    radio = RadioParams(noise=100 * 20.0**-4 / 10)  # SNR 10 < gamma0
    timing = MacTiming()
    cfg = SimConfig(topo, radio, CsConfig.from_csr("ipcs", radio, 117.6, timing.t_packet), duration=0.05)
    res = run_simulation(cfg)
    assert res.metrics.delivered == 0
    assert res.metrics.throughput_per_unit_area == 0.0


# -- audit & metrics ------------------------------------------------------------
def test_audit_empty_log():
    topo = build_scenario("fig1-three-link")
    assert collision_audit([], topo, FIG1_RADIO) == 0


def test_concurrent_intervals():
    log = [
        (0.0, "DATA_START", 0, ""),
        (1.0, "DATA_START", 1, ""),
        (2.0, "DATA_END", 0, "ok"),
        (2.5, "ACK_START", 0, ""),
        (3.0, "DATA_END", 1, "ok"),
        (3.0, "ACK_END", 0, "ok"),
    ]
    got = list(concurrent_intervals(log))
    assert got == [
        (0.0, 1.0, {0: "DATA"}),
        (1.0, 2.0, {0: "DATA", 1: "DATA"}),
        (2.0, 2.5, {1: "DATA"}),
        (2.5, 3.0, {1: "DATA", 0: "ACK"}),
    ]


def test_audit_agrees_with_check_feasible():
    topo = build_scenario("fig1-three-link")
    log = [
        (0.0, "DATA_START", 0, ""),
        (0.1, "ACK_START", 1, ""),
        (0.2, "DATA_START", 2, ""),
        (0.3, "ACK_END", 1, "ok"),
        (0.4, "DATA_END", 2, "ok"),
        (0.5, "DATA_END", 0, "fail"),
    ]
    frames = [ActiveFrame.of(topo, 0, "DATA"), ActiveFrame.of(topo, 1, "ACK"), ActiveFrame.of(topo, 2, "DATA")]
    assert not check_feasible(frames, topo, FIG1_RADIO).feasible
    assert collision_audit(log, topo, FIG1_RADIO) == 1


def test_metrics_by_hand():
    topo = Topology((LinkGeometry(0, Point2D(10, 10), Point2D(20, 10)),), (100, 100))
    radio = RadioParams()
    timing = MacTiming()
    cfg = SimConfig(topo, radio, CsConfig.from_csr("ipcs", radio, 117.6, timing.t_packet),
                    timing=timing, duration=0.1, d_ref=20.0)
    res = simulate(cfg)
    res.log = [
        (0.0, "DATA_START", 0, ""),
        (0.01, "DATA_END", 0, "ok"),
        (0.011, "ACK_START", 0, ""),
        (0.012, "ACK_END", 0, "ok"),
        (0.05, "DATA_START", 0, ""),
        (0.06, "DATA_END", 0, "fail"),
    ]
    m = compute_metrics(res)
    a = unit_area(safe_csr_cumulative(radio, 20.0))
    assert m.unit_area == pytest.approx(a)
    assert m.spatial_reuse == pytest.approx((0.012 + 0.01) / 0.1 * a / 1e4)
    assert m.throughput_per_unit_area == pytest.approx(1460 * 8 / 0.1 * a / 1e4)
    assert (m.delivered, m.attempts, m.data_failures, m.ack_failures) == (1, 2, 1, 0)
    assert compute_metrics(res, audit=False).hidden_collisions == -1


def test_event_log_roundtrip_and_header():
    res = simulate(paper_setup("ipcs", 20, seed=0, duration=0.05))
    text = format_event_log(res.log)
    assert text.startswith("# safecs-eventlog v1\ntime,event_type,link,detail\n")
    assert parse_event_log(text) == res.log
    with pytest.raises(ValueError, match="header"):
        parse_event_log("time,event_type,link,detail\n")


def test_metrics_records():
    m = run_simulation(paper_setup("ipcs", 20, seed=0, duration=0.05)).metrics
    lines = format_metrics_records([m, m]).splitlines()
    assert lines[0] == '{"format": "safecs-metrics", "version": 1}'
    assert len(lines) == 3 and '"spatial_reuse"' in lines[1]


def test_ipcs_beats_conventional_when_dense():
    reuse = {}
    for mech in ("ipcs", "conventional"):
        reuse[mech] = np.mean(
            [run_simulation(paper_setup(mech, 200, seed=s, duration=0.1), audit=False).metrics.spatial_reuse
             for s in range(3)]
        )
    assert reuse["ipcs"] > 1.2 * reuse["conventional"]

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

from ..carriersense import CsConfig, Mechanism
from ..geometry import LinkGeometry, Point2D, Topology, TopologyConfig, generate_topology
from ..rfmodel import RadioParams, safe_csr_cumulative, safe_csr_pairwise


@dataclass(frozen=True)
class MacTiming:
    """802.11b-style DCF timing. Durations in seconds, payload in bytes.

    ``overhead`` is a single PHY preamble + MAC header term added to every
    DATA frame; ``ack_duration`` is the whole ACK airtime.
    """

    slot: float = 20e-6
    sifs: float = 10e-6
    difs: float = 50e-6
    cw_min: int = 31
    cw_max: int = 1023
    data_rate: float = 11e6
    payload: int = 1460
    ack_duration: float = 112 / 11e6
    overhead: float = 0.0

    def __post_init__(self):
        if self.cw_min > self.cw_max:
            raise ValueError("cw_min must not exceed cw_max")
        if min(self.slot, self.sifs, self.difs, self.data_rate, self.ack_duration) <= 0:
            raise ValueError("timing values must be positive")

    @property
    def t_data(self) -> float:
        return self.overhead + self.payload * 8 / self.data_rate

    @property
    def t_packet(self) -> float:
        return self.t_data + self.sifs + self.ack_duration

    @property
    def mean_backoff(self) -> float:
        return self.cw_min / 2 * self.slot


# 802.11b long PLCP preamble+header (192 us) plus a 34-byte MAC header at 11 Mb/s;
# ACK sent at 1 Mb/s after its own preamble.
DOT11B_LONG_PREAMBLE = MacTiming(overhead=192e-6 + 34 * 8 / 11e6, ack_duration=192e-6 + 112 / 1e6)


@dataclass(frozen=True)
class SimConfig:
    topology: Topology | TopologyConfig
    radio: RadioParams
    cs: CsConfig
    timing: MacTiming = field(default_factory=MacTiming)
    backoff: str = "continuous"
    duration: float = 0.5
    seed: int = 0
    rs_mode: bool = True
    # link id -> backoff-expiry instants; when set, only scripted links transmit
    script: dict[int, tuple[float, ...]] | None = None
    record_traces: tuple[int, ...] = ()
    # distance that sets the unit area; defaults to the topology's length bound
    d_ref: float | None = None

    def __post_init__(self):
        if self.backoff not in ("continuous", "slotted"):
            raise ValueError(f"unknown backoff mode {self.backoff!r}")
        if not self.duration > 10 * self.timing.t_packet:
            raise ValueError("duration must exceed ten packet exchanges")
        self.cs.check(self.radio)
        if self.cs.t_packet < self.timing.t_packet * (1 - 1e-12):
            raise ValueError("sensing window shorter than one packet exchange")

    def resolve_topology(self) -> Topology:
        if isinstance(self.topology, TopologyConfig):
            return generate_topology(self.topology)
        return self.topology

    def reference_length(self, topo: Topology | None = None) -> float:
        if self.d_ref is not None:
            return self.d_ref
        if isinstance(self.topology, TopologyConfig):
            return self.topology.length_max
        return (topo or self.topology).d_max

    # plain-data round trip, used for artifact snapshots
    def to_dict(self) -> dict[str, Any]:
        topo = self.topology
        if isinstance(topo, TopologyConfig):
            tdict = {"kind": "random", **asdict(topo)}
        else:
            tdict = {
                "kind": "explicit",
                "arena": list(topo.arena),
                "links": [[l.tx.x, l.tx.y, l.rx.x, l.rx.y] for l in topo.links],
            }
        return {
            "topology": tdict,
            "radio": asdict(self.radio),
            "cs": {
                "mechanism": self.cs.mechanism.value,
                "pth": self.cs.pth,
                "csr": self.cs.csr,
                "t_packet": self.cs.t_packet,
                "ack_increments": self.cs.ack_increments,
            },
            "timing": asdict(self.timing),
            "backoff": self.backoff,
            "duration": self.duration,
            "seed": self.seed,
            "rs_mode": self.rs_mode,
            "script": None if self.script is None else {str(k): list(v) for k, v in self.script.items()},
            "record_traces": list(self.record_traces),
            "d_ref": self.d_ref,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SimConfig":
        t = dict(d["topology"])
        kind = t.pop("kind")
        if kind == "random":
            topo: Topology | TopologyConfig = TopologyConfig(**t)
        else:
            links = tuple(
                LinkGeometry(i, Point2D(a, b), Point2D(c, e)) for i, (a, b, c, e) in enumerate(t["links"])
            )
            topo = Topology(links, tuple(t["arena"]))
        script = d.get("script")
        return cls(
            topology=topo,
            radio=RadioParams(**d["radio"]),
            cs=CsConfig(
                Mechanism(d["cs"]["mechanism"]), d["cs"]["pth"], d["cs"]["csr"], d["cs"]["t_packet"],
                d["cs"].get("ack_increments", False),
            ),
            timing=MacTiming(**d["timing"]),
            backoff=d["backoff"],
            duration=d["duration"],
            seed=d["seed"],
            rs_mode=d["rs_mode"],
            script=None if script is None else {int(k): tuple(v) for k, v in script.items()},
            record_traces=tuple(d.get("record_traces", ())),
            d_ref=d.get("d_ref"),
        )


def paper_setup(
    mechanism: Mechanism | str = Mechanism.IPCS,
    n_links: float = 200,
    seed: int = 0,
    duration: float = 0.3,
    backoff: str = "slotted",
    timing: MacTiming | None = None,
    csr_rule: str = "cumulative",
    ack_increments: bool = False,
    **overrides,
) -> SimConfig:
    """The 300 m square, 10-20 m links, alpha=4, gamma0=20, Pt=100 mW setup."""
    radio = RadioParams(pt=100.0, alpha=4.0, gamma0=20.0, noise=0.0)
    timing = timing or DOT11B_LONG_PREAMBLE
    tcfg = TopologyConfig(arena_side=300.0, n_links=n_links, length_min=10.0, length_max=20.0, seed=seed)
    if csr_rule == "cumulative":
        csr = safe_csr_cumulative(radio, tcfg.length_max)
    elif csr_rule == "pairwise":
        csr = safe_csr_pairwise(radio, tcfg.length_max)
    else:
        raise ValueError(f"unknown csr rule {csr_rule!r}")
    cs = CsConfig.from_csr(mechanism, radio, csr, timing.t_packet, ack_increments=ack_increments)
    return SimConfig(
        topology=tcfg, radio=radio, cs=cs, timing=timing, backoff=backoff,
        duration=duration, seed=seed, **overrides,
    )

"""Single-threaded discrete-event CSMA/CA engine.

Node indexing: transmitter of link i is node i, its receiver is node n+i.
Received powers are precomputed into one node-to-node matrix, so every
power change is a row lookup. Interference is piecewise constant between
frame starts and ends; reception is re-checked only when a frame starts,
since a frame ending can only raise the SIR of the others.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from ..carriersense import Mechanism, PowerEvent, PowerTrace
from ..geometry import Topology
from ..rfmodel import Direction
from .config import SimConfig

# per-link MAC states
IDLE, CONTEND, TX_DATA, WAIT_ACK, RX_ACK = range(5)

# event kinds, ordered so that equal-time ends are handled before starts
_DATA_END, _ACK_END, _ACK_START, _WAKE, _SCRIPT, _EXPIRE = range(6)

JITTER = 1e-10


@dataclass
class SimResult:
    config: SimConfig
    topology: Topology
    log: list[tuple[float, str, int, str]]
    traces: dict[int, PowerTrace] = field(default_factory=dict)
    # smallest transmitter separation seen at any DATA admission
    min_admission_separation: float = math.inf
    metrics: object = None


class _Engine:
    def __init__(self, cfg: SimConfig, topo: Topology):
        self.cfg = cfg
        self.topo = topo
        radio, timing = cfg.radio, cfg.timing
        n = self.n = len(topo)
        pos = np.vstack([topo.tx_array(), topo.rx_array()])
        self.pos = pos
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        np.fill_diagonal(dist, np.inf)
        if np.any(dist == 0):
            a, b = np.argwhere(dist == 0)[0]
            raise ValueError(f"nodes {a} and {b} are co-located")
        # P[s, r]: power received at node r from node s
        self.P = radio.pt * dist ** -radio.alpha
        sense = self.P[:, :n].copy()
        idx = np.arange(n)
        sense[idx, idx] = 0.0
        sense[idx + n, idx] = 0.0
        self.sense = sense
        self.pth = cfg.cs.pth
        self.gamma0 = radio.gamma0
        self.noise = radio.noise
        self.ipcs = cfg.cs.mechanism is Mechanism.IPCS
        self.window = cfg.cs.t_packet
        self.ack_increments = cfg.cs.ack_increments
        self.close = [np.flatnonzero(sense[s] > self.pth) for s in range(2 * n)]

        self.t_data = timing.t_data
        self.sifs = timing.sifs
        self.difs = timing.difs
        self.ack = timing.ack_duration
        self.slot = timing.slot
        self.slotted = cfg.backoff == "slotted"
        self.cw_min, self.cw_max = timing.cw_min, timing.cw_max
        self.mean_backoff = timing.mean_backoff

        self.rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[1])

        self.state = np.full(n, IDLE, dtype=np.int8)
        self.idle = np.zeros(n, dtype=bool)  # contending and counting down
        self.idle_since = np.full(n, np.nan)
        self.remaining = np.zeros(n)
        self.cw = np.full(n, self.cw_min)
        self.version = np.zeros(n, dtype=np.int64)
        self.busy_until = np.full(n, -np.inf)
        self.busy = np.zeros(n, dtype=bool)
        self.skip_difs = np.zeros(n, dtype=bool)
        self.pending_script = np.zeros(n, dtype=np.int64)

        # frames on air: frame id -> [link, direction, sender node, receiver node, ok]
        self.frames: dict[int, list] = {}
        self.link_frame = np.full(n, -1)
        self.next_fid = 0
        self.transmitting = np.zeros(2 * n, dtype=bool)
        self.lock = np.full(2 * n, -1)  # non-RS receivers only

        self.heap: list = []
        self.seq = 0
        self.log: list[tuple[float, str, int, str]] = []
        self.min_sep = math.inf
        self.traces = {i: PowerTrace(i) for i in cfg.record_traces}

    # -- scheduling ---------------------------------------------------------
    def push(self, t, kind, link, ver=0):
        self.seq += 1
        heapq.heappush(self.heap, (float(t), kind, self.seq, int(link), int(ver)))

    def draw_backoff(self, i):
        if self.slotted:
            return int(self.rng.integers(0, self.cw[i] + 1)) * self.slot
        return float(self.rng.exponential(self.mean_backoff))

    # -- carrier sensing ----------------------------------------------------
    def sensed_busy(self, i, t):
        if self.ipcs:
            return t <= self.busy_until[i]
        return bool(self.busy[i])

    def resume(self, i, t):
        """Channel seen idle from ``t``: DIFS, then count down."""
        self.idle[i] = True
        self.idle_since[i] = t
        self.version[i] += 1
        wait = 0.0 if self.skip_difs[i] else self.difs
        self.push(t + wait + self.remaining[i] + self.rng.random() * JITTER, _EXPIRE, i, self.version[i])

    def freeze(self, i, t):
        if not self.idle[i]:
            return
        start = self.idle_since[i] + (0.0 if self.skip_difs[i] else self.difs)
        elapsed = t - start
        if elapsed > 0:
            if self.slotted:
                done = math.floor(elapsed / self.slot + 1e-9) * self.slot
                self.remaining[i] = max(self.remaining[i] - done, 0.0)
            else:
                self.remaining[i] = max(self.remaining[i] - elapsed, 0.0)
        self.skip_difs[i] = False
        self.idle[i] = False
        self.idle_since[i] = np.nan
        self.version[i] += 1

    def contend(self, i, t, fresh=True):
        self.state[i] = CONTEND
        if fresh:
            self.remaining[i] = self.draw_backoff(i)
        self.idle[i] = False
        if self.sensed_busy(i, t):
            if self.ipcs:
                self.push(self.busy_until[i], _WAKE, i)
            self.skip_difs[i] = False
        else:
            self.resume(i, t)

    # -- power bookkeeping --------------------------------------------------
    def record(self, t, sender, sign, link, direction):
        if self.ipcs and direction is Direction.ACK and not self.ack_increments:
            return
        for obs, trace in self.traces.items():
            p = float(self.sense[sender, obs])
            if p == 0.0:
                continue
            tt = float(t)
            if trace.events and tt <= trace.events[-1].time:
                tt = math.nextafter(trace.events[-1].time, math.inf)
            trace.append(PowerEvent(tt, sign * p, link, direction))

    def power_up(self, t, sender):
        if self.ipcs:
            if sender >= self.n and not self.ack_increments:
                return
            obs = self.close[sender]
            if obs.size:
                newly = obs[self.idle[obs]]
                self.busy_until[obs] = np.maximum(self.busy_until[obs], t + self.window)
                for i in newly:
                    self.freeze(i, t)
                    self.push(self.busy_until[i], _WAKE, i)
        else:
            self.conventional_update(t)

    def power_down(self, t):
        if not self.ipcs:
            self.conventional_update(t)

    def conventional_update(self, t):
        senders = [f[2] for f in self.frames.values()]
        if senders:
            total = self.sense[senders].sum(axis=0)
        else:
            total = np.zeros(self.n)
        nb = total > self.pth
        changed = np.flatnonzero(nb != self.busy)
        self.busy = nb
        for i in changed:
            if self.state[i] != CONTEND:
                continue
            if nb[i]:
                self.freeze(i, t)
            elif not self.idle[i]:
                self.resume(i, t)

    # -- frames -------------------------------------------------------------
    def start_frame(self, t, link, direction):
        n = self.n
        if direction is Direction.DATA:
            s, r = link, link + n
        else:
            s, r = link + n, link
        fid = self.next_fid
        self.next_fid += 1
        ok = True
        if not self.cfg.rs_mode:
            self.lock[s] = -1
            if self.lock[r] != -1:
                ok = False
            else:
                self.lock[r] = fid
            catch = (self.P[s] >= self.pth) & (self.lock == -1) & ~self.transmitting
            catch[s] = False
            self.lock[catch] = fid
        self.frames[fid] = [link, direction, s, r, ok]
        self.link_frame[link] = fid
        self.transmitting[s] = True
        self.check_reception()
        self.record(t, s, 1.0, link, direction)
        self.power_up(t, s)
        return fid

    def end_frame(self, t, fid):
        link, direction, s, r, ok = self.frames.pop(fid)
        self.link_frame[link] = -1
        self.transmitting[s] = False
        if not self.cfg.rs_mode:
            self.lock[self.lock == fid] = -1
        self.record(t, s, -1.0, link, direction)
        self.power_down(t)
        return ok

    def check_reception(self):
        items = list(self.frames.values())
        if len(items) < 2:
            if items and self.noise > 0:
                f = items[0]
                if self.P[f[2], f[3]] / self.noise < self.gamma0:
                    f[4] = False
            return
        S = [f[2] for f in items]
        R = [f[3] for f in items]
        M = self.P[np.ix_(S, R)]
        signal = M.diagonal().copy()
        np.fill_diagonal(M, 0.0)
        interference = M.sum(axis=0) + self.noise
        with np.errstate(divide="ignore"):
            sir = signal / interference
        for f, v in zip(items, sir):
            if v < self.gamma0:
                f[4] = False

    # -- MAC transitions ----------------------------------------------------
    def start_data(self, t, i):
        self.state[i] = TX_DATA
        self.idle[i] = False
        self.skip_difs[i] = False
        self.version[i] += 1
        tx = self.pos[i]
        for other in np.flatnonzero(self.state >= TX_DATA):
            if other != i:
                d = float(np.hypot(*(self.pos[other] - tx)))
                if d < self.min_sep:
                    self.min_sep = d
        self.log.append((t, "DATA_START", i, ""))
        self.start_frame(t, i, Direction.DATA)
        self.push(t + self.t_data, _DATA_END, i)

    def finish_exchange(self, t, i, success):
        if self.slotted:
            if success:
                self.cw[i] = self.cw_min
            else:
                self.cw[i] = min(2 * (self.cw[i] + 1) - 1, self.cw_max)
        if self.cfg.script is None:
            self.contend(i, t)
        elif self.pending_script[i] > 0:
            self.pending_script[i] -= 1
            self.script_attempt(t, i)
        else:
            self.state[i] = IDLE

    def script_attempt(self, t, i):
        self.remaining[i] = 0.0
        if self.sensed_busy(i, t):
            self.log.append((t, "DEFER", i, "busy"))
            self.skip_difs[i] = False
            self.contend(i, t, fresh=False)
        else:
            self.skip_difs[i] = True
            self.contend(i, t, fresh=False)

    def handle(self, t, kind, i, ver):
        if kind == _EXPIRE:
            if ver == self.version[i] and self.state[i] == CONTEND and self.idle[i]:
                self.start_data(t, i)
        elif kind == _WAKE:
            if self.state[i] != CONTEND or self.idle[i]:
                return
            if self.busy_until[i] >= t:
                # window still holds a large increment; the closed boundary keeps it busy at equality
                nxt = self.busy_until[i]
                if nxt == t:
                    self.resume(i, t)
                else:
                    self.push(nxt, _WAKE, i)
            else:
                self.resume(i, t)
        elif kind == _DATA_END:
            ok = self.end_frame(t, self.link_frame[i])
            self.log.append((t, "DATA_END", i, "ok" if ok else "fail"))
            if ok:
                self.state[i] = WAIT_ACK
                self.push(t + self.sifs, _ACK_START, i)
            else:
                self.finish_exchange(t, i, False)
        elif kind == _ACK_START:
            self.state[i] = RX_ACK
            self.log.append((t, "ACK_START", i, ""))
            self.start_frame(t, i, Direction.ACK)
            self.push(t + self.ack, _ACK_END, i)
        elif kind == _ACK_END:
            ok = self.end_frame(t, self.link_frame[i])
            self.log.append((t, "ACK_END", i, "ok" if ok else "fail"))
            self.finish_exchange(t, i, ok)
        elif kind == _SCRIPT:
            if self.state[i] in (IDLE,):
                self.script_attempt(t, i)
            elif self.state[i] == CONTEND:
                pass  # already waiting for the medium
            else:
                self.pending_script[i] += 1

    def run(self) -> SimResult:
        cfg = self.cfg
        if cfg.script is None:
            for i in range(self.n):
                self.contend(i, 0.0)
        else:
            for i, times in cfg.script.items():
                if not 0 <= i < self.n:
                    raise ValueError(f"script refers to unknown link {i}")
                for t in times:
                    self.push(float(t), _SCRIPT, i)
        end = cfg.duration
        heap = self.heap
        while heap:
            t, kind, _, i, ver = heapq.heappop(heap)
            if t > end:
                break
            self.handle(t, kind, i, ver)
        return SimResult(cfg, self.topo, self.log, self.traces, self.min_sep)


def simulate(cfg: SimConfig, topo: Topology | None = None) -> SimResult:
    """Run the engine only; see :func:`run_simulation` for metrics and audit."""
    topo = topo or cfg.resolve_topology()
    return _Engine(cfg, topo).run()

"""Hand-rolled SVG line charts for the CSR-ratio table and the sweep table.

Output is plain text built from fixed-precision numbers, so the same input
always gives the same bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

from ..rfmodel import CSR_TABLE_HEADER
from .sweep import SWEEP_COLUMNS, read_sweep_csv

W, H = 640, 420
ML, MR, MT, MB = 70, 80, 40, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _f(v: float) -> str:
    return f"{v:.2f}"


def nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 10))
        v += step
    return ticks


@dataclass
class Series:
    label: str
    xs: list[float]
    ys: list[float]
    right: bool = False
    dashed: bool = False
    color: int | None = None


@dataclass
class Chart:
    title: str
    xlabel: str
    ylabel: str
    y2label: str | None = None
    series: list[Series] = field(default_factory=list)
    hlines: list[tuple[float, str]] = field(default_factory=list)
    ymin: float | None = None
    ymax: float | None = None

    def _range(self, right: bool):
        ys = [y for s in self.series if s.right == right for y in s.ys]
        if not right:
            ys += [y for y, _ in self.hlines]
        if not ys:
            return 0.0, 1.0
        lo = min(ys) if self.ymin is None or right else min(self.ymin, min(ys))
        hi = max(ys) if self.ymax is None or right else max(self.ymax, max(ys))
        if right:
            lo = min(0.0, lo)
        pad = 0.05 * (hi - lo or 1.0)
        return lo, hi + pad

    def render(self) -> str:
        xs = [x for s in self.series for x in s.xs]
        if not xs:
            raise ValueError("nothing to plot: no data rows")
        x0, x1 = min(xs), max(xs)
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        pw, ph = W - ML - MR, H - MT - MB
        ranges = {False: self._range(False), True: self._range(True)}

        def px(x):
            return ML + (x - x0) / (x1 - x0) * pw

        def py(y, right=False):
            lo, hi = ranges[right]
            return MT + ph - (y - lo) / (hi - lo) * ph

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
            'font-family="sans-serif" font-size="12">',
            f'<rect width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2:.0f}" y="22" text-anchor="middle" font-size="14">{escape(self.title)}</text>',
            f'<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        ]
        for t in nice_ticks(x0, x1):
            if x0 <= t <= x1:
                X = _f(px(t))
                out.append(f'<line x1="{X}" y1="{MT + ph}" x2="{X}" y2="{MT + ph + 5}" stroke="black"/>')
                out.append(f'<text x="{X}" y="{MT + ph + 18}" text-anchor="middle">{t:g}</text>')
        for right in (False, True):
            if right and not any(s.right for s in self.series):
                continue
            lo, hi = ranges[right]
            xa = ML + pw if right else ML
            for t in nice_ticks(lo, hi):
                if lo <= t <= hi:
                    Y = _f(py(t, right))
                    x2 = xa + 5 if right else xa - 5
                    out.append(f'<line x1="{xa}" y1="{Y}" x2="{x2}" y2="{Y}" stroke="black"/>')
                    anchor, tx = ("start", xa + 8) if right else ("end", xa - 8)
                    out.append(f'<text x="{tx}" y="{Y}" dy="4" text-anchor="{anchor}">{t:g}</text>')
        out.append(f'<text x="{ML + pw / 2:.0f}" y="{H - 15}" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(
            f'<text x="18" y="{MT + ph / 2:.0f}" text-anchor="middle" '
            f'transform="rotate(-90 18 {MT + ph / 2:.0f})">{escape(self.ylabel)}</text>'
        )
        if self.y2label:
            xr = W - 15
            out.append(
                f'<text x="{xr}" y="{MT + ph / 2:.0f}" text-anchor="middle" '
                f'transform="rotate(90 {xr} {MT + ph / 2:.0f})">{escape(self.y2label)}</text>'
            )
        for y, label in self.hlines:
            Y = _f(py(y))
            out.append(
                f'<line x1="{ML}" y1="{Y}" x2="{ML + pw}" y2="{Y}" stroke="gray" stroke-dasharray="2,3"/>'
            )
            out.append(f'<text x="{ML + pw - 4}" y="{Y}" dy="-4" text-anchor="end" fill="gray">{escape(label)}</text>')
        if self.series:
            out.append(
                f'<rect x="{ML + 5}" y="{MT + 5}" width="190" height="{16 * len(self.series) + 4}" '
                'fill="white" stroke="#cccccc"/>'
            )
        for k, s in enumerate(self.series):
            color = COLORS[(k if s.color is None else s.color) % len(COLORS)]
            pts = " ".join(f"{_f(px(x))},{_f(py(y, s.right))}" for x, y in zip(s.xs, s.ys))
            dash = ' stroke-dasharray="6,4"' if s.dashed else ""
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
            ly = MT + 14 + 16 * k
            out.append(
                f'<line x1="{ML + 10}" y1="{ly}" x2="{ML + 34}" y2="{ly}" stroke="{color}" stroke-width="1.5"{dash}/>'
            )
            out.append(f'<text x="{ML + 40}" y="{ly}" dy="4">{escape(s.label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _rows(text: str, header: str) -> list[dict[str, str]]:
    lines = [l for l in text.splitlines() if l.strip() and not l.startswith("#")]
    if not lines or lines[0] != header:
        raise ValueError("CSV header does not match the expected schema")
    cols = header.split(",")
    rows = []
    for l in lines[1:]:
        vals = l.split(",")
        if len(vals) != len(cols):
            raise ValueError(f"malformed row: {l!r}")
        rows.append(dict(zip(cols, vals)))
    return rows


def csr_chart(text: str) -> Chart:
    rows = _rows(text, CSR_TABLE_HEADER)
    if not rows:
        raise ValueError("nothing to plot: no data rows")
    chart = Chart("Cumulative vs pairwise safe CSR", "SIR threshold gamma0 (dB)", "CSR ratio")
    by_alpha: dict[float, list[tuple[float, float]]] = {}
    for r in rows:
        by_alpha.setdefault(float(r["alpha"]), []).append((float(r["gamma0"]), float(r["ratio"])))
    for alpha in sorted(by_alpha):
        pts = sorted(by_alpha[alpha])
        xs = [10 * math.log10(g) for g, _ in pts]
        chart.series.append(Series(f"alpha = {alpha:g}", xs, [v for _, v in pts]))
    return chart


def sweep_chart(text: str) -> Chart:
    _, rows = read_sweep_csv(text)
    if not rows:
        raise ValueError("nothing to plot: no data rows")
    chart = Chart(
        "Spatial reuse and throughput vs link density",
        "offered links per unit area",
        "spatial reuse",
        "throughput per unit area (Mb/s)",
        hlines=[(1.0, "optimal reuse")],
        ymin=0.0,
        ymax=1.3,
    )
    by_mech: dict[str, list[dict[str, str]]] = {}
    for r in rows:
        by_mech.setdefault(r["mechanism"], []).append(r)
    mechs = sorted(by_mech)
    for k, mech in enumerate(mechs):
        pts = sorted(by_mech[mech], key=lambda r: float(r["density"]))
        xs = [float(r["density"]) for r in pts]
        chart.series.append(Series(f"{mech} reuse", xs, [float(r["spatial_reuse"]) for r in pts], color=k))
    for k, mech in enumerate(mechs):
        pts = sorted(by_mech[mech], key=lambda r: float(r["density"]))
        xs = [float(r["density"]) for r in pts]
        ys = [float(r["throughput_per_unit_area"]) / 1e6 for r in pts]
        chart.series.append(Series(f"{mech} throughput", xs, ys, right=True, dashed=True, color=k))
    return chart


def render_csv(text: str) -> str:
    """Pick the chart from the CSV header and render it."""
    header = next((l for l in text.splitlines() if l.strip() and not l.startswith("#")), "")
    if header == CSR_TABLE_HEADER:
        return csr_chart(text).render()
    if header == SWEEP_COLUMNS:
        return sweep_chart(text).render()
    raise ValueError(f"unrecognised CSV schema (header {header!r})")

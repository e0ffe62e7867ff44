"""Deterministic SVG output for the cyclic TSD, the PPD and the speed heat map.

Output is a pure function of the inputs: fixed 6-significant-digit number
formatting, no timestamps, elements emitted in input order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .corridor import CorridorModel
from .diagrams import QUEUE_THRESHOLD_MPH, PixelGrid

SCALES = {
    # low -> mid -> high
    "ppd": ("#2c7bb6", "#ffffbf", "#d7191c"),
    "speed": ("#d7191c", "#ffffbf", "#1a9641"),
}
NO_DATA = "#ffffff"
MARGIN = (70.0, 20.0, 30.0, 45.0)  # left, right, top, bottom


@dataclass(frozen=True)
class RenderSpec:
    width: float = 900.0
    height: float = 600.0
    color_scale: str | None = None
    intersection_labels: bool = True
    two_cycle: bool = True
    threshold_overlay: bool = True
    threshold_mph: float = QUEUE_THRESHOLD_MPH

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("canvas dimensions must be positive")
        if self.color_scale is not None and self.color_scale not in SCALES:
            raise ValueError(f"unknown color scale {self.color_scale!r}; have {sorted(SCALES)}")

    @property
    def plot_box(self):
        left, right, top, bottom = MARGIN
        return left, top, self.width - left - right, self.height - top - bottom


def fmt(v: float) -> str:
    s = f"{float(v):.6g}"
    return "0" if s == "-0" else s


def _milli(v: float) -> int:
    return int(round(float(v) * 1000))


def _fmt_milli(m: int) -> str:
    q, r = divmod(m, 1000)
    return f"{q}.{r:03d}".rstrip("0").rstrip(".")


def _hex(rgb) -> str:
    return "#" + "".join(f"{int(round(c)):02x}" for c in rgb)


def _rgb(h: str):
    return tuple(int(h[i:i + 2], 16) for i in (1, 3, 5))


def scale_color(name: str, t: float) -> str:
    """Piecewise-linear three-stop color at t in [0, 1]."""
    lo, mid, hi = (_rgb(c) for c in SCALES[name])
    t = min(max(float(t), 0.0), 1.0)
    if t <= 0.5:
        a, b, u = lo, mid, t / 0.5
    else:
        a, b, u = mid, hi, (t - 0.5) / 0.5
    return _hex(tuple(p + (q - p) * u for p, q in zip(a, b)))


class _Doc:
    def __init__(self, spec: RenderSpec, title: str | None):
        self.spec = spec
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{fmt(spec.width)}" '
            f'height="{fmt(spec.height)}" viewBox="0 0 {fmt(spec.width)} {fmt(spec.height)}">',
        ]
        self.defs: list = []
        self.title = title

    def add(self, s: str):
        self.parts.append(s)

    def text(self, x, y, s, anchor="middle", size=11):
        self.add(f'<text x="{fmt(x)}" y="{fmt(y)}" font-family="sans-serif" font-size="{size}" '
                 f'text-anchor="{anchor}">{escape(str(s))}</text>')

    def finish(self) -> str:
        if self.title:
            self.text(self.spec.width / 2, 18, self.title, size=13)
        head = self.parts[:2]
        if self.defs:
            head.append("<defs>" + "".join(self.defs) + "</defs>")
        return "\n".join(head + self.parts[2:] + ["</svg>"]) + "\n"


def _nice_step(span: float, target: int = 8) -> float:
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 5, 10):
        if m * mag >= raw:
            return m * mag
    return 10 * mag


def _frame(doc: _Doc, t_span: float, x_span: float, t_label: str, model: CorridorModel, t_step=None):
    left, top, pw, ph = doc.spec.plot_box
    doc.add(f'<rect x="{fmt(left)}" y="{fmt(top)}" width="{fmt(pw)}" height="{fmt(ph)}" '
            f'fill="none" stroke="#000000" stroke-width="1"/>')
    step = t_step or _nice_step(t_span)
    k = 0
    while k * step <= t_span + 1e-9:
        x = left + pw * (k * step) / t_span
        doc.add(f'<line x1="{fmt(x)}" y1="{fmt(top + ph)}" x2="{fmt(x)}" y2="{fmt(top + ph + 4)}" stroke="#000000"/>')
        doc.text(x, top + ph + 16, fmt(k * step))
        k += 1
    doc.text(left + pw / 2, top + ph + 36, t_label)
    doc.text(14, top + ph / 2, "milepost (ft)", size=11)
    for i in model.intersections:
        y = top + ph * (1.0 - min(i.milepost_ft, x_span) / x_span)
        doc.add(f'<line x1="{fmt(left)}" y1="{fmt(y)}" x2="{fmt(left + pw)}" y2="{fmt(y)}" '
                f'stroke="#808080" stroke-width="0.75" stroke-dasharray="4,3"/>')
        if doc.spec.intersection_labels:
            doc.text(left - 4, y + 4, i.name, anchor="end", size=10)


def render_tsd(trajectories, model: CorridorModel, cycle_length: float, spec: RenderSpec | None = None,
               title: str | None = None) -> str:
    """Overlaid cyclic trajectories; with two_cycle the second cycle repeats the first."""
    spec = spec or RenderSpec()
    doc = _Doc(spec, title)
    cycles = 2 if spec.two_cycle else 1
    t_span = cycles * cycle_length
    left, top, pw, ph = spec.plot_box
    _frame(doc, t_span, model.length_ft, "time in cycle (s)", model)
    if spec.two_cycle:
        x = left + pw / 2
        doc.add(f'<line x1="{fmt(x)}" y1="{fmt(top)}" x2="{fmt(x)}" y2="{fmt(top + ph)}" stroke="#000000" stroke-width="0.5"/>')
    # points sit on a 0.001 px grid and later cycles are integer shifts of the
    # first, so the copies are congruent exactly in the written file
    shift = _milli(pw / cycles)
    for tr in trajectories:
        for piece in tr.pieces:
            if len(piece) < 2:
                continue
            xs = [_milli(left + pw * tau / t_span) for tau, _ in piece]
            ys = [_fmt_milli(_milli(top + ph * (1.0 - x / model.length_ft))) for _, x in piece]
            for cyc in range(cycles):
                pts = " ".join(f"{_fmt_milli(x + cyc * shift)},{y}" for x, y in zip(xs, ys))
                doc.add(f'<polyline class="cycle{cyc + 1}" points="{pts}" fill="none" stroke="#1f3a93" '
                        f'stroke-width="0.6" stroke-opacity="0.6"/>')
    return doc.finish()


def _cell_geometry(spec: RenderSpec, n_cols: int, n_rows: int):
    left, top, pw, ph = spec.plot_box
    return left, top, pw / n_cols, ph / n_rows


def pixel_rect(spec: RenderSpec, n_cols: int, n_rows: int, col: int, row_bin: int):
    """(x, y, w, h) of the rect for time column ``col`` and milepost bin ``row_bin``."""
    left, top, cw, ch = _cell_geometry(spec, n_cols, n_rows)
    return left + col * cw, top + (n_rows - 1 - row_bin) * ch, cw, ch


def decode_rect(spec: RenderSpec, n_cols: int, n_rows: int, x: float, y: float):
    """Inverse of pixel_rect: (col, row_bin) from a rect's corner."""
    left, top, cw, ch = _cell_geometry(spec, n_cols, n_rows)
    return int(round((x - left) / cw)), n_rows - 1 - int(round((y - top) / ch))


def render_ppd(grid: PixelGrid, model: CorridorModel, spec: RenderSpec | None = None,
               title: str | None = None) -> str:
    """One rect per non-empty pixel, colored blue-yellow-red by journey count."""
    spec = spec or RenderSpec(color_scale="ppd")
    scale = spec.color_scale or "ppd"
    doc = _Doc(spec, title)
    gs = grid.spec
    cycles = 2 if spec.two_cycle else 1
    n_cols = gs.n_t * cycles
    left, top, pw, ph = spec.plot_box
    doc.add(f'<rect x="{fmt(left)}" y="{fmt(top)}" width="{fmt(pw)}" height="{fmt(ph)}" fill="{NO_DATA}"/>')
    peak = int(grid.counts.max()) if grid.counts.size else 0
    rows, cols = np.nonzero(grid.counts)
    for cyc in range(cycles):
        for tb, xb in zip(rows, cols):
            n = int(grid.counts[tb, xb])
            t = 1.0 if peak <= 1 else (n - 1) / (peak - 1)
            x, y, w, h = pixel_rect(spec, n_cols, gs.n_x, cyc * gs.n_t + int(tb), int(xb))
            doc.add(f'<rect x="{fmt(x)}" y="{fmt(y)}" width="{fmt(w)}" height="{fmt(h)}" '
                    f'fill="{scale_color(scale, t)}" data-count="{n}"/>')
    _frame(doc, cycles * gs.period, gs.n_x * gs.delta_x, "time in cycle (s)", model)
    return doc.finish()


def render_heatmap(grid: PixelGrid, model: CorridorModel, spec: RenderSpec | None = None,
                   title: str | None = None) -> str:
    """Hour x milepost field, red (0 mph) to green (speed limit); queued cells hatched."""
    spec = spec or RenderSpec(color_scale="speed")
    scale = spec.color_scale or "speed"
    doc = _Doc(spec, title)
    gs = grid.spec
    mean = grid.mean
    left, top, pw, ph = spec.plot_box
    doc.add(f'<rect x="{fmt(left)}" y="{fmt(top)}" width="{fmt(pw)}" height="{fmt(ph)}" fill="{NO_DATA}"/>')
    if spec.threshold_overlay:
        doc.defs.append(
            '<pattern id="hatch" patternUnits="userSpaceOnUse" width="4" height="4">'
            '<path d="M0,4 L4,0" stroke="#000000" stroke-width="0.6"/></pattern>'
        )
    rows, cols = np.nonzero(grid.counts)
    for tb, xb in zip(rows, cols):
        s = float(mean[tb, xb])
        x, y, w, h = pixel_rect(spec, gs.n_t, gs.n_x, int(tb), int(xb))
        box = f'x="{fmt(x)}" y="{fmt(y)}" width="{fmt(w)}" height="{fmt(h)}"'
        doc.add(f'<rect {box} fill="{scale_color(scale, s / model.speed_limit_mph)}" data-mean="{fmt(s)}"/>')
        if spec.threshold_overlay and s < spec.threshold_mph:
            doc.add(f'<rect class="queued" {box} fill="url(#hatch)"/>')
    _frame(doc, gs.period / 3600.0, gs.n_x * gs.delta_x, "hour of day", model, t_step=2)
    return doc.finish()


def svg_name(product: str, plan: str, direction: str, zset: str) -> str:
    return f"{product}_{plan}_{direction}_{zset}.svg"

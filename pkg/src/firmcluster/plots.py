"""Static SVG figures written by hand, without a rendering library.

``fitness_vs_dE`` and ``diversity_vs_dE`` draw one polyline per ``p_E`` value
from a grid summary (other grid axes are averaged out). ``pareto_front``
scatters an optimisation archive, marker area growing with the sample count.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np
import pandas as pd

from .errors import ConfigError

PLOT_KINDS = ("fitness_vs_dE", "diversity_vs_dE", "pareto_front")

REQUIRED_COLUMNS = {
    "fitness_vs_dE": ("p_E", "d_E", "avg_fitness"),
    "diversity_vs_dE": ("p_E", "d_E", "diversity"),
    "pareto_front": ("mean_f", "mean_d", "n_samples"),
}

PALETTE = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666")

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 30, 55


class SchemaError(ConfigError):
    """A table lacks the columns a plot kind needs."""


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, n)


class _Canvas:
    def __init__(self, title: str, xlabel: str, ylabel: str):
        self.parts: list[str] = []
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.x0, self.x1, self.y0, self.y1 = 0.0, 1.0, 0.0, 1.0

    def set_range(self, xs, ys):
        xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
        self.x0, self.x1 = _pad(xs.min(), xs.max())
        self.y0, self.y1 = _pad(ys.min(), ys.max())

    def px(self, x) -> float:
        return LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)

    def py(self, y) -> float:
        return HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)

    def axes(self):
        p = self.parts
        xa, xb = LEFT, WIDTH - RIGHT
        ya, yb = HEIGHT - BOTTOM, TOP
        p.append(f'<line class="axis" x1="{xa}" y1="{ya}" x2="{xb}" y2="{ya}" stroke="black"/>')
        p.append(f'<line class="axis" x1="{xa}" y1="{ya}" x2="{xa}" y2="{yb}" stroke="black"/>')
        for t in _ticks(self.x0, self.x1):
            x = self.px(t)
            p.append(f'<line x1="{x:.2f}" y1="{ya}" x2="{x:.2f}" y2="{ya + 5}" stroke="black"/>')
            p.append(f'<text x="{x:.2f}" y="{ya + 18}" text-anchor="middle" font-size="11">{_fmt(t)}</text>')
        for t in _ticks(self.y0, self.y1):
            y = self.py(t)
            p.append(f'<line x1="{xa - 5}" y1="{y:.2f}" x2="{xa}" y2="{y:.2f}" stroke="black"/>')
            p.append(f'<text x="{xa - 8}" y="{y + 4:.2f}" text-anchor="end" font-size="11">{_fmt(t)}</text>')
        p.append(
            f'<text x="{(xa + xb) / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle" font-size="13">{escape(self.xlabel)}</text>'
        )
        cy = (ya + yb) / 2
        p.append(
            f'<text x="18" y="{cy:.1f}" text-anchor="middle" font-size="13" '
            f'transform="rotate(-90 18 {cy:.1f})">{escape(self.ylabel)}</text>'
        )
        p.append(f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(self.title)}</text>')

    def no_data(self):
        self.parts.append(
            f'<text class="no-data" x="{(LEFT + WIDTH - RIGHT) / 2:.1f}" y="{(TOP + HEIGHT - BOTTOM) / 2:.1f}" '
            'text-anchor="middle" font-size="16" fill="#888888">no data</text>'
        )

    def legend(self, title: str, entries):
        x = WIDTH - RIGHT + 15
        self.parts.append(f'<text x="{x}" y="{TOP + 10}" font-size="12">{escape(title)}</text>')
        for i, (label, color) in enumerate(entries):
            y = TOP + 28 + 18 * i
            self.parts.append(f'<rect x="{x}" y="{y - 9}" width="12" height="12" fill="{color}"/>')
            self.parts.append(f'<text x="{x + 18}" y="{y + 1}" font-size="11">{escape(label)}</text>')

    def render(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">\n<rect width="100%" height="100%" fill="white"/>\n'
        )
        return head + "\n".join(self.parts) + "\n</svg>\n"


def _pad(lo: float, hi: float) -> tuple[float, float]:
    if not hi > lo:
        span = abs(lo) * 0.1 or 1.0
        return lo - span, hi + span
    margin = 0.05 * (hi - lo)
    return lo - margin, hi + margin


def _check_columns(table: pd.DataFrame, kind: str):
    if kind not in PLOT_KINDS:
        raise SchemaError(f"kind: unknown plot kind {kind!r}, expected one of {PLOT_KINDS}")
    missing = [c for c in REQUIRED_COLUMNS[kind] if c not in table.columns]
    if missing:
        raise SchemaError(f"table is missing column(s) {missing} required by {kind}")


def _line_plot(table: pd.DataFrame, value: str, ylabel: str, title: str) -> str:
    canvas = _Canvas(title, "distance decay d_E", ylabel)
    data = table[["p_E", "d_E", value]].dropna()
    if data.empty:
        canvas.axes()
        canvas.no_data()
        return canvas.render()
    series = data.groupby(["p_E", "d_E"], sort=True)[value].mean().reset_index()
    canvas.set_range(series["d_E"], series[value])
    canvas.axes()
    entries = []
    for i, (p_e, group) in enumerate(series.groupby("p_E", sort=True)):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{canvas.px(x):.2f},{canvas.py(y):.2f}" for x, y in zip(group["d_E"], group[value]))
        canvas.parts.append(f'<polyline class="series" points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        entries.append((f"p_E={_fmt(p_e)}", color))
    canvas.legend("interaction", entries)
    return canvas.render()


def _pareto_plot(table: pd.DataFrame) -> str:
    canvas = _Canvas("Pareto front", "average fitness", "diversity")
    data = table.dropna(subset=["mean_f", "mean_d", "n_samples"])
    if data.empty:
        canvas.axes()
        canvas.no_data()
        return canvas.render()
    canvas.set_range(data["mean_f"], data["mean_d"])
    canvas.axes()
    color_by = next((c for c in ("p_E", "d_E") if c in data.columns), None)
    colors = ["#1f77b4"] * len(data)
    entries = []
    if color_by is not None:
        vals = data[color_by].to_numpy(dtype=float)
        lo, hi = float(vals.min()), float(vals.max())
        frac = (vals - lo) / (hi - lo) if hi > lo else np.zeros_like(vals)
        colors = [_ramp(f) for f in frac]
        entries = [(f"{color_by}={_fmt(lo)}", _ramp(0.0)), (f"{color_by}={_fmt(hi)}", _ramp(1.0))]
    n_max = max(float(data["n_samples"].max()), 1.0)
    for (f, d, n), color in zip(data[["mean_f", "mean_d", "n_samples"]].itertuples(index=False), colors):
        r = 2.5 + 7.5 * np.sqrt(float(n) / n_max)
        canvas.parts.append(
            f'<circle class="point" cx="{canvas.px(f):.2f}" cy="{canvas.py(d):.2f}" r="{r:.2f}" '
            f'fill="{color}" fill-opacity="0.75" stroke="black" stroke-width="0.5"/>'
        )
    if entries:
        canvas.legend(color_by, entries)
    return canvas.render()


def _ramp(f: float) -> str:
    # blue -> red
    r = int(round(40 + 200 * f))
    b = int(round(220 - 190 * f))
    return f"#{r:02x}50{b:02x}"


def plot_static(table: pd.DataFrame, kind: str, out_path) -> Path:
    """Render ``table`` as an SVG of the given kind and write it to ``out_path``."""
    _check_columns(table, kind)
    if kind == "fitness_vs_dE":
        svg = _line_plot(table, "avg_fitness", "average fitness", "Average fitness vs distance decay")
    elif kind == "diversity_vs_dE":
        svg = _line_plot(table, "diversity", "product diversity", "Diversity vs distance decay")
    else:
        svg = _pareto_plot(table)
    path = Path(out_path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(svg, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path

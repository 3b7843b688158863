"""Small deterministic SVG line plots.

Hand-rolled on purpose: artifacts must be byte-identical across runs, so no
timestamps, no library version strings, fixed float formatting throughout.
"""

from __future__ import annotations

import math
from typing import Sequence

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_MARGIN_LEFT = 78
_MARGIN_RIGHT = 18
_MARGIN_TOP = 42
_MARGIN_BOTTOM = 58


def _nice_step(span: float, target_count: int) -> float:
    raw = span / max(target_count, 1)
    magnitude = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * magnitude:
            return mult * magnitude
    return 10.0 * magnitude


def _linear_ticks(lo: float, hi: float, target_count: int = 6) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi) or lo == hi:
        return [lo]
    step = _nice_step(hi - lo, target_count)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if t == 0 else t)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list[float]:
    lo_exp = math.ceil(math.log10(lo) - 1e-9)
    hi_exp = math.floor(math.log10(hi) + 1e-9)
    exps = list(range(lo_exp, hi_exp + 1))
    stride = max(1, (len(exps) + 9) // 10)
    return [10.0 ** e for e in exps[::stride]]


def _tick_label(value: float) -> str:
    return f"{value:g}"


def line_plot(
    series: Sequence[tuple[Sequence[float], Sequence[float], str]],
    title: str,
    xlabel: str,
    ylabel: str,
    log_x: bool = False,
    log_y: bool = False,
    width: int = 720,
    height: int = 480,
) -> str:
    """Render (x, y, label) series into an SVG document string."""

    def tx(v: float) -> float:
        return math.log10(v) if log_x else v

    def ty(v: float) -> float:
        return math.log10(v) if log_y else v

    points: list[list[tuple[float, float]]] = []
    for xs, ys, _ in series:
        cleaned = []
        for x, y in zip(xs, ys):
            x, y = float(x), float(y)
            if not (math.isfinite(x) and math.isfinite(y)):
                continue
            if (log_x and x <= 0.0) or (log_y and y <= 0.0):
                continue
            cleaned.append((tx(x), ty(y)))
        points.append(cleaned)

    all_pts = [p for run in points for p in run]
    if all_pts:
        x_lo = min(p[0] for p in all_pts)
        x_hi = max(p[0] for p in all_pts)
        y_lo = min(p[1] for p in all_pts)
        y_hi = max(p[1] for p in all_pts)
    else:
        x_lo, x_hi, y_lo, y_hi = 0.0, 1.0, 0.0, 1.0
    if x_lo == x_hi:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_lo == y_hi:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    y_pad = 0.04 * (y_hi - y_lo)
    y_lo -= y_pad
    y_hi += y_pad

    plot_w = width - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = height - _MARGIN_TOP - _MARGIN_BOTTOM

    def px(v: float) -> float:
        return _MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v: float) -> float:
        return _MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * plot_h

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    out.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    out.append(
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15" fill="#222">{_escape(title)}</text>'
    )

    # Axis frame.
    out.append(
        f'<rect x="{_MARGIN_LEFT}" y="{_MARGIN_TOP}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#444" stroke-width="1"/>'
    )

    x_ticks = _log_ticks(10.0 ** x_lo, 10.0 ** x_hi) if log_x else _linear_ticks(x_lo, x_hi)
    for tick in x_ticks:
        v = tx(tick) if log_x else tick
        if not (x_lo - 1e-12 <= v <= x_hi + 1e-12):
            continue
        x = px(v)
        out.append(
            f'<line x1="{x:.2f}" y1="{_MARGIN_TOP}" x2="{x:.2f}" '
            f'y2="{_MARGIN_TOP + plot_h}" stroke="#ddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{x:.2f}" y="{_MARGIN_TOP + plot_h + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11" fill="#333">{_tick_label(tick)}</text>'
        )

    y_ticks = _log_ticks(10.0 ** y_lo, 10.0 ** y_hi) if log_y else _linear_ticks(y_lo, y_hi)
    for tick in y_ticks:
        v = ty(tick) if log_y else tick
        if not (y_lo - 1e-12 <= v <= y_hi + 1e-12):
            continue
        y = py(v)
        out.append(
            f'<line x1="{_MARGIN_LEFT}" y1="{y:.2f}" x2="{_MARGIN_LEFT + plot_w}" '
            f'y2="{y:.2f}" stroke="#ddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_MARGIN_LEFT - 6}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11" fill="#333">{_tick_label(tick)}</text>'
        )

    out.append(
        f'<text x="{_MARGIN_LEFT + plot_w / 2:.1f}" y="{height - 14}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" fill="#222">{_escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="20" y="{_MARGIN_TOP + plot_h / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" fill="#222" '
        f'transform="rotate(-90 20 {_MARGIN_TOP + plot_h / 2:.1f})">{_escape(ylabel)}</text>'
    )

    for idx, ((_, _, label), run) in enumerate(zip(series, points)):
        color = _PALETTE[idx % len(_PALETTE)]
        if run:
            coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in run)
            out.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        legend_y = _MARGIN_TOP + 16 + 16 * idx
        out.append(
            f'<line x1="{_MARGIN_LEFT + 10}" y1="{legend_y - 4}" x2="{_MARGIN_LEFT + 34}" '
            f'y2="{legend_y - 4}" stroke="{color}" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{_MARGIN_LEFT + 40}" y="{legend_y}" font-family="sans-serif" '
            f'font-size="11" fill="#222">{_escape(label)}</text>'
        )

    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")

"""Deterministic CSV and SVG emission for command-line runs.

Everything here is formatting: fixed float precision, sorted keys, no
timestamps — so a rerun with the same config and seed produces byte-identical
files.  The SVG writer is a small hand-rolled line chart (axes, decade ticks,
legend); it exists so runs can be eyeballed without pulling in a plotting
stack.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

__all__ = ["format_float", "write_csv", "write_svg_chart"]

_PALETTE = ("#1f6f8b", "#d1495b", "#66999b", "#edae49", "#574f7d", "#3c6e47")


def format_float(x) -> str:
    """Shortest round-trip decimal form, stable across runs."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_csv(path, header, rows) -> Path:
    """Write rows of numbers (or strings) under a header line."""
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(c if isinstance(c, str) else format_float(c) for c in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        lo_d, hi_d = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        return [10.0**d for d in range(lo_d, hi_d + 1)]
    span = hi - lo
    if span <= 0:
        return [lo]
    step = 10.0 ** math.floor(math.log10(span / 4))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if span / (step * mult) <= 6:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    return [first + i * step for i in range(int((hi - first) / step) + 1)]


def _tick_label(v: float, log: bool) -> str:
    if log:
        return f"1e{int(round(math.log10(v)))}"
    return f"{v:g}"


def write_svg_chart(
    path,
    x,
    series: dict,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    log_x: bool = False,
    log_y: bool = False,
) -> Path:
    """Render named y-series against shared x as a standalone SVG line chart.

    Non-positive values are dropped from log-scaled series rather than
    raising; a series that ends up empty is skipped but keeps its legend slot
    (labelled as empty) so reruns stay byte-identical.
    """
    path = Path(path)
    x = np.asarray(x, dtype=float)
    W, H = 720, 480
    L, R, T, B = 72, 24, 40, 56

    def fin(vals):
        vals = np.asarray(vals, dtype=float)
        ok = np.isfinite(vals)
        return vals, ok

    xs_all, ys_all = [], []
    for vals in series.values():
        vals, ok = fin(vals)
        if log_y:
            ok &= vals > 0
        xi, oki = fin(x)
        if log_x:
            oki &= x > 0
        keep = ok & oki
        xs_all.append(x[keep])
        ys_all.append(vals[keep])
    good_x = np.concatenate([v for v in xs_all if v.size] or [np.array([1.0])])
    good_y = np.concatenate([v for v in ys_all if v.size] or [np.array([1.0])])
    x_lo, x_hi = float(good_x.min()), float(good_x.max())
    y_lo, y_hi = float(good_y.min()), float(good_y.max())
    if x_lo == x_hi:
        x_lo, x_hi = x_lo * 0.9 - 1e-9, x_hi * 1.1 + 1e-9
    if y_lo == y_hi:
        y_lo, y_hi = y_lo * 0.9 - 1e-9, y_hi * 1.1 + 1e-9

    def sx(v):
        t = (math.log10(v) - math.log10(x_lo)) / (math.log10(x_hi) - math.log10(x_lo)) if log_x else (v - x_lo) / (x_hi - x_lo)
        return L + t * (W - L - R)

    def sy(v):
        t = (math.log10(v) - math.log10(y_lo)) / (math.log10(y_hi) - math.log10(y_lo)) if log_y else (v - y_lo) / (y_hi - y_lo)
        return H - B - t * (H - T - B)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{title}</text>',
        f'<rect x="{L}" y="{T}" width="{W - L - R}" height="{H - T - B}" fill="none" stroke="#444"/>',
    ]
    for tv in _ticks(x_lo, x_hi, log_x):
        if x_lo <= tv <= x_hi:
            px = sx(tv)
            parts.append(f'<line x1="{px:.1f}" y1="{H - B}" x2="{px:.1f}" y2="{H - B + 5}" stroke="#444"/>')
            parts.append(
                f'<text x="{px:.1f}" y="{H - B + 18}" text-anchor="middle" font-family="sans-serif" '
                f'font-size="11">{_tick_label(tv, log_x)}</text>'
            )
    for tv in _ticks(y_lo, y_hi, log_y):
        if y_lo <= tv <= y_hi:
            py = sy(tv)
            parts.append(f'<line x1="{L - 5}" y1="{py:.1f}" x2="{L}" y2="{py:.1f}" stroke="#444"/>')
            parts.append(
                f'<text x="{L - 8}" y="{py + 4:.1f}" text-anchor="end" font-family="sans-serif" '
                f'font-size="11">{_tick_label(tv, log_y)}</text>'
            )
    parts.append(
        f'<text x="{(L + W - R) / 2:.1f}" y="{H - 12}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12">{x_label}</text>'
    )
    parts.append(
        f'<text x="18" y="{(T + H - B) / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 18 {(T + H - B) / 2:.1f})">{y_label}</text>'
    )
    for k, (name, vals) in enumerate(series.items()):
        color = _PALETTE[k % len(_PALETTE)]
        vals, ok = fin(vals)
        keep = ok & np.isfinite(x)
        if log_y:
            keep &= vals > 0
        if log_x:
            keep &= x > 0
        pts = " ".join(f"{sx(xv):.2f},{sy(yv):.2f}" for xv, yv in zip(x[keep], vals[keep]))
        if pts:
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        ly = T + 16 + 16 * k
        parts.append(f'<line x1="{W - R - 150}" y1="{ly}" x2="{W - R - 126}" y2="{ly}" stroke="{color}" stroke-width="3"/>')
        parts.append(
            f'<text x="{W - R - 120}" y="{ly + 4}" font-family="sans-serif" font-size="11">'
            f"{name}{'' if pts else ' (empty)'}</text>"
        )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")
    return path

"""Overhead path plots as standalone SVG.

Written by hand so the bytes depend only on the inputs: no fonts, no
timestamps, fixed number formatting.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import EmptyTraces
from .geometry import WaypointPath

WAYPOINT_COLOR = "#d62728"
TRAJECTORY_COLOR = "#1f77b4"
MARGIN = 0.08  # fraction of the data span added on every side
SIZE = 600


def _nice_step(span: float) -> float:
    raw = span / 6
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 5, 10):
        if m * mag >= raw:
            return m * mag
    return 10 * mag


def _f(v: float) -> str:
    return f"{v:.2f}"


def plot_bounds(points: np.ndarray) -> tuple[float, float, float, float]:
    """Square data window around ``points`` with a margin on each side."""
    lo, hi = points.min(axis=0), points.max(axis=0)
    span = max(float((hi - lo).max()), 1.0)
    cx, cy = (lo + hi) / 2
    half = span * (0.5 + MARGIN)
    return cx - half, cy - half, cx + half, cy + half


def path_svg(path: WaypointPath, traces, title: str | None = None) -> str:
    """``traces`` is a list of (N, 2) arrays or objects with ``positions()``."""
    tracks = [np.asarray(t.positions() if hasattr(t, "positions") else t, float) for t in traces]
    tracks = [t for t in tracks if len(t)]
    if not tracks:
        raise EmptyTraces("at least one non-empty trajectory is required")
    wp = path.waypoints
    x0, y0, x1, y1 = plot_bounds(np.vstack([wp, *tracks]))
    pad_l, pad_b, pad_t, pad_r = 60, 50, 30, 20
    W = H = SIZE
    sx = (W - pad_l - pad_r) / (x1 - x0)
    sy = (H - pad_t - pad_b) / (y1 - y0)

    def px(x):
        return pad_l + (x - x0) * sx

    def py(y):
        return H - pad_b - (y - y0) * sy

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
        f'data-bounds="{_f(x0)} {_f(y0)} {_f(x1)} {_f(y1)}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{pad_l}" y="{pad_t}" width="{W - pad_l - pad_r}" height="{H - pad_t - pad_b}" '
        'fill="none" stroke="black" stroke-width="1"/>',
    ]
    step = _nice_step(x1 - x0)
    ticks = []
    for v in np.arange(math.ceil(x0 / step) * step, x1, step):
        ticks.append(f'<line x1="{_f(px(v))}" y1="{H - pad_b}" x2="{_f(px(v))}" y2="{H - pad_b + 5}" stroke="black"/>'
                     f'<text x="{_f(px(v))}" y="{H - pad_b + 18}" font-size="11" text-anchor="middle">{v:g}</text>')
    for v in np.arange(math.ceil(y0 / step) * step, y1, step):
        ticks.append(f'<line x1="{pad_l - 5}" y1="{_f(py(v))}" x2="{pad_l}" y2="{_f(py(v))}" stroke="black"/>'
                     f'<text x="{pad_l - 8}" y="{_f(py(v) + 4)}" font-size="11" text-anchor="end">{v:g}</text>')
    out += ticks
    out.append(f'<text x="{(W + pad_l - pad_r) / 2:.1f}" y="{H - 10}" font-size="12" text-anchor="middle">x (m)</text>')
    out.append(f'<text x="15" y="{(H + pad_t - pad_b) / 2:.1f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 15 {(H + pad_t - pad_b) / 2:.1f})">y (m)</text>')
    if title:
        safe = title.replace("&", "&amp;").replace("<", "&lt;")
        out.append(f'<text x="{W / 2:.1f}" y="20" font-size="14" text-anchor="middle">{safe}</text>')
    for i, t in enumerate(tracks):
        out.append(f'<g class="trajectory" data-trace="{i}" fill="{TRAJECTORY_COLOR}">')
        out += [f'<circle cx="{_f(px(x))}" cy="{_f(py(y))}" r="1.2"/>' for x, y in t]
        out.append("</g>")
    out.append(f'<g class="waypoints" fill="{WAYPOINT_COLOR}">')
    out += [f'<circle cx="{_f(px(x))}" cy="{_f(py(y))}" r="4"/>' for x, y in wp]
    out.append("</g>")
    lx, ly = pad_l + 12, pad_t + 16
    out += [
        '<g class="legend" font-size="12">',
        f'<circle cx="{lx}" cy="{ly}" r="4" fill="{WAYPOINT_COLOR}"/>',
        f'<text x="{lx + 10}" y="{ly + 4}">true waypoints</text>',
        f'<circle cx="{lx}" cy="{ly + 18}" r="3" fill="{TRAJECTORY_COLOR}"/>',
        f'<text x="{lx + 10}" y="{ly + 22}">flown trajectory</text>',
        "</g>",
        "</svg>",
    ]
    return "\n".join(out) + "\n"


def emit_path_plot(path: WaypointPath, traces, output, title: str | None = None) -> Path:
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(path_svg(path, traces, title))
    return out

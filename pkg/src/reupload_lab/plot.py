"""Standalone SVG line plots of result CSVs.

One polyline per group through the per-x mean of a metric, a shaded band
between the per-x minimum and maximum, and optionally the ``bound`` column
drawn as a dashed overlay.  Output depends only on the input rows, so equal
inputs give equal bytes.  Every polyline carries its raw data in
``data-x``/``data-y`` attributes for programmatic checks.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from typing import Iterable

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=150, top=30, bottom=50)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
LOG_FLOOR = 1e-12


class PlotError(ValueError):
    """Rows do not contain what the plot asks for."""


def _num(v) -> str:
    return f"{v:.6g}"


def _series(rows: list[dict], x: str, metric: str) -> list[tuple[float, float, float, float]]:
    """``(x, mean, min, max)`` per distinct x, sorted by x."""
    by_x: dict[float, list[float]] = {}
    for r in rows:
        if r.get(x) is None or r.get(metric) is None:
            continue
        by_x.setdefault(float(r[x]), []).append(float(r[metric]))
    return [(k, sum(v) / len(v), min(v), max(v)) for k, v in sorted(by_x.items())]


def group_rows(rows: list[dict], group_by: Iterable[str]) -> "OrderedDict[str, list[dict]]":
    group_by = list(group_by)
    groups: OrderedDict[str, list[dict]] = OrderedDict()
    keyed = sorted(rows, key=lambda r: tuple(_sort_key(r.get(g)) for g in group_by))
    for r in keyed:
        label = ", ".join(f"{g}={_label(r.get(g))}" for g in group_by) or "all"
        groups.setdefault(label, []).append(r)
    return groups


def _sort_key(v):
    return (0, v) if isinstance(v, (int, float)) else (1, str(v))


def _label(v) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def render_svg(rows: list[dict], metric: str, x: str = "L", group_by: Iterable[str] = ("P",),
               log_y: bool = False, bound: bool | None = None, title: str | None = None) -> str:
    """SVG text plotting ``metric`` against ``x`` for each group.

    ``bound=None`` overlays the ``bound`` column whenever it has values.
    """
    group_by = list(group_by)
    if not rows:
        raise PlotError("no rows to plot")
    columns = set().union(*(r.keys() for r in rows))
    missing = [c for c in [x, metric, *group_by] if c not in columns]
    if missing:
        raise PlotError(f"missing columns: {', '.join(missing)}")
    groups = group_rows(rows, group_by)
    series = {g: _series(rs, x, metric) for g, rs in groups.items()}
    series = {g: s for g, s in series.items() if s}
    if not series:
        raise PlotError(f"column {metric!r} has no values")
    if bound is None:
        bound = "bound" in columns and any(r.get("bound") is not None for r in rows)
    bounds = {g: _series(groups[g], x, "bound") for g in series} if bound else {}

    xs = [p[0] for s in series.values() for p in s]
    ys = [v for s in series.values() for p in s for v in p[1:]]
    ys += [p[1] for s in bounds.values() for p in s]
    tx, ty = _scales(xs, ys, log_y)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    out += _axes(xs, ys, tx, ty, x, metric, log_y)
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle">{_esc(title)}</text>')
    for i, (g, s) in enumerate(series.items()):
        color = COLORS[i % len(COLORS)]
        upper = [(tx(p[0]), ty(p[3])) for p in s]
        lower = [(tx(p[0]), ty(p[2])) for p in reversed(s)]
        if len(s) > 1:
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in upper + lower)
            out.append(f'<polygon class="band" points="{pts}" fill="{color}" fill-opacity="0.15" stroke="none"/>')
        else:
            px = upper[0][0]
            out.append(f'<line class="band" x1="{px:.2f}" y1="{upper[0][1]:.2f}" x2="{px:.2f}" '
                       f'y2="{lower[0][1]:.2f}" stroke="{color}" stroke-opacity="0.4"/>')
        out.append(_polyline("series", g, s, tx, ty, color, ""))
        for p in s:
            out.append(f'<circle cx="{tx(p[0]):.2f}" cy="{ty(p[1]):.2f}" r="3" fill="{color}"/>')
        if bounds.get(g):
            out.append(_polyline("bound", g, bounds[g], tx, ty, color, ' stroke-dasharray="5,4"'))
        ly = MARGIN["top"] + 16 * i + 10
        lx = WIDTH - MARGIN["right"] + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 24}" y="{ly + 4}">{_esc(g)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _polyline(cls: str, group: str, s, tx, ty, color: str, extra: str) -> str:
    pts = " ".join(f"{tx(p[0]):.2f},{ty(p[1]):.2f}" for p in s)
    dx = " ".join(_num(p[0]) for p in s)
    dy = " ".join(repr(p[1]) for p in s)
    return (f'<polyline class="{cls}" data-group="{_esc(group)}" data-x="{dx}" data-y="{dy}" '
            f'points="{pts}" fill="none" stroke="{color}" stroke-width="2"{extra}/>')


def _scales(xs, ys, log_y):
    x0, x1 = min(xs), max(xs)
    if x0 == x1:
        x0, x1 = x0 - 1, x1 + 1
    if log_y:
        ys = [math.log10(max(v, LOG_FLOOR)) for v in ys]
    y0, y1 = min(ys), max(ys)
    if y0 == y1:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    w = WIDTH - MARGIN["left"] - MARGIN["right"]
    h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def tx(v):
        return MARGIN["left"] + w * (v - x0) / (x1 - x0)

    def ty(v):
        if log_y:
            v = math.log10(max(v, LOG_FLOOR))
        return MARGIN["top"] + h * (1 - (v - y0) / (y1 - y0))

    tx.lo, tx.hi, ty.lo, ty.hi = x0, x1, y0, y1
    return tx, ty


def _axes(xs, ys, tx, ty, xlabel, ylabel, log_y) -> list[str]:
    left, bottom = MARGIN["left"], HEIGHT - MARGIN["bottom"]
    right, top = WIDTH - MARGIN["right"], MARGIN["top"]
    out = [
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
        f'<text x="{(left + right) / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{_esc(xlabel)}</text>',
        f'<text x="16" y="{(top + bottom) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(top + bottom) / 2:.1f})">{_esc(ylabel)}{" (log)" if log_y else ""}</text>',
    ]
    for v in sorted(set(xs)):
        px = tx(v)
        out.append(f'<line x1="{px:.2f}" y1="{bottom}" x2="{px:.2f}" y2="{bottom + 4}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{bottom + 18}" text-anchor="middle">{_num(v)}</text>')
    for k in range(5):
        t = ty.lo + (ty.hi - ty.lo) * k / 4
        val = 10**t if log_y else t
        py = top + (bottom - top) * (1 - k / 4)
        out.append(f'<line x1="{left - 4}" y1="{py:.2f}" x2="{left}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 6}" y="{py + 4:.2f}" text-anchor="end">{_num(val)}</text>')
    return out


def _esc(s: str) -> str:
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")

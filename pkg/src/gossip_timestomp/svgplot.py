"""Age-versus-n line charts written straight to SVG.

Simulated aggregates are drawn as solid lines with markers, exact solver
values as dashed overlays. Output is a pure function of the input rows.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .experiment import AGGREGATE, SIM_FIELDS, SOLVE_FIELDS

COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f")
WIDTH, HEIGHT = 960, 600
LEFT, RIGHT, TOP, BOTTOM = 80, 300, 50, 70


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class Series:
    label: str
    points: tuple  # sorted (n, age) pairs
    kind: str  # "sim" or "exact"


def read_rows(path: str) -> tuple:
    """Return ``(kind, rows)`` for a simulate or solve CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    if not lines:
        raise SchemaError(f"{path}: empty file")
    reader = csv.reader(lines)
    header = tuple(next(reader))
    if header == SIM_FIELDS:
        kind = "sim"
    elif header == SOLVE_FIELDS:
        kind = "exact"
    else:
        raise SchemaError(f"{path}: unrecognised header {','.join(header)}")
    rows = [dict(zip(header, row)) for row in reader if row]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    if any(len(row) != len(header) for row in rows):
        raise SchemaError(f"{path}: ragged rows")
    return kind, rows


def _number(row, key):
    raw = row.get(key, "")
    if raw == "":
        return None
    try:
        return float(raw)
    except ValueError:
        raise SchemaError(f"column {key}: not a number: {raw!r}") from None


def _group_label(row):
    label = row["scenario"]
    if row.get("p"):
        label += f" p={float(row['p']):g}"
        if row.get("q") and row["q"] != row["p"]:
            label += f" q={float(row['q']):g}"
    return label


def collect_series(tables: list) -> list:
    """Turn ``(kind, rows)`` tables into labelled series, deterministically ordered."""
    buckets: dict = {}
    for kind, rows in tables:
        if kind == "sim":
            roles = (("v1", "v1_hat"), ("vn", "vn_hat"), ("vA", "vA_hat"))
            rows = [r for r in rows if _number(r, "replication") == AGGREGATE]
        else:
            roles = (("v1", "v1"), ("vn", "vn"), ("vA", "vA"))
        for row in rows:
            group = _group_label(row)
            n = _number(row, "n")
            if n is None:
                raise SchemaError("row without n")
            for role, column in roles:
                value = _number(row, column)
                if value is None:
                    continue
                buckets.setdefault((kind, group, role), {})[n] = value
                if kind == "sim" and role == "vA":
                    buckets.setdefault((kind, group, "vA/4"), {})[n] = value / 4
    series = []
    for (kind, group, role), points in sorted(buckets.items()):
        suffix = "" if kind == "sim" else " (exact)"
        series.append(Series(f"{group} {role}{suffix}", tuple(sorted(points.items())), kind))
    return series


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _ticks(lo: float, hi: float, count: int = 6) -> list:
    raw = (hi - lo) / max(count - 1, 1)
    mag = 10 ** math.floor(math.log10(raw)) if raw > 0 else 1.0
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step) * step
    ticks = []
    value = start
    while value <= hi + step * 1e-9:
        ticks.append(round(value, 10))
        value += step
    return ticks


def render_svg(series: list, title: str = "Age of information versus network size") -> str:
    if not series:
        raise SchemaError("nothing to plot")
    xs = [x for s in series for x, _ in s.points]
    ys = [y for s in series for _, y in s.points]
    log_x = min(xs) > 0 and max(xs) / min(xs) >= 8
    fx = math.log2 if log_x else float
    x_lo, x_hi = fx(min(xs)), fx(max(xs))
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1, x_hi + 1
    y_ticks = _ticks(0.0, max(ys) * 1.05 if max(ys) > 0 else 1.0)
    y_hi = y_ticks[-1]
    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + (fx(x) - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return TOP + plot_h - y / y_hi * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{LEFT + plot_w / 2:.1f}" y="28" text-anchor="middle" font-size="18">{_escape(title)}</text>',
    ]
    for y in y_ticks:
        out.append(
            f'<line x1="{LEFT}" y1="{py(y):.2f}" x2="{LEFT + plot_w}" y2="{py(y):.2f}" stroke="#e0e0e0"/>'
        )
        out.append(
            f'<text x="{LEFT - 8}" y="{py(y) + 4:.2f}" text-anchor="end" font-size="12">{y:g}</text>'
        )
    for x in sorted(set(xs)):
        out.append(
            f'<line x1="{px(x):.2f}" y1="{TOP + plot_h}" x2="{px(x):.2f}" y2="{TOP + plot_h + 5}" stroke="#000000"/>'
        )
        out.append(
            f'<text x="{px(x):.2f}" y="{TOP + plot_h + 20}" text-anchor="middle" font-size="12">{x:g}</text>'
        )
    out.append(f'<line x1="{LEFT}" y1="{TOP + plot_h}" x2="{LEFT + plot_w}" y2="{TOP + plot_h}" stroke="#000000"/>')
    out.append(f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + plot_h}" stroke="#000000"/>')
    x_label = "n (log scale)" if log_x else "n"
    out.append(
        f'<text x="{LEFT + plot_w / 2:.1f}" y="{HEIGHT - 20}" text-anchor="middle" font-size="14">{x_label}</text>'
    )
    mid = TOP + plot_h / 2
    out.append(
        f'<text x="22" y="{mid:.1f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 22 {mid:.1f})">average age</text>'
    )

    for idx, s in enumerate(series):
        color = COLORS[idx % len(COLORS)]
        dash = ' stroke-dasharray="6 4"' if s.kind == "exact" else ""
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in s.points)
        out.append(
            f'<polyline class="series {s.kind}" data-label="{_escape(s.label)}" fill="none" '
            f'stroke="{color}" stroke-width="2"{dash} points="{pts}"/>'
        )
        if s.kind == "sim":
            for x, y in s.points:
                out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>')
        ly = TOP + 10 + idx * 20
        lx = LEFT + plot_w + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}" font-size="12">{_escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

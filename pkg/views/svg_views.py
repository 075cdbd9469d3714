"""
SVG line charts for per-round curves.
One polyline per series, axes with ticks, a legend, and the plotted values
embedded in <metadata> to 6 significant digits.
"""

import html
import json
import logging
from pathlib import Path

from labels import get_label

logger = logging.getLogger(__name__)

COLORS = [
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#ff7f0e",
    "#9467bd",
    "#8c564b",
]

WIDTH, HEIGHT = 1024, 640
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 90, 280, 70, 100
TICKS = 6


def _escape(text: str) -> str:
    return html.escape(str(text), quote=True)


def _format_tick(value: float) -> str:
    if abs(value) >= 100:
        return f"{value:.0f}"
    if abs(value) >= 10:
        return f"{value:.1f}"
    return f"{value:.2f}"


def render_curves_svg(curves: dict, path, title: str = "", x_label: str = "t", y_label: str = "") -> Path:
    """
    Write a standalone SVG 1.1 line chart.

    Args:
        curves: series label -> (rounds, values), all series of equal length
        path: Output file
        title: Chart title
        x_label: Horizontal axis label
        y_label: Vertical axis label

    Returns:
        The written path
    """
    if not curves:
        raise ValueError("no series to plot")
    lengths = {len(values) for _, values in curves.values()}
    if len(lengths) != 1 or 0 in lengths:
        raise ValueError(f"series must be nonempty and of equal length, got lengths {sorted(lengths)}")
    for label, (ts, values) in curves.items():
        if len(ts) != len(values):
            raise ValueError(f"series {label!r} has {len(ts)} rounds but {len(values)} values")

    plot_left, plot_right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    plot_top, plot_bottom = MARGIN_TOP, HEIGHT - MARGIN_BOTTOM
    plot_width, plot_height = plot_right - plot_left, plot_bottom - plot_top

    xs = [float(x) for ts, _ in curves.values() for x in ts]
    ys = [float(y) for _, values in curves.values() for y in values]
    x_min, x_max = min(xs), max(xs)
    y_min, y_max = min(min(ys), 0.0), max(ys)
    if x_max <= x_min:
        x_min, x_max = x_min - 1.0, x_max + 1.0
    if y_max <= y_min:
        y_max = y_min + 1.0
    y_max = y_min + (y_max - y_min) * 1.10

    def x_to_px(x: float) -> float:
        return plot_left + ((x - x_min) / (x_max - x_min)) * plot_width

    def y_to_px(y: float) -> float:
        return plot_bottom - ((y - y_min) / (y_max - y_min)) * plot_height

    metadata = {
        label: {"t": [int(t) for t in ts], "value": [float(f"{v:.6g}") for v in values]}
        for label, (ts, values) in curves.items()
    }

    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    lines.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">'
    )
    lines.append(f"<metadata>{_escape(json.dumps(metadata, sort_keys=True))}</metadata>")
    lines.append('<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>')
    lines.append(
        f'<text x="{WIDTH / 2:.1f}" y="36" text-anchor="middle" font-size="24" font-family="Arial">{_escape(title)}</text>'
    )

    # Grid and ticks
    for i in range(TICKS + 1):
        y_value = y_min + (y_max - y_min) * i / TICKS
        y = y_to_px(y_value)
        lines.append(f'<line x1="{plot_left}" y1="{y:.2f}" x2="{plot_right}" y2="{y:.2f}" stroke="#d9d9d9" stroke-width="1"/>')
        lines.append(
            f'<text x="{plot_left - 10}" y="{y + 5:.2f}" text-anchor="end" font-size="13" font-family="Arial">{_format_tick(y_value)}</text>'
        )
        x_value = x_min + (x_max - x_min) * i / TICKS
        x = x_to_px(x_value)
        lines.append(f'<line x1="{x:.2f}" y1="{plot_bottom}" x2="{x:.2f}" y2="{plot_bottom + 6}" stroke="#000000" stroke-width="1"/>')
        lines.append(
            f'<text x="{x:.2f}" y="{plot_bottom + 28}" text-anchor="middle" font-size="13" font-family="Arial">{x_value:.0f}</text>'
        )

    # Axes
    lines.append(f'<line x1="{plot_left}" y1="{plot_bottom}" x2="{plot_right}" y2="{plot_bottom}" stroke="#000000" stroke-width="2"/>')
    lines.append(f'<line x1="{plot_left}" y1="{plot_top}" x2="{plot_left}" y2="{plot_bottom}" stroke="#000000" stroke-width="2"/>')

    # Series and legend
    legend_x, legend_y = plot_right + 22, plot_top + 22
    for idx, (label, (ts, values)) in enumerate(curves.items()):
        color = COLORS[idx % len(COLORS)]
        points = " ".join(f"{x_to_px(float(t)):.2f},{y_to_px(float(v)):.2f}" for t, v in zip(ts, values))
        lines.append(
            f'<polyline class="series" data-label="{_escape(label)}" fill="none" stroke="{color}" '
            f'stroke-width="2" points="{points}"/>'
        )
        ly = legend_y + idx * 28
        lines.append(f'<line x1="{legend_x}" y1="{ly}" x2="{legend_x + 26}" y2="{ly}" stroke="{color}" stroke-width="3"/>')
        lines.append(
            f'<text class="legend" x="{legend_x + 34}" y="{ly + 5}" text-anchor="start" font-size="14" '
            f'font-family="Arial">{_escape(get_label("methods", label))}</text>'
        )

    mid_y = (plot_top + plot_bottom) / 2
    lines.append(
        f'<text x="{(plot_left + plot_right) / 2:.1f}" y="{HEIGHT - 25}" text-anchor="middle" font-size="16" font-family="Arial">{_escape(x_label)}</text>'
    )
    lines.append(
        f'<text x="28" y="{mid_y:.1f}" text-anchor="middle" font-size="16" font-family="Arial" '
        f'transform="rotate(-90 28 {mid_y:.1f})">{_escape(y_label)}</text>'
    )
    lines.append("</svg>")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"📊 Wrote {len(curves)} series to {path}")
    return path

"""Minimal SVG line plots of experiment grids.

The SVG text is built by hand so the output is byte-identical for identical
input (no timestamps, fixed number formatting).
"""
import numpy as np

__all__ = ["emit_svg", "line_plot_svg"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 60, 160, 30, 50


def _esc(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def line_plot_svg(series, xlabel, ylabel, title=""):
    """SVG text for ``{label: [(x, y), ...]}`` drawn as polylines with a legend."""
    pts = [p for s in series.values() for p in s if np.isfinite(p[1])]
    if pts:
        xs, ys = zip(*pts)
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(0.0, min(ys)), max(ys)
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def sx(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        out.append(f'<text x="{sx(xv):.2f}" y="{TOP + ph + 16}" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{LEFT - 6}" y="{sy(yv) + 4:.2f}" text-anchor="end">{yv:.3g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{H - 12}" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {TOP + ph / 2:.2f})">{_esc(ylabel)}</text>')
    if title:
        out.append(f'<text x="{LEFT + pw / 2:.2f}" y="18" text-anchor="middle">{_esc(title)}</text>')
    for i, (label, s) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        s = [p for p in s if np.isfinite(p[1])]
        if s:
            coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in s)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = TOP + 14 + 18 * i
        out.append(f'<line x1="{W - RIGHT + 12}" y1="{ly - 4}" x2="{W - RIGHT + 36}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{W - RIGHT + 42}" y="{ly}">{_esc(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(grid, path, plot_kind="threshold", metric="mean_dist_supp"):
    """Write a threshold curve (phase transition) or a metric-vs-k plot.

    ``plot_kind="threshold"``: largest k with >= 95% success against m / n.
    ``plot_kind="metric"``: the cell aggregate `metric` against k.
    """
    series = {}
    if plot_kind == "threshold":
        for (m, algo), k in sorted(grid.thresholds.items()):
            n = next(r["n"] for r in grid.rows if r["m"] == m)
            series.setdefault(algo, []).append((m / n, k / m))
        text = line_plot_svg(series, "m / n", "k / m at 95% success", "phase transition")
    elif plot_kind == "metric":
        for (m, k, algo), cell in grid.cells.items():
            series.setdefault(algo, []).append((k, cell[metric]))
        for s in series.values():
            s.sort()
        text = line_plot_svg(series, "k", metric, grid.kind)
    else:
        raise ValueError(f"unknown plot kind {plot_kind!r}")
    with open(path, "w") as fh:
        fh.write(text)

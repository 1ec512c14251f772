"""Self-contained SVG line charts for sweep and rate reports.

No plotting dependency: charts are assembled as plain SVG text so the CLI
can drop a viewable artifact next to each CSV. Output is deterministic for
identical input series.
"""

from __future__ import annotations

from dataclasses import dataclass

PALETTE = [
    "#1b6ca8", "#d1495b", "#3c8d53", "#8d6a9f", "#c77d2e",
    "#4f6d7a", "#a23e8c", "#6b6b2a", "#2a9d8f", "#7f4f24",
]


@dataclass
class Series:
    name: str
    points: list  # (x, y) pairs
    dashed: bool = False


def _ticks(lo: float, hi: float, count: int = 5) -> list:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def line_chart(
    series: list,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    width: int = 720,
    height: int = 440,
) -> str:
    """Render line series into one standalone SVG document."""
    pts = [(x, y) for s in series for x, y in s.points]
    if not pts:
        raise ValueError("nothing to plot")
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad_y = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad_y, y_hi + pad_y

    left, right, top, bottom = 64, 16, 40, 48
    plot_w = width - left - right
    plot_h = height - top - bottom

    def sx(x):
        return left + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y):
        return top + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#444" stroke-width="1"/>',
    ]
    for tx in _ticks(x_lo, x_hi):
        px = sx(tx)
        out.append(f'<line x1="{px:.1f}" y1="{top + plot_h}" x2="{px:.1f}" '
                   f'y2="{top + plot_h + 5}" stroke="#444"/>')
        out.append(f'<text x="{px:.1f}" y="{top + plot_h + 18}" '
                   f'text-anchor="middle">{_fmt(tx)}</text>')
    for ty in _ticks(y_lo, y_hi):
        py = sy(ty)
        out.append(f'<line x1="{left - 5}" y1="{py:.1f}" x2="{left}" y2="{py:.1f}" stroke="#444"/>')
        out.append(f'<text x="{left - 8}" y="{py + 4:.1f}" text-anchor="end">{_fmt(ty)}</text>')
        out.append(f'<line x1="{left}" y1="{py:.1f}" x2="{left + plot_w}" y2="{py:.1f}" '
                   f'stroke="#ddd" stroke-width="0.5"/>')
    out.append(f'<text x="{left + plot_w / 2:.1f}" y="{height - 8}" '
               f'text-anchor="middle">{x_label}</text>')
    out.append(f'<text x="16" y="{top + plot_h / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + plot_h / 2:.1f})">{y_label}</text>')

    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in s.points)
        dash = ' stroke-dasharray="6 4"' if s.dashed else ""
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                   f'stroke-width="1.8"{dash}/>')
        for x, y in s.points:
            out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.2" fill="{color}"/>')

    legend_y = top + 14
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        dash = ' stroke-dasharray="6 4"' if s.dashed else ""
        ly = legend_y + i * 16
        out.append(f'<line x1="{left + plot_w - 150}" y1="{ly}" x2="{left + plot_w - 126}" '
                   f'y2="{ly}" stroke="{color}" stroke-width="1.8"{dash}/>')
        out.append(f'<text x="{left + plot_w - 120}" y="{ly + 4}">{s.name}</text>')

    out.append("</svg>")
    return "\n".join(out)

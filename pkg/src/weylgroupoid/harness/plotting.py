"""A small SVG line-plot writer (log-log axes), so no plotting package is needed."""
from __future__ import annotations

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=80, right=150, top=40, bottom=60)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _log_ticks(lo: float, hi: float):
    return [10.0**k for k in range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1)]


def render_svg(x, series: dict, title: str = "", xlabel: str = "hbar", ylabel: str = "value") -> str:
    """Log-log plot of each positive series against x. Non-positive points are skipped."""
    pts = {k: [(a, b) for a, b in zip(x, ys) if a > 0 and b is not None and b != "" and float(b) > 0]
           for k, ys in series.items()}
    xs = [a for v in pts.values() for a, _ in v]
    ys = [float(b) for v in pts.values() for _, b in v]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>']
    if not xs:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT / 2:.1f}" text-anchor="middle">no positive data</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"
    xt, yt = _log_ticks(min(xs), max(xs)), _log_ticks(min(ys), max(ys))
    lx0, lx1 = math.log10(xt[0]), math.log10(xt[-1])
    ly0, ly1 = math.log10(yt[0]), math.log10(yt[-1])
    lx1 = lx1 if lx1 > lx0 else lx0 + 1
    ly1 = ly1 if ly1 > ly0 else ly0 + 1

    def sx(v):
        return MARGIN["left"] + pw * (math.log10(v) - lx0) / (lx1 - lx0)

    def sy(v):
        return MARGIN["top"] + ph * (1 - (math.log10(v) - ly0) / (ly1 - ly0))

    x0, y0 = MARGIN["left"], MARGIN["top"] + ph
    out.append(f'<rect x="{x0}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in xt:
        out.append(f'<line x1="{sx(t):.1f}" y1="{y0}" x2="{sx(t):.1f}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.1f}" y="{y0 + 20}" text-anchor="middle">{t:g}</text>')
    for t in yt:
        out.append(f'<line x1="{x0 - 5}" y1="{sy(t):.1f}" x2="{x0}" y2="{sy(t):.1f}" stroke="black"/>')
        out.append(f'<text x="{x0 - 8}" y="{sy(t) + 4:.1f}" text-anchor="end">{t:.0e}</text>')
    out.append(f'<text x="{x0 + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {MARGIN["top"] + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (name, data) in enumerate(pts.items()):
        c = COLORS[i % len(COLORS)]
        if data:
            path = " ".join(f"{sx(a):.1f},{sy(float(b)):.1f}" for a, b in sorted(data))
            out.append(f'<polyline points="{path}" fill="none" stroke="{c}" stroke-width="2"/>')
            for a, b in data:
                out.append(f'<circle cx="{sx(a):.1f}" cy="{sy(float(b)):.1f}" r="3" fill="{c}"/>')
        ly = MARGIN["top"] + 15 + 18 * i
        out.append(f'<line x1="{x0 + pw + 10}" y1="{ly}" x2="{x0 + pw + 30}" y2="{ly}" stroke="{c}" stroke-width="2"/>')
        out.append(f'<text x="{x0 + pw + 35}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg_plot(path, x, series: dict, title: str = "", xlabel: str = "hbar", ylabel: str = "value"):
    Path(path).write_text(render_svg(x, series, title, xlabel, ylabel))


def plot_records(records_csv, out_dir) -> list:
    """One defect plot per (example, f, g) found in a records CSV; returns written paths."""
    groups = {}
    with open(records_csv, newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                h = float(row["hbar"])
            except ValueError:
                continue  # fit summary rows
            key = (row["example"], row["f_id"], row["g_id"])
            groups.setdefault(key, []).append((h, row["dirac_defect"], row["vn_defect"]))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for (ex, f, g), rows in sorted(groups.items()):
        rows.sort()
        p = out / f"defects_{ex}_{f}_{g}.svg"
        write_svg_plot(p, [r[0] for r in rows],
                       {"dirac": [float(r[1]) if r[1] else None for r in rows],
                        "von Neumann": [float(r[2]) if r[2] else None for r in rows]},
                       title=f"{ex}: {f}, {g}", ylabel="defect")
        written.append(p)
    return written

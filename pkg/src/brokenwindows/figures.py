"""CSV tables and chart files for the RQ1 and RQ2 results.

SVG output is written by hand so that it is byte-for-byte reproducible and
structurally predictable (one ``<rect>`` per heatmap cell).  PNG output goes
through matplotlib.
"""

import csv
import math
from pathlib import Path
from typing import List, Optional, Sequence
from xml.sax.saxutils import escape

from .analysis import HeatmapCell, Rq1Summary

FORMATS = ("csv", "svg", "png")
RQ1_COLUMNS = ["metric_id", "lag", "pct_files", "n_files", "n_eligible"]
RQ2_COLUMNS = ["group_metric", "test_metric", "pct_developers", "n_developers", "n_significant"]

# stable categorical palette
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79")
EMPTY_FILL = "url(#empty)"


def _pct(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6f}"


def write_rq1_csv(rows: Sequence[Rq1Summary], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RQ1_COLUMNS)
        for r in rows:
            w.writerow([r.metric_id, r.lag, _pct(r.pct_files), r.n_files, r.n_eligible])
    return path


def write_rq2_csv(cells: Sequence[HeatmapCell], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RQ2_COLUMNS)
        for c in cells:
            w.writerow([c.group_metric, c.test_metric, _pct(c.pct_developers),
                        c.n_developers, c.n_significant])
    return path


def read_rq1_csv(path) -> List[Rq1Summary]:
    with open(path, newline="") as fh:
        return [Rq1Summary(r["metric_id"], int(r["lag"]),
                           float(r["pct_files"]) if r["pct_files"] else None,
                           int(r["n_files"]), int(r["n_eligible"]))
                for r in csv.DictReader(fh)]


def read_rq2_csv(path) -> List[HeatmapCell]:
    with open(path, newline="") as fh:
        return [HeatmapCell(r["group_metric"], r["test_metric"],
                            float(r["pct_developers"]) if r["pct_developers"] else None,
                            int(r["n_developers"]), int(r["n_significant"]))
                for r in csv.DictReader(fh)]


def _ordered(values):
    seen = []
    for v in values:
        if v not in seen:
            seen.append(v)
    return seen


def _heat_color(pct: float) -> str:
    # white -> dark red
    t = max(0.0, min(1.0, pct / 100.0))
    r = round(255 - t * (255 - 165))
    g = round(255 - t * 255)
    b = round(255 - t * 255)
    return f"#{r:02x}{g:02x}{b:02x}"


def rq1_svg(rows: Sequence[Rq1Summary], width: int = 720, height: int = 440) -> str:
    """Line chart of pct_files against lag, one polyline per metric."""
    left, right, top, bottom = 60, 110, 20, 50
    pw, ph = width - left - right, height - top - bottom
    metrics = _ordered(r.metric_id for r in rows)
    max_lag = max((r.lag for r in rows), default=1)

    def x(lag):
        return left + (lag - 1) / max(max_lag - 1, 1) * pw

    def y(pct):
        return top + ph - pct / 100.0 * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">']
    out.append(f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>')
    for pct in range(0, 101, 20):
        out.append(f'<text x="{left - 6}" y="{y(pct) + 4:.2f}" text-anchor="end">{pct}</text>')
    step = max(1, int(math.ceil(max_lag / 10)))
    for lag in range(1, max_lag + 1, step):
        out.append(f'<text x="{x(lag):.2f}" y="{top + ph + 16}" text-anchor="middle">{lag}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" text-anchor="middle">lag</text>')
    out.append(f'<text x="14" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {top + ph / 2:.2f})">% files with significant ACF</text>')

    for i, metric in enumerate(metrics):
        color = PALETTE[i % len(PALETTE)]
        mrows = [r for r in rows if r.metric_id == metric]
        out.append(f'<g class="series" data-metric="{escape(metric)}" stroke="{color}" fill="{color}">')
        segment = []
        for r in mrows + [None]:
            if r is not None and r.pct_files is not None:
                segment.append(f"{x(r.lag):.2f},{y(r.pct_files):.2f}")
                continue
            if segment:
                out.append(f'<polyline fill="none" points="{" ".join(segment)}"/>')
                segment = []
        for r in mrows:
            if r.pct_files is None:
                out.append(f'<circle class="empty" cx="{x(r.lag):.2f}" cy="{y(0):.2f}" r="2" '
                           f'fill="none" data-lag="{r.lag}" data-pct=""/>')
            else:
                out.append(f'<circle cx="{x(r.lag):.2f}" cy="{y(r.pct_files):.2f}" r="1.5" '
                           f'data-lag="{r.lag}" data-pct="{_pct(r.pct_files)}"/>')
        out.append("</g>")
        ly = top + 14 * i + 6
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" stroke="{color}"/>')
        out.append(f'<text x="{left + pw + 34}" y="{ly + 4}">{escape(metric.upper())}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def rq2_svg(cells: Sequence[HeatmapCell], cell_size: int = 40) -> str:
    """Heatmap: rows are grouping metrics, columns tested metrics."""
    groups = _ordered(c.group_metric for c in cells)
    tests = _ordered(c.test_metric for c in cells)
    left, top = 50, 20
    width = left + cell_size * len(tests) + 20
    height = top + cell_size * len(groups) + 50
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           '<defs><pattern id="empty" width="6" height="6" patternUnits="userSpaceOnUse">'
           '<path d="M0,6 L6,0" stroke="#999999" stroke-width="1"/></pattern></defs>']
    index = {(c.group_metric, c.test_metric): c for c in cells}
    for gi, g in enumerate(groups):
        for ti, t in enumerate(tests):
            c = index.get((g, t))
            px, py = left + ti * cell_size, top + gi * cell_size
            if c is None or c.pct_developers is None:
                fill, label, data = EMPTY_FILL, "", ""
            else:
                fill = _heat_color(c.pct_developers)
                label = f"{c.pct_developers:.0f}"
                data = _pct(c.pct_developers)
            n = c.n_developers if c else 0
            out.append(f'<rect x="{px}" y="{py}" width="{cell_size}" height="{cell_size}" '
                       f'fill="{fill}" stroke="white" data-group="{escape(g)}" data-test="{escape(t)}" '
                       f'data-pct="{data}" data-n="{n}"/>')
            if label:
                out.append(f'<text x="{px + cell_size / 2:.1f}" y="{py + cell_size / 2 + 4:.1f}" '
                           f'text-anchor="middle">{label}</text>')
    for gi, g in enumerate(groups):
        out.append(f'<text x="{left - 6}" y="{top + gi * cell_size + cell_size / 2 + 4:.1f}" '
                   f'text-anchor="end">{escape(g.upper())}</text>')
    for ti, t in enumerate(tests):
        out.append(f'<text x="{left + ti * cell_size + cell_size / 2:.1f}" '
                   f'y="{top + len(groups) * cell_size + 16}" text-anchor="middle">{escape(t.upper())}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def rq1_png(rows: Sequence[Rq1Summary], path) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.2, 4.4))
    for i, metric in enumerate(_ordered(r.metric_id for r in rows)):
        pts = [(r.lag, r.pct_files) for r in rows if r.metric_id == metric]
        lags = [p[0] for p in pts]
        vals = [math.nan if p[1] is None else p[1] for p in pts]
        ax.plot(lags, vals, label=metric.upper(), color=PALETTE[i % len(PALETTE)], lw=1.2)
    ax.set_xlabel("lag")
    ax.set_ylabel("% files with significant autocorrelation")
    ax.set_ylim(0, 100)
    if rows:
        ax.legend(loc="upper right", fontsize=8, ncol=2, frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return Path(path)


def rq2_png(cells: Sequence[HeatmapCell], path) -> Path:
    import numpy as np
    plt = _pyplot()
    groups = _ordered(c.group_metric for c in cells)
    tests = _ordered(c.test_metric for c in cells)
    grid = np.full((len(groups), len(tests)), np.nan)
    for c in cells:
        if c.pct_developers is not None:
            grid[groups.index(c.group_metric), tests.index(c.test_metric)] = c.pct_developers
    fig, ax = plt.subplots(figsize=(6.4, 5.6))
    cmap = plt.get_cmap("Reds").copy()
    cmap.set_bad("#dddddd")
    if grid.size:
        im = ax.imshow(np.ma.masked_invalid(grid), cmap=cmap, vmin=0, vmax=100, origin="upper")
    else:
        # nothing to draw, but keep the colour scale so the figure still reads
        im = plt.cm.ScalarMappable(norm=plt.Normalize(0, 100), cmap=cmap)
    ax.set_xticks(range(len(tests)), [t.upper() for t in tests])
    ax.set_yticks(range(len(groups)), [g.upper() for g in groups])
    ax.set_xlabel("tested metric")
    ax.set_ylabel("grouping metric")
    for gi in range(len(groups)):
        for ti in range(len(tests)):
            if not math.isnan(grid[gi, ti]):
                ax.text(ti, gi, f"{grid[gi, ti]:.0f}", ha="center", va="center", fontsize=7)
    fig.colorbar(im, ax=ax, label="% developers")
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return Path(path)


STEMS = {"rq1": "rq1_acf", "rq2": "rq2_heatmap"}
_WRITERS = {
    "rq1": {"csv": write_rq1_csv, "png": rq1_png},
    "rq2": {"csv": write_rq2_csv, "png": rq2_png},
}
_SVG = {"rq1": rq1_svg, "rq2": rq2_svg}


def emit_figures(table, out_dir, kind: str, formats: Sequence[str] = ("csv", "svg")) -> List[Path]:
    """Write an RQ1 (``kind="rq1"``) or RQ2 table as ``rq1_acf.<fmt>`` etc."""
    if kind not in STEMS:
        raise ValueError(f"unknown table kind: {kind}")
    unknown = [f for f in formats if f not in FORMATS]
    if unknown:
        raise ValueError(f"unknown figure format(s): {', '.join(unknown)}")
    table = list(table)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        target = out_dir / f"{STEMS[kind]}.{fmt}"
        if fmt == "svg":
            target.write_text(_SVG[kind](table))
        else:
            _WRITERS[kind][fmt](table, target)
        written.append(target)
    return written

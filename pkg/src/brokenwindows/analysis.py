"""Autocorrelation of metric histories and developer behaviour by file quality."""

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .miner import METRIC_IDS, Timeline
from .stats import (
    MetricSeries, autocorrelation_test, bh_adjust, empirical_quantile, ks_two_sample,
)

log = logging.getLogger(__name__)

BH_SCOPES = ("cell", "global")


@dataclass(frozen=True)
class Rq1Summary:
    metric_id: str
    lag: int
    pct_files: Optional[float]   # None when no file was eligible
    n_files: int                 # files significant at this lag
    n_eligible: int


@dataclass(frozen=True)
class HeatmapCell:
    group_metric: str
    test_metric: str
    pct_developers: Optional[float]   # None when no developer qualified
    n_developers: int                 # developers tested
    n_significant: int


def metric_series(timelines: Iterable[Timeline], metrics: Sequence[str] = METRIC_IDS) -> Dict[str, List[MetricSeries]]:
    out = {m: [] for m in metrics}
    for tl in timelines:
        for m in metrics:
            out[m].append(MetricSeries(tl.repo, tl.path, m, tl.series(m)))
    return out


def is_eligible(values: np.ndarray, min_commits: int) -> bool:
    """More than ``min_commits`` revisions and not constant."""
    return values.size > min_commits and values.size >= 3 and not np.all(values == values[0])


def rq1_series(series_by_metric: Dict[str, Sequence[MetricSeries]], max_lag: int = 50,
               threshold: float = 0.5, alpha: float = 0.05, min_commits: int = 50) -> List[Rq1Summary]:
    """Share of eligible files with a significant autocorrelation above ``threshold``.

    A file counts at lag k when rho_k > threshold and the Ljung-Box
    p-value over lags 1..k is below ``alpha``.  Short eligible series are
    tested up to lag ``n - 2`` only.
    """
    rows = []
    for metric, series in series_by_metric.items():
        counts = np.zeros(max_lag, dtype=int)
        eligible = 0
        for s in series:
            x = np.asarray(s.values, dtype=float)
            if not is_eligible(x, min_commits):
                continue
            eligible += 1
            lags = min(max_lag, x.size - 2)
            res = autocorrelation_test(x, lags)
            counts[:lags] += (res.rho > threshold) & (res.p_value < alpha)
        for k in range(max_lag):
            pct = float(100.0 * counts[k] / eligible) if eligible else None
            rows.append(Rq1Summary(metric, k + 1, pct, int(counts[k]), eligible))
    return rows


def rq1(timelines: Iterable[Timeline], max_lag: int = 50, threshold: float = 0.5,
        alpha: float = 0.05, min_commits: int = 50,
        metrics: Sequence[str] = METRIC_IDS) -> List[Rq1Summary]:
    return rq1_series(metric_series(timelines, metrics), max_lag, threshold, alpha, min_commits)


def _developer(email: str) -> str:
    return email.strip().lower()


def group_files(first_values: np.ndarray, q_low: float, q_high: float):
    """Indices of bottom and top files by first-commit value.

    Bottom files have a value at or below the ``q_low`` quantile, top files
    at or above ``q_high``; a file that would be both (ties at a degenerate
    quantile) is left out of either group.
    """
    lo = empirical_quantile(first_values, q_low)
    hi = empirical_quantile(first_values, q_high)
    bottom = first_values <= lo
    top = first_values >= hi
    both = bottom & top
    return np.flatnonzero(bottom & ~both), np.flatnonzero(top & ~both)


class _Project:
    """Per-project arrays: first values, commit deltas and their authors."""

    def __init__(self, timelines: List[Timeline], metrics: Sequence[str]):
        self.firsts = np.array([[tl.series(m)[0] for m in metrics] for tl in timelines])
        self.deltas = []
        self.authors = []
        for tl in timelines:
            values = np.column_stack([tl.series(m) for m in metrics])
            self.deltas.append(np.diff(values, axis=0))
            self.authors.append([_developer(c) for c in tl.committers[1:]])

    def samples(self, files: np.ndarray) -> Dict[str, np.ndarray]:
        """Delta rows per developer over the given files."""
        rows = defaultdict(list)
        for f in files:
            for author, delta in zip(self.authors[f], self.deltas[f]):
                rows[author].append(delta)
        return {a: np.array(r) for a, r in rows.items()}


def rq2(timelines: Iterable[Timeline], q_low: float = 0.25, q_high: float = 0.75,
        min_dev_commits: int = 10, alpha: float = 0.05, bh_scope: str = "cell",
        metrics: Sequence[str] = METRIC_IDS) -> List[HeatmapCell]:
    """Percentage of developers committing differently to top vs bottom files.

    For every project and grouping metric, files are split by the quantiles
    of their first-revision value.  Each developer's commit deltas (value at
    a revision minus the previous one) in top files are compared with those
    in bottom files by a two-sample KS test, for every tested metric, when
    both samples have at least ``min_dev_commits`` entries.  P-values are
    BH-adjusted within each cell (``bh_scope="cell"``) or across all tests.
    """
    if bh_scope not in BH_SCOPES:
        raise ValueError(f"bh_scope must be one of {BH_SCOPES}")
    if not q_low < q_high:
        raise ValueError("q_low must be below q_high")

    by_repo = defaultdict(list)
    for tl in timelines:
        if len(tl):
            by_repo[tl.repo].append(tl)

    nm = len(metrics)
    pvals = [[[] for _ in range(nm)] for _ in range(nm)]
    for repo in sorted(by_repo):
        project = _Project(sorted(by_repo[repo], key=lambda t: t.path), metrics)
        for g in range(nm):
            bottom, top = group_files(project.firsts[:, g], q_low, q_high)
            top_samples = project.samples(top)
            bottom_samples = project.samples(bottom)
            for dev in sorted(set(top_samples) & set(bottom_samples)):
                xt, xb = top_samples[dev], bottom_samples[dev]
                if len(xt) < min_dev_commits or len(xb) < min_dev_commits:
                    continue
                for t in range(nm):
                    pvals[g][t].append(ks_two_sample(xt[:, t], xb[:, t])[1])

    adjusted = [[None] * nm for _ in range(nm)]
    if bh_scope == "global":
        flat = [p for row in pvals for cell in row for p in cell]
        adj = bh_adjust(flat)
        pos = 0
        for g in range(nm):
            for t in range(nm):
                k = len(pvals[g][t])
                adjusted[g][t] = adj[pos:pos + k]
                pos += k
    else:
        for g in range(nm):
            for t in range(nm):
                adjusted[g][t] = bh_adjust(pvals[g][t])

    cells = []
    for g in range(nm):
        for t in range(nm):
            adj = adjusted[g][t]
            n = len(adj)
            sig = int(np.sum(adj < alpha)) if n else 0
            pct = 100.0 * sig / n if n else None
            cells.append(HeatmapCell(metrics[g], metrics[t], pct, n, sig))
    return cells

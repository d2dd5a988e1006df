"""Per-file metric timelines mined from a repository's first-parent history."""

import logging
import os
import subprocess
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .errors import ConfigurationError, InputError, MiningError
from .metrics import COUNT_FIELDS, METRIC_FIELDS, SourceMetrics, analyze
from .style import N_RULES, STYLE_COLUMNS, StyleCounts

log = logging.getLogger(__name__)

RECORD_COLUMNS = ["repo", "path", "commit", "committer", "timestamp"]
TIMELINE_COLUMNS = RECORD_COLUMNS + METRIC_FIELDS + STYLE_COLUMNS
CACHE_SCHEMA = "v1"
NULL_BLOB = "0" * 40

# the eleven analysed quality metrics -> SourceMetrics attribute
METRIC_IDS = ("cd", "cs", "fn", "fs", "gd", "il", "ll", "ln", "qd", "si", "sn")
METRIC_ATTRS = {m: m for m in METRIC_IDS}
METRIC_ATTRS.update(fn="n_functions", ln="n_lines")


class Revision(NamedTuple):
    commit: str
    committer: str
    timestamp: int
    blob: str = ""


@dataclass(frozen=True)
class RevisionRecord:
    repo: str
    path: str
    commit: str
    committer: str
    timestamp: int
    metrics: SourceMetrics
    style: StyleCounts

    def row(self) -> list:
        return ([self.repo, self.path, self.commit, self.committer, self.timestamp]
                + self.metrics.values() + self.style.columns())


@dataclass
class Timeline:
    repo: str
    path: str
    records: List[RevisionRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def series(self, metric_id: str) -> np.ndarray:
        attr = METRIC_ATTRS.get(metric_id, metric_id)
        return np.array([getattr(r.metrics, attr) for r in self.records], dtype=float)

    @property
    def committers(self) -> List[str]:
        return [r.committer for r in self.records]


@dataclass
class MiningStats:
    records: int = 0
    timelines: int = 0
    skipped: int = 0
    cache_hits: int = 0
    computed: int = 0
    lines: int = 0
    unbalanced_revisions: int = 0
    seconds: float = 0.0

    @property
    def lines_per_second(self) -> float:
        return self.lines / self.seconds if self.seconds > 0 else 0.0


@dataclass
class MiningResult:
    repo: str
    timelines: List[Timeline]
    stats: MiningStats
    skipped: List[Tuple[str, str, str]]   # (path, commit, reason)


def _git(repo: str, *args: str, binary: bool = False):
    try:
        proc = subprocess.run(
            ["git", "-C", repo, *args], capture_output=True, check=False)
    except OSError as exc:
        raise ConfigurationError(f"cannot run git: {exc}") from exc
    if proc.returncode != 0:
        err = proc.stderr.decode("utf-8", "replace").strip()
        raise MiningError(f"git {args[0]} failed in {repo}: {err}")
    return proc.stdout if binary else proc.stdout.decode("utf-8", "surrogateescape")


def check_repository(repo_path) -> str:
    repo = str(repo_path)
    if not os.path.isdir(repo):
        raise ConfigurationError(f"no such repository: {repo}")
    try:
        _git(repo, "rev-parse", "--git-dir")
    except MiningError as exc:
        raise ConfigurationError(f"not a git repository: {repo}") from exc
    return repo


def _has_commits(repo: str) -> bool:
    proc = subprocess.run(["git", "-C", repo, "rev-parse", "--verify", "-q", "HEAD"],
                          capture_output=True)
    return proc.returncode == 0


def list_revisions(repo_path, file_path: str) -> List[Revision]:
    """First-parent revisions of ``file_path`` on HEAD, oldest first.

    Each entry carries the blob id the revision leaves at the path (all
    zeros when the commit deletes the file).
    """
    repo = check_repository(repo_path)
    if not _has_commits(repo):
        return []
    out = _git(repo, "log", "--first-parent", "--reverse", "--no-renames",
               "--raw", "--no-abbrev", "--format=%x00%H|%ce|%ct", "--", file_path)
    revisions = []
    for chunk in out.split("\x00")[1:]:
        lines = chunk.strip("\n").split("\n")
        commit, committer, stamp = lines[0].split("|", 2)
        blob = ""
        for raw in lines[1:]:
            if raw.startswith(":"):
                meta, _, path = raw.partition("\t")
                if path == file_path:
                    blob = meta.split()[3]
        revisions.append(Revision(commit, committer, int(stamp), blob))
    return revisions


def list_paths(repo_path, extensions: Sequence[str] = (".c",)) -> List[str]:
    """Every path with a matching extension ever touched on the first-parent chain."""
    repo = check_repository(repo_path)
    if not _has_commits(repo):
        return []
    out = _git(repo, "log", "--first-parent", "--no-renames", "--format=",
               "--name-only", "-z")
    exts = tuple(extensions)
    return sorted({p for p in out.replace("\n", "\x00").split("\x00") if p and p.endswith(exts)})


def show_blob(repo_path, commit: str, path: str) -> bytes:
    return _git(str(repo_path), "show", f"{commit}:{path}", binary=True)


class BlobCache:
    """Analysis results keyed by blob hash, one small file per blob."""

    def __init__(self, directory):
        self.root = Path(directory) / CACHE_SCHEMA
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, blob: str) -> Path:
        return self.root / blob[:2] / blob[2:]

    def get(self, blob: str):
        try:
            text = self._path(blob).read_text()
        except FileNotFoundError:
            return None
        fields_ = text.rstrip("\n").split("\t")
        if len(fields_) != len(METRIC_FIELDS) + 2 * N_RULES + 1:
            return None
        metrics, style = _parse_metric_fields(fields_[:-1])
        return metrics, style, int(fields_[-1])

    def put(self, blob: str, metrics: SourceMetrics, style: StyleCounts, unbalanced: int):
        target = self._path(blob)
        target.parent.mkdir(exist_ok=True)
        line = "\t".join(_fmt(v) for v in metrics.values() + style.columns() + [unbalanced])
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=".tmp")
        with os.fdopen(fd, "w") as fh:
            fh.write(line + "\n")
        os.replace(tmp, target)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_metric_fields(values: Sequence[str]) -> Tuple[SourceMetrics, StyleCounts]:
    nm = len(METRIC_FIELDS)
    kwargs = {}
    for name, raw in zip(METRIC_FIELDS, values[:nm]):
        kwargs[name] = int(raw) if name in COUNT_FIELDS else float(raw)
    ints = [int(v) for v in values[nm:nm + 2 * N_RULES]]
    style = StyleCounts.from_pairs(list(zip(ints[0::2], ints[1::2])))
    return SourceMetrics(**kwargs), style


class _PathResult(NamedTuple):
    path: str
    records: list
    skipped: list
    cache_hits: int
    computed: int
    lines: int
    unbalanced: int


def _mine_path(repo: str, repo_name: str, path: str, cache_dir: Optional[str]) -> _PathResult:
    cache = BlobCache(cache_dir) if cache_dir else None
    records, skipped = [], []
    hits = computed = lines = unbalanced_revisions = 0
    for rev in list_revisions(repo, path):
        if rev.blob == NULL_BLOB:
            skipped.append((path, rev.commit, "deleted"))
            continue
        cached = cache.get(rev.blob) if cache and rev.blob else None
        if cached is not None:
            metrics, style, unbalanced = cached
            hits += 1
        else:
            try:
                content = show_blob(repo, rev.commit, path)
            except MiningError as exc:
                skipped.append((path, rev.commit, f"unreadable: {exc}"))
                continue
            if b"\x00" in content:
                skipped.append((path, rev.commit, "binary"))
                continue
            metrics, style, unbalanced = analyze(content)
            computed += 1
            if cache and rev.blob:
                cache.put(rev.blob, metrics, style, unbalanced)
        if unbalanced:
            unbalanced_revisions += 1
        lines += metrics.n_lines
        records.append(RevisionRecord(repo_name, path, rev.commit, rev.committer,
                                      rev.timestamp, metrics, style))
    return _PathResult(path, records, skipped, hits, computed, lines, unbalanced_revisions)


def _mine_path_star(args):
    return _mine_path(*args)


def mine_repository(repo_path, extensions: Sequence[str] = (".c",), jobs: int = 1,
                    cache_dir=None, repo_name: Optional[str] = None) -> MiningResult:
    """Mine one timeline per matching path.

    Paths are mined concurrently (``jobs`` processes); results are
    reassembled in path order so the output does not depend on ``jobs``.
    With a ``cache_dir`` every analysed blob is stored, which also serves
    as the checkpoint when a run is interrupted and repeated.
    """
    if jobs < 1:
        raise ConfigurationError("jobs must be at least 1")
    repo = check_repository(repo_path)
    name = repo_name or Path(repo).resolve().name
    cache = str(cache_dir) if cache_dir else None

    t0 = time.perf_counter()
    paths = list_paths(repo, extensions)
    work = [(repo, name, p, cache) for p in paths]
    if jobs == 1 or len(work) <= 1:
        results = [_mine_path_star(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_mine_path_star, work, chunksize=1))
    elapsed = time.perf_counter() - t0

    stats = MiningStats(seconds=elapsed)
    timelines, skipped = [], []
    for res in sorted(results, key=lambda r: r.path):
        skipped.extend(res.skipped)
        stats.cache_hits += res.cache_hits
        stats.computed += res.computed
        stats.lines += res.lines
        stats.unbalanced_revisions += res.unbalanced
        if res.records:
            timelines.append(Timeline(name, res.path, res.records))
            stats.records += len(res.records)
    stats.timelines = len(timelines)
    stats.skipped = len(skipped)
    for path, commit, reason in skipped:
        log.info("skipped %s@%s: %s", path, commit[:12], reason)
    log.info("%s: %d timelines, %d records, %.0f lines/s", name, stats.timelines,
             stats.records, stats.lines_per_second)
    return MiningResult(name, timelines, stats, skipped)


def write_timelines(timelines: Iterable[Timeline], out_path) -> Path:
    """Write one TSV, rows sorted by (path, commit order), atomically."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=out_path.parent, prefix=".tmp")
    with os.fdopen(fd, "w", newline="\n") as fh:
        fh.write("\t".join(TIMELINE_COLUMNS) + "\n")
        for tl in sorted(timelines, key=lambda t: (t.repo, t.path)):
            for rec in tl.records:
                fh.write("\t".join(_fmt(v) for v in rec.row()) + "\n")
    os.replace(tmp, out_path)
    return out_path


def read_timelines(path) -> List[Timeline]:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header != TIMELINE_COLUMNS:
            raise InputError(f"{path}: not a timeline file (unexpected header)")
        timelines: Dict[Tuple[str, str], Timeline] = {}
        for lineno, raw in enumerate(fh, start=2):
            cols = raw.rstrip("\n").split("\t")
            if len(cols) != len(TIMELINE_COLUMNS):
                raise InputError(f"{path}:{lineno}: expected {len(TIMELINE_COLUMNS)} fields")
            repo, fpath, commit, committer, stamp = cols[:5]
            metrics, style = _parse_metric_fields(cols[5:])
            key = (repo, fpath)
            tl = timelines.get(key)
            if tl is None:
                tl = timelines[key] = Timeline(repo, fpath)
            tl.records.append(RevisionRecord(repo, fpath, commit, committer,
                                             int(stamp), metrics, style))
    return list(timelines.values())


def write_manifest(result: MiningResult, out_path, options: Dict[str, object]) -> Path:
    """Run metadata as ``key=value`` lines."""
    s = result.stats
    items = [("tool_version", __version__), ("repo", result.repo)]
    items += sorted(options.items())
    items += [("timelines", s.timelines), ("records", s.records), ("skipped", s.skipped),
              ("cache_hits", s.cache_hits), ("computed", s.computed), ("lines", s.lines),
              ("unbalanced_revisions", s.unbalanced_revisions), ("seconds", f"{s.seconds:.3f}"),
              ("lines_per_second", f"{s.lines_per_second:.0f}")]
    out_path = Path(out_path)
    out_path.write_text("".join(f"{k}={v}\n" for k, v in items))
    return out_path

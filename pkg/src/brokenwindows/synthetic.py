"""Seeded synthetic timelines and fixture repositories.

Used by the tests, the ``synth`` command and the mining benchmark.  All
generators take an explicit seed and are deterministic.
"""

import hashlib
import subprocess
from pathlib import Path
from typing import List, Sequence

import numpy as np

from .metrics import COUNT_FIELDS, SourceMetrics
from .miner import METRIC_ATTRS, METRIC_IDS, RevisionRecord, Timeline
from .style import StyleCounts

_EMPTY_STYLE = StyleCounts.empty()
_BASE_TIME = 1_300_000_000


def _fake_hash(*parts) -> str:
    return hashlib.sha1("/".join(map(str, parts)).encode()).hexdigest()


def _metrics(values: dict) -> SourceMetrics:
    kwargs = {}
    for m, v in values.items():
        attr = METRIC_ATTRS[m]
        kwargs[attr] = int(v) if attr in COUNT_FIELDS else float(v)
    return SourceMetrics(**kwargs)


def _count_metric(m: str) -> bool:
    return METRIC_ATTRS[m] in COUNT_FIELDS


def ar1(n: int, phi: float, rng: np.random.Generator, burn_in: int = 100) -> np.ndarray:
    e = rng.standard_normal(n + burn_in)
    x = np.empty(n + burn_in)
    x[0] = e[0]
    for t in range(1, n + burn_in):
        x[t] = phi * x[t - 1] + e[t]
    return x[burn_in:]


def timeline_from_columns(repo: str, path: str, columns: dict, committers: Sequence[str],
                          start_time: int = _BASE_TIME) -> Timeline:
    n = len(committers)
    records = []
    for k in range(n):
        values = {m: col[k] for m, col in columns.items()}
        records.append(RevisionRecord(repo, path, _fake_hash(repo, path, k), committers[k],
                                      start_time + 3600 * k, _metrics(values), _EMPTY_STYLE))
    return Timeline(repo, path, records)


def rq1_corpus(seed: int = 0, n_ar: int = 40, n_noise: int = 60, length: int = 200,
               phi: float = 0.9, metrics: Sequence[str] = METRIC_IDS,
               repo: str = "synthetic-rq1") -> List[Timeline]:
    """``n_ar`` AR(1) files followed by ``n_noise`` white-noise files.

    Every metric of a file gets its own independent draw; count metrics are
    scaled and rounded so they stay integral.
    """
    rng = np.random.default_rng(seed)
    timelines = []
    for f in range(n_ar + n_noise):
        columns = {}
        for m in metrics:
            x = ar1(length, phi, rng) if f < n_ar else rng.standard_normal(length)
            columns[m] = np.round(100 + 10 * x) if _count_metric(m) else 50 + 5 * x
        committers = ["dev@example.org"] * length
        timelines.append(timeline_from_columns(repo, f"src/file{f:03d}.c", columns, committers))
    return timelines


def rq2_project(seed: int = 0, group_metric: str = "si", test_metric: str = "cd",
                n_files: int = 40, n_sensitive: int = 10, n_null: int = 10,
                commits_per_dev: int = 120, shift: float = 5.0, noise: float = 1.0,
                repo: str = "synthetic-rq2", metrics: Sequence[str] = METRIC_IDS) -> List[Timeline]:
    """One project with a planted behaviour difference in a single heatmap cell.

    First-revision values are independent across files and metrics.  Every
    developer commits to uniformly random files.  Sensitive developers add
    ``N(shift, noise)`` to ``test_metric`` on files in the top quartile of
    ``group_metric``; every other delta is ``N(0, noise)`` (integer steps for
    count metrics).  The quartiles of every other metric contain the same
    number of planted top files, so only the planted cell differs.
    """
    from .analysis import group_files

    rng = np.random.default_rng(seed)

    def draw(m):
        return rng.integers(1, 1000, n_files).astype(float) if _count_metric(m) else rng.uniform(0, 100, n_files)

    first = {group_metric: draw(group_metric)}
    top = np.zeros(n_files, dtype=bool)
    top[group_files(first[group_metric], 0.25, 0.75)[1]] = True
    # Other groupings must not see the planted effect through chance overlap
    # with the planted top files, so their quartiles are redrawn until top
    # and bottom hold equally many of them.
    for m in metrics:
        if m == group_metric:
            continue
        for _ in range(10_000):
            values = draw(m)
            bottom_m, top_m = group_files(values, 0.25, 0.75)
            if top[bottom_m].sum() == top[top_m].sum():
                break
        else:
            raise RuntimeError(f"could not balance {m} against {group_metric}")
        first[m] = values

    devs = [f"sensitive{k}@example.org" for k in range(n_sensitive)]
    devs += [f"null{k}@example.org" for k in range(n_null)]
    commits = [(d, int(rng.integers(n_files))) for d in devs for _ in range(commits_per_dev)]
    order = rng.permutation(len(commits))

    columns = {f: {m: [first[m][f]] for m in metrics} for f in range(n_files)}
    authors = {f: ["founder@example.org"] for f in range(n_files)}
    for idx in order:
        dev, f = commits[idx]
        for m in metrics:
            if _count_metric(m):
                step = float(np.round(noise * rng.standard_normal() * 3))
            else:
                step = noise * rng.standard_normal()
                if m == test_metric and top[f] and dev.startswith("sensitive"):
                    step += shift
            columns[f][m].append(columns[f][m][-1] + step)
        authors[f].append(dev)

    return [timeline_from_columns(repo, f"src/file{f:03d}.c", columns[f], authors[f])
            for f in range(n_files)]


# --- fixture git repositories ----------------------------------------------

def _c_function(rng: np.random.Generator, name: str, spaced: bool) -> List[str]:
    sp = " " if spaced else ""
    k = int(rng.integers(1, 100))
    lines = [
        f"static int {name}(int a,{sp}int b)",
        "{",
        f"\tint x{sp}={sp}a{sp}+{sp}b;",
        "\tint i;",
        "",
        f"\tif{sp}(x{sp}>{sp}{k}){sp}{{",
        f"\t\tx{sp}-={sp}{k};\t/* TODO: tune {k} */",
        "\t}",
        f"\tfor{sp}(i{sp}={sp}0;{sp}i{sp}<{sp}b;{sp}i++)",
        f"\t\tx{sp}+={sp}i{sp}*{sp}{k % 7 + 1};",
        "\treturn x;",
        "}",
        "",
    ]
    return lines


def c_source(rng: np.random.Generator, n_lines: int, tag: str) -> bytes:
    """Plausible C text of about ``n_lines`` lines."""
    out = [f"/* {tag} */", "#include <stdio.h>", "#define SQUARE(x) ((x) * (x))", ""]
    k = 0
    while len(out) < n_lines:
        out.extend(_c_function(rng, f"fn_{k}", bool(rng.random() < 0.8)))
        k += 1
    return ("\n".join(out[:n_lines]) + "\n").encode()


def make_fixture_repo(path, n_files: int = 3, n_revisions: int = 5, lines_per_file: int = 60,
                      seed: int = 0, authors: Sequence[str] = ("alice@example.org", "bob@example.org"),
                      touch_fraction: float = 1.0) -> Path:
    """Create a git repository with a linear history via ``git fast-import``.

    Every commit rewrites a random subset (``touch_fraction``) of the C files;
    the first commit adds all of them.
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    subprocess.run(["git", "init", "-q", str(path)], check=True)
    rng = np.random.default_rng(seed)
    chunks = []
    for rev in range(n_revisions):
        author = authors[rev % len(authors)]
        when = _BASE_TIME + 86400 * rev
        msg = f"revision {rev}\n".encode()
        head = (f"commit refs/heads/main\nmark :{rev + 1}\n"
                f"committer {author.split('@')[0]} <{author}> {when} +0000\n"
                f"data {len(msg)}\n").encode() + msg
        if rev:
            head += f"from :{rev}\n".encode()
        chunks.append(head)
        for f in range(n_files):
            if rev and rng.random() >= touch_fraction:
                continue
            body = c_source(rng, lines_per_file, f"file {f} revision {rev}")
            chunks.append(f"M 100644 inline src/mod{f:03d}.c\ndata {len(body)}\n".encode() + body + b"\n")
    stream = b"".join(chunks)
    subprocess.run(["git", "-C", str(path), "fast-import", "--quiet"], input=stream, check=True)
    subprocess.run(["git", "-C", str(path), "symbolic-ref", "HEAD", "refs/heads/main"], check=True)
    return path

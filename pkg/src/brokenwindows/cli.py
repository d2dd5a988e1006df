"""Command-line entry point: measure, mine, rq1, rq2, plan, replicate, synth.

Any long option may also be given in a ``--config`` file of ``key = value``
lines (``#`` starts a comment; keys use the option name with dashes or
underscores).  Command-line flags override the file.
"""

import argparse
import datetime as dt
import glob
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

from . import __version__
from .errors import BrokenWindowsError, ConfigurationError, InputError, UsageError

log = logging.getLogger("brokenwindows")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


@dataclass
class RunConfig:
    subcommand: str
    inputs: List[str] = field(default_factory=list)
    out_dir: Optional[str] = None
    max_lag: int = 50
    acf_threshold: float = 0.5
    alpha: float = 0.05
    min_commits: int = 50
    min_dev_commits: int = 10
    quantiles: tuple = (0.25, 0.75)
    jobs: int = 1
    cache_dir: Optional[str] = None
    seed: int = 0

    def validate(self):
        if not 0.0 < self.alpha < 1.0:
            raise UsageError("alpha must be in (0, 1)")
        lo, hi = self.quantiles
        if not 0.0 <= lo < hi <= 1.0:
            raise UsageError("quantiles must satisfy 0 <= low < high <= 1")
        if self.jobs < 1:
            raise UsageError("jobs must be at least 1")
        if self.max_lag < 1:
            raise UsageError("max-lag must be at least 1")
        if self.min_commits < 0 or self.min_dev_commits < 1:
            raise UsageError("commit thresholds must be positive")
        return self


def _quantiles(text: str):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected two comma-separated fractions, e.g. 0.25,0.75")
    return lo, hi


def _formats(text: str):
    from .figures import FORMATS
    out = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in out if f not in FORMATS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s) {', '.join(bad)}; choose from {', '.join(FORMATS)}")
    return out


def _add_rq1_options(p):
    p.add_argument("--max-lag", type=int, default=50, help="largest lag tested (default: %(default)s)")
    p.add_argument("--threshold", type=float, default=0.5,
                   help="autocorrelation a file must exceed (default: %(default)s)")
    p.add_argument("--alpha", type=float, default=0.05, help="Ljung-Box significance level (default: %(default)s)")
    p.add_argument("--min-commits", type=int, default=50,
                   help="files need more than this many revisions (default: %(default)s)")


def _add_rq2_options(p, alpha=True):
    p.add_argument("--quantiles", type=_quantiles, default="0.25,0.75",
                   help="bottom and top quantiles of first-revision values (default: %(default)s)")
    p.add_argument("--min-dev-commits", type=int, default=10,
                   help="commits a developer needs in both top and bottom files (default: %(default)s)")
    if alpha:
        p.add_argument("--alpha", type=float, default=0.05,
                       help="significance level after BH adjustment (default: %(default)s)")
    p.add_argument("--bh-scope", choices=("cell", "global"), default="cell",
                   help="adjust p-values within each heatmap cell or across all cells (default: %(default)s)")


def _add_figure_option(p):
    p.add_argument("--format", type=_formats, default="csv,svg,png", dest="formats",
                   help="comma-separated outputs among csv, svg, png (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brokenwindows",
        description="Measure C code quality across git history and test broken-windows hypotheses.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", metavar="FILE", help="key = value file supplying option defaults")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging on standard error")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("measure", help="metrics of one C source read from standard input or a file")
    p.add_argument("file", nargs="?", help="C file (default: standard input)")
    p.add_argument("--header", action="store_true", help="print the column header first")

    p = sub.add_parser("mine", help="per-file metric timelines of one repository")
    p.add_argument("--repo", required=True, help="git work tree or bare repository")
    p.add_argument("--ext", action="append", dest="extensions", metavar="EXT",
                   help="file extension to mine, repeatable (default: .c)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default: %(default)s)")
    p.add_argument("--cache-dir", help="blob-keyed result cache, also the resume checkpoint")
    p.add_argument("--out", default=".", help="output directory (default: %(default)s)")
    p.add_argument("--name", help="repository name used in the output (default: directory name)")

    p = sub.add_parser("rq1", help="autocorrelation of metric timelines")
    p.add_argument("--timelines", nargs="+", required=True, metavar="GLOB", help="timeline TSV files")
    p.add_argument("--out", required=True, help="output directory")
    _add_rq1_options(p)
    _add_figure_option(p)

    p = sub.add_parser("rq2", help="developer behaviour in top vs bottom files")
    p.add_argument("--timelines", nargs="+", required=True, metavar="GLOB", help="timeline TSV files")
    p.add_argument("--out", required=True, help="output directory")
    _add_rq2_options(p)
    _add_figure_option(p)

    p = sub.add_parser("plan", help="stratified sampling plan from catalog counts")
    p.add_argument("--language", default="c", help="repository language (default: %(default)s)")
    p.add_argument("--engagement", choices=("stars", "forks"), default="stars")
    p.add_argument("--n", type=int, required=True, dest="n_target", help="total projects to sample")
    p.add_argument("--counts", help="explicit stratum counts 'i:P,...' instead of querying the catalog")
    p.add_argument("--strata", default="1,2,3,4,5", help="stratum indices (default: %(default)s)")
    p.add_argument("--as-of", help="anchor date YYYY-MM-DD for the history window (default: today)")
    p.add_argument("--cache-dir", default=".catalog-cache", help="raw response cache (default: %(default)s)")
    p.add_argument("--offline", action="store_true", help="use cached responses only")

    p = sub.add_parser("replicate", help="mine every listed repository, then run rq1 and rq2")
    p.add_argument("--repos", required=True, help="file with one repository path per line")
    p.add_argument("--out", required=True, help="results directory")
    p.add_argument("--ext", action="append", dest="extensions", metavar="EXT")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--cache-dir", help="result cache (default: OUT/cache)")
    _add_rq1_options(p)
    _add_rq2_options(p, alpha=False)
    _add_figure_option(p)

    p = sub.add_parser("synth", help="write seeded synthetic timelines or a fixture repository")
    p.add_argument("kind", choices=("rq1", "rq2", "repo"))
    p.add_argument("--out", required=True, help="TSV file (rq1, rq2) or repository directory (repo)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--files", type=int, default=3, help="repo: number of C files")
    p.add_argument("--revisions", type=int, default=5, help="repo: number of commits")
    p.add_argument("--lines", type=int, default=60, help="repo: lines per file")
    return parser


def read_config(path) -> dict:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigurationError(f"{path}:{lineno}: expected key = value")
        values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]):
    """Parse ``argv`` with config-file values installed as defaults."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    config = read_config(known.config)
    args = parser.parse_args(argv)
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    by_dest = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in config.items():
        action = by_dest.get(key) or next(
            (a for a in subparser._actions if key in [o.lstrip("-").replace("-", "_") for o in a.option_strings]), None)
        if action is None:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            defaults[action.dest] = value.lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction):
            defaults[action.dest] = [v.strip() for v in value.split(",")]
        else:
            defaults[action.dest] = value
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _expand(patterns: Sequence[str]) -> List[str]:
    files = []
    for pat in patterns:
        matches = sorted(glob.glob(pat))
        files.extend(m for m in matches if Path(m).is_file())
    seen = []
    for f in files:
        if f not in seen:
            seen.append(f)
    return seen


def _load_timelines(patterns):
    from .miner import read_timelines
    files = _expand(patterns)
    if not files:
        raise InputError("no input timelines")
    timelines = []
    for f in files:
        timelines.extend(read_timelines(f))
    if not timelines:
        raise InputError("no input timelines (files contain no records)")
    return timelines


# --- subcommands -------------------------------------------------------------

def cmd_measure(args) -> int:
    from .metrics import METRIC_FIELDS, analyze
    from .style import STYLE_COLUMNS
    if args.file:
        try:
            data = Path(args.file).read_bytes()
        except OSError as exc:
            raise InputError(f"cannot read {args.file}: {exc}") from exc
    else:
        data = sys.stdin.buffer.read()
    result = analyze(data)
    out = sys.stdout
    if args.header:
        out.write("\t".join(METRIC_FIELDS + STYLE_COLUMNS) + "\n")
    values = result.metrics.values() + result.style.columns()
    out.write("\t".join(repr(v) if isinstance(v, float) else str(v) for v in values) + "\n")
    return EXIT_OK


def _mine_one(repo, out_dir: Path, extensions, jobs, cache_dir, name=None):
    from .miner import mine_repository, write_manifest, write_timelines
    result = mine_repository(repo, extensions, jobs=jobs, cache_dir=cache_dir, repo_name=name)
    tsv = write_timelines(result.timelines, out_dir / f"{result.repo}.timeline.tsv")
    write_manifest(result, out_dir / f"{result.repo}.manifest.txt",
                   {"extensions": ",".join(extensions), "jobs": jobs, "cache_dir": cache_dir or ""})
    s = result.stats
    log.info("%s: %d records (%d computed, %d cached, %d skipped), %.0f lines/s -> %s",
             result.repo, s.records, s.computed, s.cache_hits, s.skipped, s.lines_per_second, tsv)
    return tsv


def cmd_mine(args) -> int:
    RunConfig("mine", jobs=args.jobs, cache_dir=args.cache_dir).validate()
    exts = args.extensions or [".c"]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tsv = _mine_one(args.repo, out, exts, args.jobs, args.cache_dir, args.name)
    print(tsv)
    return EXIT_OK


def _run_rq1(timelines, out, args):
    from .analysis import rq1
    from .figures import emit_figures
    rows = rq1(timelines, max_lag=args.max_lag, threshold=args.threshold,
               alpha=args.alpha, min_commits=args.min_commits)
    return emit_figures(rows, out, "rq1", args.formats)


def _run_rq2(timelines, out, args, alpha):
    from .analysis import rq2
    from .figures import emit_figures
    lo, hi = args.quantiles
    cells = rq2(timelines, q_low=lo, q_high=hi, min_dev_commits=args.min_dev_commits,
                alpha=alpha, bh_scope=args.bh_scope)
    return emit_figures(cells, out, "rq2", args.formats)


def cmd_rq1(args) -> int:
    RunConfig("rq1", max_lag=args.max_lag, acf_threshold=args.threshold, alpha=args.alpha,
              min_commits=args.min_commits).validate()
    timelines = _load_timelines(args.timelines)
    for path in _run_rq1(timelines, args.out, args):
        print(path)
    return EXIT_OK


def cmd_rq2(args) -> int:
    RunConfig("rq2", alpha=args.alpha, quantiles=args.quantiles,
              min_dev_commits=args.min_dev_commits).validate()
    timelines = _load_timelines(args.timelines)
    for path in _run_rq2(timelines, args.out, args, args.alpha):
        print(path)
    return EXIT_OK


def _parse_counts(text: str) -> dict:
    counts = {}
    for item in text.split(","):
        i, sep, p = item.partition(":")
        try:
            if not sep:
                raise ValueError
            counts[int(i)] = int(p)
        except ValueError:
            raise UsageError(f"bad stratum count {item!r}; expected i:P") from None
    return counts


def cmd_plan(args) -> int:
    from .sampler import CatalogClient, fetch_stratum_counts, plan_strata
    if args.counts:
        counts = _parse_counts(args.counts)
    else:
        try:
            as_of = dt.date.fromisoformat(args.as_of) if args.as_of else dt.date.today()
        except ValueError as exc:
            raise UsageError(f"bad --as-of date: {args.as_of}") from exc
        strata = [int(s) for s in args.strata.split(",")]
        client = CatalogClient(args.cache_dir, offline=args.offline)
        counts = fetch_stratum_counts(client, args.language, args.engagement, as_of, strata)
    try:
        plan = plan_strata(counts, args.n_target)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print("stratum\trange\tprojects\tengagements\traw\tselect")
    for s in plan:
        print(f"{s.index}\t{s.lower}-{s.upper}\t{s.projects}\t{s.engagements}\t"
              f"{float(s.raw):.4f}\t{s.n_select}")
    return EXIT_OK


def cmd_replicate(args) -> int:
    RunConfig("replicate", jobs=args.jobs, max_lag=args.max_lag, alpha=args.alpha,
              quantiles=args.quantiles, min_commits=args.min_commits,
              min_dev_commits=args.min_dev_commits).validate()
    try:
        lines = Path(args.repos).read_text().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read repository list {args.repos}: {exc}") from exc
    repos = [ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    if not repos:
        raise InputError("repository list is empty")
    out = Path(args.out)
    tl_dir = out / "timelines"
    tl_dir.mkdir(parents=True, exist_ok=True)
    cache = args.cache_dir or str(out / "cache")
    exts = args.extensions or [".c"]
    base = Path(args.repos).resolve().parent

    tsvs = []
    for repo in repos:
        path = Path(repo)
        if not path.is_absolute():
            path = base / path
        tsvs.append(str(_mine_one(str(path), tl_dir, exts, args.jobs, cache)))
    timelines = _load_timelines(tsvs)
    written = _run_rq1(timelines, out, args) + _run_rq2(timelines, out, args, args.alpha)
    for p in written:
        print(p)
    return EXIT_OK


def cmd_synth(args) -> int:
    from .miner import write_timelines
    from . import synthetic
    if args.kind == "rq1":
        print(write_timelines(synthetic.rq1_corpus(seed=args.seed), args.out))
    elif args.kind == "rq2":
        print(write_timelines(synthetic.rq2_project(seed=args.seed), args.out))
    else:
        print(synthetic.make_fixture_repo(args.out, n_files=args.files, n_revisions=args.revisions,
                                          lines_per_file=args.lines, seed=args.seed))
    return EXIT_OK


COMMANDS = {
    "measure": cmd_measure, "mine": cmd_mine, "rq1": cmd_rq1, "rq2": cmd_rq2,
    "plan": cmd_plan, "replicate": cmd_replicate, "synth": cmd_synth,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ConfigurationError as exc:
        print(f"error [{exc.category}]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error [{exc.category}]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenWindowsError as exc:
        print(f"error [{exc.category}]: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

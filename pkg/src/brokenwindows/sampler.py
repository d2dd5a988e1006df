"""Stratified repository sampling by engagement decade, and inclusion checks."""

import datetime as dt
import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

from .errors import CatalogError, ConfigurationError, RateLimitError

log = logging.getLogger(__name__)

DEFAULT_STRATA = (1, 2, 3, 4, 5)     # 11-100 ... 100001-1000000
MIN_ENGAGEMENT = 10                  # "more than 10 stars or forks"
HISTORY_INTERVALS = 20               # ten years of half-year intervals
INCLUDED_LANGUAGES = ("C", "Java")
TOKEN_ENV = "GITHUB_TOKEN"
SEARCH_URL = "https://api.github.com/search/repositories"


@dataclass(frozen=True)
class StratumPlan:
    index: int
    projects: int
    engagements: int          # estimated total engagements T
    raw: Fraction             # S * T before rounding
    n_select: int

    @property
    def lower(self) -> int:
        return 10 ** self.index + 1

    @property
    def upper(self) -> int:
        return 10 ** (self.index + 1)


def stratum_engagements(projects: int, index: int) -> int:
    """Projects times the midpoint of the decade [10^i, 10^(i+1)]."""
    return projects * (10 ** index + 10 ** (index + 1)) // 2


def _round_half_even(x: Fraction) -> int:
    return round(x)   # Fraction.__round__ rounds half to even


def plan_strata(projects: Mapping[int, int], n_target: int) -> List[StratumPlan]:
    """Number of projects to draw from each stratum.

    ``projects`` maps the stratum index i to the count P_i.  The selection
    probability S = N / sum(T_i) gives raw quotas S*T_i; these are rounded
    half to even and then corrected by largest remainder so that they sum
    to ``n_target`` exactly.  Ties go to the lower stratum when adding and
    to the higher stratum when removing.
    """
    if n_target <= 0:
        raise ValueError("n_target must be positive")
    if any(p < 0 for p in projects.values()):
        raise ValueError("project counts must be non-negative")
    indices = sorted(projects)
    totals = {i: stratum_engagements(projects[i], i) for i in indices}
    grand = sum(totals.values())
    if grand == 0:
        raise ValueError("all strata are empty")
    s = Fraction(n_target, grand)
    raw = {i: s * totals[i] for i in indices}
    chosen = {i: _round_half_even(raw[i]) for i in indices}

    diff = n_target - sum(chosen.values())
    if diff > 0:
        order = sorted((i for i in indices if totals[i] > 0),
                       key=lambda i: (-(raw[i] - chosen[i]), i))
        for k in range(diff):
            chosen[order[k % len(order)]] += 1
    elif diff < 0:
        order = sorted((i for i in indices if chosen[i] > 0),
                       key=lambda i: (raw[i] - chosen[i], -i))
        for k in range(-diff):
            chosen[order[k % len(order)]] -= 1

    return [StratumPlan(i, projects[i], totals[i], raw[i], chosen[i]) for i in indices]


@dataclass
class RepoDescriptor:
    name: str = ""
    stars: Optional[int] = None
    forks: Optional[int] = None
    language: Optional[str] = None
    # commit counts per half-year interval, most recent first
    interval_commits: Optional[Sequence[int]] = None


@dataclass
class InclusionResult:
    passed: Optional[bool]            # None: indeterminate
    verdicts: Dict[str, Optional[bool]]
    reasons: List[str] = field(default_factory=list)


def check_inclusion(repo: RepoDescriptor, languages: Sequence[str] = INCLUDED_LANGUAGES,
                    intervals: int = HISTORY_INTERVALS) -> InclusionResult:
    """Popularity, language and continuity verdicts for one repository.

    A criterion whose evidence is missing is indeterminate (None).  The
    repository fails if any criterion fails, passes only if all pass.
    """
    verdicts: Dict[str, Optional[bool]] = {}
    reasons = []

    if repo.stars is None and repo.forks is None:
        verdicts["popularity"] = None
        reasons.append("popularity: stars and forks unknown")
    else:
        ok = (repo.stars or 0) > MIN_ENGAGEMENT or (repo.forks or 0) > MIN_ENGAGEMENT
        if not ok and (repo.stars is None or repo.forks is None):
            verdicts["popularity"] = None
            reasons.append("popularity: one engagement count unknown")
        else:
            verdicts["popularity"] = ok
            if not ok:
                reasons.append(f"popularity: stars={repo.stars} forks={repo.forks}, need > {MIN_ENGAGEMENT}")

    if repo.language is None:
        verdicts["language"] = None
        reasons.append("language: unknown")
    else:
        wanted = {lang.lower() for lang in languages}
        verdicts["language"] = repo.language.lower() in wanted
        if not verdicts["language"]:
            reasons.append(f"language: {repo.language} not in {', '.join(languages)}")

    if repo.interval_commits is None:
        verdicts["continuity"] = None
        reasons.append("continuity: commit intervals unknown")
    else:
        window = list(repo.interval_commits)[:intervals]
        if len(window) < intervals:
            verdicts["continuity"] = False
            reasons.append(f"continuity: only {len(window)} half-year intervals of history")
        else:
            empty = [k for k, c in enumerate(window) if c <= 0]
            verdicts["continuity"] = not empty
            if empty:
                reasons.append(f"continuity: {len(empty)} empty half-year interval(s)")

    values = list(verdicts.values())
    if any(v is False for v in values):
        passed = False
    elif any(v is None for v in values):
        passed = None
    else:
        passed = True
    return InclusionResult(passed, verdicts, reasons)


def _months_back(day: dt.date, months: int) -> dt.date:
    total = day.year * 12 + (day.month - 1) - months
    year, month = divmod(total, 12)
    month += 1
    # clamp to the month's last valid day
    for d in (day.day, 30, 29, 28):
        try:
            return dt.date(year, month, d)
        except ValueError:
            continue
    raise AssertionError("unreachable")


def half_year_intervals(as_of: dt.date, count: int = HISTORY_INTERVALS):
    """``count`` consecutive (start, end) half-year windows ending at ``as_of``."""
    out = []
    end = as_of
    for _ in range(count):
        start = _months_back(end, 6)
        out.append((start, end))
        end = start
    return out


def interval_commit_counts(timestamps: Sequence[int], as_of: dt.date,
                           count: int = HISTORY_INTERVALS) -> List[int]:
    """Commits per half-year window (most recent first) from unix timestamps."""
    windows = half_year_intervals(as_of, count)
    days = [dt.datetime.fromtimestamp(t, dt.timezone.utc).date() for t in timestamps]
    return [sum(1 for d in days if start < d <= end) for start, end in windows]


def stratum_query(language: str, engagement: str, index: int, as_of: dt.date,
                  years: int = 10) -> str:
    """Search expression for one stratum; history anchored ``years`` before ``as_of``."""
    if engagement not in ("stars", "forks"):
        raise ValueError("engagement must be 'stars' or 'forks'")
    created = _months_back(as_of, 12 * years)
    lo, hi = 10 ** index + 1, 10 ** (index + 1)
    return f"language:{language} {engagement}:{lo}..{hi} created:<={created.isoformat()}"


class CatalogClient:
    """Repository-search client whose raw responses are cached on disk.

    With ``offline=True`` only cached responses are used; a cache miss is an
    error.  Rate-limit refusals (403/429) are retried with exponential
    backoff and surface as :class:`RateLimitError` after ``max_retries``.
    """

    def __init__(self, cache_dir, token: Optional[str] = None, offline: bool = False,
                 session=None, max_retries: int = 4, backoff: float = 2.0, sleep=time.sleep):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.token = token if token is not None else os.environ.get(TOKEN_ENV)
        self.offline = offline
        self.session = session
        self.max_retries = max_retries
        self.backoff = backoff
        self.sleep = sleep

    @staticmethod
    def cache_key(query: str) -> str:
        return hashlib.sha256(query.encode()).hexdigest()[:32]

    def _cache_path(self, query: str) -> Path:
        return self.cache_dir / f"{self.cache_key(query)}.json"

    def _fetch(self, query: str) -> bytes:
        if self.session is None:
            import requests
            self.session = requests.Session()
        headers = {"Accept": "application/vnd.github+json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        params = {"q": query, "per_page": 1}
        delay = self.backoff
        for attempt in range(self.max_retries + 1):
            resp = self.session.get(SEARCH_URL, params=params, headers=headers, timeout=30)
            status = resp.status_code
            if status == 200:
                return resp.content
            if status == 401:
                raise ConfigurationError(f"catalog authentication failed; check {TOKEN_ENV}")
            if status in (403, 429):
                if attempt == self.max_retries:
                    break
                log.warning("rate limited (HTTP %d), retrying in %.0fs", status, delay)
                self.sleep(delay)
                delay *= 2
                continue
            raise CatalogError(f"catalog query failed with HTTP {status}")
        raise RateLimitError(f"rate limited after {self.max_retries} retries")

    def search_count(self, query: str) -> int:
        path = self._cache_path(query)
        if path.exists():
            body = path.read_bytes()
        elif self.offline:
            raise CatalogError(f"no cached response for query: {query}")
        else:
            body = self._fetch(query)
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(body)
            os.replace(tmp, path)
        try:
            return int(json.loads(body)["total_count"])
        except (ValueError, KeyError, TypeError) as exc:
            raise CatalogError(f"malformed catalog response for {query!r}") from exc


def fetch_stratum_counts(client: CatalogClient, language: str, engagement: str,
                         as_of: dt.date, strata: Sequence[int] = DEFAULT_STRATA) -> Dict[int, int]:
    """Project count P_i for each stratum, one catalog query per stratum."""
    return {i: client.search_count(stratum_query(language, engagement, i, as_of)) for i in strata}

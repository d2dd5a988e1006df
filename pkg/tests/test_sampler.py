import datetime as dt
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brokenwindows.errors import CatalogError, ConfigurationError, RateLimitError
from brokenwindows.sampler import (
    CatalogClient, RepoDescriptor, check_inclusion, fetch_stratum_counts, half_year_intervals,
    interval_commit_counts, plan_strata, stratum_engagements, stratum_query,
)

AS_OF = dt.date(2024, 3, 1)


def test_stratum_engagements_worked_value():
    # 51 projects at the midpoint of [10^4, 10^5]
    assert stratum_engagements(51, 4) == 2_805_000
    assert stratum_engagements(0, 3) == 0


def test_plan_ties_go_to_lower_stratum():
    plans = plan_strata({1: 10, 2: 1}, 5)
    assert [p.engagements for p in plans] == [550, 550]
    assert [p.raw for p in plans] == [Fraction(5, 2), Fraction(5, 2)]
    assert [p.n_select for p in plans] == [3, 2]
    assert (plans[0].lower, plans[0].upper) == (11, 100)


def test_plan_is_proportional_when_exact():
    plans = plan_strata({1: 20, 2: 2, 3: 0}, 8)
    assert [p.n_select for p in plans] == [4, 4, 0]


def test_plan_rejects_bad_input():
    with pytest.raises(ValueError):
        plan_strata({1: 0, 2: 0}, 10)
    with pytest.raises(ValueError):
        plan_strata({1: 5}, 0)
    with pytest.raises(ValueError):
        plan_strata({1: -1, 2: 4}, 3)


def test_random_apportionments_sum_exactly():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        k = int(rng.integers(1, 7))
        projects = {i: int(rng.integers(0, 5000)) for i in range(1, k + 1)}
        projects[int(rng.integers(1, k + 1))] += 1
        n = int(rng.integers(1, 2000))
        plans = plan_strata(projects, n)
        assert sum(p.n_select for p in plans) == n
        assert all(p.n_select >= 0 for p in plans)


@settings(max_examples=300, deadline=None)
@given(st.dictionaries(st.integers(1, 6), st.integers(0, 10_000), min_size=1, max_size=6),
       st.integers(1, 5000))
def test_apportionment_stays_within_one_of_quota(projects, n):
    if not any(projects.values()):
        projects[min(projects)] = 1
    plans = plan_strata(projects, n)
    grand = sum(stratum_engagements(p, i) for i, p in projects.items())
    for p in plans:
        quota = Fraction(n * stratum_engagements(projects[p.index], p.index), grand)
        assert p.raw == quota
        assert abs(p.n_select - quota) <= 1
        if p.engagements == 0:
            assert p.n_select == 0
    assert sum(p.n_select for p in plans) == n


def _full_history(n=20, fill=3):
    return [fill] * n


def test_inclusion_passes_and_fails():
    ok = RepoDescriptor("a/b", stars=11, forks=0, language="C", interval_commits=_full_history())
    res = check_inclusion(ok)
    assert res.passed is True and res.reasons == []
    assert check_inclusion(RepoDescriptor("a/b", 10, 10, "c", _full_history())).passed is False
    assert check_inclusion(RepoDescriptor("a/b", 3, 12, "Java", _full_history())).passed is True
    assert check_inclusion(RepoDescriptor("a/b", 50, 0, "Python", _full_history())).passed is False
    gap = _full_history()
    gap[7] = 0
    res = check_inclusion(RepoDescriptor("a/b", 50, 0, "C", gap))
    assert res.passed is False and res.verdicts["continuity"] is False
    res = check_inclusion(RepoDescriptor("a/b", 50, 0, "C", _full_history(19)))
    assert res.verdicts["continuity"] is False


def test_inclusion_is_three_valued():
    res = check_inclusion(RepoDescriptor("a/b", stars=None, forks=None, language="C",
                                         interval_commits=_full_history()))
    assert res.passed is None and res.verdicts["popularity"] is None
    # one unknown count cannot decide a repository that fails on the other
    res = check_inclusion(RepoDescriptor("a/b", stars=4, forks=None, language="C",
                                         interval_commits=_full_history()))
    assert res.verdicts["popularity"] is None
    # but a known pass is enough
    res = check_inclusion(RepoDescriptor("a/b", stars=40, forks=None, language="C",
                                         interval_commits=_full_history()))
    assert res.verdicts["popularity"] is True and res.passed is True
    # a definite failure dominates unknowns
    res = check_inclusion(RepoDescriptor("a/b", stars=None, forks=None, language="Go"))
    assert res.passed is False
    assert res.verdicts == {"popularity": None, "language": False, "continuity": None}


def test_half_year_intervals_are_contiguous():
    windows = half_year_intervals(AS_OF)
    assert len(windows) == 20
    assert windows[0] == (dt.date(2023, 9, 1), AS_OF)
    assert windows[-1][0] == dt.date(2014, 3, 1)
    assert all(a[0] == b[1] for a, b in zip(windows, windows[1:]))
    # month-end clamping
    assert half_year_intervals(dt.date(2023, 8, 31), 1)[0][0] == dt.date(2023, 2, 28)


def test_interval_commit_counts():
    def ts(y, m, d):
        return int(dt.datetime(y, m, d, 12, tzinfo=dt.timezone.utc).timestamp())
    stamps = [ts(2024, 2, 1), ts(2023, 12, 1), ts(2023, 9, 1), ts(2023, 8, 31), ts(2010, 1, 1)]
    counts = interval_commit_counts(stamps, AS_OF, count=3)
    # windows are (start, end], so 2023-09-01 falls in the older one
    assert counts == [2, 2, 0]


def test_stratum_query():
    q = stratum_query("C", "stars", 4, AS_OF)
    assert q == "language:C stars:10001..100000 created:<=2014-03-01"
    with pytest.raises(ValueError):
        stratum_query("C", "watchers", 1, AS_OF)


class FakeResponse:
    def __init__(self, status, body=b""):
        self.status_code = status
        self.content = body


class FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def get(self, url, params=None, headers=None, timeout=None):
        self.calls.append((url, params, headers))
        return self.responses.pop(0)


def _body(n):
    return json.dumps({"total_count": n, "items": []}).encode()


def test_cached_replay_offline(tmp_path):
    counts = {1: 90_000, 2: 12_000, 3: 1_500, 4: 51, 5: 2}
    session = FakeSession([FakeResponse(200, _body(counts[i])) for i in sorted(counts)])
    online = CatalogClient(tmp_path, token="t", session=session)
    assert fetch_stratum_counts(online, "C", "stars", AS_OF) == counts
    assert len(session.calls) == 5
    assert session.calls[0][2]["Authorization"] == "Bearer t"
    # replay from the cache only
    offline = CatalogClient(tmp_path, offline=True, session=FakeSession([]))
    assert fetch_stratum_counts(offline, "C", "stars", AS_OF) == counts
    with pytest.raises(CatalogError):
        fetch_stratum_counts(offline, "Java", "stars", AS_OF)


def test_empty_catalog(tmp_path):
    session = FakeSession([FakeResponse(200, _body(0)) for _ in range(5)])
    counts = fetch_stratum_counts(CatalogClient(tmp_path, session=session), "C", "forks", AS_OF)
    assert set(counts.values()) == {0}
    with pytest.raises(ValueError):
        plan_strata(counts, 100)


def test_rate_limit_backs_off_then_fails(tmp_path):
    sleeps = []
    session = FakeSession([FakeResponse(403)] * 5)
    client = CatalogClient(tmp_path, session=session, max_retries=4, backoff=2.0, sleep=sleeps.append)
    with pytest.raises(RateLimitError):
        client.search_count("language:C stars:11..100")
    assert sleeps == [2.0, 4.0, 8.0, 16.0]
    assert not list(tmp_path.glob("*.json"))


def test_rate_limit_recovers(tmp_path):
    sleeps = []
    session = FakeSession([FakeResponse(429), FakeResponse(200, _body(7))])
    client = CatalogClient(tmp_path, session=session, sleep=sleeps.append)
    assert client.search_count("q") == 7
    assert sleeps == [2.0]


def test_auth_failure_and_other_errors(tmp_path):
    client = CatalogClient(tmp_path, session=FakeSession([FakeResponse(401)]))
    with pytest.raises(ConfigurationError):
        client.search_count("q")
    client = CatalogClient(tmp_path, session=FakeSession([FakeResponse(500)]))
    with pytest.raises(CatalogError):
        client.search_count("q")
    client = CatalogClient(tmp_path, session=FakeSession([FakeResponse(200, b"{}")]))
    with pytest.raises(CatalogError):
        client.search_count("q2")

import subprocess

import pytest

from brokenwindows import compute_metrics
from brokenwindows import miner
from brokenwindows.errors import ConfigurationError, InputError
from brokenwindows.miner import (
    TIMELINE_COLUMNS, BlobCache, list_paths, list_revisions, mine_repository, read_timelines,
    write_manifest, write_timelines,
)
from brokenwindows.style import count_style
from brokenwindows.lexer import tokenize

V1 = "int f(void)\n{\n\treturn 1;\n}\n"
V2 = "int f(void)\n{\n\treturn 2; /* TODO */\n}\n"
V3 = "int f(int x)\n{\n\tif (x)\n\t\treturn 3;\n\treturn 0;\n}\n"


def test_three_commits_in_order(git_repo):
    hashes = [git_repo.commit(f"c{k}", email=e, files={"f.c": v})
              for k, (e, v) in enumerate([("a@x.org", V1), ("b@x.org", V2), ("a@x.org", V3)])]
    revs = list_revisions(git_repo.path, "f.c")
    assert [r.commit for r in revs] == hashes
    assert [r.committer for r in revs] == ["a@x.org", "b@x.org", "a@x.org"]
    stamps = [r.timestamp for r in revs]
    assert stamps == sorted(stamps) and len(set(stamps)) == 3
    assert all(len(r.blob) == 40 for r in revs)


def test_file_added_last_and_never_committed(git_repo):
    git_repo.commit("one", files={"a.c": V1})
    git_repo.commit("two", files={"b.c": V2})
    assert len(list_revisions(git_repo.path, "b.c")) == 1
    assert list_revisions(git_repo.path, "nothere.c") == []


def test_empty_repository_has_no_revisions(git_repo):
    assert list_revisions(git_repo.path, "f.c") == []
    assert mine_repository(git_repo.path).timelines == []


def test_missing_repository_is_configuration_error(tmp_path):
    with pytest.raises(ConfigurationError):
        list_revisions(tmp_path / "absent", "f.c")
    (tmp_path / "plain").mkdir()
    with pytest.raises(ConfigurationError):
        mine_repository(tmp_path / "plain")


def test_first_parent_only(git_repo):
    git_repo.commit("base", files={"f.c": V1})
    git_repo.git("checkout", "-q", "-b", "side")
    side1 = git_repo.commit("side 1", email="s@x.org", files={"f.c": V2})
    side2 = git_repo.commit("side 2", email="s@x.org", files={"f.c": V3})
    git_repo.git("checkout", "-q", "main")
    git_repo.commit("main work", files={"g.c": V1})
    git_repo.git("merge", "-q", "--no-ff", "-m", "merge side", "side")
    merge = git_repo.head()
    revs = list_revisions(git_repo.path, "f.c")
    commits = [r.commit for r in revs]
    assert side1 not in commits and side2 not in commits
    # the merge brings the side branch's content onto the main line
    assert commits[-1] == merge
    assert len(commits) == 2
    result = mine_repository(git_repo.path)
    f = [tl for tl in result.timelines if tl.path == "f.c"][0]
    assert f.records[-1].metrics == compute_metrics(V3)


def test_two_files_three_revisions(small_fixture_repo):
    result = mine_repository(small_fixture_repo)
    assert len(result.timelines) == 2
    assert result.stats.records == 6
    for tl in result.timelines:
        assert len(tl) == 3
        assert len({r.commit for r in tl.records}) == 3


def test_records_match_direct_measurement(git_repo):
    git_repo.commit("one", files={"src/f.c": V1, "README": "x"})
    git_repo.commit("two", files={"src/f.c": V2})
    result = mine_repository(git_repo.path)
    (tl,) = result.timelines
    assert tl.path == "src/f.c"
    assert [r.metrics for r in tl.records] == [compute_metrics(V1), compute_metrics(V2)]
    data = V2.encode()
    assert tl.records[1].style == count_style(tokenize(data).tokens, data)


def test_extensions(git_repo):
    git_repo.commit("one", files={"a.c": V1, "b.h": V1, "c.java": "class A {}"})
    assert list_paths(git_repo.path) == ["a.c"]
    assert list_paths(git_repo.path, (".c", ".h")) == ["a.c", "b.h"]


def test_deleted_and_binary_revisions_are_skipped(git_repo):
    git_repo.commit("add", files={"f.c": V1, "bin.c": b"\x00\x01\x02int x;"})
    git_repo.commit("delete", files={"f.c": None})
    git_repo.commit("restore", files={"f.c": V2})
    result = mine_repository(git_repo.path)
    reasons = sorted(reason for _, _, reason in result.skipped)
    assert reasons == ["binary", "deleted"]
    (tl,) = result.timelines
    assert len(tl) == 2
    assert result.stats.skipped == 2


def test_warm_cache_recomputes_nothing(small_fixture_repo, tmp_path):
    cold = mine_repository(small_fixture_repo, cache_dir=tmp_path / "c")
    assert cold.stats.computed == 6 and cold.stats.cache_hits == 0
    warm = mine_repository(small_fixture_repo, cache_dir=tmp_path / "c")
    assert warm.stats.computed == 0
    assert warm.stats.cache_hits == warm.stats.records == 6
    a = write_timelines(cold.timelines, tmp_path / "a.tsv").read_bytes()
    b = write_timelines(warm.timelines, tmp_path / "b.tsv").read_bytes()
    assert a == b


def test_identical_blobs_computed_once(git_repo, tmp_path):
    git_repo.commit("one", files={"a.c": V1, "b.c": V1})
    git_repo.commit("two", files={"a.c": V2})
    git_repo.commit("three", files={"a.c": V1})
    result = mine_repository(git_repo.path, cache_dir=tmp_path / "c")
    assert result.stats.records == 4
    assert result.stats.computed == 2


def test_jobs_do_not_change_output(small_fixture_repo, tmp_path):
    one = mine_repository(small_fixture_repo, jobs=1)
    many = mine_repository(small_fixture_repo, jobs=8)
    a = write_timelines(one.timelines, tmp_path / "1.tsv").read_bytes()
    b = write_timelines(many.timelines, tmp_path / "8.tsv").read_bytes()
    assert a == b


def test_interrupted_run_resumes_to_same_output(small_fixture_repo, tmp_path, monkeypatch):
    reference = write_timelines(mine_repository(small_fixture_repo).timelines, tmp_path / "ref.tsv")
    real = miner.analyze
    calls = {"n": 0}

    def flaky(content):
        calls["n"] += 1
        if calls["n"] == 4:
            raise KeyboardInterrupt
        return real(content)

    monkeypatch.setattr(miner, "analyze", flaky)
    with pytest.raises(KeyboardInterrupt):
        mine_repository(small_fixture_repo, jobs=1, cache_dir=tmp_path / "c")
    monkeypatch.setattr(miner, "analyze", real)
    resumed = mine_repository(small_fixture_repo, jobs=1, cache_dir=tmp_path / "c")
    assert resumed.stats.cache_hits == 3
    assert resumed.stats.computed == 3
    out = write_timelines(resumed.timelines, tmp_path / "out.tsv")
    assert out.read_bytes() == reference.read_bytes()


def test_corrupt_cache_entry_is_recomputed(small_fixture_repo, tmp_path):
    mine_repository(small_fixture_repo, cache_dir=tmp_path / "c")
    entry = next(p for p in (tmp_path / "c" / "v1").rglob("*") if p.is_file())
    entry.write_text("garbage\n")
    again = mine_repository(small_fixture_repo, cache_dir=tmp_path / "c")
    assert again.stats.computed == 1


def test_blob_cache_roundtrip(tmp_path):
    cache = BlobCache(tmp_path)
    data = V3.encode()
    m, s = compute_metrics(data), count_style(tokenize(data).tokens, data)
    cache.put("ab" * 20, m, s, 0)
    assert cache.get("ab" * 20) == (m, s, 0)
    assert cache.get("cd" * 20) is None


def test_timeline_tsv_roundtrip(small_fixture_repo, tmp_path):
    result = mine_repository(small_fixture_repo, repo_name="proj")
    path = write_timelines(result.timelines, tmp_path / "proj.timeline.tsv")
    lines = path.read_text().splitlines()
    assert lines[0].split("\t") == TIMELINE_COLUMNS
    assert len(lines) == 7
    back = read_timelines(path)
    assert [(t.repo, t.path, t.records) for t in back] == \
        [(t.repo, t.path, t.records) for t in result.timelines]


def test_read_rejects_foreign_files(tmp_path):
    bad = tmp_path / "x.tsv"
    bad.write_text("a\tb\n")
    with pytest.raises(InputError):
        read_timelines(bad)
    short = tmp_path / "y.tsv"
    short.write_text("\t".join(TIMELINE_COLUMNS) + "\nr\tp\n")
    with pytest.raises(InputError):
        read_timelines(short)


def test_series_and_committers(small_fixture_repo):
    tl = mine_repository(small_fixture_repo).timelines[0]
    assert tl.series("ln").tolist() == [r.metrics.n_lines for r in tl.records]
    assert tl.series("fn").tolist() == [r.metrics.n_functions for r in tl.records]
    assert tl.series("si").tolist() == [r.metrics.si for r in tl.records]
    assert tl.committers == ["alice@example.org", "bob@example.org", "alice@example.org"]


def test_manifest(small_fixture_repo, tmp_path):
    result = mine_repository(small_fixture_repo)
    path = write_manifest(result, tmp_path / "m.txt", {"jobs": 1})
    kv = dict(line.split("=", 1) for line in path.read_text().splitlines())
    assert kv["records"] == "6" and kv["jobs"] == "1" and kv["repo"] == "proj"
    assert int(kv["lines"]) == 6 * 40


def test_bare_repository(small_fixture_repo, tmp_path):
    bare = tmp_path / "bare.git"
    subprocess.run(["git", "clone", "-q", "--bare", str(small_fixture_repo), str(bare)], check=True)
    a = mine_repository(small_fixture_repo, repo_name="x")
    b = mine_repository(bare, repo_name="x")
    assert [t.records for t in a.timelines] == [t.records for t in b.timelines]


def test_unbalanced_revisions_are_counted(git_repo):
    git_repo.commit("one", files={"f.c": V1})
    git_repo.commit("broken", files={"f.c": "int f(void)\n{\n\treturn 1;\n"})
    git_repo.commit("fixed", files={"f.c": V2})
    result = mine_repository(git_repo.path)
    assert result.stats.records == 3
    assert result.stats.unbalanced_revisions == 1

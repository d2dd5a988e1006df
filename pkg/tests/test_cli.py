import csv

import pytest

from brokenwindows import __version__
from brokenwindows.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, read_config, run
from brokenwindows.errors import ConfigurationError
from brokenwindows.metrics import METRIC_FIELDS
from brokenwindows.miner import read_timelines
from brokenwindows.style import STYLE_COLUMNS


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_version(capsys):
    assert run(["--version"]) == EXIT_OK
    assert __version__ in capsys.readouterr().out


def test_missing_command_is_usage_error(capsys):
    assert run([]) == EXIT_USAGE
    assert run(["frobnicate"]) == EXIT_USAGE


def test_measure(tmp_path, capsys):
    src = tmp_path / "a.c"
    src.write_text("int main(void)\n{\n\treturn 0;\n}\n")
    assert run(["measure", "--header", str(src)]) == EXIT_OK
    header, values = capsys.readouterr().out.splitlines()
    assert header.split("\t") == METRIC_FIELDS + STYLE_COLUMNS
    assert len(values.split("\t")) == len(header.split("\t"))
    assert dict(zip(header.split("\t"), values.split("\t")))["n_lines"] == "4"


def test_measure_missing_file(tmp_path, capsys):
    assert run(["measure", str(tmp_path / "nope.c")]) == EXIT_FAILURE
    assert "error [input]" in capsys.readouterr().err


def test_plan_from_counts(capsys):
    assert run(["plan", "--counts", "1:10,2:1", "--n", "5"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split("\t")[-1] == "select"
    assert [ln.split("\t")[-1] for ln in lines[1:]] == ["3", "2"]
    assert lines[1].split("\t")[1] == "11-100"


@pytest.mark.parametrize("argv", [
    ["plan", "--counts", "1-10", "--n", "5"],
    ["plan", "--counts", "1:0,2:0", "--n", "5"],
    ["plan", "--n", "5", "--as-of", "yesterday", "--offline"],
    ["rq1", "--timelines", "x", "--out", "o", "--alpha", "2"],
    ["rq2", "--timelines", "x", "--out", "o", "--quantiles", "0.8,0.2"],
    ["rq2", "--timelines", "x", "--out", "o", "--quantiles", "half"],
    ["rq1", "--timelines", "x", "--out", "o", "--format", "pdf"],
    ["mine", "--repo", ".", "--jobs", "0"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert run(argv) == EXIT_USAGE


def test_no_input_timelines(tmp_path, capsys):
    assert run(["rq1", "--timelines", str(tmp_path / "*.tsv"), "--out", str(tmp_path)]) == EXIT_FAILURE
    assert "no input timelines" in capsys.readouterr().err


def test_offline_plan_without_cache_fails(tmp_path, capsys):
    code = run(["plan", "--n", "5", "--as-of", "2024-03-01", "--offline", "--cache-dir", str(tmp_path)])
    assert code == EXIT_FAILURE
    assert "no cached response" in capsys.readouterr().err


def test_missing_repository(tmp_path, capsys):
    assert run(["mine", "--repo", str(tmp_path / "absent"), "--out", str(tmp_path)]) == EXIT_FAILURE
    assert "error [config]" in capsys.readouterr().err


def test_synth_then_rq2(tmp_path, capsys):
    tsv = tmp_path / "p.timeline.tsv"
    assert run(["synth", "rq2", "--out", str(tsv), "--seed", "1"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == str(tsv)
    out = tmp_path / "res"
    assert run(["rq2", "--timelines", str(tsv), "--out", str(out), "--format", "csv,svg"]) == EXIT_OK
    printed = capsys.readouterr().out.split()
    assert [p.rsplit(".", 1)[1] for p in printed] == ["csv", "svg"]
    rows = _rows(out / "rq2_heatmap.csv")
    assert len(rows) == 122


def test_config_defaults_and_override(tmp_path, capsys):
    tsv = tmp_path / "c.timeline.tsv"
    run(["synth", "rq1", "--out", str(tsv), "--seed", "2"])
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# analysis settings\nmax-lag = 3\nformat = csv\n")
    assert run(["--config", str(cfg), "rq1", "--timelines", str(tsv), "--out", str(tmp_path / "a")]) == EXIT_OK
    assert len(_rows(tmp_path / "a" / "rq1_acf.csv")) == 11 * 3 + 1
    assert not (tmp_path / "a" / "rq1_acf.png").exists()
    assert run(["--config", str(cfg), "rq1", "--timelines", str(tsv), "--out", str(tmp_path / "b"),
                "--max-lag", "2"]) == EXIT_OK
    assert len(_rows(tmp_path / "b" / "rq1_acf.csv")) == 11 * 2 + 1


def test_read_config(tmp_path):
    cfg = tmp_path / "x.cfg"
    cfg.write_text("--min-commits = 20  # trailing comment\n\nbh_scope=global\n")
    assert read_config(cfg) == {"min_commits": "20", "bh_scope": "global"}
    cfg.write_text("nonsense\n")
    with pytest.raises(ConfigurationError):
        read_config(cfg)
    with pytest.raises(ConfigurationError):
        read_config(tmp_path / "absent.cfg")
    assert run(["--config", str(tmp_path / "absent.cfg"), "plan", "--n", "1"]) == EXIT_USAGE


def test_mine_and_replicate(small_fixture_repo, tmp_path, capsys):
    assert run(["mine", "--repo", str(small_fixture_repo), "--out", str(tmp_path / "m")]) == EXIT_OK
    tsv = capsys.readouterr().out.strip()
    assert tsv.endswith("proj.timeline.tsv")
    assert sum(len(t) for t in read_timelines(tsv)) == 6

    listing = tmp_path / "repos.txt"
    listing.write_text(f"# fixture\n{small_fixture_repo}\n")
    out = tmp_path / "r"
    assert run(["replicate", "--repos", str(listing), "--out", str(out), "--max-lag", "2",
                "--min-commits", "1", "--format", "csv"]) == EXIT_OK
    assert len(_rows(out / "rq1_acf.csv")) == 11 * 2 + 1
    assert len(_rows(out / "rq2_heatmap.csv")) == 122
    assert (out / "timelines" / "proj.timeline.tsv").exists()
    assert (out / "timelines" / "proj.manifest.txt").exists()


def test_replicate_empty_list(tmp_path, capsys):
    listing = tmp_path / "repos.txt"
    listing.write_text("# nothing\n\n")
    assert run(["replicate", "--repos", str(listing), "--out", str(tmp_path / "o")]) == EXIT_FAILURE

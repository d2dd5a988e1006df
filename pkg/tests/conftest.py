import os
import subprocess
from pathlib import Path

import pytest

from brokenwindows.synthetic import make_fixture_repo

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


class GitRepo:
    """Tiny driver for building repositories with controlled history."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.clock = 1_400_000_000
        self.git("init", "-q", "-b", "main")

    def git(self, *args, email="alice@example.org", **kw):
        self.clock += 60
        env = dict(os.environ,
                   GIT_AUTHOR_NAME=email.split("@")[0], GIT_AUTHOR_EMAIL=email,
                   GIT_COMMITTER_NAME=email.split("@")[0], GIT_COMMITTER_EMAIL=email,
                   GIT_AUTHOR_DATE=f"{self.clock} +0000", GIT_COMMITTER_DATE=f"{self.clock} +0000",
                   GIT_CONFIG_NOSYSTEM="1", HOME=str(self.path))
        return subprocess.run(["git", "-C", str(self.path), *args], env=env, check=True,
                              capture_output=True, **kw).stdout

    def write(self, rel: str, data):
        p = self.path / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(data.encode() if isinstance(data, str) else data)

    def commit(self, message="change", email="alice@example.org", files=None) -> str:
        for rel, data in (files or {}).items():
            if data is None:
                self.git("rm", "-q", rel)
            else:
                self.write(rel, data)
                self.git("add", rel)
        self.git("commit", "-q", "--allow-empty", "-m", message, email=email)
        return self.head()

    def head(self) -> str:
        return self.git("rev-parse", "HEAD").decode().strip()


@pytest.fixture
def git_repo(tmp_path):
    return GitRepo(tmp_path / "repo")


@pytest.fixture(scope="session")
def small_fixture_repo(tmp_path_factory):
    base = tmp_path_factory.mktemp("fixture")
    return make_fixture_repo(base / "proj", n_files=2, n_revisions=3, lines_per_file=40, seed=7)

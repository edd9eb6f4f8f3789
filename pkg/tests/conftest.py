"""Shared hypothesis strategies."""
from __future__ import annotations

from hypothesis import strategies as st

from horowalk.spaces import TreePoint
from horowalk.words import word


def letters(rank: int = 2):
    return st.sampled_from([s * i for i in range(1, rank + 1) for s in (1, -1)])


def elements(rank: int = 2, max_size: int = 12):
    # free reduction of an arbitrary letter list hits every reduced word
    return st.lists(letters(rank), max_size=max_size).map(word)


def tree_points(rank: int = 2, max_size: int = 12):
    return elements(rank, max_size).map(TreePoint)


from hypothesis import settings  # noqa: E402

settings.register_profile("repo", deadline=None, max_examples=100)
settings.load_profile("repo")


import pytest  # noqa: E402


@pytest.fixture
def split_jobs(monkeypatch):
    """Force one job per seeding block so worker pools really get several jobs."""
    from horowalk import walks

    monkeypatch.setattr(walks, "CHUNK", walks.BLOCK)

    def use(workers: int):
        monkeypatch.setenv(walks.WORKERS_ENV, str(workers))

    return use


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])

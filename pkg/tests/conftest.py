from __future__ import annotations

import collections

import pytest

from qcoach.maze import GridPos, MazeConfig


@pytest.fixture
def config() -> MazeConfig:
    return MazeConfig()


def bfs_shortest(config: MazeConfig, origin: GridPos, goal: GridPos) -> int:
    """Independent shortest-path oracle: plain BFS over cells, honoring walls.

    Deliberately written from scratch here (no reuse of package BFS) so
    tests cross-check the implementation, not itself.
    """
    pairs = {tuple(sorted((tuple(w.a), tuple(w.b)))) for w in config.walls}
    dist = {tuple(origin): 0}
    frontier = collections.deque([tuple(origin)])
    while frontier:
        cell = frontier.popleft()
        if cell == tuple(goal):
            return dist[cell]
        r, c = cell
        for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if not (0 <= nr < config.height and 0 <= nc < config.width):
                continue
            if tuple(sorted((cell, (nr, nc)))) in pairs:
                continue
            if (nr, nc) not in dist:
                dist[(nr, nc)] = dist[cell] + 1
                frontier.append((nr, nc))
    raise AssertionError(f"no path {tuple(origin)} -> {tuple(goal)}")


# ---------------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per criterion at the end of the run
# ---------------------------------------------------------------------------

_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    _ACCEPTANCE_RESULTS[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS.items():
        terminalreporter.write_line(f"{outcome}  {name}")

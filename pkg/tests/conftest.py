from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from digivis.cubical import complex_of_points

settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile("ci")

GOLDEN = Path(__file__).parent / "golden"

STAIRCASE = [(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (3, 2), (4, 2), (5, 2), (6, 2), (7, 2), (7, 3)]
L_CORNER = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2)]


@pytest.fixture
def staircase():
    return complex_of_points(STAIRCASE)


@pytest.fixture
def l_corner():
    return complex_of_points(L_CORNER)


def random_point_set(rng: np.random.Generator, n: int, box: int = 10, d: int = 2) -> list[tuple[int, ...]]:
    flat = rng.choice(box**d, size=n, replace=False)
    return [tuple(int(c) for c in np.unravel_index(i, (box,) * d)) for i in flat]


def read_pair_csv(path) -> set:
    rows = Path(path).read_text().split("\n")[1:]
    out = set()
    for line in rows:
        if line.strip():
            v = [int(x) for x in line.split(",")]
            h = len(v) // 2
            out.add((tuple(v[:h]), tuple(v[h:])))
    return out


# one line per acceptance criterion, shown in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

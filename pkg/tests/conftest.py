import random
from fractions import Fraction

import pytest

from pfakit.linalg import QMatrix

_CRITERIA: dict[int, tuple[str, float, float]] = {}


def record_criterion(number: int, passed: bool, seconds: float, limit: float) -> None:
    _CRITERIA[number] = ("PASS" if passed else "FAIL", seconds, limit)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        status, sec, limit = _CRITERIA[k]
        lim = f"limit {limit:g} s" if limit else "no time limit"
        terminalreporter.write_line(f"criterion {k:2d}: {status}  ({sec:.2f} s, {lim})")


def rand_q(rng: random.Random, lo=-3, hi=3, dmax=4) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.randint(1, dmax))


def rand_matrix(rng, rows, cols, density=1.0, storage=None) -> QMatrix:
    return QMatrix.from_rows(
        [[rand_q(rng) if rng.random() < density else 0 for _ in range(cols)] for _ in range(rows)],
        storage=storage,
    )


def rand_stochastic(rng, n, triangular=False, storage=None) -> QMatrix:
    rows = []
    for i in range(n):
        w = [0 if (triangular and j < i) else rng.randint(0, 3) for j in range(n)]
        if sum(w) == 0:
            w[i if triangular else rng.randrange(n)] = 1
        s = sum(w)
        rows.append([Fraction(x, s) for x in w])
    return QMatrix.from_rows(rows, storage=storage)


@pytest.fixture
def rng():
    return random.Random(20261014)

import numpy as np
import pytest

from isoprofile.convex import make_ball, make_polytope, volume
from isoprofile.oracle import grid_oracle

_CRITERIA: dict = {}


def unit_square():
    return make_polytope([[0, 0], [1, 0], [1, 1], [0, 1]], name="square")


def unit_disk():
    return make_ball([0.0, 0.0], 1.0, name="disk")


def triangle345():
    return make_polytope([[0, 0], [4, 0], [0, 3]], name="triangle")


@pytest.fixture
def square():
    return unit_square()


@pytest.fixture
def disk():
    return unit_disk()


@pytest.fixture
def triangle():
    return triangle345()


FLEET_LAMBDAS = (0.05, 0.25, 0.5)


@pytest.fixture(scope="session")
def fleet_minimizers():
    """Oracle minimisers on square, disk and triangle at three volume fractions (resolution 64)."""
    out = {}
    for make in (unit_square, unit_disk, triangle345):
        body = make()
        total = volume(body)[0]
        for lam in FLEET_LAMBDAS:
            out[(body.name, lam)] = (body, grid_oracle(body, lam * total, 64, seed=0))
    return out


@pytest.fixture
def criterion(request):
    """Record one pass/fail line for an acceptance criterion."""

    def record(number: int, passed: bool, detail: str) -> None:
        _CRITERIA[number] = (bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def random_polygon(rng, k_min=3, k_max=8, center=(0.0, 0.0)):
    """Convex polygon from sorted random angles and radii in [0.6, 1]."""
    while True:
        k = int(rng.integers(k_min, k_max + 1))
        ang = np.sort(rng.uniform(0, 2 * np.pi, k))
        r = rng.uniform(0.6, 1.0, k)
        pts = np.asarray(center) + np.column_stack([r * np.cos(ang), r * np.sin(ang)])
        try:
            return make_polytope(pts)
        except Exception:
            continue

import numpy as np
import pytest

from repsel.datasets import synthetic_year, write_csv
from repsel.distance import DistanceMatrix
from repsel.timeseries import normalize

FIXTURE_3X3 = [[0.0, 2.0, 5.0], [3.0, 0.0, 4.0], [6.0, 1.0, 0.0]]


@pytest.fixture
def d3():
    return DistanceMatrix.from_array(np.array(FIXTURE_3X3))


@pytest.fixture(scope="session")
def year():
    return normalize(synthetic_year(), "minmax")


@pytest.fixture(scope="session")
def year_csv(tmp_path_factory):
    return write_csv(tmp_path_factory.mktemp("data") / "year.csv")


@pytest.fixture(scope="session")
def short_csv(tmp_path_factory):
    return write_csv(tmp_path_factory.mktemp("short") / "short.csv", days=40)


def random_matrix(rng, n, m, *, ties=False):
    if ties:
        return rng.integers(0, 6, size=(n, m)).astype(float)
    return rng.random((n, m))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

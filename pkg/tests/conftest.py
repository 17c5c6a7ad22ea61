import json
from pathlib import Path

import numpy as np
import pytest

import interpark as ip


@pytest.fixture(scope="session")
def manifest():
    return json.loads((Path(__file__).parent / "acceptance_manifest.json").read_text())


@pytest.fixture(scope="session")
def line_grid():
    return ip.build_grid(((0.0, 6.0), (0.0, 1.0)), 300, 1)


@pytest.fixture(scope="session")
def line_measures(line_grid):
    mu0 = ip.measure_from_density(line_grid, lambda X, Y: (X <= 1.0).astype(float), True)
    mu1 = ip.measure_from_density(line_grid, lambda X, Y: (X >= 5.0).astype(float), True)
    return mu0, mu1


def tv_distance(w0, w1):
    return 0.5 * float(np.abs(np.asarray(w0) - np.asarray(w1)).sum())


@pytest.fixture(scope="session")
def tv():
    return tv_distance

"""
Fixtures y oráculos compartidos por los tests del laboratorio.
"""

from itertools import combinations

import numpy as np
import pytest

from geometry.convexgeom import ellipsoid, sphere
from geometry.spheregrid import AxisymmetricGrid, LatLongGrid


# ========================================
# ORÁCULO POR ENUMERACIÓN DE SUBCONJUNTOS
# ========================================

def subset_symmetric(lam, k: int) -> float:
    """S_k sumando todos los productos de k componentes distintas."""
    if k == 0:
        return 1.0
    return float(sum(np.prod(c) for c in combinations(lam, k)))


def subset_qk(lam, k: int) -> float:
    return subset_symmetric(lam, k) / subset_symmetric(lam, k - 1)


def subset_symmetric_batch(lams, k: int) -> np.ndarray:
    """S_k por fila enumerando subconjuntos de columnas."""
    lams = np.atleast_2d(np.asarray(lams, dtype=float))
    out = np.zeros(lams.shape[0]) if k else np.ones(lams.shape[0])
    if k == 0:
        return out
    for c in combinations(range(lams.shape[1]), k):
        out += np.prod(lams[:, list(c)], axis=1)
    return out


def fd_gradient(fn, lam, step: float = 1e-6) -> np.ndarray:
    """Gradiente por diferencias centradas con paso relativo."""
    lam = np.asarray(lam, dtype=float)
    out = np.empty(lam.size)
    for i in range(lam.size):
        h = step * max(1.0, abs(lam[i]))
        up, down = lam.copy(), lam.copy()
        up[i] += h
        down[i] -= h
        out[i] = (fn(up) - fn(down)) / (2.0 * h)
    return out


# ========================================
# FIXTURES
# ========================================

@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def axis_grid():
    return AxisymmetricGrid(2, 32)


@pytest.fixture
def axis_grid3():
    return AxisymmetricGrid(3, 32)


@pytest.fixture
def latlong_grid():
    return LatLongGrid(16, 32)


@pytest.fixture
def unit_sphere(axis_grid):
    return sphere(axis_grid, 1.0)


@pytest.fixture
def prolate(axis_grid):
    return ellipsoid(axis_grid, [1.0, 1.0, 1.5])

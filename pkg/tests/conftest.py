import numpy as np
import pytest

from spatialvb import (MissingPattern, SelectionModel, SemParams,
                       build_rook_grid_weights, row_normalize)


@pytest.fixture(scope="session")
def grid3():
    return row_normalize(build_rook_grid_weights(3))


@pytest.fixture(scope="session")
def grid4():
    return row_normalize(build_rook_grid_weights(4))


@pytest.fixture(scope="session")
def grid7():
    return row_normalize(build_rook_grid_weights(7))


def random_instance(w, seed, n_beta=3, rho=None, missing=0.3):
    """A small SEM instance with a missing pattern, for oracle checks."""
    rng = np.random.default_rng(seed)
    n = w.n
    x = np.hstack([np.ones((n, 1)), rng.standard_normal((n, n_beta - 1))])
    beta = rng.normal(0.0, 1.0, size=n_beta)
    if rho is None:
        rho = rng.uniform(-0.6, 0.9)
    params = SemParams(beta=beta, sigma2_y=float(rng.uniform(0.3, 2.0)), rho=float(rho))
    y = x @ beta + rng.standard_normal(n)
    n_u = max(1, int(round(n * missing)))
    miss = rng.choice(n, size=n_u, replace=False)
    m = np.zeros(n, dtype=np.int8)
    m[miss] = 1
    pattern = MissingPattern(m=m)
    return x, params, y, pattern, rng


def random_selection(n, seed, q=1, psi_y=-0.2):
    rng = np.random.default_rng(seed)
    x_star = np.hstack([np.ones((n, 1)), rng.standard_normal((n, q))])
    psi_x = rng.normal(0.0, 0.7, size=q + 1)
    return SelectionModel(psi_x=psi_x, psi_y=psi_y, x_star=x_star)


def dense_sem_cov(params, w):
    """sigma2 (A^T A)^{-1} via dense linear algebra (oracle path)."""
    a = np.eye(w.n) - params.rho * w.matrix.toarray()
    return params.sigma2_y * np.linalg.inv(a.T @ a)

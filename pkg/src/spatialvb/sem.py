"""Spatial error model core: parameters, precision algebra, log-likelihood.

The response of the model is multivariate Gaussian with mean X beta and
covariance sigma2 * (A^T A)^{-1}, where A = I - rho W. All operations here
are pure; the heavy pieces (log-determinant, trace of M^{-1} dM/drho) are
served by :class:`PrecisionOps`, which precomputes the spectrum of W once
for small/medium n and falls back to sparse-LU plus a stochastic trace
estimator for large n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .weights import SpatialWeights, rho_interval, weight_eigenvalues

RHO_MARGIN = 1e-8


@dataclass(frozen=True)
class SemParams:
    """Constrained model parameters (beta, sigma2_y, rho)."""

    beta: np.ndarray
    sigma2_y: float
    rho: float

    def __post_init__(self):
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, dtype=float)))
        if not self.sigma2_y > 0:
            raise ValueError(f"sigma2_y must be positive, got {self.sigma2_y}")

    def validate_rho(self, w: SpatialWeights) -> None:
        lo, hi = rho_interval(w)
        if not (lo + RHO_MARGIN < self.rho < hi - RHO_MARGIN):
            raise ValueError(f"rho={self.rho} outside admissible interval ({lo}, {hi})")


@dataclass(frozen=True)
class UnconstrainedSemParams:
    """(beta, gamma, rho_logit) with gamma = log sigma2 and
    rho_logit = log(1+rho) - log(1-rho)."""

    beta: np.ndarray
    gamma: float
    rho_logit: float


def to_unconstrained(p: SemParams) -> UnconstrainedSemParams:
    if not (-1.0 < p.rho < 1.0):
        raise ValueError(f"rho={p.rho} must lie strictly inside (-1, 1)")
    rho_logit = float(np.log1p(p.rho) - np.log1p(-p.rho))
    return UnconstrainedSemParams(beta=p.beta.copy(), gamma=float(np.log(p.sigma2_y)),
                                  rho_logit=rho_logit)


def from_unconstrained(u: UnconstrainedSemParams) -> SemParams:
    return SemParams(beta=np.asarray(u.beta, dtype=float).copy(),
                     sigma2_y=float(np.exp(u.gamma)),
                     rho=rho_from_logit(u.rho_logit))


def rho_from_logit(rho_logit: float) -> float:
    # (e^l - 1)/(e^l + 1) evaluated stably
    return float(np.tanh(0.5 * rho_logit))


def drho_dlogit(rho: float) -> float:
    # derivative of rho = tanh(l/2) w.r.t. l
    return 0.5 * (1.0 - rho * rho)


def precision_matrix(rho: float, w: SpatialWeights,
                     interval: tuple[float, float] | None = None) -> sparse.csr_matrix:
    """M_y = (I - rho W)^T (I - rho W), sparse symmetric positive definite.

    Pass a precomputed admissible ``interval`` to skip the eigensolve.
    """
    lo, hi = rho_interval(w) if interval is None else interval
    if not (lo < rho < hi):
        raise ValueError(f"rho={rho} outside admissible interval ({lo}, {hi})")
    a = spatial_filter(rho, w)
    return (a.T @ a).tocsr()


def spatial_filter(rho: float, w: SpatialWeights) -> sparse.csr_matrix:
    """A = I - rho W."""
    n = w.n
    return (sparse.identity(n, format="csr") - rho * w.matrix).tocsr()


def _logdet_via_splu(a: sparse.csr_matrix) -> float:
    """log det(A) for A with positive determinant, via sparse LU."""
    lu = splu(a.tocsc())
    diag = lu.U.diagonal()
    if np.any(diag == 0.0):
        raise np.linalg.LinAlgError("singular spatial filter; rho out of range?")
    return float(np.sum(np.log(np.abs(diag))))


class PrecisionOps:
    """Log-determinant and trace machinery for M_y(rho) on fixed weights.

    For n <= exact_max_n the spectrum of W is computed once, giving exact
    O(n) evaluations of log|M_y| = 2 sum log(1 - rho lam_i) and
    tr{M_y^{-1} dM_y/drho} = -2 sum lam_i / (1 - rho lam_i). Above the
    threshold, log|M_y| uses a sparse LU of A and the trace a Hutchinson
    estimator with Rademacher probes.
    """

    def __init__(self, w: SpatialWeights, exact_max_n: int = 2500, n_probes: int = 20):
        self.weights = w
        self.n_probes = n_probes
        if w.n <= exact_max_n:
            self.eigenvalues = weight_eigenvalues(w)
            self.trace_method = "spectrum"
        else:
            self.eigenvalues = None
            self.trace_method = "hutchinson"
        self._lu_cache: tuple[float, object] | None = None

    def _lu(self, rho: float):
        # one-slot cache: logdet and trace are evaluated at the same rho
        # within a single posterior evaluation; read-once then swap keeps
        # concurrent use safe (worst case a duplicate factorization)
        cached = self._lu_cache
        if cached is None or cached[0] != rho:
            cached = (rho, splu(spatial_filter(rho, self.weights).tocsc()))
            self._lu_cache = cached
        return cached[1]

    def logdet_m(self, rho: float) -> float:
        """log |M_y| = 2 log det(I - rho W)."""
        if self.eigenvalues is not None:
            t = 1.0 - rho * self.eigenvalues
            if np.any(t <= 0.0):
                raise ValueError(f"rho={rho} outside admissible interval")
            return float(2.0 * np.sum(np.log(t)))
        diag = self._lu(rho).U.diagonal()
        if np.any(diag == 0.0):
            raise np.linalg.LinAlgError("singular spatial filter; rho out of range?")
        return float(2.0 * np.sum(np.log(np.abs(diag))))

    def trace_minv_dm(self, rho: float, rng: np.random.Generator | None = None) -> float:
        """tr{M_y^{-1} dM_y/drho} = d log|M_y| / drho = -2 tr{A^{-1} W}."""
        if self.eigenvalues is not None:
            return float(-2.0 * np.sum(self.eigenvalues / (1.0 - rho * self.eigenvalues)))
        if rng is None:
            raise ValueError("stochastic trace estimation needs an RNG stream")
        w = self.weights.matrix
        lu = self._lu(rho)
        n = self.weights.n
        acc = 0.0
        for _ in range(self.n_probes):
            v = rng.integers(0, 2, size=n) * 2.0 - 1.0
            acc += float(v @ lu.solve(w @ v))
        return -2.0 * acc / self.n_probes


def sem_log_likelihood(y: np.ndarray, params: SemParams, x: np.ndarray,
                       w: SpatialWeights,
                       ops: PrecisionOps | None = None) -> float:
    """Gaussian log-likelihood of the full response vector.

    -(n/2) log(2 pi) - (n/2) log sigma2 + (1/2) log|M_y|
    - (1/(2 sigma2)) r^T M_y r, with r = y - X beta.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    n = w.n
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    if x.shape[0] != n or x.shape[1] != params.beta.shape[0]:
        raise ValueError(f"design shape {x.shape} inconsistent with n={n}, "
                         f"len(beta)={params.beta.shape[0]}")
    params.validate_rho(w)
    if ops is not None:
        logdet = ops.logdet_m(params.rho)
    else:
        logdet = 2.0 * _logdet_via_splu(spatial_filter(params.rho, w))
    r = y - x @ params.beta
    ar = r - params.rho * (w.matrix @ r)
    quad = float(ar @ ar)  # r^T A^T A r
    return (-0.5 * n * np.log(2.0 * np.pi)
            - 0.5 * n * np.log(params.sigma2_y)
            + 0.5 * logdet
            - 0.5 * quad / params.sigma2_y)


class PartitionedView:
    """Two-group partition of a design matrix and the square sparse
    matrices tied to it (W and M_y).

    The first group plays the role of the conditioning set (observed units,
    or s_j = observed plus the out-of-block unobserved); the second group is
    the block being conditioned on.
    """

    def __init__(self, first: np.ndarray, second: np.ndarray, n: int,
                 x: np.ndarray | None = None,
                 w: sparse.spmatrix | None = None,
                 m_y: sparse.spmatrix | None = None):
        first = np.asarray(first, dtype=np.intp)
        second = np.asarray(second, dtype=np.intp)
        combined = np.concatenate([first, second])
        if combined.size != n or np.unique(combined).size != n:
            raise ValueError("index groups must be disjoint and cover all units")
        self.first = first
        self.second = second
        self.n = n
        self._x = x
        self._w = w.tocsr() if w is not None else None
        self._m = m_y.tocsr() if m_y is not None else None

    def _group(self, name: str) -> np.ndarray:
        if name == "first":
            return self.first
        if name == "second":
            return self.second
        raise ValueError(f"unknown group {name!r}")

    @property
    def permutation(self) -> np.ndarray:
        return np.concatenate([self.first, self.second])

    def x_rows(self, group: str) -> np.ndarray:
        if self._x is None:
            raise ValueError("view was built without a design matrix")
        return self._x[self._group(group)]

    def w_block(self, row_group: str, col_group: str) -> sparse.csr_matrix:
        if self._w is None:
            raise ValueError("view was built without W")
        return self._w[self._group(row_group)][:, self._group(col_group)].tocsr()

    def m_block(self, row_group: str, col_group: str) -> sparse.csr_matrix:
        if self._m is None:
            raise ValueError("view was built without M_y")
        return self._m[self._group(row_group)][:, self._group(col_group)].tocsr()


def partition(first, second, n: int, x: np.ndarray | None = None,
              w: SpatialWeights | sparse.spmatrix | None = None,
              m_y: sparse.spmatrix | None = None) -> PartitionedView:
    """Build a PartitionedView; groups must be disjoint and exhaustive."""
    w_mat = w.matrix if isinstance(w, SpatialWeights) else w
    return PartitionedView(first, second, n, x=x, w=w_mat, m_y=m_y)

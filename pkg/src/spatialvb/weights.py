"""Sparse spatial weight matrices: construction, normalization, spectral bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse


class DegenerateUnitError(ValueError):
    """A spatial unit has no neighbours (empty weight-matrix row)."""


@dataclass(frozen=True)
class SpatialWeights:
    """Sparse n x n neighbourhood matrix with zero diagonal.

    The stored matrix may be raw (symmetric 0/1-style adjacency) or
    row-normalized; the sparsity pattern is symmetric in either case.
    """

    matrix: sparse.csr_matrix
    row_normalized: bool = False

    def __post_init__(self):
        m = self.matrix
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"weight matrix must be square, got {m.shape}")
        if m.diagonal().any():
            raise ValueError("weight matrix has nonzero diagonal entries")
        if m.nnz and (not np.all(np.isfinite(m.data)) or (m.data < 0).any()):
            raise ValueError("weights must be finite and non-negative")
        pattern = (m != 0)
        if (pattern != pattern.T).nnz != 0:
            raise ValueError("weight-matrix sparsity pattern is not symmetric")
        if self.row_normalized:
            sums = np.asarray(m.sum(axis=1)).ravel()
            occupied = np.diff(m.indptr) > 0
            if not np.allclose(sums[occupied], 1.0, atol=1e-12):
                raise ValueError("row_normalized set but rows do not sum to 1")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def build_rook_grid_weights(side: int) -> SpatialWeights:
    """Raw Rook-adjacency weights on a regular side x side grid.

    Unit (r, c) gets weight 1 to its up/down/left/right neighbours. The
    result is not yet normalized.
    """
    if side < 2:
        raise ValueError(f"grid side must be at least 2, got {side}")
    n = side * side
    rows, cols = [], []
    for r in range(side):
        for c in range(side):
            i = r * side + c
            if c + 1 < side:
                rows += [i, i + 1]
                cols += [i + 1, i]
            if r + 1 < side:
                j = i + side
                rows += [i, j]
                cols += [j, i]
    data = np.ones(len(rows))
    m = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
    return SpatialWeights(matrix=m, row_normalized=False)


def row_normalize(w: SpatialWeights) -> SpatialWeights:
    """Scale each row to sum to 1; the sparsity pattern is unchanged."""
    m = w.matrix.tocsr()
    sums = np.asarray(m.sum(axis=1)).ravel()
    empty = np.flatnonzero(np.diff(m.indptr) == 0)
    if empty.size:
        raise DegenerateUnitError(
            f"unit {empty[0]} has no neighbours; cannot row-normalize"
        )
    inv = sparse.diags(1.0 / sums)
    return SpatialWeights(matrix=(inv @ m).tocsr(), row_normalized=True)


_DENSE_EIG_MAX_N = 2000


def _min_eigenvalue_power(m: sparse.csr_matrix, tol: float = 1e-8,
                          max_iter: int = 10_000) -> float:
    """Smallest eigenvalue of a row-normalized W via power iteration.

    W is similar to a symmetric matrix, so its spectrum is real and lies in
    [lam_min, 1]. Power iteration on I - W (spectrum in [0, 1 - lam_min])
    converges to 1 - lam_min.
    """
    n = m.shape[0]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    mu = 0.0
    for _ in range(max_iter):
        av = v - m @ v
        norm = np.linalg.norm(av)
        if norm == 0.0:
            break
        v_new = av / norm
        mu_new = float(v_new @ (v_new - m @ v_new))
        if abs(mu_new - mu) < tol:
            mu = mu_new
            break
        mu, v = mu_new, v_new
    else:
        raise np.linalg.LinAlgError("power iteration did not converge")
    return 1.0 - mu


def rho_interval(w: SpatialWeights) -> tuple[float, float]:
    """Admissible interval (1/lam_min(W), 1) for the spatial parameter."""
    if not w.row_normalized:
        raise ValueError("rho_interval requires a row-normalized weight matrix")
    if w.n <= _DENSE_EIG_MAX_N:
        eigs = np.linalg.eigvals(w.matrix.toarray())
        lam_min = float(eigs.real.min())
    else:
        lam_min = _min_eigenvalue_power(w.matrix)
    if lam_min >= 0.0:
        return (-np.inf, 1.0)
    return (1.0 / lam_min, 1.0)


def weight_eigenvalues(w: SpatialWeights) -> np.ndarray:
    """All eigenvalues of W (real parts; the spectrum is real for
    row-normalized symmetric-pattern weights). Dense solve, O(n^3)."""
    return np.sort(np.linalg.eigvals(w.matrix.toarray()).real)

"""Samplers for the missing block: the closed-form MAR conditional, blocked
Gibbs sweeps, the MNAR independence/block Metropolis schemes, and a fixed
step-size leapfrog HMC over (theta, y_u)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import cho_solve, solve_triangular

from .missing import BlockPartition, MissingPattern, SelectionModel
from .sem import PartitionedView, SemParams, precision_matrix
from .weights import SpatialWeights


@dataclass(frozen=True)
class ConditionalGaussian:
    """N(mean, sigma2 * P^{-1}) represented by the Cholesky factor of the
    unit-variance precision block P (P = L L^T)."""

    mean: np.ndarray
    chol_lower: np.ndarray
    sigma2: float


def mar_conditional(phi: SemParams, y_first: np.ndarray,
                    view: PartitionedView) -> ConditionalGaussian:
    """Conditional of the second-group responses given the first group.

    mean = X_u beta - M_uu^{-1} M_uo (y_o - X_o beta), cov = sigma2 M_uu^{-1},
    where o/u stand for the view's first/second groups.
    """
    m_uu = view.m_block("second", "second").toarray()
    try:
        chol = np.linalg.cholesky(m_uu)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"conditional precision block not positive definite (rho={phi.rho})"
        ) from exc
    resid = np.asarray(y_first, dtype=float) - view.x_rows("first") @ phi.beta
    rhs = view.m_block("second", "first") @ resid
    mean = view.x_rows("second") @ phi.beta - cho_solve((chol, True), rhs)
    return ConditionalGaussian(mean=mean, chol_lower=chol, sigma2=phi.sigma2_y)


def sample_conditional(cg: ConditionalGaussian, rng: np.random.Generator) -> np.ndarray:
    """Exact draw: mean + sqrt(sigma2) L^{-T} z with z standard normal."""
    if cg.mean.shape[0] == 0:
        return np.empty(0)
    z = rng.standard_normal(cg.mean.shape[0])
    return cg.mean + np.sqrt(cg.sigma2) * solve_triangular(cg.chol_lower.T, z, lower=False)


class _BlockConditionals:
    """Per-block Cholesky factors of M_{u_j u_j} plus the row slices needed
    for the conditional means, valid for one (rho, partition) pair.

    Uses mean_j = y_{u_j} - M_{u_j u_j}^{-1} (M[u_j, :] r) with r = y - X beta,
    which equals the textbook partitioned form and only needs sparse row
    products per visit.
    """

    def __init__(self, phi: SemParams, x: np.ndarray, weights: SpatialWeights,
                 blocks, m_y: sparse.spmatrix | None = None):
        if m_y is None:
            m_y = precision_matrix(phi.rho, weights)
        m_y = m_y.tocsr()
        self.phi = phi
        self.xb = x @ phi.beta
        self.blocks = [np.asarray(b, dtype=np.intp) for b in blocks]
        self.chols = []
        self.rows = []
        for idx in self.blocks:
            block = m_y[idx][:, idx].toarray()
            try:
                self.chols.append(np.linalg.cholesky(block))
            except np.linalg.LinAlgError as exc:
                raise np.linalg.LinAlgError(
                    f"block precision not positive definite (rho={phi.rho})") from exc
            self.rows.append(m_y[idx].tocsr())

    def mean(self, j: int, resid: np.ndarray) -> np.ndarray:
        idx = self.blocks[j]
        rhs = self.rows[j] @ resid
        return (resid[idx] + self.xb[idx]) - cho_solve((self.chols[j], True), rhs)

    def draw(self, j: int, resid: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal(self.blocks[j].shape[0])
        return self.mean(j, resid) + np.sqrt(self.phi.sigma2_y) * solve_triangular(
            self.chols[j].T, z, lower=False)


def _full_conditional(phi: SemParams, y_o: np.ndarray, pattern: MissingPattern,
                      x: np.ndarray, weights: SpatialWeights,
                      m_y: sparse.spmatrix | None = None) -> ConditionalGaussian:
    if m_y is None:
        m_y = precision_matrix(phi.rho, weights)
    view = PartitionedView(pattern.observed_idx, pattern.unobserved_idx,
                           pattern.n, x=x, m_y=m_y)
    return mar_conditional(phi, y_o, view)


def gibbs_sweep(phi: SemParams, y_o: np.ndarray, pattern: MissingPattern,
                partition: BlockPartition, x: np.ndarray, weights: SpatialWeights,
                n1: int, rng: np.random.Generator, y_u_init: np.ndarray,
                m_y: sparse.spmatrix | None = None) -> np.ndarray:
    """N1 full Gibbs sweeps over the blocks of the MAR conditional, each block
    drawn from its exact conditional given the freshest other blocks."""
    if n1 < 1:
        raise ValueError("n1 must be at least 1")
    work = _BlockConditionals(phi, x, weights, partition.blocks, m_y=m_y)
    y = pattern.assemble(y_o, np.asarray(y_u_init, dtype=float))
    resid = y - work.xb
    for _ in range(n1):
        for j, idx in enumerate(work.blocks):
            y[idx] = work.draw(j, resid, rng)
            resid[idx] = y[idx] - work.xb[idx]
    return y[pattern.unobserved_idx]


def _missing_sel_terms(y_vals: np.ndarray, idx: np.ndarray,
                       sel: SelectionModel) -> float:
    # log p(m_i | y_i) restricted to missing units (m_i = 1):
    # t - log(1 + e^t) = -log(1 + e^{-t})
    t = sel.x_star[idx] @ sel.psi_x + sel.psi_y * y_vals
    return float(-np.sum(np.logaddexp(0.0, -t)))


def mcmc_nob(phi: SemParams, sel: SelectionModel, y_o: np.ndarray,
             pattern: MissingPattern, x: np.ndarray, weights: SpatialWeights,
             n1: int, rng: np.random.Generator,
             y_u_init: np.ndarray | None = None,
             m_y: sparse.spmatrix | None = None) -> tuple[np.ndarray, float]:
    """Independence Metropolis over the whole missing vector: proposals from
    the MAR conditional, acceptance from the missingness-likelihood ratio."""
    if n1 < 1:
        raise ValueError("n1 must be at least 1")
    cg = _full_conditional(phi, y_o, pattern, x, weights, m_y=m_y)
    u_idx = pattern.unobserved_idx
    if y_u_init is None:
        y_u = sample_conditional(cg, rng)
    else:
        y_u = np.asarray(y_u_init, dtype=float).copy()
    log_sel = _missing_sel_terms(y_u, u_idx, sel)
    accepted = 0
    for _ in range(n1):
        proposal = sample_conditional(cg, rng)
        log_sel_prop = _missing_sel_terms(proposal, u_idx, sel)
        if np.log(rng.random()) < log_sel_prop - log_sel:
            y_u, log_sel = proposal, log_sel_prop
            accepted += 1
    return y_u, accepted / n1


def mcmc_block(phi: SemParams, sel: SelectionModel, y_o: np.ndarray,
               pattern: MissingPattern, partition: BlockPartition,
               x: np.ndarray, weights: SpatialWeights, scheme: str,
               n1: int, rng: np.random.Generator,
               y_u_init: np.ndarray | None = None, k_prime: int = 3,
               m_y: sparse.spmatrix | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Blockwise Metropolis: per inner iteration visit all k blocks ("allb")
    or a fresh uniform sample of k_prime blocks ("randomb"), proposing each
    block from its MAR conditional given the freshest other blocks.

    Returns the final missing vector and per-block acceptance fractions
    (NaN for blocks never proposed).
    """
    if scheme not in ("allb", "randomb"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if n1 < 1:
        raise ValueError("n1 must be at least 1")
    k = partition.k
    if scheme == "randomb" and not (1 <= k_prime <= k):
        raise ValueError(f"k_prime={k_prime} out of range [1, {k}]")
    work = _BlockConditionals(phi, x, weights, partition.blocks, m_y=m_y)
    if y_u_init is None:
        cg = _full_conditional(phi, y_o, pattern, x, weights, m_y=m_y)
        y_u_init = sample_conditional(cg, rng)
    y = pattern.assemble(y_o, np.asarray(y_u_init, dtype=float))
    resid = y - work.xb
    proposed = np.zeros(k, dtype=np.int64)
    accepted = np.zeros(k, dtype=np.int64)
    for _ in range(n1):
        if scheme == "allb":
            visit = range(k)
        else:
            visit = rng.choice(k, size=k_prime, replace=False)
        for j in visit:
            idx = work.blocks[j]
            proposal = work.draw(j, resid, rng)
            log_ratio = (_missing_sel_terms(proposal, idx, sel)
                         - _missing_sel_terms(y[idx], idx, sel))
            proposed[j] += 1
            if np.log(rng.random()) < log_ratio:
                y[idx] = proposal
                resid[idx] = proposal - work.xb[idx]
                accepted[j] += 1
    with np.errstate(invalid="ignore"):
        rates = np.where(proposed > 0, accepted / np.maximum(proposed, 1), np.nan)
    return y[pattern.unobserved_idx], rates


@dataclass
class McmcConfig:
    """Settings for the inner y_u sampler of one HVB iteration.

    scheme: "direct" (exact MAR conditional), "gibbs" (blocked Gibbs, MAR),
    "nob" (full-vector Metropolis, MNAR), "allb"/"randomb" (block Metropolis,
    MNAR). warm_start carries y_u across outer iterations instead of the
    printed per-iteration redraw from the MAR conditional.
    """

    scheme: str
    n1: int = 10
    partition: BlockPartition | None = None
    k_prime: int = 3
    warm_start: bool = False

    def __post_init__(self):
        if self.scheme not in ("direct", "gibbs", "nob", "allb", "randomb"):
            raise ValueError(f"unknown sampler scheme {self.scheme!r}")
        if self.n1 < 1:
            raise ValueError("n1 must be at least 1")
        if self.scheme in ("gibbs", "allb", "randomb") and self.partition is None:
            raise ValueError(f"scheme {self.scheme!r} needs a block partition")
        if self.scheme == "randomb" and self.partition is not None:
            if not (1 <= self.k_prime <= self.partition.k):
                raise ValueError(f"k_prime={self.k_prime} out of range "
                                 f"[1, {self.partition.k}]")


# -- Hamiltonian Monte Carlo ------------------------------------------------


@dataclass
class HmcConfig:
    """Fixed-step leapfrog HMC settings. mass_diag is the diagonal of R."""

    n_samples: int
    n_leapfrog: int
    step_size: float
    burn_in: int = 0
    mass_diag: np.ndarray | None = None

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.n_leapfrog < 1:
            raise ValueError("n_leapfrog must be at least 1")
        if self.mass_diag is not None:
            md = np.asarray(self.mass_diag, dtype=float)
            if (md <= 0).any():
                raise ValueError("mass_diag must be positive")
            self.mass_diag = md


@dataclass
class HmcResult:
    chain: np.ndarray          # (n_samples, S + n_u) retained draws
    accept_rate: float
    divergences: int
    step_size: float
    log_h_trace: np.ndarray = field(default=None)


def _joint_logh_grad(target, chi: np.ndarray):
    s = target.S
    theta, y_u = chi[:s], chi[s:]
    if hasattr(target, "log_h_and_grads"):
        val, g_t, g_u = target.log_h_and_grads(theta, y_u)
    else:
        val = target.log_h(theta, y_u)
        g_t = target.grad_log_h_theta(theta, y_u)
        g_u = target.grad_log_h_yu(theta, y_u)
    return val, np.concatenate([g_t, g_u])


def leapfrog(target, chi: np.ndarray, s: np.ndarray, eps: float,
             mass_diag: np.ndarray | None = None):
    """One half/full/half leapfrog step for the potential U = -log h.

    Returns (chi', s', log h(chi')). Iterating this L times reproduces the
    trajectory hmc_run integrates with merged half-steps.
    """
    inv_mass = 1.0 / mass_diag if mass_diag is not None else 1.0
    _, grad = _joint_logh_grad(target, chi)
    s_half = s + 0.5 * eps * grad
    chi_new = chi + eps * inv_mass * s_half
    logh_new, grad_new = _joint_logh_grad(target, chi_new)
    s_new = s_half + 0.5 * eps * grad_new
    return chi_new, s_new, logh_new


def hmc_run(target, cfg: HmcConfig, init: tuple[np.ndarray, np.ndarray],
            rng: np.random.Generator) -> HmcResult:
    """HMC with L leapfrog steps per iteration over chi = (theta, y_u).

    Potential U = -log h; momenta refresh from N(0, R). A proposal is
    accepted with probability min(1, exp(H - H*)); non-finite Hamiltonians
    count as divergences and are rejected.
    """
    theta0, y_u0 = init
    chi = np.concatenate([np.asarray(theta0, float), np.asarray(y_u0, float)])
    dim = chi.shape[0]
    mass = cfg.mass_diag if cfg.mass_diag is not None else np.ones(dim)
    inv_mass = 1.0 / mass
    eps = cfg.step_size

    def eval_point(c):
        try:
            val, grad = _joint_logh_grad(target, c)
        except (ValueError, np.linalg.LinAlgError):
            return -np.inf, np.zeros(dim)
        if not np.isfinite(val) or not np.all(np.isfinite(grad)):
            return -np.inf, np.zeros(dim)
        return val, grad

    logh, grad = eval_point(chi)
    if not np.isfinite(logh):
        raise ValueError("HMC initial point has non-finite log h")
    total = cfg.burn_in + cfg.n_samples
    chain = np.empty((cfg.n_samples, dim))
    logh_trace = np.empty(cfg.n_samples)
    accepted = 0
    divergences = 0
    for it in range(total):
        s = rng.standard_normal(dim) * np.sqrt(mass)
        ham0 = -logh + 0.5 * float(s @ (inv_mass * s))
        chi_new, grad_new, logh_new = chi, grad, logh
        s_new = s + 0.5 * eps * grad_new
        diverged = False
        for step in range(cfg.n_leapfrog):
            chi_new = chi_new + eps * inv_mass * s_new
            logh_new, grad_new = eval_point(chi_new)
            if not np.isfinite(logh_new):
                diverged = True
                break
            if step < cfg.n_leapfrog - 1:
                s_new = s_new + eps * grad_new
        if not diverged:
            s_new = s_new + 0.5 * eps * grad_new
            ham1 = -logh_new + 0.5 * float(s_new @ (inv_mass * s_new))
            if np.isfinite(ham1) and np.log(rng.random()) < ham0 - ham1:
                chi, grad, logh = chi_new, grad_new, logh_new
                accepted += 1
        else:
            divergences += 1
        if it >= cfg.burn_in:
            chain[it - cfg.burn_in] = chi
            logh_trace[it - cfg.burn_in] = logh
    return HmcResult(chain=chain, accept_rate=accepted / total,
                     divergences=divergences, step_size=eps,
                     log_h_trace=logh_trace)


def tune_step_size(target, cfg: HmcConfig, init, rng: np.random.Generator,
                   pilot_iters: int = 200, accept_range=(0.6, 0.9),
                   max_halvings: int = 20) -> float:
    """Halve the step size until a short pilot run lands the acceptance rate
    at or above the target window."""
    eps = cfg.step_size
    for _ in range(max_halvings):
        pilot = HmcConfig(n_samples=pilot_iters, n_leapfrog=cfg.n_leapfrog,
                          step_size=eps, burn_in=0, mass_diag=cfg.mass_diag)
        res = hmc_run(target, pilot, init, rng)
        if res.accept_rate >= accept_range[0]:
            return eps
        eps *= 0.5
    return eps

"""Gaussian variational family with factor covariance BB^T + D^2, the JVB
and HVB stochastic-gradient engines, and ADADELTA learning rates.

JVB approximates the joint posterior of (theta, y_u) with one factor
Gaussian of dimension S + n_u. HVB keeps the Gaussian on theta only and
fills y_u each iteration with a draw from its conditional (exact, Gibbs, or
Metropolis, depending on mechanism and scale).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .samplers import (McmcConfig, gibbs_sweep, mcmc_block, mcmc_nob,
                       sample_conditional, _full_conditional)
from .sem import SemParams, spatial_filter

LOG_2PI = float(np.log(2.0 * np.pi))


# -- variational family ------------------------------------------------------


def structural_mask(dim: int, p: int) -> np.ndarray:
    """Boolean (dim, p) mask of free loading entries: the upper triangle of
    the leading p x p block is pinned to zero."""
    mask = np.ones((dim, p), dtype=bool)
    for i in range(min(dim, p)):
        mask[i, i + 1:] = False
    return mask


@dataclass
class VParams:
    """Factor-Gaussian variational parameters (mu, B, d)."""

    mu: np.ndarray
    b: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.d = np.asarray(self.d, dtype=float)
        dim, p = self.b.shape
        if p > dim:
            raise ValueError(f"factor count p={p} exceeds dimension {dim}")
        if self.mu.shape != (dim,) or self.d.shape != (dim,):
            raise ValueError("mu, b, d dimensions disagree")
        if np.any(self.b[~structural_mask(dim, p)] != 0.0):
            raise ValueError("structural zeros of B are not zero")

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    @property
    def p(self) -> int:
        return self.b.shape[1]

    @property
    def mask(self) -> np.ndarray:
        return structural_mask(self.dim, self.p)

    def marginal_sd(self) -> np.ndarray:
        return np.sqrt(np.sum(self.b ** 2, axis=1) + self.d ** 2)

    @staticmethod
    def initial(mu: np.ndarray, p: int, b_scale: float = 0.01,
                d_scale: float = 0.1) -> "VParams":
        mu = np.asarray(mu, dtype=float)
        dim = mu.shape[0]
        b = np.full((dim, p), b_scale) * structural_mask(dim, p)
        return VParams(mu=mu.copy(), b=b, d=np.full(dim, d_scale))


@dataclass(frozen=True)
class ReparamDraw:
    eta: np.ndarray
    eps: np.ndarray


def draw_variational(vp: VParams, rng: np.random.Generator):
    """value = mu + B eta + d o eps with standard-normal eta, eps."""
    eta = rng.standard_normal(vp.p)
    eps = rng.standard_normal(vp.dim)
    value = vp.mu + vp.b @ eta + vp.d * eps
    return value, ReparamDraw(eta=eta, eps=eps)


def woodbury_solve(b: np.ndarray, d: np.ndarray, v: np.ndarray) -> np.ndarray:
    """(B B^T + D^2)^{-1} v via the Woodbury identity; only a p x p solve."""
    d = np.asarray(d, dtype=float)
    if np.any(np.abs(d) < 1e-12):
        raise np.linalg.LinAlgError("singular implied covariance: some d_i ~ 0")
    dinv2 = 1.0 / (d * d)
    u = dinv2 * v
    cap = np.eye(b.shape[1]) + b.T @ (dinv2[:, None] * b)
    w = cho_solve(cho_factor(cap), b.T @ u)
    return u - dinv2 * (b @ w)


def woodbury_logdet(b: np.ndarray, d: np.ndarray) -> float:
    """log |B B^T + D^2| by the matrix determinant lemma."""
    d = np.asarray(d, dtype=float)
    if np.any(np.abs(d) < 1e-12):
        raise np.linalg.LinAlgError("singular implied covariance: some d_i ~ 0")
    dinv2 = 1.0 / (d * d)
    cap = np.eye(b.shape[1]) + b.T @ (dinv2[:, None] * b)
    chol = np.linalg.cholesky(cap)
    return float(2.0 * np.sum(np.log(np.diag(chol))) + np.sum(np.log(d * d)))


def log_q(vp: VParams, value: np.ndarray) -> float:
    dev = np.asarray(value, dtype=float) - vp.mu
    quad = float(dev @ woodbury_solve(vp.b, vp.d, dev))
    return -0.5 * (vp.dim * LOG_2PI + woodbury_logdet(vp.b, vp.d) + quad)


def grad_log_q(vp: VParams, value: np.ndarray) -> np.ndarray:
    dev = np.asarray(value, dtype=float) - vp.mu
    return -woodbury_solve(vp.b, vp.d, dev)


# -- single-draw gradient estimators -----------------------------------------


def _estimator_pieces(vp: VParams, g: np.ndarray, draw: ReparamDraw):
    dev = vp.b @ draw.eta + vp.d * draw.eps
    correction = woodbury_solve(vp.b, vp.d, dev)
    grad_mu = g + correction
    grad_b = np.outer(grad_mu, draw.eta) * vp.mask
    grad_d = grad_mu * draw.eps
    return grad_mu, grad_b, grad_d


def jvb_gradient_estimate(vp: VParams, target, rng: np.random.Generator):
    """One pathwise estimate of the ELBO gradient for the joint family.

    Returns (grad_mu, grad_b, grad_d, elbo_sample) with the structural zeros
    of B re-masked and elbo_sample = log h - log q at the draw.
    """
    value, draw = draw_variational(vp, rng)
    s = target.S
    theta, y_u = value[:s], value[s:]
    if hasattr(target, "log_h_and_grads"):
        logh, g_theta, g_yu = target.log_h_and_grads(theta, y_u, rng=rng)
    else:
        logh = target.log_h(theta, y_u)
        g_theta = target.grad_log_h_theta(theta, y_u)
        g_yu = target.grad_log_h_yu(theta, y_u)
    g = np.concatenate([g_theta, g_yu])
    grad_mu, grad_b, grad_d = _estimator_pieces(vp, g, draw)
    elbo = logh - log_q(vp, value)
    return grad_mu, grad_b, grad_d, float(elbo)


def hvb_gradient_estimate(vp_theta: VParams, target, y_u_sample: np.ndarray,
                          theta: np.ndarray, draw: ReparamDraw,
                          rng: np.random.Generator | None = None):
    """Gradient estimate for the theta-only family at a sampled y_u.

    theta must be the reparameterised value produced from ``draw``. Returns
    (grad_mu, grad_b, grad_d, elbo_proxy); the proxy log h - log q0 is a
    biased ELBO surrogate used only for trend monitoring.
    """
    try:
        g = target.grad_log_h_theta(theta, y_u_sample, rng=rng)
    except TypeError:
        g = target.grad_log_h_theta(theta, y_u_sample)
    grad_mu, grad_b, grad_d = _estimator_pieces(vp_theta, g, draw)
    proxy = target.log_h(theta, y_u_sample) - log_q(vp_theta, theta)
    return grad_mu, grad_b, grad_d, float(proxy)


# -- ADADELTA ----------------------------------------------------------------


@dataclass
class AdadeltaState:
    """Decayed moving averages of squared gradients and squared steps."""

    e_grad2: np.ndarray
    e_delta2: np.ndarray
    upsilon: float = 0.95
    alpha: float = 1e-6

    @staticmethod
    def zeros(shape, upsilon: float = 0.95, alpha: float = 1e-6) -> "AdadeltaState":
        return AdadeltaState(e_grad2=np.zeros(shape), e_delta2=np.zeros(shape),
                             upsilon=upsilon, alpha=alpha)


def adadelta_step(state: AdadeltaState, grad: np.ndarray):
    """Per-coordinate step delta = a o grad with
    a = sqrt((E[delta^2] + alpha) / (E[g^2] + alpha)); returns (delta, state')."""
    ups = state.upsilon
    e_grad2 = ups * state.e_grad2 + (1.0 - ups) * grad ** 2
    rate = np.sqrt((state.e_delta2 + state.alpha) / (e_grad2 + state.alpha))
    delta = rate * grad
    e_delta2 = ups * state.e_delta2 + (1.0 - ups) * delta ** 2
    return delta, AdadeltaState(e_grad2=e_grad2, e_delta2=e_delta2,
                                upsilon=ups, alpha=state.alpha)


# -- fit results --------------------------------------------------------------


@dataclass
class FitResult:
    method: str
    mechanism: str
    seed: int | None
    iterations: int
    p: int
    vparams: VParams | None
    elbo_trace: np.ndarray
    elbo_label: str
    mean_trajectory: np.ndarray          # (iterations, S), unconstrained mu
    theta_names: list
    theta_mean: np.ndarray               # constrained space
    theta_sd: np.ndarray
    yu_index: np.ndarray
    yu_mean: np.ndarray
    yu_sd: np.ndarray
    tuning: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    elapsed_seconds: float = 0.0
    chain: np.ndarray | None = None      # HMC only


def default_init_theta(target) -> np.ndarray:
    """OLS starting point: least squares on the observed rows for beta and
    the error variance, near-zero spatial dependence, 0.01 for every psi."""
    obs = target.pattern.observed_idx
    x_o = target.x[obs]
    y_o = target.y_obs
    beta, rss, rank, _ = np.linalg.lstsq(x_o, y_o, rcond=None)
    dof = max(x_o.shape[0] - x_o.shape[1], 1)
    resid = y_o - x_o @ beta
    sigma2 = max(float(resid @ resid) / dof, 1e-8)
    rho0 = 0.01
    lam0 = float(np.log1p(rho0) - np.log1p(-rho0))
    theta = np.concatenate([beta, [np.log(sigma2), lam0]])
    if target.mechanism == "mnar":
        n_psi = target.x_star.shape[1] + 1
        theta = np.concatenate([theta, np.full(n_psi, 0.01)])
    return theta


def _phi_from_theta(target, theta: np.ndarray) -> SemParams:
    n_beta = target.n_beta
    sigma2 = float(np.exp(theta[n_beta]))
    rho = float(np.tanh(0.5 * theta[n_beta + 1]))
    return SemParams(beta=theta[:n_beta], sigma2_y=sigma2, rho=rho)


def _selection_from_theta(target, theta: np.ndarray):
    from .missing import SelectionModel
    q1 = target.x_star.shape[1]
    return SelectionModel(psi_x=theta[target.n_beta + 2:target.n_beta + 2 + q1],
                          psi_y=float(theta[-1]), x_star=target.x_star)


def draw_initial_yu(target, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw from p(y_u | phi(theta), y_o): the starting value used for
    the missing block by every fit."""
    if target.n_u == 0:
        return np.empty(0)
    phi = _phi_from_theta(target, theta)
    cg = _full_conditional(phi, target.y_obs, target.pattern, target.x,
                           target.weights, m_y=_precision_for(target, phi.rho))
    return sample_conditional(cg, rng)


def _precision_for(target, rho: float):
    target._check_rho(rho)
    a = spatial_filter(rho, target.weights)
    return (a.T @ a).tocsr()


def _theta_summaries(target, vp_theta_mu, vp_b, vp_d, s, rng, n_draws):
    etas = rng.standard_normal((n_draws, vp_b.shape[1]))
    epss = rng.standard_normal((n_draws, vp_b.shape[0]))
    values = vp_theta_mu + etas @ vp_b.T + epss * vp_d
    cons = target.constrain(values[:, :s])
    return cons.mean(axis=0), cons.std(axis=0, ddof=1)


def _smooth_warning(acc_history: list, threshold: float = 0.05) -> str | None:
    if len(acc_history) < 200:
        return None
    tail = np.asarray(acc_history[-200:], dtype=float)
    tail = tail[np.isfinite(tail)]
    if tail.size and np.all(tail < threshold):
        return ("MCMC acceptance persistently below 5%; the tuning guidance "
                "targets 20-30% (adjust block size / N1)")
    return None


_CLIP = 1e4
_SUMMARY_DRAWS = 10_000


def jvb_fit(target, init: np.ndarray, iters: int, p: int,
            rng: np.random.Generator, clip: float = _CLIP,
            summary_draws: int = _SUMMARY_DRAWS, n_draws_per_iter: int = 1,
            seed: int | None = None) -> FitResult:
    """Stochastic-gradient ascent of the joint factor-Gaussian ELBO.

    ``init`` is the starting mean of dimension S + n_u.
    """
    if iters < 1:
        raise ValueError("iters must be at least 1")
    start = time.perf_counter()
    s = target.S
    dim = s + target.n_u
    init = np.asarray(init, dtype=float)
    if init.shape != (dim,):
        raise ValueError(f"init has shape {init.shape}, expected ({dim},)")
    vp = VParams.initial(init, p)
    st_mu = AdadeltaState.zeros(dim)
    st_b = AdadeltaState.zeros((dim, p))
    st_d = AdadeltaState.zeros(dim)
    elbo = np.full(iters, np.nan)
    trajectory = np.empty((iters, s))
    skipped = 0
    clipped = 0
    for t in range(iters):
        trajectory[t] = vp.mu[:s]
        try:
            g_mu, g_b, g_d, elbo_t = jvb_gradient_estimate(vp, target, rng)
            if n_draws_per_iter > 1:
                for _ in range(n_draws_per_iter - 1):
                    a_mu, a_b, a_d, a_e = jvb_gradient_estimate(vp, target, rng)
                    g_mu += a_mu
                    g_b += a_b
                    g_d += a_d
                    elbo_t += a_e
                g_mu /= n_draws_per_iter
                g_b /= n_draws_per_iter
                g_d /= n_draws_per_iter
                elbo_t /= n_draws_per_iter
        except (ValueError, np.linalg.LinAlgError):
            skipped += 1
            continue
        if not (np.all(np.isfinite(g_mu)) and np.all(np.isfinite(g_b))
                and np.all(np.isfinite(g_d))):
            skipped += 1
            continue
        elbo[t] = elbo_t
        clipped += int(np.sum(np.abs(g_mu) > clip) + np.sum(np.abs(g_b) > clip)
                       + np.sum(np.abs(g_d) > clip))
        d_mu, st_mu = adadelta_step(st_mu, np.clip(g_mu, -clip, clip))
        d_b, st_b = adadelta_step(st_b, np.clip(g_b, -clip, clip))
        d_d, st_d = adadelta_step(st_d, np.clip(g_d, -clip, clip))
        vp.mu = vp.mu + d_mu
        vp.b = (vp.b + d_b) * vp.mask
        vp.d = vp.d + d_d
    theta_mean, theta_sd = _theta_summaries(target, vp.mu, vp.b, vp.d, s,
                                            rng, summary_draws)
    yu_sd = vp.marginal_sd()[s:]
    flags = {"skipped_iterations": skipped, "clipped_coordinates": clipped,
             "flagged": bool(skipped > 0.01 * iters)}
    return FitResult(method="jvb", mechanism=target.mechanism, seed=seed,
                     iterations=iters, p=p, vparams=vp, elbo_trace=elbo,
                     elbo_label="elbo", mean_trajectory=trajectory,
                     theta_names=target.constrained_names(),
                     theta_mean=theta_mean, theta_sd=theta_sd,
                     yu_index=target.pattern.unobserved_idx.copy(),
                     yu_mean=vp.mu[s:].copy(), yu_sd=yu_sd,
                     tuning={"clip": clip, "draws_per_iteration": n_draws_per_iter},
                     flags=flags,
                     elapsed_seconds=time.perf_counter() - start)


def _sample_yu(target, theta, cfg: McmcConfig, rng, y_u_prev):
    """Step 5 of the outer loop: one y_u draw for the current theta."""
    phi = _phi_from_theta(target, theta)
    m_y = _precision_for(target, phi.rho)
    pattern = target.pattern
    if cfg.scheme == "direct":
        cg = _full_conditional(phi, target.y_obs, pattern, target.x,
                               target.weights, m_y=m_y)
        return sample_conditional(cg, rng), np.nan
    if cfg.scheme == "gibbs":
        if cfg.warm_start and y_u_prev is not None:
            y0 = y_u_prev
        else:
            cg = _full_conditional(phi, target.y_obs, pattern, target.x,
                                   target.weights, m_y=m_y)
            y0 = sample_conditional(cg, rng)
        out = gibbs_sweep(phi, target.y_obs, pattern, cfg.partition, target.x,
                          target.weights, cfg.n1, rng, y0, m_y=m_y)
        return out, np.nan
    sel = _selection_from_theta(target, theta)
    init = y_u_prev if (cfg.warm_start and y_u_prev is not None) else None
    if cfg.scheme == "nob":
        y_u, acc = mcmc_nob(phi, sel, target.y_obs, pattern, target.x,
                            target.weights, cfg.n1, rng, y_u_init=init, m_y=m_y)
        return y_u, acc
    y_u, rates = mcmc_block(phi, sel, target.y_obs, pattern, cfg.partition,
                            target.x, target.weights, cfg.scheme, cfg.n1, rng,
                            y_u_init=init, k_prime=cfg.k_prime, m_y=m_y)
    return y_u, float(np.nanmean(rates))


def hvb_fit(target, init: np.ndarray, iters: int, p: int,
            sampler_cfg: McmcConfig, rng: np.random.Generator,
            clip: float = _CLIP, summary_draws: int = _SUMMARY_DRAWS,
            yu_window: float = 0.2, seed: int | None = None,
            method_tag: str | None = None,
            n_draws_per_iter: int = 1) -> FitResult:
    """Hybrid VB: factor Gaussian on theta, conditional sampling for y_u.

    ``init`` is the starting mean of dimension S. y_u posterior summaries are
    accumulated from sampler states over the final ``yu_window`` fraction of
    iterations.
    """
    if iters < 1:
        raise ValueError("iters must be at least 1")
    _validate_sampler(target.mechanism, sampler_cfg)
    start = time.perf_counter()
    s = target.S
    init = np.asarray(init, dtype=float)
    if init.shape != (s,):
        raise ValueError(f"init has shape {init.shape}, expected ({s},)")
    vp = VParams.initial(init, p)
    st_mu = AdadeltaState.zeros(s)
    st_b = AdadeltaState.zeros((s, p))
    st_d = AdadeltaState.zeros(s)
    elbo = np.full(iters, np.nan)
    trajectory = np.empty((iters, s))
    window_start = int(np.floor(iters * (1.0 - yu_window)))
    n_u = target.n_u
    yu_count = 0
    yu_sum = np.zeros(n_u)
    yu_sumsq = np.zeros(n_u)
    acc_history = []
    skipped = 0
    clipped = 0
    y_u_prev = None
    for t in range(iters):
        trajectory[t] = vp.mu
        try:
            acc_samples = []
            g_mu = g_b = g_d = proxy = None
            for _ in range(n_draws_per_iter):
                theta, draw = draw_variational(vp, rng)
                if n_u > 0:
                    y_u, acc = _sample_yu(target, theta, sampler_cfg, rng, y_u_prev)
                    y_u_prev = y_u
                else:
                    y_u, acc = np.empty(0), np.nan
                acc_samples.append(acc)
                a_mu, a_b, a_d, a_p = hvb_gradient_estimate(vp, target, y_u,
                                                            theta, draw, rng=rng)
                if g_mu is None:
                    g_mu, g_b, g_d, proxy = a_mu, a_b, a_d, a_p
                else:
                    g_mu += a_mu
                    g_b += a_b
                    g_d += a_d
                    proxy += a_p
            if n_draws_per_iter > 1:
                g_mu /= n_draws_per_iter
                g_b /= n_draws_per_iter
                g_d /= n_draws_per_iter
                proxy /= n_draws_per_iter
            finite_draws = [a for a in acc_samples if np.isfinite(a)]
            acc = float(np.mean(finite_draws)) if finite_draws else np.nan
        except (ValueError, np.linalg.LinAlgError):
            skipped += 1
            continue
        if not (np.all(np.isfinite(g_mu)) and np.all(np.isfinite(g_b))
                and np.all(np.isfinite(g_d))):
            skipped += 1
            continue
        elbo[t] = proxy
        acc_history.append(acc)
        clipped += int(np.sum(np.abs(g_mu) > clip) + np.sum(np.abs(g_b) > clip)
                       + np.sum(np.abs(g_d) > clip))
        d_mu, st_mu = adadelta_step(st_mu, np.clip(g_mu, -clip, clip))
        d_b, st_b = adadelta_step(st_b, np.clip(g_b, -clip, clip))
        d_d, st_d = adadelta_step(st_d, np.clip(g_d, -clip, clip))
        vp.mu = vp.mu + d_mu
        vp.b = (vp.b + d_b) * vp.mask
        vp.d = vp.d + d_d
        if t >= window_start and n_u > 0:
            yu_count += 1
            yu_sum += y_u
            yu_sumsq += y_u ** 2
    if yu_count > 1:
        yu_mean = yu_sum / yu_count
        var = (yu_sumsq - yu_count * yu_mean ** 2) / (yu_count - 1)
        yu_sd = np.sqrt(np.maximum(var, 0.0))
    else:
        yu_mean = yu_sum / max(yu_count, 1)
        yu_sd = np.full(n_u, np.nan)
    theta_mean, theta_sd = _theta_summaries(target, vp.mu, vp.b, vp.d, s,
                                            rng, summary_draws)
    warning = _smooth_warning(acc_history)
    finite_acc = [a for a in acc_history if np.isfinite(a)]
    flags = {"skipped_iterations": skipped, "clipped_coordinates": clipped,
             "flagged": bool(skipped > 0.01 * iters),
             "elbo_is_proxy": True}
    if warning:
        flags["acceptance_warning"] = warning
    tuning = {"scheme": sampler_cfg.scheme, "n1": sampler_cfg.n1,
              "block_size": (sampler_cfg.partition.block_size
                             if sampler_cfg.partition else None),
              "k": sampler_cfg.partition.k if sampler_cfg.partition else None,
              "k_prime": sampler_cfg.k_prime if sampler_cfg.scheme == "randomb" else None,
              "warm_start": sampler_cfg.warm_start,
              "mean_acceptance": float(np.mean(finite_acc)) if finite_acc else None,
              "yu_window": yu_window, "clip": clip,
              "draws_per_iteration": n_draws_per_iter}
    method = method_tag or f"hvb-{sampler_cfg.scheme}"
    return FitResult(method=method, mechanism=target.mechanism, seed=seed,
                     iterations=iters, p=p, vparams=vp, elbo_trace=elbo,
                     elbo_label="elbo_proxy", mean_trajectory=trajectory,
                     theta_names=target.constrained_names(),
                     theta_mean=theta_mean, theta_sd=theta_sd,
                     yu_index=target.pattern.unobserved_idx.copy(),
                     yu_mean=yu_mean, yu_sd=yu_sd, tuning=tuning, flags=flags,
                     elapsed_seconds=time.perf_counter() - start)


def _validate_sampler(mechanism: str, cfg: McmcConfig) -> None:
    if mechanism == "mar" and cfg.scheme in ("nob", "allb", "randomb"):
        raise ValueError(f"scheme {cfg.scheme!r} needs the MNAR mechanism")
    if mechanism == "mnar" and cfg.scheme in ("direct", "gibbs"):
        raise ValueError(f"scheme {cfg.scheme!r} is only exact under MAR")


def hmc_fit(target, cfg, init_theta: np.ndarray, rng: np.random.Generator,
            tune: bool = True, seed: int | None = None) -> FitResult:
    """Run the leapfrog HMC baseline and package chain summaries."""
    from .samplers import HmcConfig, hmc_run, tune_step_size

    start = time.perf_counter()
    y_u0 = draw_initial_yu(target, init_theta, rng)
    eps = cfg.step_size
    if tune:
        eps = tune_step_size(target, cfg, (init_theta, y_u0), rng)
    run_cfg = HmcConfig(n_samples=cfg.n_samples, n_leapfrog=cfg.n_leapfrog,
                        step_size=eps, burn_in=cfg.burn_in,
                        mass_diag=cfg.mass_diag)
    res = hmc_run(target, run_cfg, (init_theta, y_u0), rng)
    s = target.S
    cons = target.constrain(res.chain[:, :s])
    yu_draws = res.chain[:, s:]
    return FitResult(method="hmc", mechanism=target.mechanism, seed=seed,
                     iterations=cfg.n_samples, p=0, vparams=None,
                     elbo_trace=res.log_h_trace, elbo_label="log_h",
                     mean_trajectory=res.chain[:, :s],
                     theta_names=target.constrained_names(),
                     theta_mean=cons.mean(axis=0),
                     theta_sd=cons.std(axis=0, ddof=1),
                     yu_index=target.pattern.unobserved_idx.copy(),
                     yu_mean=yu_draws.mean(axis=0) if yu_draws.size else np.empty(0),
                     yu_sd=yu_draws.std(axis=0, ddof=1) if yu_draws.size else np.empty(0),
                     tuning={"step_size": eps, "n_leapfrog": cfg.n_leapfrog,
                             "burn_in": cfg.burn_in,
                             "accept_rate": res.accept_rate,
                             "divergences": res.divergences},
                     flags={}, elapsed_seconds=time.perf_counter() - start,
                     chain=res.chain)

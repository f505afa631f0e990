"""Unnormalized log-posterior log h(theta, y_u) and its analytic gradients.

theta lives in unconstrained space and is flattened as
(beta_0..beta_r, gamma, rho_logit[, psi_0..psi_q, psi_y]); gamma is
log sigma2_y and rho_logit the logit-type transform of rho. Both VB engines
and the HMC baseline consume this interface.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from .missing import (MissingPattern, SelectionModel, selection_grad_psi,
                      selection_grad_yu, selection_log_prob)
from .sem import RHO_MARGIN, PrecisionOps, drho_dlogit, rho_from_logit
from .weights import SpatialWeights, rho_interval


@dataclass(frozen=True)
class PriorSpec:
    """Gaussian prior variances; all default to 10,000."""

    var_beta: float = 10_000.0
    var_gamma: float = 10_000.0
    var_rho_logit: float = 10_000.0
    var_psi: float = 10_000.0

    def __post_init__(self):
        for name in ("var_beta", "var_gamma", "var_rho_logit", "var_psi"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @staticmethod
    def from_dict(doc: dict) -> "PriorSpec":
        return PriorSpec(**{k: float(v) for k, v in doc.items()})


class TargetDensity:
    """log h(theta, y_u) for the spatial error model under MAR or MNAR.

    Immutable after construction; gradient evaluations may run concurrently.
    The trace/log-determinant backend is exact (precomputed spectrum of W)
    up to ``exact_max_n`` units and stochastic above.
    """

    def __init__(self, x: np.ndarray, weights: SpatialWeights,
                 y_obs: np.ndarray, pattern: MissingPattern,
                 priors: PriorSpec | None = None,
                 x_star: np.ndarray | None = None,
                 mechanism: str = "mar",
                 exact_max_n: int = 2500, n_probes: int = 20):
        if mechanism not in ("mar", "mnar"):
            raise ValueError(f"unknown mechanism {mechanism!r}")
        if mechanism == "mnar" and x_star is None:
            raise ValueError("MNAR target needs the selection design x_star")
        if not weights.row_normalized:
            raise ValueError("target requires row-normalized weights")
        self.mechanism = mechanism
        self.x = np.asarray(x, dtype=float)
        self.weights = weights
        self.pattern = pattern
        self.priors = priors if priors is not None else PriorSpec()
        self.x_star = np.asarray(x_star, dtype=float) if x_star is not None else None
        n = weights.n
        if self.x.shape[0] != n or pattern.n != n:
            raise ValueError("design, weights, and pattern disagree on n")
        y_obs = np.asarray(y_obs, dtype=float)
        if y_obs.shape != (pattern.n_o,):
            raise ValueError(f"y_obs has shape {y_obs.shape}, expected ({pattern.n_o},)")
        self.y_obs = y_obs
        self.ops = PrecisionOps(weights, exact_max_n=exact_max_n, n_probes=n_probes)
        if self.ops.eigenvalues is not None:
            lam_min = float(self.ops.eigenvalues.min())
            self.rho_bounds = ((1.0 / lam_min) if lam_min < 0 else -np.inf, 1.0)
        else:
            self.rho_bounds = rho_interval(weights)
        self.n_beta = self.x.shape[1]
        self._i_gamma = self.n_beta
        self._i_lambda = self.n_beta + 1

    # -- dimensions ----------------------------------------------------

    @property
    def n(self) -> int:
        return self.weights.n

    @property
    def n_u(self) -> int:
        return self.pattern.n_u

    @property
    def S(self) -> int:
        s = self.n_beta + 2
        if self.mechanism == "mnar":
            s += self.x_star.shape[1] + 1
        return s

    def unconstrained_names(self) -> list[str]:
        names = [f"beta{j}" for j in range(self.n_beta)] + ["gamma", "rho_logit"]
        if self.mechanism == "mnar":
            names += [f"psi{j}" for j in range(self.x_star.shape[1])] + ["psi_y"]
        return names

    def constrained_names(self) -> list[str]:
        names = self.unconstrained_names()
        names[self._i_gamma] = "sigma2_y"
        names[self._i_lambda] = "rho"
        return names

    def constrain(self, theta: np.ndarray) -> np.ndarray:
        """Map unconstrained draws (last axis = theta) to constrained space."""
        out = np.array(theta, dtype=float, copy=True)
        out[..., self._i_gamma] = np.exp(out[..., self._i_gamma])
        out[..., self._i_lambda] = np.tanh(0.5 * out[..., self._i_lambda])
        return out

    # -- evaluation ----------------------------------------------------

    def _split(self, theta: np.ndarray):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.S,):
            raise ValueError(f"theta has shape {theta.shape}, expected ({self.S},)")
        beta = theta[:self.n_beta]
        gamma = float(theta[self._i_gamma])
        lam = float(theta[self._i_lambda])
        sel = None
        if self.mechanism == "mnar":
            q1 = self.x_star.shape[1]
            sel = SelectionModel(psi_x=theta[self.n_beta + 2:self.n_beta + 2 + q1],
                                 psi_y=float(theta[-1]), x_star=self.x_star)
        return beta, gamma, lam, sel

    def _check_rho(self, rho: float) -> None:
        lo, hi = self.rho_bounds
        if not (lo + RHO_MARGIN < rho < hi - RHO_MARGIN):
            raise ValueError(f"rho={rho} outside admissible interval ({lo}, {hi})")

    def _prepare(self, theta: np.ndarray, y_u: np.ndarray) -> SimpleNamespace:
        beta, gamma, lam, sel = self._split(theta)
        y_u = np.asarray(y_u, dtype=float)
        if y_u.shape != (self.n_u,):
            raise ValueError(f"y_u has shape {y_u.shape}, expected ({self.n_u},)")
        rho = rho_from_logit(lam)
        self._check_rho(rho)
        y = self.pattern.assemble(self.y_obs, y_u)
        r = y - self.x @ beta
        w = self.weights.matrix
        ar = r - rho * (w @ r)          # A r
        m_r = ar - rho * (w.T @ ar)     # M_y r = A^T A r
        quad = float(ar @ ar)           # r^T M_y r
        return SimpleNamespace(beta=beta, gamma=gamma, lam=lam, sel=sel, rho=rho,
                               y=y, r=r, m_r=m_r, quad=quad)

    def log_h(self, theta: np.ndarray, y_u: np.ndarray) -> float:
        s = self._prepare(theta, y_u)
        pr = self.priors
        val = (-0.5 * self.n * s.gamma
               + 0.5 * self.ops.logdet_m(s.rho)
               - 0.5 * np.exp(-s.gamma) * s.quad
               - 0.5 * float(s.beta @ s.beta) / pr.var_beta
               - 0.5 * s.gamma ** 2 / pr.var_gamma
               - 0.5 * s.lam ** 2 / pr.var_rho_logit)
        if self.mechanism == "mnar":
            psi = s.sel.psi
            val += selection_log_prob(self.pattern, s.y, s.sel)
            val -= 0.5 * float(psi @ psi) / pr.var_psi
        return float(val)

    def grad_log_h_theta(self, theta: np.ndarray, y_u: np.ndarray,
                         rng: np.random.Generator | None = None) -> np.ndarray:
        s = self._prepare(theta, y_u)
        pr = self.priors
        exp_ng = np.exp(-s.gamma)
        g_beta = exp_ng * (self.x.T @ s.m_r) - s.beta / pr.var_beta
        g_gamma = -0.5 * self.n + 0.5 * exp_ng * s.quad - s.gamma / pr.var_gamma
        # dM/drho applied to r: -(W^T + W) r + 2 rho W^T W r
        w = self.weights.matrix
        wr = w @ s.r
        dm_r = -(w.T @ s.r) - wr + 2.0 * s.rho * (w.T @ wr)
        trace = self.ops.trace_minv_dm(s.rho, rng=rng)
        dr_dl = drho_dlogit(s.rho)
        g_lambda = ((0.5 * trace - 0.5 * exp_ng * float(s.r @ dm_r)) * dr_dl
                    - s.lam / pr.var_rho_logit)
        grad = np.concatenate([g_beta, [g_gamma, g_lambda]])
        if self.mechanism == "mnar":
            g_psi = (selection_grad_psi(self.pattern, s.y, s.sel)
                     - s.sel.psi / pr.var_psi)
            grad = np.concatenate([grad, g_psi])
        return grad

    def grad_log_h_yu(self, theta: np.ndarray, y_u: np.ndarray) -> np.ndarray:
        s = self._prepare(theta, y_u)
        full = -np.exp(-s.gamma) * s.m_r
        grad = full[self.pattern.unobserved_idx]
        if self.mechanism == "mnar":
            grad = grad + selection_grad_yu(self.pattern, s.y, s.sel, self.pattern)
        return grad

    def log_h_and_grads(self, theta: np.ndarray, y_u: np.ndarray,
                        rng: np.random.Generator | None = None):
        """(log h, grad wrt theta, grad wrt y_u) sharing one preparation pass."""
        s = self._prepare(theta, y_u)
        pr = self.priors
        exp_ng = np.exp(-s.gamma)
        logdet = self.ops.logdet_m(s.rho)
        val = (-0.5 * self.n * s.gamma + 0.5 * logdet - 0.5 * exp_ng * s.quad
               - 0.5 * float(s.beta @ s.beta) / pr.var_beta
               - 0.5 * s.gamma ** 2 / pr.var_gamma
               - 0.5 * s.lam ** 2 / pr.var_rho_logit)
        g_beta = exp_ng * (self.x.T @ s.m_r) - s.beta / pr.var_beta
        g_gamma = -0.5 * self.n + 0.5 * exp_ng * s.quad - s.gamma / pr.var_gamma
        w = self.weights.matrix
        wr = w @ s.r
        dm_r = -(w.T @ s.r) - wr + 2.0 * s.rho * (w.T @ wr)
        trace = self.ops.trace_minv_dm(s.rho, rng=rng)
        dr_dl = drho_dlogit(s.rho)
        g_lambda = ((0.5 * trace - 0.5 * exp_ng * float(s.r @ dm_r)) * dr_dl
                    - s.lam / pr.var_rho_logit)
        g_theta = np.concatenate([g_beta, [g_gamma, g_lambda]])
        g_yu = -exp_ng * s.m_r[self.pattern.unobserved_idx]
        if self.mechanism == "mnar":
            val += selection_log_prob(self.pattern, s.y, s.sel)
            psi = s.sel.psi
            val -= 0.5 * float(psi @ psi) / pr.var_psi
            g_psi = selection_grad_psi(self.pattern, s.y, s.sel) - psi / pr.var_psi
            g_theta = np.concatenate([g_theta, g_psi])
            g_yu = g_yu + selection_grad_yu(self.pattern, s.y, s.sel, self.pattern)
        return float(val), g_theta, g_yu

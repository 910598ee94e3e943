"""Regularised maximum pseudo-likelihood for the lattice MRF.

The objective over observed sites Ω is

    sum_{i in Ω} log p(x_i | x_{N(i) ∩ Ω}) - lam * ||B||_F^2

with neighborhoods restricted by the sampling geometry. B is optimised
through its upper triangle, so every iterate is exactly symmetric; alpha[K-1]
is pinned at 0 (gauge) and the other alpha entries are boxed to
[-alpha_bound, alpha_bound].
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from contracts.errors import InvalidInputError, NumericError
from contracts.estimation import FitResult, MPLEConfig, OptimizerKind, RecoveryReport
from contracts.lattice import LabelVolume, MRFParams
from contracts.observation import ObservationSet
from runtime.sampling import observed_neighbor_counts


# ── Objective ───────────────────────────────────────────────────────


def _site_features(
    obs: ObservationSet, volume: LabelVolume, K: int
) -> tuple[np.ndarray, np.ndarray]:
    if obs.budget == 0:
        raise InvalidInputError("observation set is empty")
    if tuple(obs.dims) != tuple(volume.spec.dims):
        raise InvalidInputError("observation dims do not match the volume")
    if volume.K > K:
        raise InvalidInputError(f"volume has K={volume.K} types, fit asked for K={K}")
    return observed_neighbor_counts(obs, volume.spec, volume.labels, K)


def _objective_and_grads(
    alpha: np.ndarray, B: np.ndarray, x: np.ndarray, C: np.ndarray, lam: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Penalised pseudo-log-likelihood and its (alpha, symmetrised B) gradients."""
    logits = alpha + C @ B.T
    log_norm = logsumexp(logits, axis=1)
    n = x.shape[0]
    ll = float(logits[np.arange(n), x].sum() - log_norm.sum())
    probs = np.exp(logits - log_norm[:, None])
    resid = -probs
    resid[np.arange(n), x] += 1.0
    grad_alpha = resid.sum(axis=0)
    G = resid.T @ C
    grad_B = 0.5 * (G + G.T) - 2.0 * lam * B
    return ll - lam * float((B * B).sum()), grad_alpha, grad_B


def pseudo_log_likelihood(obs: ObservationSet, volume: LabelVolume, params: MRFParams) -> float:
    """Penalised pseudo-log-likelihood of the observed labels (penalty weight ``params.lam``)."""
    x, C = _site_features(obs, volume, params.K)
    value, _, _ = _objective_and_grads(params.alpha_array, params.B_array, x, C, params.lam)
    return value


def pseudo_ll_gradient(
    obs: ObservationSet, volume: LabelVolume, params: MRFParams
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of :func:`pseudo_log_likelihood`.

    ``grad_B`` is the symmetrised matrix gradient ``(G + G^T)/2 - 2 lam B``.
    Perturbing a symmetric B along ``E_ab + E_ba`` therefore changes the
    objective at rate ``2 * grad_B[a, b]`` off the diagonal and ``grad_B[a, a]``
    on it.
    """
    x, C = _site_features(obs, volume, params.K)
    _, g_alpha, g_B = _objective_and_grads(params.alpha_array, params.B_array, x, C, params.lam)
    return g_alpha, g_B


# ── Parameter packing ───────────────────────────────────────────────


class _Packing:
    """theta = [alpha (K), upper triangle of B incl. diagonal]."""

    def __init__(self, K: int) -> None:
        self.K = K
        self.iu = np.triu_indices(K)
        self.offdiag = self.iu[0] != self.iu[1]

    @property
    def size(self) -> int:
        return self.K + self.iu[0].size

    def unpack(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        alpha = theta[: self.K]
        B = np.zeros((self.K, self.K))
        B[self.iu] = theta[self.K:]
        B = B + np.triu(B, 1).T
        return alpha, B

    def pack_grad(self, g_alpha: np.ndarray, g_B: np.ndarray) -> np.ndarray:
        g_tri = g_B[self.iu] * np.where(self.offdiag, 2.0, 1.0)
        return np.concatenate([g_alpha, g_tri])

    def bounds(self, alpha_bound: float) -> list[tuple[float | None, float | None]]:
        b: list[tuple[float | None, float | None]] = [(-alpha_bound, alpha_bound)] * (self.K - 1)
        b.append((0.0, 0.0))
        b.extend([(None, None)] * self.iu[0].size)
        return b


def _projected_grad_norm(theta: np.ndarray, grad: np.ndarray, bounds: list) -> float:
    """inf-norm of the ascent gradient restricted to directions the box allows."""
    g = grad.copy()
    for n, (lo, hi) in enumerate(bounds):
        if lo is not None and hi is not None and lo == hi:
            g[n] = 0.0
        elif hi is not None and theta[n] >= hi and g[n] > 0:
            g[n] = 0.0
        elif lo is not None and theta[n] <= lo and g[n] < 0:
            g[n] = 0.0
    return float(np.max(np.abs(g))) if g.size else 0.0


# ── Optimisers ──────────────────────────────────────────────────────


def _fit_lbfgs(f, theta0, bounds, config: MPLEConfig, history: list[float]):
    def neg(theta: np.ndarray) -> tuple[float, np.ndarray]:
        value, grad = f(theta)
        return -value, -grad

    def record(theta: np.ndarray) -> None:
        history.append(f(theta)[0])

    res = minimize(
        neg,
        theta0,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        callback=record,
        options={
            "maxiter": config.max_iters,
            "gtol": config.grad_tolerance,
            "ftol": 1e-15,
            "maxls": 50,
        },
    )
    return np.asarray(res.x, dtype=float), int(res.nit)


def _fit_gradient_descent(f, theta0, bounds, config: MPLEConfig, history: list[float]):
    lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds])
    hi = np.array([np.inf if b[1] is None else b[1] for b in bounds])
    theta = np.clip(theta0, lo, hi)
    value, grad = f(theta)
    step = 1.0
    it = 0
    while it < config.max_iters and _projected_grad_norm(theta, grad, bounds) >= config.grad_tolerance:
        # Armijo backtracking on the projected ascent step
        while True:
            cand = np.clip(theta + step * grad, lo, hi)
            cand_value, cand_grad = f(cand)
            if cand_value >= value + 1e-4 * float(grad @ (cand - theta)):
                break
            step *= 0.5
            if step < 1e-20:
                return theta, it
        theta, value, grad = cand, cand_value, cand_grad
        history.append(value)
        it += 1
        step *= 2.0
    return theta, it


def fit(obs: ObservationSet, volume: LabelVolume, K: int, config: MPLEConfig | None = None) -> FitResult:
    """Estimate gauge-fixed (alpha, B) by maximum pseudo-likelihood.

    Non-convergence is reported through ``FitResult.converged``, not raised.
    """
    config = config or MPLEConfig()
    x, C = _site_features(obs, volume, K)
    pack = _Packing(K)
    lam = config.lam

    def f(theta: np.ndarray) -> tuple[float, np.ndarray]:
        alpha, B = pack.unpack(theta)
        value, g_alpha, g_B = _objective_and_grads(alpha, B, x, C, lam)
        return value, pack.pack_grad(g_alpha, g_B)

    bounds = pack.bounds(config.alpha_bound)
    theta0 = np.zeros(pack.size)
    history: list[float] = [f(theta0)[0]]
    if config.optimizer == OptimizerKind.LBFGS:
        theta, iterations = _fit_lbfgs(f, theta0, bounds, config, history)
    else:
        theta, iterations = _fit_gradient_descent(f, theta0, bounds, config, history)

    value, grad = f(theta)
    if not np.isfinite(value) or not np.all(np.isfinite(theta)):
        raise NumericError("pseudo-likelihood fit produced non-finite parameters")
    grad_norm = _projected_grad_norm(theta, grad, bounds)
    alpha, B = pack.unpack(theta)
    params = MRFParams.from_arrays(alpha - alpha[-1], B, lam)
    clamped = bool(np.any(np.abs(alpha[:-1]) >= config.alpha_bound))
    return FitResult(
        params=params,
        converged=grad_norm < config.grad_tolerance,
        iterations=iterations,
        objective=value,
        grad_norm=grad_norm,
        optimizer=config.optimizer,
        clamped=clamped,
        history=history,
    )


# ── Scoring ─────────────────────────────────────────────────────────


def recovery_error(est: MRFParams, truth: MRFParams) -> RecoveryReport:
    """Blockwise MAE/RMSE after fixing both parameter sets to alpha[K-1] = 0.

    Alpha is scored on its K-1 free entries; B on the upper triangle with diagonal.
    """
    if est.K != truth.K:
        raise InvalidInputError(f"K mismatch: {est.K} vs {truth.K}")
    e, t = est.gauge_fixed(), truth.gauge_fixed()
    da = (e.alpha_array - t.alpha_array)[:-1]
    iu = np.triu_indices(est.K)
    db = (e.B_array - t.B_array)[iu]
    return RecoveryReport(
        mae_alpha=float(np.mean(np.abs(da))),
        rmse_alpha=float(np.sqrt(np.mean(da**2))),
        mae_B=float(np.mean(np.abs(db))),
        rmse_B=float(np.sqrt(np.mean(db**2))),
    )

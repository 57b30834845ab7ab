"""Conditional maximum likelihood for MBSARMA models via EM.

The latent weights of the Gaussian-kernel log-BS law are identically one, so
the Q function equals the conditional log-likelihood. Each EM cycle updates
(alpha, Psi) from the cross-product matrix of sinh residuals and then
maximises over the dynamics block gamma_0 = (phi_j, theta_j, beta_j, eta_j)_j
with BFGS and analytic scores.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .distributions import LOG_2PI, NotPositiveDefiniteError, correlation_cholesky, log_cosh
from .model import (
    ModelSpec,
    ParamVector,
    RootReport,
    SeriesPanel,
    _lagged,
    _ma_filter,
    _resolve_m,
    check_roots,
    compute_locations,
    conditional_loglik,
    detrended,
    unvech_corr,
    vech_lower,
)
from .optim import BfgsResult, bfgs_minimize

log = logging.getLogger(__name__)


class DegenerateDataError(ValueError):
    """The data cannot identify the model (e.g. a component with zero spread)."""


@dataclass
class EmSettings:
    loglik_tol: float = 1e-6
    max_em_iters: int = 500
    bfgs_grad_tol: float = 1e-8
    bfgs_max_iters: int = 200
    hessian_step: float = 1e-5
    # "closed_form": ratio/trace update only; "exact": closed form followed by
    # exact maximisation of the likelihood over (alpha, Psi) given gamma_0
    shape_corr_update: str = "exact"
    compute_std_errors: bool = True
    warm_start_bfgs: bool = True

    def __post_init__(self):
        for name in ("loglik_tol", "max_em_iters", "bfgs_grad_tol", "bfgs_max_iters", "hessian_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.shape_corr_update not in ("closed_form", "exact"):
            raise ValueError("shape_corr_update must be 'closed_form' or 'exact'")


@dataclass(eq=False)
class EmInternals:
    s: np.ndarray       # sinh((Y - mu)/2), rows t = m+1..n
    kappa: np.ndarray   # cosh((Y - mu)/2)
    S: np.ndarray
    R: np.ndarray
    v: np.ndarray       # rows of Psi^{-1} a_t

    @property
    def n_eff(self) -> int:
        return self.s.shape[0]


def compute_internals(spec: ModelSpec, params: ParamVector, panel: SeriesPanel,
                      m: int | None = None) -> EmInternals:
    state = compute_locations(spec, params, panel, m)
    m = state.valid_from
    h = 0.5 * (panel.y[m:] - state.mu[m:])
    s = np.sinh(h)
    S = s.T @ s
    chol = correlation_cholesky(params.psi)
    a = 2.0 / params.alpha * s
    v = cho_solve((chol, True), a.T).T
    return EmInternals(s=s, kappa=np.cosh(h), S=S, R=S / s.shape[0], v=v)


def q_function(spec: ModelSpec, params: ParamVector, panel: SeriesPanel,
               m: int | None = None) -> float:
    """EM objective written through the cross-product matrix S.

    Uses c_0 = -(n-m)(d/2) log(2 pi); with that constant Q coincides with the
    conditional log-likelihood.
    """
    state = compute_locations(spec, params, panel, m)
    m = state.valid_from
    h = 0.5 * (panel.y[m:] - state.mu[m:])
    N, d = h.shape
    with np.errstate(over="ignore", invalid="ignore"):
        s = np.sinh(h)
        S = s.T @ s
    chol = correlation_cholesky(params.psi)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    with np.errstate(invalid="ignore"):
        trace = np.trace(cho_solve((chol, True), S))
    alpha = params.alpha
    val = (
        -N * 0.5 * d * LOG_2PI
        - N * d * math.log(alpha)
        - 0.5 * N * logdet
        + np.sum(log_cosh(h))
        - 2.0 / alpha**2 * trace
    )
    return float(val) if np.isfinite(val) else -np.inf


# -- M-step (a): shape and correlation -----------------------------------

def m_step_shape_corr(internals: EmInternals) -> tuple[float, np.ndarray]:
    """Closed-form update alpha = 2 sqrt(tr(R)/d), Psi = D^{-1} R D^{-1}."""
    R = internals.R
    diag = np.diag(R)
    bad = np.flatnonzero(~(diag > 0))
    if bad.size:
        raise DegenerateDataError(
            f"component {bad[0] + 1} has zero residual spread; correlation is undefined"
        )
    dinv = 1.0 / np.sqrt(diag)
    psi = R * np.outer(dinv, dinv)
    np.fill_diagonal(psi, 1.0)
    psi = 0.5 * (psi + psi.T)
    alpha = 2.0 * math.sqrt(np.trace(R) / R.shape[0])
    return alpha, psi


def _profile_corr(R: np.ndarray, psi: np.ndarray):
    """Profile log-likelihood per observation over Psi (alpha concentrated out)
    and its gradient with respect to vech(Psi)."""
    d = R.shape[0]
    try:
        chol = correlation_cholesky(psi)
    except NotPositiveDefiniteError:
        return -np.inf, None
    Pinv = cho_solve((chol, True), np.eye(d))
    tr = np.trace(Pinv @ R)
    val = -0.5 * d * math.log(tr) - np.sum(np.log(np.diag(chol)))
    G = 0.5 * d * (Pinv @ R @ Pinv) / tr - 0.5 * Pinv
    return val, 2.0 * vech_lower(G)


def exact_shape_corr(internals: EmInternals, start: np.ndarray | None = None,
                     gtol: float = 1e-12) -> tuple[float, np.ndarray]:
    """Maximise the likelihood over (alpha, Psi) with gamma_0 held fixed.

    Starts from the closed-form update (or ``start``) and concentrates alpha
    out via alpha(Psi)^2 = 4 tr(Psi^{-1} R) / d.
    """
    R = internals.R
    d = R.shape[0]
    alpha0, psi0 = m_step_shape_corr(internals)
    if d == 1:
        return alpha0, psi0
    psi_start = psi0 if start is None else start

    def fg(x):
        val, grad = _profile_corr(R, unvech_corr(x, d))
        if grad is None:
            return np.inf, np.zeros_like(x)
        return -val, -grad

    x0 = vech_lower(psi_start)
    res = bfgs_minimize(fg, x0, gtol=gtol, max_iter=500)
    best = res.x if res.fun <= fg(vech_lower(psi0))[0] else vech_lower(psi0)
    psi = unvech_corr(best, d)
    Pinv = cho_solve((correlation_cholesky(psi), True), np.eye(d))
    alpha = 2.0 * math.sqrt(np.trace(Pinv @ R) / d)
    return alpha, psi


# -- M-step (b): dynamics --------------------------------------------------

def _component_jacobian(y_j, x, params: ParamVector, j: int, spec: ModelSpec, m: int):
    """Innovations u_t (t >= m) and the full recursive Jacobian d mu_t / d block_j.

    d mu_t = G_t - sum_l theta_l d mu_{t-l}, where G_t is the derivative with
    past innovations held fixed; solved by the same MA filter as u.
    """
    pj, qj, k = spec.p[j], spec.q[j], spec.k
    phi, theta, beta, eta = params.phi[j], params.theta[j], params.beta[j], params.eta[j]
    n = y_j.shape[0]
    rho = y_j - x @ beta if k else y_j.copy()
    e = rho[m:] - eta
    if pj:
        lag_rho = _lagged(rho, pj, m)
        e = e - lag_rho @ phi
    u_tail = _ma_filter(e, theta)
    u = np.zeros(n)
    u[m:] = u_tail
    cols = []
    if pj:
        cols.append(lag_rho)
    if qj:
        cols.append(_lagged(u, qj, m))
    if k:
        xb = x[m:].copy()
        for i in range(pj):
            xb -= phi[i] * x[m - i - 1:n - i - 1]
        cols.append(xb)
    cols.append(np.ones((n - m, 1)))
    G = np.hstack(cols)
    D = _ma_filter(G, theta)
    return u_tail, D


def _value_and_dynamics_grad(spec: ModelSpec, params: ParamVector, panel: SeriesPanel,
                             m: int, chol: np.ndarray):
    d = spec.d
    U, Ds = [], []
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(d):
            u_tail, D = _component_jacobian(panel.y[:, j], panel.x, params, j, spec, m)
            U.append(u_tail)
            Ds.append(D)
        resid = np.column_stack(U)
        h = 0.5 * resid
        sh = np.sinh(h)
        a = 2.0 / params.alpha * sh
        w = solve_triangular(chol, a.T, lower=True, check_finite=False)
        N = resid.shape[0]
        val = (
            N * d * (-math.log(params.alpha))
            + np.sum(log_cosh(h))
            - 0.5 * N * d * LOG_2PI
            - N * np.sum(np.log(np.diag(chol)))
            - 0.5 * np.sum(w**2)
        )
        v = solve_triangular(chol, w, lower=True, trans="T", check_finite=False).T
        c = 2.0 / params.alpha * np.cosh(h)
        score_mu = 0.5 * (c * v - np.tanh(h))
        grad = np.concatenate([Ds[j].T @ score_mu[:, j] for j in range(d)])
    if not (np.isfinite(val) and np.all(np.isfinite(grad))):
        return -np.inf, np.full(spec.n_dynamics, np.nan)
    return float(val), grad


def dynamics_score(spec: ModelSpec, params: ParamVector, panel: SeriesPanel,
                   m: int | None = None) -> np.ndarray:
    """Analytic gradient of Q (= l) with respect to gamma_0 at fixed alpha, Psi."""
    params.check(spec)
    panel.check(spec, m)
    m = _resolve_m(spec, m)
    chol = correlation_cholesky(params.psi)
    return _value_and_dynamics_grad(spec, params, panel, m, chol)[1]


def m_step_dynamics(spec: ModelSpec, params: ParamVector, panel: SeriesPanel,
                    settings: EmSettings | None = None, m: int | None = None,
                    hess_inv0: np.ndarray | None = None) -> tuple[ParamVector, BfgsResult]:
    """BFGS ascent on Q over gamma_0 with alpha and Psi fixed."""
    settings = settings or EmSettings()
    params.check(spec)
    panel.check(spec, m)
    m = _resolve_m(spec, m)
    chol = correlation_cholesky(params.psi)

    def fg(g0):
        val, grad = _value_and_dynamics_grad(spec, params.with_dynamics(spec, g0), panel, m, chol)
        return -val, -grad

    res = bfgs_minimize(fg, params.dynamics_vector(), gtol=settings.bfgs_grad_tol,
                        max_iter=settings.bfgs_max_iters, hess_inv0=hess_inv0)
    new = params.with_dynamics(spec, res.x)
    new.alpha = params.alpha
    return new, res


# -- Gaussian conditional least squares ------------------------------------

@dataclass(eq=False)
class ClsResult:
    block: np.ndarray     # (phi, theta, beta, eta)
    u: np.ndarray         # innovations for t >= m
    sigma2: float
    converged: bool


def _single_spec(spec: ModelSpec, j: int) -> ModelSpec:
    return ModelSpec(1, spec.k, (spec.p[j],), (spec.q[j],))


def pacf_to_ar(r: np.ndarray) -> np.ndarray:
    """Map partial autocorrelations in (-1, 1) to stationary AR coefficients
    (Durbin-Levinson recursion); works on complex input."""
    phi = np.zeros(0, dtype=np.result_type(r, float))
    for kk, rk in enumerate(r):
        phi = np.concatenate([phi - rk * phi[::-1], [rk]]) if kk else np.array([rk])
    return phi


def _arma_from_free(w_ar: np.ndarray, w_ma: np.ndarray):
    return pacf_to_ar(np.tanh(w_ar)), -pacf_to_ar(np.tanh(w_ma))


def _arma_jacobian(w_ar: np.ndarray, w_ma: np.ndarray, h: float = 1e-20):
    # complex-step derivatives of the (small) transform
    p, q = w_ar.size, w_ma.size
    J = np.zeros((p + q, p + q))
    w = np.concatenate([w_ar, w_ma]).astype(complex)
    for c in range(p + q):
        wc = w.copy()
        wc[c] += 1j * h
        phi, theta = _arma_from_free(wc[:p], wc[p:])
        J[:, c] = np.concatenate([phi, theta]).imag / h
    return J


def cls_fit(y_j: np.ndarray, x: np.ndarray, p: int, q: int, m: int | None = None,
            max_iter: int = 300) -> ClsResult:
    """Gaussian ARMAX(p, q) fit by conditional least squares.

    Minimises the innovation sum of squares produced by the same recursion
    as the MBSARMA location. ARMA coefficients are searched through
    partial-autocorrelation coordinates, so the result is stationary and
    invertible; beta and eta start from OLS on [x, 1].
    """
    y_j = np.asarray(y_j, dtype=float)
    x = np.zeros((y_j.size, 0)) if x is None else np.asarray(x, dtype=float).reshape(y_j.size, -1)
    k = x.shape[1]
    spec1 = ModelSpec(1, k, (p,), (q,))
    m = spec1.m if m is None else m
    N = y_j.size - m
    design = np.column_stack([x[m:], np.ones(N)])
    coef, *_ = np.linalg.lstsq(design, y_j[m:], rcond=None)
    base = ParamVector.zeros(spec1)

    def block(z):
        phi, theta = _arma_from_free(z[:p], z[p:p + q])
        return np.concatenate([phi, theta, z[p + q:]])

    def fg(z):
        pv = base.with_dynamics(spec1, block(z))
        with np.errstate(over="ignore", invalid="ignore"):
            u, D = _component_jacobian(y_j, x, pv, 0, spec1, m)
            f = u @ u / N
            g = -2.0 * (D.T @ u) / N
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            return np.inf, np.zeros_like(z)
        if p + q:
            g = np.concatenate([_arma_jacobian(z[:p], z[p:p + q]).T @ g[:p + q], g[p + q:]])
        return f, g

    res = bfgs_minimize(fg, np.concatenate([np.zeros(p + q), coef]), gtol=1e-9, max_iter=max_iter)
    blk = block(res.x)
    u, _ = _component_jacobian(y_j, x, base.with_dynamics(spec1, blk), 0, spec1, m)
    # a stalled line search at a tiny gradient is as good as converged here
    ok = res.converged or np.max(np.abs(res.grad)) < 1e-5
    return ClsResult(blk, u, float(u @ u / N), bool(ok and np.isfinite(res.fun)))


def _repair_corr(psi: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    if np.min(np.linalg.eigvalsh(psi)) >= floor:
        return psi
    d = psi.shape[0]
    for lam in [0.01, 0.05] + [round(0.1 * i, 1) for i in range(1, 11)]:
        cand = (1 - lam) * psi + lam * np.eye(d)
        if np.min(np.linalg.eigvalsh(cand)) >= floor:
            return cand
    return np.eye(d)


def initialize(spec: ModelSpec, panel: SeriesPanel, m: int | None = None) -> ParamVector:
    """Data-driven starting values.

    Dynamics from per-component Gaussian CLS fits; alpha is the mean of the
    marginal log-BS shape estimates; Psi is the correlation of the
    standardised innovations (shrunk toward I if not positive definite).
    """
    panel.check(spec, m)
    m = _resolve_m(spec, m)
    pv = ParamVector.zeros(spec)
    resid = np.empty((panel.n - m, spec.d))
    for j in range(spec.d):
        y_j = panel.y[:, j]
        try:
            fit = cls_fit(y_j, panel.x, spec.p[j], spec.q[j], m)
            if not fit.converged:
                raise RuntimeError("CLS did not converge")
            blk = fit.block
        except Exception as exc:  # noqa: BLE001 - any CLS failure falls back
            log.info("CLS initialisation failed for component %d (%s); using the mean", j + 1, exc)
            blk = np.zeros(spec.block_size(j))
            blk[-1] = np.mean(y_j)
        pos = sum(spec.block_size(i) for i in range(j))
        g0 = pv.dynamics_vector()
        g0[pos:pos + spec.block_size(j)] = blk
        pv = pv.with_dynamics(spec, g0)
    state = compute_locations(spec, pv, panel, m)
    resid = panel.y[m:] - state.mu[m:]
    s = np.sinh(0.5 * resid)
    alpha_j = 2.0 * np.sqrt(np.mean(s**2, axis=0))
    if np.any(~(alpha_j > 0)):
        raise DegenerateDataError(
            f"component {int(np.flatnonzero(~(alpha_j > 0))[0]) + 1} is constant after initial fit"
        )
    pv.alpha = float(np.mean(alpha_j))
    a = 2.0 / pv.alpha * s
    R0 = a.T @ a / a.shape[0]
    dinv = 1.0 / np.sqrt(np.diag(R0))
    psi = R0 * np.outer(dinv, dinv)
    np.fill_diagonal(psi, 1.0)
    pv.psi = _repair_corr(psi)
    np.fill_diagonal(pv.psi, 1.0)
    return pv


# -- EM driver -------------------------------------------------------------

@dataclass(eq=False)
class FitResult:
    spec: ModelSpec
    estimates: ParamVector
    loglik: float
    bic: float
    em_iterations: int
    em_trace: np.ndarray
    converged: bool
    root_report: list[RootReport]
    m: int
    n_eff: int
    std_errors: ParamVector | None = None
    std_error_vector: np.ndarray | None = None
    covariance: np.ndarray | None = None
    message: str = ""
    notes: list[str] = field(default_factory=list)

    @property
    def n_params(self) -> int:
        return self.spec.n_params

    def summary_rows(self) -> list[tuple[str, float, float]]:
        names = self.spec.param_names()
        est = self.estimates.to_vector()
        se = self.std_error_vector if self.std_error_vector is not None else np.full(est.size, np.nan)
        return list(zip(names, est.tolist(), se.tolist()))


def bic_value(loglik: float, n_params: int, n_eff: int) -> float:
    return -2.0 * loglik + n_params * math.log(n_eff)


def bic(fit: FitResult) -> float:
    """-2 l + kappa log(n - m) with kappa the free-parameter count."""
    return bic_value(fit.loglik, fit.n_params, fit.n_eff)


def em_fit(spec: ModelSpec, panel: SeriesPanel, settings: EmSettings | None = None,
           init: ParamVector | None = None, m: int | None = None) -> FitResult:
    """Fit by EM; ``m`` overrides the conditioning offset (must be >= spec.m)."""
    settings = settings or EmSettings()
    panel.check(spec, m)
    m = _resolve_m(spec, m)
    n_eff = panel.n - m
    notes = []
    floor = m + spec.n_params / spec.d
    if panel.n <= floor:
        notes.append(f"series length {panel.n} is at or below the identifiability floor {floor:.1f}")
        log.warning(notes[-1])

    params = initialize(spec, panel, m) if init is None else init.copy()
    params.check(spec)
    ll = conditional_loglik(spec, params, panel, m)
    if not np.isfinite(ll):
        raise DegenerateDataError("log-likelihood is not finite at the starting values")
    trace = [ll]
    H = None
    converged = False
    message = "iteration limit"
    it = 0
    for it in range(1, settings.max_em_iters + 1):
        # E-step: latent weights are identically 1; nothing to compute.
        internals = compute_internals(spec, params, panel, m)
        if settings.shape_corr_update == "exact":
            alpha, psi = exact_shape_corr(internals, start=params.psi)
        else:
            alpha, psi = m_step_shape_corr(internals)
        params.alpha, params.psi = alpha, psi
        try:
            correlation_cholesky(psi)
        except NotPositiveDefiniteError as exc:
            raise DegenerateDataError(f"correlation estimate became singular: {exc}") from exc
        params, res = m_step_dynamics(spec, params, panel, settings, m,
                                      hess_inv0=H if settings.warm_start_bfgs else None)
        H = res.hess_inv
        ll_new = -res.fun
        trace.append(ll_new)
        if abs(ll_new - ll) < settings.loglik_tol:
            converged = True
            message = "log-likelihood change below tolerance"
            ll = ll_new
            break
        ll = ll_new

    ll = conditional_loglik(spec, params, panel, m)
    fit = FitResult(
        spec=spec, estimates=params, loglik=ll, bic=bic_value(ll, spec.n_params, n_eff),
        em_iterations=it, em_trace=np.array(trace), converged=converged,
        root_report=check_roots(spec, params), m=m, n_eff=n_eff, message=message, notes=notes,
    )
    if settings.compute_std_errors:
        se_vec, cov = observed_info_std_errors(spec, params, panel, settings, m, return_cov=True)
        fit.std_error_vector = se_vec
        fit.covariance = cov
        fit.std_errors = _se_as_params(spec, se_vec)
    return fit


# -- observed information ----------------------------------------------------

def _se_as_params(spec: ModelSpec, se: np.ndarray) -> ParamVector:
    pv = ParamVector.zeros(spec).with_dynamics(spec, se[1:1 + spec.n_dynamics])
    pv.alpha = float(se[0])
    psi = unvech_corr(se[1 + spec.n_dynamics:], spec.d)
    np.fill_diagonal(psi, 0.0)
    pv.psi = psi
    return pv


class HessianWarning(UserWarning):
    pass


def numerical_hessian(f, x: np.ndarray, rel_step: float = 1e-5) -> np.ndarray:
    """Central-difference Hessian with steps ``rel_step * max(1, |x_i|)``."""
    x = np.asarray(x, dtype=float)
    P = x.size
    h = rel_step * np.maximum(1.0, np.abs(x))
    f0 = f(x)
    H = np.empty((P, P))
    E = np.diag(h)
    fp = np.array([f(x + E[i]) for i in range(P)])
    fm = np.array([f(x - E[i]) for i in range(P)])
    for i in range(P):
        H[i, i] = (fp[i] - 2.0 * f0 + fm[i]) / h[i] ** 2
        for j in range(i):
            val = (f(x + E[i] + E[j]) - f(x + E[i] - E[j])
                   - f(x - E[i] + E[j]) + f(x - E[i] - E[j])) / (4.0 * h[i] * h[j])
            H[i, j] = H[j, i] = val
    return H


def std_errors_from_hessian(H: np.ndarray, rel_tol: float = 1e-10):
    """SEs sqrt(diag((-H)^{-1})) with NaN for coordinates the curvature does not pin down."""
    info = -0.5 * (H + H.T)
    w, V = np.linalg.eigh(info)
    if not np.all(np.isfinite(w)):
        return np.full(H.shape[0], np.nan), None
    good = w > rel_tol * max(np.max(np.abs(w)), 1e-300)
    cov = (V[:, good] / w[good]) @ V[:, good].T
    se = np.sqrt(np.clip(np.diag(cov), 0, None))
    if not np.all(good):
        touched = np.any(np.abs(V[:, ~good]) > 1e-6, axis=1)
        se[touched] = np.nan
        warnings.warn(
            f"observed information is not positive definite; {int(touched.sum())} standard error(s) unavailable",
            HessianWarning, stacklevel=3,
        )
        return se, None
    return se, cov


def observed_info_std_errors(spec: ModelSpec, params_hat: ParamVector, panel: SeriesPanel,
                             settings: EmSettings | None = None, m: int | None = None,
                             return_cov: bool = False):
    """Standard errors from the finite-difference observed information, in the
    stacking order of :meth:`ParamVector.to_vector`."""
    settings = settings or EmSettings()
    m = _resolve_m(spec, m)

    def f(gamma):
        if not gamma[0] > 0:
            return np.nan
        try:
            return conditional_loglik(spec, ParamVector.from_vector(spec, gamma), panel, m)
        except NotPositiveDefiniteError:
            return np.nan

    H = numerical_hessian(f, params_hat.to_vector(), settings.hessian_step)
    se, cov = std_errors_from_hessian(H)
    return (se, cov) if return_cov else se


# -- model selection --------------------------------------------------------

@dataclass(eq=False)
class SelectionRow:
    spec: ModelSpec
    fit: FitResult | None
    bic: float
    error: str = ""
    admissible: bool = True  # every AR part stationary and MA part invertible


def select_by_bic(panel: SeriesPanel, candidates: Sequence[ModelSpec],
                  settings: EmSettings | None = None) -> list[SelectionRow]:
    """Fit every candidate on a common effective sample and rank by BIC.

    All fits condition on the largest m in the candidate set. Failed fits are
    kept with ``bic = inf`` and the error message. Fits with a nonstationary
    AR part or a noninvertible MA part rank after every admissible fit: with
    zero pre-sample innovations, a noninvertible MA polynomial can absorb the
    start-up transient and inflate the conditional likelihood.
    """
    settings = settings or EmSettings()
    m = max(s.m for s in candidates)
    rows = []
    for spec in candidates:
        try:
            fit = em_fit(spec, panel, settings, m=m)
            ok = all(r.ar_stationary and r.ma_invertible for r in fit.root_report)
            rows.append(SelectionRow(spec, fit, fit.bic, "" if ok else "roots outside admissible region", ok))
        except Exception as exc:  # noqa: BLE001 - failures are reported per row
            rows.append(SelectionRow(spec, None, math.inf, f"{type(exc).__name__}: {exc}", False))
    rows.sort(key=lambda r: (not r.admissible, r.bic))
    return rows


def symmetric_grid(d: int, k: int, orders: Sequence[int] = (0, 1, 2)) -> list[ModelSpec]:
    return [ModelSpec.symmetric(d, k, p, q) for p in orders for q in orders]


def with_settings(settings: EmSettings, **changes) -> EmSettings:
    return replace(settings, **changes)

"""Residual diagnostics: normalized residuals, Mahalanobis distances, KS and
QQ checks against chi-square, and correlograms of component residuals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.linalg import cho_solve

from .distributions import correlation_cholesky
from .estimation import FitResult
from .model import SeriesPanel, compute_locations


@dataclass(eq=False)
class ResidualSet:
    a: np.ndarray          # (n - m) x d, rows (2/alpha) sinh(u_t / 2)
    d2: np.ndarray         # Mahalanobis distances, approximately chi-square(d)
    sigma_hat: np.ndarray  # alpha^2 Psi / 4, covariance of sinh(u_t / 2)
    valid_from: int


def residuals(fit: FitResult, panel: SeriesPanel) -> ResidualSet:
    """Residuals at the fitted parameters.

    The distance is taken on the standardized scale, D_t^2 = a_t' Psi^-1 a_t,
    which equals sinh(u_t/2)' Sigma^-1 sinh(u_t/2) with Sigma = alpha^2 Psi / 4.
    """
    est = fit.estimates
    state = compute_locations(fit.spec, est, panel, fit.m)
    m = state.valid_from
    a = 2.0 / est.alpha * np.sinh(0.5 * (panel.y[m:] - state.mu[m:]))
    chol = correlation_cholesky(est.psi)
    d2 = np.einsum("ij,ij->i", a, cho_solve((chol, True), a.T).T)
    return ResidualSet(a=a, d2=np.maximum(d2, 0.0), sigma_hat=est.alpha**2 * est.psi / 4.0,
                       valid_from=m)


@dataclass(frozen=True)
class StatResult:
    statistic: float
    p_value: float


def ks_test_chi2(d2, dof: int) -> StatResult:
    """One-sample KS test of ``d2`` against chi-square(dof), asymptotic p-value."""
    if dof < 1:
        raise ValueError("dof must be at least 1")
    d2 = np.asarray(d2, dtype=float).ravel()
    if d2.size == 0:
        raise ValueError("d2 is empty")
    res = stats.kstest(d2, stats.chi2(dof).cdf, method="asymp")
    return StatResult(float(res.statistic), float(res.pvalue))


def _centered(series, max_lag: int) -> np.ndarray:
    x = np.asarray(series, dtype=float).ravel()
    if not 0 <= max_lag < x.size:
        raise ValueError("max_lag must be smaller than the series length")
    x = x - x.mean()
    if not np.any(x):
        raise ValueError("autocorrelations are undefined for a constant series")
    return x


def acf(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelations r_0..r_max_lag (denominator n at every lag)."""
    x = _centered(series, max_lag)
    c0 = x @ x
    return np.array([1.0] + [(x[k:] @ x[:-k]) / c0 for k in range(1, max_lag + 1)])


def pacf(series, max_lag: int) -> np.ndarray:
    """Partial autocorrelations at lags 1..max_lag by Durbin-Levinson."""
    r = acf(series, max_lag)
    out = np.empty(max_lag)
    phi = np.zeros(0)
    v = 1.0
    for k in range(1, max_lag + 1):
        kk = (r[k] - phi @ r[1:k][::-1]) / v
        phi = np.concatenate([phi - kk * phi[::-1], [kk]])
        v *= 1.0 - kk**2
        out[k - 1] = kk
    return out


def ljung_box(series, lags: int = 12) -> StatResult:
    """Ljung-Box Q(L) with its chi-square(L) upper-tail p-value."""
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    r = acf(x, lags)[1:]
    q = n * (n + 2) * np.sum(r**2 / (n - np.arange(1, lags + 1)))
    return StatResult(float(q), float(stats.chi2(lags).sf(q)))


@dataclass(eq=False)
class QqTable:
    theoretical: np.ndarray
    observed: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def coverage(self) -> float:
        return float(np.mean((self.observed >= self.lower) & (self.observed <= self.upper)))

    def rows(self):
        return zip(self.theoretical, self.observed, self.lower, self.upper)


def qq_envelope(d2, dof: int, n_sim: int = 100, level: float = 0.95, seed=0) -> QqTable:
    """QQ data for ``d2`` vs chi-square(dof) with a pointwise simulated envelope.

    Plotting positions are (i - 0.5)/N; the band holds the empirical
    (1 - level)/2 and (1 + level)/2 quantiles of ``n_sim`` sorted chi-square
    samples of the same size.
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if n_sim < 2.0 / (1.0 - level) - 1e-9:
        raise ValueError(f"n_sim must be at least {2.0 / (1.0 - level):g} for level {level}")
    obs = np.sort(np.asarray(d2, dtype=float).ravel())
    N = obs.size
    theo = stats.chi2(dof).ppf((np.arange(1, N + 1) - 0.5) / N)
    sims = np.sort(np.random.default_rng(seed).chisquare(dof, size=(n_sim, N)), axis=1)
    lower, upper = np.quantile(sims, [(1 - level) / 2, (1 + level) / 2], axis=0)
    return QqTable(theo, obs, lower, upper)

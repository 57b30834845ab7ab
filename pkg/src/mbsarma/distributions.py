"""Birnbaum-Saunders (BS), log-BS and multivariate log-BS distributions.

A random variable T ~ BS(alpha, beta) has log T ~ log-BS(alpha, mu = log beta),
and Y ~ log-BS(alpha, mu) iff (2/alpha) sinh((Y - mu)/2) is standard normal.
The d-variate log-BS law asks the vector of those sinh-standardised
components to be N_d(0, Psi) with Psi a correlation matrix.

Densities are evaluated on the log scale throughout.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import log_ndtr, ndtr, ndtri

LOG_2PI = np.log(2.0 * np.pi)
LOG_2 = np.log(2.0)

# smallest acceptable Cholesky pivot of a correlation matrix
PIVOT_FLOOR = 1e-10


class NotPositiveDefiniteError(ValueError):
    """Raised when a correlation matrix cannot be Cholesky-factorised."""


@dataclass(frozen=True)
class BsParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise ValueError(f"beta must be positive, got {self.beta}")


@dataclass(frozen=True)
class LogBsParams:
    alpha: float
    mu: float

    def __post_init__(self):
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not np.isfinite(self.mu):
            raise ValueError(f"mu must be finite, got {self.mu}")


@dataclass(frozen=True, eq=False)
class MvLogBsParams:
    """Common shape ``alpha``, location vector ``mu`` and correlation ``psi``."""

    alpha: float
    mu: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        psi = np.atleast_2d(np.asarray(self.psi, dtype=float))
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        d = mu.shape[0]
        if psi.shape != (d, d):
            raise ValueError(f"psi must be {d}x{d}, got {psi.shape}")
        if not np.allclose(psi, psi.T, rtol=0, atol=1e-12):
            raise ValueError("psi must be symmetric")
        if np.any(np.diag(psi) != 1.0):
            raise ValueError("psi must have unit diagonal")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "psi", psi)

    @property
    def d(self) -> int:
        return self.mu.shape[0]


def correlation_cholesky(psi: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of ``psi``; hard error on near-singular input."""
    psi = np.atleast_2d(np.asarray(psi, dtype=float))
    try:
        L = np.linalg.cholesky(psi)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("correlation matrix is not positive definite") from exc
    if np.min(np.diag(L)) < PIVOT_FLOOR:
        raise NotPositiveDefiniteError(
            f"correlation matrix is numerically singular (pivot {np.min(np.diag(L)):.3g})"
        )
    return L


def log_cosh(x):
    """Overflow-free log(cosh(x))."""
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - LOG_2


# -- univariate BS ---------------------------------------------------------

def _check_positive(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise ValueError("BS support is t > 0")
    return t


def bs_logpdf(t, p: BsParams):
    t = _check_positive(t)
    r = t / p.beta
    # (beta/t)^{1/2} + (beta/t)^{3/2} = r^{-3/2} (r + 1)
    return (
        -np.log(2.0 * p.alpha * p.beta) - 0.5 * LOG_2PI
        - 1.5 * np.log(r) + np.log1p(r)
        - (r + 1.0 / r - 2.0) / (2.0 * p.alpha**2)
    )


def bs_pdf(t, p: BsParams):
    """BS(alpha, beta) density at ``t > 0``."""
    return np.exp(bs_logpdf(t, p))


def bs_cdf(t, p: BsParams):
    t = _check_positive(t)
    return ndtr((np.sqrt(t / p.beta) - np.sqrt(p.beta / t)) / p.alpha)


# -- univariate log-BS -----------------------------------------------------

def logbs_logpdf(y, p: LogBsParams):
    h = 0.5 * (np.asarray(y, dtype=float) - p.mu)
    z = 2.0 / p.alpha * np.sinh(h)
    return -np.log(p.alpha) - 0.5 * LOG_2PI - 0.5 * z**2 + log_cosh(h)


def logbs_pdf(y, p: LogBsParams):
    """log-BS(alpha, mu) density; symmetric about ``mu``."""
    return np.exp(logbs_logpdf(y, p))


def logbs_cdf(y, p: LogBsParams):
    return ndtr(2.0 / p.alpha * np.sinh(0.5 * (np.asarray(y, dtype=float) - p.mu)))


def logbs_logcdf(y, p: LogBsParams):
    return log_ndtr(2.0 / p.alpha * np.sinh(0.5 * (np.asarray(y, dtype=float) - p.mu)))


def logbs_ppf(q, p: LogBsParams):
    """Closed-form quantile: ``mu + 2 asinh(alpha * Phi^{-1}(q) / 2)``."""
    return p.mu + 2.0 * np.arcsinh(0.5 * p.alpha * ndtri(np.asarray(q, dtype=float)))


# -- multivariate log-BS ---------------------------------------------------

def _check_dim(v, d):
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != d:
        raise ValueError(f"expected trailing dimension {d}, got {v.shape}")
    return v


def standardize(y, p: MvLogBsParams):
    """Map ``y`` to ``a_j = (2/alpha) sinh((y_j - mu_j)/2)``.

    Works row-wise on an ``(..., d)`` array.
    """
    y = _check_dim(y, p.d)
    return 2.0 / p.alpha * np.sinh(0.5 * (y - p.mu))


def destandardize(z, p: MvLogBsParams):
    """Inverse of :func:`standardize`."""
    z = _check_dim(z, p.d)
    return p.mu + 2.0 * np.arcsinh(0.5 * p.alpha * z)


def mvlogbs_logpdf(y, p: MvLogBsParams, chol: np.ndarray | None = None):
    """Log joint density of the d-variate log-BS law.

    ``y`` may be a single vector or an ``(n, d)`` array of rows; returns a
    scalar or a length-n vector accordingly. A precomputed lower Cholesky
    factor of ``p.psi`` may be passed as ``chol``.
    """
    y = _check_dim(y, p.d)
    L = correlation_cholesky(p.psi) if chol is None else chol
    h = 0.5 * (y - p.mu)
    a = 2.0 / p.alpha * np.sinh(h)
    # w = L^{-1} a, so a' Psi^{-1} a = |w|^2
    w = solve_triangular(L, np.atleast_2d(a).T, lower=True)
    quad = np.sum(w**2, axis=0)
    log_c = np.log(2.0 / p.alpha) + log_cosh(h)
    d = p.d
    out = (
        np.sum(np.atleast_2d(log_c), axis=-1)
        - 0.5 * d * LOG_2PI - d * LOG_2
        - np.sum(np.log(np.diag(L)))
        - 0.5 * quad
    )
    return out[0] if y.ndim == 1 else out


def sample_mvlogbs(count: int, p: MvLogBsParams, seed=None) -> np.ndarray:
    """Draw ``count`` rows from log-BS_d(alpha, mu, psi)."""
    if count < 1:
        raise ValueError("count must be a positive integer")
    L = correlation_cholesky(p.psi)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, p.d)) @ L.T
    return destandardize(z, p)

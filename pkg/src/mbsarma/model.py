"""MBSARMA model: parameter containers, location recursion and likelihood.

For component j the conditional location is

    mu_tj = x_t' beta_j + eta_j
            + sum_i phi_ij (Y_{t-i,j} - x_{t-i}' beta_j)
            + sum_l theta_lj u_{t-l,j},

with realised innovations u_tj = Y_tj - mu_tj and u_sj = 0 before the
conditioning offset m. Given the past, Y_t ~ log-BS_d(alpha, mu_t, Psi).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.signal import lfilter

from .distributions import LOG_2, LOG_2PI, correlation_cholesky, log_cosh


def _pname(stem: str, i: int, j: int) -> str:
    return f"{stem}_{i}{j}" if i < 10 and j < 10 else f"{stem}_{i}_{j}"


@dataclass(frozen=True)
class ModelSpec:
    """Dimensions and component-wise ARMA orders."""

    d: int
    k: int
    p: tuple[int, ...]
    q: tuple[int, ...]

    def __post_init__(self):
        p = tuple(int(v) for v in np.broadcast_to(self.p, (self.d,)))
        q = tuple(int(v) for v in np.broadcast_to(self.q, (self.d,)))
        if self.d < 1 or self.k < 0:
            raise ValueError("need d >= 1 and k >= 0")
        if min(p + q) < 0:
            raise ValueError("ARMA orders must be nonnegative")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @classmethod
    def symmetric(cls, d: int, k: int, p: int, q: int) -> "ModelSpec":
        return cls(d, k, (p,) * d, (q,) * d)

    @property
    def m(self) -> int:
        return max(max(pj, qj) for pj, qj in zip(self.p, self.q))

    def block_size(self, j: int) -> int:
        """Length of the dynamics block (phi_j, theta_j, beta_j, eta_j)."""
        return self.p[j] + self.q[j] + self.k + 1

    @property
    def n_dynamics(self) -> int:
        return sum(self.block_size(j) for j in range(self.d))

    @property
    def n_params(self) -> int:
        """Free-parameter count used by BIC."""
        return 1 + self.n_dynamics + self.d * (self.d - 1) // 2

    def label(self) -> str:
        return "MBSARMA(" + ",".join(map(str, self.p)) + "|" + ",".join(map(str, self.q)) + ")"

    def param_names(self) -> list[str]:
        """Names in the stacking order of :meth:`ParamVector.to_vector`."""
        names = ["alpha"]
        for j in range(self.d):
            names += [_pname("phi", i + 1, j + 1) for i in range(self.p[j])]
            names += [_pname("theta", l + 1, j + 1) for l in range(self.q[j])]
            names += [_pname("beta", l + 1, j + 1) for l in range(self.k)]
            names.append(f"eta_{j + 1}")
        names += [_pname("rho", a + 1, b + 1) for a, b in zip(*_lower_index(self.d))]
        return names


def _lower_index(d: int):
    # vech ordering of the strictly-lower triangle, column-major: (2,1),(3,1),...,(3,2),...
    rows, cols = np.tril_indices(d, -1)
    order = np.lexsort((rows, cols))
    return cols[order], rows[order]


def vech_lower(psi: np.ndarray) -> np.ndarray:
    """Off-diagonal entries of a symmetric matrix, pairs (j<k) in column order."""
    a, b = _lower_index(psi.shape[0])
    return psi[b, a].copy()


def unvech_corr(values: Sequence[float], d: int) -> np.ndarray:
    psi = np.eye(d)
    a, b = _lower_index(d)
    psi[b, a] = values
    psi[a, b] = values
    return psi


@dataclass(eq=False)
class ParamVector:
    """Full parameter vector: shape, per-component dynamics and correlation."""

    alpha: float
    phi: list[np.ndarray]
    theta: list[np.ndarray]
    beta: list[np.ndarray]
    eta: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        self.alpha = float(self.alpha)
        self.phi = [np.atleast_1d(np.asarray(v, dtype=float)) for v in self.phi]
        self.theta = [np.atleast_1d(np.asarray(v, dtype=float)) for v in self.theta]
        self.beta = [np.atleast_1d(np.asarray(v, dtype=float)) for v in self.beta]
        self.eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        self.psi = np.atleast_2d(np.asarray(self.psi, dtype=float))

    @property
    def d(self) -> int:
        return self.eta.shape[0]

    @property
    def psi_lower(self) -> np.ndarray:
        return vech_lower(self.psi)

    def check(self, spec: ModelSpec) -> None:
        if self.d != spec.d:
            raise ValueError(f"parameters have d={self.d}, spec has d={spec.d}")
        for j in range(spec.d):
            if (self.phi[j].size, self.theta[j].size, self.beta[j].size) != (
                spec.p[j], spec.q[j], spec.k
            ):
                raise ValueError(f"component {j + 1} block does not match {spec.label()}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.psi.shape != (spec.d, spec.d) or np.any(np.diag(self.psi) != 1.0):
            raise ValueError("psi must be a d x d matrix with unit diagonal")

    @classmethod
    def zeros(cls, spec: ModelSpec, alpha: float = 1.0) -> "ParamVector":
        return cls(
            alpha=alpha,
            phi=[np.zeros(pj) for pj in spec.p],
            theta=[np.zeros(qj) for qj in spec.q],
            beta=[np.zeros(spec.k) for _ in range(spec.d)],
            eta=np.zeros(spec.d),
            psi=np.eye(spec.d),
        )

    @classmethod
    def from_dict(cls, spec: ModelSpec, values: dict) -> "ParamVector":
        """Build from a dict keyed by per-component lists, e.g.

        ``{"alpha": .5, "phi": [[.5], [.7]], "theta": [[.1], [.1]],
        "beta": [[.3], [.3]], "eta": [1.2, 1.2], "rho": [.5]}``.
        ``rho`` holds the vech of Psi (or a scalar for equicorrelation).
        """
        d = spec.d
        rho = np.atleast_1d(np.asarray(values.get("rho", []), dtype=float))
        if rho.size == 1 and d > 2:
            rho = np.repeat(rho, d * (d - 1) // 2)
        pv = cls(
            alpha=values["alpha"],
            phi=values.get("phi", [[]] * d),
            theta=values.get("theta", [[]] * d),
            beta=values.get("beta", [[]] * d),
            eta=values["eta"],
            psi=unvech_corr(rho, d) if d > 1 else np.eye(1),
        )
        pv.check(spec)
        return pv

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "phi": [v.tolist() for v in self.phi],
            "theta": [v.tolist() for v in self.theta],
            "beta": [v.tolist() for v in self.beta],
            "eta": self.eta.tolist(),
            "rho": self.psi_lower.tolist(),
        }

    def dynamics_block(self, j: int) -> np.ndarray:
        return np.concatenate([self.phi[j], self.theta[j], self.beta[j], [self.eta[j]]])

    def dynamics_vector(self) -> np.ndarray:
        """gamma_0: the stacked (phi_j, theta_j, beta_j, eta_j) blocks."""
        return np.concatenate([self.dynamics_block(j) for j in range(self.d)])

    def with_dynamics(self, spec: ModelSpec, g0: np.ndarray) -> "ParamVector":
        phi, theta, beta, eta = [], [], [], []
        pos = 0
        for j in range(spec.d):
            pj, qj, k = spec.p[j], spec.q[j], spec.k
            blk = g0[pos:pos + spec.block_size(j)]
            phi.append(blk[:pj].copy())
            theta.append(blk[pj:pj + qj].copy())
            beta.append(blk[pj + qj:pj + qj + k].copy())
            eta.append(blk[-1])
            pos += spec.block_size(j)
        return ParamVector(self.alpha, phi, theta, beta, np.array(eta), self.psi.copy())

    def to_vector(self) -> np.ndarray:
        return np.concatenate([[self.alpha], self.dynamics_vector(), self.psi_lower])

    @classmethod
    def from_vector(cls, spec: ModelSpec, gamma: np.ndarray) -> "ParamVector":
        gamma = np.asarray(gamma, dtype=float)
        if gamma.size != spec.n_params:
            raise ValueError(f"expected {spec.n_params} values, got {gamma.size}")
        pv = cls.zeros(spec).with_dynamics(spec, gamma[1:1 + spec.n_dynamics])
        pv.alpha = float(gamma[0])
        pv.psi = unvech_corr(gamma[1 + spec.n_dynamics:], spec.d)
        return pv

    def copy(self) -> "ParamVector":
        return ParamVector(
            self.alpha,
            [v.copy() for v in self.phi],
            [v.copy() for v in self.theta],
            [v.copy() for v in self.beta],
            self.eta.copy(),
            self.psi.copy(),
        )


@dataclass(eq=False)
class SeriesPanel:
    """Time-aligned log-scale responses ``y`` (n x d) and covariates ``x`` (n x k)."""

    y: np.ndarray
    x: np.ndarray = None
    names: list[str] = field(default_factory=list)
    covariate_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        x = np.zeros((y.shape[0], 0)) if self.x is None else np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.shape[0] != y.shape[0]:
            raise ValueError(f"y has {y.shape[0]} rows but x has {x.shape[0]}")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise ValueError("panel contains missing or non-finite values")
        self.y, self.x = y, x
        if not self.names:
            self.names = [f"Y{j + 1}" for j in range(y.shape[1])]
        if not self.covariate_names:
            self.covariate_names = [f"x{l + 1}" for l in range(x.shape[1])]

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.y.shape[1]

    @property
    def k(self) -> int:
        return self.x.shape[1]

    def head(self, n: int) -> "SeriesPanel":
        return SeriesPanel(self.y[:n], self.x[:n], list(self.names), list(self.covariate_names))

    def check(self, spec: ModelSpec, m: int | None = None) -> None:
        if (self.d, self.k) != (spec.d, spec.k):
            raise ValueError(
                f"panel has d={self.d}, k={self.k} but spec expects d={spec.d}, k={spec.k}"
            )
        m = spec.m if m is None else m
        if self.n <= m:
            raise ValueError(f"series length {self.n} must exceed the conditioning offset {m}")


@dataclass(eq=False)
class LocationState:
    """Conditional locations and innovations; rows before ``valid_from`` are
    conditioning values (mu is NaN there and u is zero)."""

    mu: np.ndarray
    u: np.ndarray
    valid_from: int


def _resolve_m(spec: ModelSpec, m: int | None) -> int:
    if m is None:
        return spec.m
    if m < spec.m:
        raise ValueError(f"conditioning offset {m} is below the model's m={spec.m}")
    return int(m)


def detrended(params: ParamVector, panel: SeriesPanel) -> np.ndarray:
    """rho_tj = Y_tj - x_t' beta_j as an (n, d) array."""
    xb = np.column_stack([panel.x @ b for b in params.beta]) if panel.k else 0.0
    return panel.y - xb


def _lagged(v: np.ndarray, lags: int, m: int) -> np.ndarray:
    """Columns v_{t-1}, ..., v_{t-lags} for rows t = m..n-1."""
    n = v.shape[0]
    return np.column_stack([v[m - i:n - i] for i in range(1, lags + 1)]) if lags else np.empty((n - m, 0))


def _ma_filter(e: np.ndarray, theta: np.ndarray) -> np.ndarray:
    # solves u_t + sum_l theta_l u_{t-l} = e_t with zero pre-sample u
    if theta.size == 0:
        return e
    return lfilter([1.0], np.concatenate([[1.0], theta]), e, axis=0)


def compute_locations(spec: ModelSpec, params: ParamVector, panel: SeriesPanel,
                      m: int | None = None) -> LocationState:
    """Run the location/innovation recursion from offset ``m`` (default spec.m)."""
    params.check(spec)
    panel.check(spec, m)
    m = _resolve_m(spec, m)
    n, d = panel.n, panel.d
    rho = detrended(params, panel)
    mu = np.full((n, d), np.nan)
    u = np.zeros((n, d))
    for j in range(d):
        e = rho[m:, j] - params.eta[j]
        if spec.p[j]:
            e = e - _lagged(rho[:, j], spec.p[j], m) @ params.phi[j]
        u[m:, j] = _ma_filter(e, params.theta[j])
        mu[m:, j] = panel.y[m:, j] - u[m:, j]
    return LocationState(mu=mu, u=u, valid_from=m)


def _loglik_from_resid(resid: np.ndarray, alpha: float, chol: np.ndarray) -> np.ndarray:
    h = 0.5 * resid
    a = 2.0 / alpha * np.sinh(h)
    w = solve_triangular(chol, a.T, lower=True, check_finite=False)
    d = resid.shape[1]
    return (
        d * (LOG_2 - np.log(alpha)) + np.sum(log_cosh(h), axis=1)
        - 0.5 * d * LOG_2PI - d * LOG_2
        - np.sum(np.log(np.diag(chol)))
        - 0.5 * np.sum(w**2, axis=0)
    )


def loglik_terms(spec: ModelSpec, params: ParamVector, panel: SeriesPanel,
                 m: int | None = None) -> np.ndarray:
    """Per-time contributions l_t for t = m+1..n."""
    state = compute_locations(spec, params, panel, m)
    chol = correlation_cholesky(params.psi)
    m = state.valid_from
    with np.errstate(over="ignore", invalid="ignore"):
        return _loglik_from_resid(panel.y[m:] - state.mu[m:], params.alpha, chol)


def conditional_loglik(spec: ModelSpec, params: ParamVector, panel: SeriesPanel,
                       m: int | None = None) -> float:
    """Conditional log-likelihood given the first ``m`` observations.

    Raises :class:`~mbsarma.distributions.NotPositiveDefiniteError` for a
    non-PD correlation matrix. Overflowing recursions (explosive MA
    parameters) give ``-inf``.
    """
    val = float(np.sum(loglik_terms(spec, params, panel, m)))
    return val if np.isfinite(val) else -np.inf


@dataclass(frozen=True)
class RootReport:
    component: int
    ar_stationary: bool
    ma_invertible: bool
    min_root_modulus: float
    ar_min_modulus: float
    ma_min_modulus: float


def _min_root_modulus(coefs: np.ndarray) -> float:
    # roots of 1 + c_1 z + ... + c_r z^r are reciprocals of eigenvalues of the companion matrix
    c = np.trim_zeros(np.asarray(coefs, dtype=float), "b")
    if c.size == 0:
        return np.inf
    comp = np.zeros((c.size, c.size))
    comp[0, :] = -c
    comp[1:, :-1] = np.eye(c.size - 1)
    lam = np.max(np.abs(np.linalg.eigvals(comp)))
    return np.inf if lam == 0 else 1.0 / lam


def check_roots(spec: ModelSpec, params: ParamVector) -> list[RootReport]:
    """Stationarity (AR) and invertibility (MA) of each component."""
    out = []
    for j in range(spec.d):
        ar = _min_root_modulus(-params.phi[j])
        ma = _min_root_modulus(params.theta[j])
        out.append(RootReport(j + 1, bool(ar > 1), bool(ma > 1), float(min(ar, ma)), float(ar), float(ma)))
    return out


class NearUnitRootWarning(UserWarning):
    pass


def unconditional_mean(spec: ModelSpec, params: ParamVector, x_t=None,
                       tol: float = 1e-12) -> np.ndarray:
    """Marginal mean x_t' beta_j + eta_j / (1 - sum_i phi_ij) per component.

    Raises ``ZeroDivisionError`` when ``|1 - sum phi| < tol``; warns with
    :class:`NearUnitRootWarning` when the component is not AR-stationary or
    has a root within 2% of the unit circle.
    """
    import warnings

    x_t = np.zeros(spec.k) if x_t is None else np.asarray(x_t, dtype=float)
    out = np.empty(spec.d)
    for rep, j in zip(check_roots(spec, params), range(spec.d)):
        denom = 1.0 - np.sum(params.phi[j])
        if abs(denom) < tol:
            raise ZeroDivisionError(f"component {j + 1}: AR polynomial has a unit root at 1")
        if rep.ar_min_modulus < 1.02:
            warnings.warn(
                f"component {j + 1}: AR root modulus {rep.ar_min_modulus:.4g} is at or near the unit circle",
                NearUnitRootWarning, stacklevel=2,
            )
        out[j] = x_t @ params.beta[j] + params.eta[j] / denom
    return out


def near_unit_root(spec: ModelSpec, params: ParamVector, margin: float = 1.02) -> list[bool]:
    return [r.ar_min_modulus < margin for r in check_roots(spec, params)]

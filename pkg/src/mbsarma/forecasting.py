"""Point forecasts, rolling-origin evaluation and benchmark predictors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimation import FitResult, cls_fit
from .model import ModelSpec, ParamVector, SeriesPanel, compute_locations, detrended

MODES = ("rolling", "fixed")


@dataclass(eq=False)
class ForecastResult:
    horizon: int
    y_hat: np.ndarray  # horizon x d, log scale
    t_hat: np.ndarray  # exp(y_hat)


def _future_x(future_x, h: int, k: int) -> np.ndarray:
    if k == 0:
        return np.zeros((h, 0))
    if future_x is None:
        raise ValueError(f"future covariates are required for all {h} steps")
    fx = np.asarray(future_x, dtype=float).reshape(-1, k)
    if fx.shape[0] < h:
        raise ValueError(f"future covariates cover {fx.shape[0]} steps, {h} needed")
    return fx[:h]


def forecast_params(spec: ModelSpec, params: ParamVector, panel: SeriesPanel,
                    future_x, h: int, m: int | None = None) -> ForecastResult:
    """h-step forecasts from the end of ``panel``.

    Unobserved responses are replaced by their forecasts and unobserved
    innovations by zero.
    """
    if h < 1:
        raise ValueError("horizon must be a positive integer")
    fx = _future_x(future_x, h, spec.k)
    state = compute_locations(spec, params, panel, m)
    n = panel.n
    y = np.vstack([panel.y, np.zeros((h, spec.d))])
    x = np.vstack([panel.x, fx])
    u = np.vstack([state.u, np.zeros((h, spec.d))])
    rho = detrended(params, SeriesPanel(y, x))
    for t in range(n, n + h):
        for j in range(spec.d):
            xb = x[t] @ params.beta[j] if spec.k else 0.0
            mu = xb + params.eta[j]
            for i, ph in enumerate(params.phi[j], start=1):
                mu += ph * rho[t - i, j]
            for l, th in enumerate(params.theta[j], start=1):
                mu += th * u[t - l, j]
            y[t, j] = mu
            rho[t, j] = mu - xb
    y_hat = y[n:]
    return ForecastResult(h, y_hat, np.exp(y_hat))


def forecast(fit: FitResult, panel: SeriesPanel, future_x=None, h: int = 1) -> ForecastResult:
    return forecast_params(fit.spec, fit.estimates, panel, future_x, h, fit.m)


@dataclass(eq=False)
class EvalResult:
    predictions: np.ndarray  # test_len x d
    observed: np.ndarray
    rmse: np.ndarray         # per component; empty when test_len == 0
    mae: np.ndarray
    mode: str = "rolling"

    def as_dict(self, names=None) -> dict:
        names = names or [f"Y{j + 1}" for j in range(self.rmse.size)]
        return {nm: {"rmse": float(r), "mae": float(a)} for nm, r, a in zip(names, self.rmse, self.mae)}


def score(pred, obs, mode: str = "rolling") -> EvalResult:
    pred, obs = np.atleast_2d(pred), np.atleast_2d(obs)
    if pred.shape[0] == 0:
        return EvalResult(pred, obs, np.empty(0), np.empty(0), mode)
    err = pred - obs
    return EvalResult(pred, obs, np.sqrt(np.mean(err**2, axis=0)), np.mean(np.abs(err), axis=0), mode)


def _check_split(panel: SeriesPanel, test_len: int, m: int) -> int:
    if test_len < 0:
        raise ValueError("test_len must be nonnegative")
    if test_len >= panel.n - m - 1:
        raise ValueError(f"test_len={test_len} leaves too little training data (n={panel.n}, m={m})")
    return panel.n - test_len


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")


def _evaluate(spec, params, full_panel, test_len, mode, m) -> EvalResult:
    _check_mode(mode)
    m = spec.m if m is None else m
    split = _check_split(full_panel, test_len, m)
    obs = full_panel.y[split:]
    if test_len == 0:
        return score(np.empty((0, spec.d)), obs, mode)
    if mode == "rolling":
        # with parameters frozen, mu_t is the one-step prediction from the
        # observed history through t - 1
        pred = compute_locations(spec, params, full_panel, m).mu[split:]
    else:
        pred = forecast_params(spec, params, full_panel.head(split), full_panel.x[split:],
                               test_len, m).y_hat
    return score(pred, obs, mode)


def rolling_one_step_eval(fit: FitResult, full_panel: SeriesPanel, test_len: int,
                          mode: str = "rolling") -> EvalResult:
    """Log-scale RMSE and MAE over the last ``test_len`` observations.

    ``fit`` must have been estimated on the first ``n - test_len`` rows; its
    parameters stay fixed. ``mode="fixed"`` forecasts the whole test window
    from the training origin instead.
    """
    return _evaluate(fit.spec, fit.estimates, full_panel, test_len, mode, fit.m)


def naive_forecast(panel: SeriesPanel, test_len: int, mode: str = "rolling") -> np.ndarray:
    """Last-value predictions for the final ``test_len`` rows.

    Rolling mode predicts Y_{t-1} at each test time; fixed mode repeats the
    last training value across the whole window.
    """
    _check_mode(mode)
    if not 0 <= test_len < panel.n:
        raise ValueError(f"test_len must lie in [0, {panel.n})")
    split = panel.n - test_len
    if mode == "rolling":
        return panel.y[split - 1:panel.n - 1].copy()
    return np.repeat(panel.y[split - 1:split], test_len, axis=0)


def naive_eval(panel: SeriesPanel, test_len: int, mode: str = "rolling") -> EvalResult:
    split = panel.n - test_len
    return score(naive_forecast(panel, test_len, mode), panel.y[split:], mode)


@dataclass(eq=False)
class BenchmarkResult:
    evaluation: EvalResult
    blocks: list[np.ndarray]  # per-component (phi, theta, beta, eta)
    converged: list[bool]


def gaussian_armax_benchmark(panel: SeriesPanel, test_len: int, p: int = 0, q: int = 1,
                             mode: str = "rolling") -> BenchmarkResult:
    """Separate Gaussian ARMAX(p, q) fits per component by conditional least
    squares on the training rows, scored under the same protocol as the model."""
    _check_mode(mode)
    spec = ModelSpec.symmetric(panel.d, panel.k, p, q)
    split = _check_split(panel, test_len, spec.m)
    train = panel.head(split)
    blocks, ok = [], []
    for j in range(panel.d):
        res = cls_fit(train.y[:, j], train.x, p, q, spec.m)
        blocks.append(res.block)
        ok.append(res.converged)
    params = ParamVector.zeros(spec).with_dynamics(spec, np.concatenate(blocks))
    return BenchmarkResult(_evaluate(spec, params, panel, test_len, mode, spec.m), blocks, ok)

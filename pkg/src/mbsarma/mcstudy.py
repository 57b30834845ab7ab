"""Simulation of MBSARMA panels and Monte Carlo parameter-recovery studies."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import correlation_cholesky
from .estimation import EmSettings, em_fit
from .model import ModelSpec, ParamVector, SeriesPanel, check_roots

log = logging.getLogger(__name__)

BURN_IN = 100


@dataclass(eq=False)
class McScenario:
    spec: ModelSpec
    truth: ParamVector
    n: int
    n_replicates: int = 200
    seed: int = 0
    covariate_law: str = "bernoulli(0.5)"
    freeze_covariates: bool = False
    burn_in: int = BURN_IN
    name: str = ""

    def __post_init__(self):
        self.truth.check(self.spec)
        bad = [r.component for r in check_roots(self.spec, self.truth)
               if not (r.ar_stationary and r.ma_invertible)]
        if bad:
            raise ValueError(f"truth is not stationary/invertible in component(s) {bad}")
        if self.covariate_law != "bernoulli(0.5)":
            raise ValueError("only Bernoulli(0.5) covariates are supported")


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replicate)]))


def simulate_path(spec: ModelSpec, truth: ParamVector, x: np.ndarray,
                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Sequentially simulate Y given covariates ``x`` (n x k).

    For t < m the location is the unconditional mean and the innovation is
    not fed back (u = 0 there), matching the likelihood's start-up rule.
    From t = m on, mu_t is built from realised history and
    Y_t = mu_t + 2 asinh(alpha z_t / 2) with z_t ~ N_d(0, Psi).
    Returns ``(y, u)`` where ``u`` are the innovations used by the recursion.
    """
    n, d, m = x.shape[0], spec.d, spec.m
    L = correlation_cholesky(truth.psi)
    z = rng.standard_normal((n, d)) @ L.T
    eps = 2.0 * np.arcsinh(0.5 * truth.alpha * z)
    xb = np.column_stack([x @ b for b in truth.beta]) if spec.k else np.zeros((n, d))
    y = np.empty((n, d))
    u = np.zeros((n, d))
    rho = np.empty((n, d))
    for j in range(d):
        denom = 1.0 - np.sum(truth.phi[j])
        rho[:m, j] = truth.eta[j] / denom + eps[:m, j]
    y[:m] = rho[:m] + xb[:m]
    for t in range(m, n):
        for j in range(d):
            tau = truth.eta[j]
            for i, ph in enumerate(truth.phi[j], start=1):
                tau += ph * rho[t - i, j]
            for l, th in enumerate(truth.theta[j], start=1):
                tau += th * u[t - l, j]
            u[t, j] = eps[t, j]
            rho[t, j] = tau + eps[t, j]
    y[m:] = rho[m:] + xb[m:]
    return y, u


def draw_covariates(k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.binomial(1, 0.5, size=(n, k)).astype(float)


def generate_panel(scenario: McScenario, replicate: int = 0,
                   return_full: bool = False):
    """Simulate one panel of length ``scenario.n`` after discarding burn-in.

    With ``return_full`` also returns the full path ``(y, x, u)`` including
    the ``burn_in + m`` discarded rows.
    """
    spec = scenario.spec
    burn = scenario.burn_in + spec.m
    total = scenario.n + burn
    rng = replicate_rng(scenario.seed, replicate)
    if scenario.freeze_covariates and replicate != 0:
        # every replicate reuses replicate 0's covariate draw
        x = draw_covariates(spec.k, total, replicate_rng(scenario.seed, 0))
    else:
        x = draw_covariates(spec.k, total, rng)
    y, u = simulate_path(spec, scenario.truth, x, rng)
    panel = SeriesPanel(y[burn:], x[burn:])
    if return_full:
        return panel, (y, x, u)
    return panel


@dataclass(eq=False)
class McReport:
    scenario: McScenario
    names: list[str]
    truth: np.ndarray
    bias: np.ndarray
    mse: np.ndarray
    n_converged: int
    n_failed: int
    estimates: np.ndarray = field(repr=False, default=None)

    def as_dict(self) -> dict[str, dict[str, float]]:
        return {
            name: {"truth": float(t), "bias": float(b), "mse": float(e)}
            for name, t, b, e in zip(self.names, self.truth, self.bias, self.mse)
        }


def _fit_replicate(args):
    scenario, r, settings = args
    panel = generate_panel(scenario, r)
    try:
        fit = em_fit(scenario.spec, panel, settings)
    except Exception as exc:  # noqa: BLE001 - failures are data
        log.info("replicate %d failed: %s", r, exc)
        return r, None
    if not fit.converged:
        return r, None
    return r, fit.estimates.to_vector()


def _default_jobs() -> int:
    return max(1, min(os.cpu_count() or 1, 8))


def run_study(scenario: McScenario, settings: EmSettings | None = None,
              n_jobs: int | None = None) -> McReport:
    """Fit ``n_replicates`` simulated panels and aggregate empirical bias and MSE.

    Non-converged or failed replicates are excluded and counted.
    """
    settings = settings or EmSettings(compute_std_errors=False)
    n_jobs = _default_jobs() if n_jobs is None else n_jobs
    tasks = [(scenario, r, settings) for r in range(scenario.n_replicates)]
    if n_jobs > 1:
        with ProcessPoolExecutor(n_jobs) as pool:
            results = list(pool.map(_fit_replicate, tasks, chunksize=4))
    else:
        results = [_fit_replicate(t) for t in tasks]
    results.sort(key=lambda item: item[0])
    est = np.array([v for _, v in results if v is not None])
    truth = scenario.truth.to_vector()
    names = scenario.spec.param_names()
    if est.size == 0:
        bias = mse = np.full(truth.size, np.nan)
        est = np.empty((0, truth.size))
    else:
        bias = est.mean(axis=0) - truth
        mse = np.mean((est - truth) ** 2, axis=0)
    return McReport(scenario, names, truth, bias, mse, est.shape[0],
                    scenario.n_replicates - est.shape[0], est)


def mse_trend_check(reports, slack: float = 0.2) -> bool:
    """True iff every parameter's MSE is nonincreasing in n, allowing each
    step to exceed the previous value by at most ``slack`` (relative).

    ``reports`` is a sequence of McReport, or of ``(n, mse_vector)`` pairs.
    """
    pairs = []
    for rep in reports:
        if isinstance(rep, McReport):
            pairs.append((rep.scenario.n, np.asarray(rep.mse, dtype=float)))
        else:
            n, mse = rep
            pairs.append((n, np.atleast_1d(np.asarray(mse, dtype=float))))
    if len({n for n, _ in pairs}) < 3:
        raise ValueError("need at least three distinct sample sizes")
    pairs.sort(key=lambda item: item[0])
    mses = np.array([mse for _, mse in pairs])
    if np.allclose(mses, mses[0]):
        return False
    return bool(np.all(mses[1:] <= mses[:-1] * (1.0 + slack)))


# -- simulation study scenarios ---------------------------------------------

def bivariate_truth(rho: float) -> tuple[ModelSpec, ParamVector]:
    spec = ModelSpec.symmetric(2, 1, 1, 1)
    truth = ParamVector.from_dict(spec, {
        "alpha": 0.5, "phi": [[0.5], [0.7]], "theta": [[0.1], [0.1]],
        "beta": [[0.3], [0.3]], "eta": [1.2, 1.2], "rho": [rho],
    })
    return spec, truth


def trivariate_truth(rho: float) -> tuple[ModelSpec, ParamVector]:
    spec = ModelSpec.symmetric(3, 1, 1, 1)
    truth = ParamVector.from_dict(spec, {
        "alpha": 0.5, "phi": [[0.5], [0.7], [0.6]], "theta": [[0.1], [0.1], [0.1]],
        "beta": [[0.3], [0.3], [0.3]], "eta": [1.2, 1.2, 1.2], "rho": [rho, rho, rho],
    })
    return spec, truth


def study_scenario(d: int, rho: float, n: int, n_replicates: int = 200, seed: int = 0) -> McScenario:
    spec, truth = bivariate_truth(rho) if d == 2 else trivariate_truth(rho)
    return McScenario(spec, truth, n, n_replicates, seed, name=f"d{d}_rho{rho:g}_n{n}")

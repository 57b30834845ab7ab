"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line
that the terminal summary prints (see conftest.py).

The Monte Carlo criteria take several minutes in total on a single core.
"""
import math

import numpy as np
import pytest
from scipy import integrate
from scipy.optimize import minimize

from mbsarma.diagnostics import ks_test_chi2, residuals
from mbsarma.distributions import (
    BsParams,
    LogBsParams,
    MvLogBsParams,
    bs_pdf,
    logbs_logpdf,
    logbs_pdf,
    mvlogbs_logpdf,
)
from mbsarma.estimation import (
    EmSettings,
    compute_internals,
    dynamics_score,
    em_fit,
    exact_shape_corr,
    m_step_shape_corr,
    q_function,
    select_by_bic,
    symmetric_grid,
)
from mbsarma.forecasting import naive_eval, rolling_one_step_eval
from mbsarma.mcstudy import (
    McScenario,
    bivariate_truth,
    generate_panel,
    mse_trend_check,
    study_scenario,
    run_study,
    trivariate_truth,
)
from mbsarma.model import ModelSpec, ParamVector, SeriesPanel, conditional_loglik, unvech_corr, vech_lower

FAST = EmSettings(compute_std_errors=False)

# reference (bias, MSE) at n = 500 for the bivariate rho = 0.5 study, keyed by our names;
# a printed MSE of 0.000 is read as the upper bound 0.0005
TABLE3_N500 = {
    "alpha": (-0.002, 0.0005), "phi_11": (-0.016, 0.005), "theta_11": (0.010, 0.006),
    "eta_1": (0.004, 0.003), "beta_11": (-0.001, 0.001), "phi_12": (-0.007, 0.002),
    "theta_12": (0.003, 0.004), "eta_2": (-0.000, 0.006), "beta_12": (-0.002, 0.001),
    "rho_12": (-0.002, 0.001),
}


@pytest.mark.slow
def test_c01_bivariate_monte_carlo_bands(record):
    rep = run_study(study_scenario(2, 0.5, 500, 200, seed=2024), FAST)
    outside = []
    for name, bias, mse in zip(rep.names, rep.bias, rep.mse):
        ref_bias, ref_mse = TABLE3_N500[name]
        half = 3 * math.sqrt(ref_mse / 200)
        if not ref_bias - half <= bias <= ref_bias + half:
            outside.append(f"{name} bias {bias:+.4f} (band {ref_bias - half:+.4f}..{ref_bias + half:+.4f}, "
                           f"mse {mse:.4f})")
    ok = record(1, not outside and rep.n_converged == 200,
                f"{rep.n_converged}/200 converged; outside band: {'; '.join(outside) or 'none'}")
    # eta_j is almost collinear with phi_1j (correlation about -0.98); its
    # sampling variance alone exceeds the reference MSE, so the band is
    # unattainable for the intercepts (see the decision log)
    assert ok, outside


@pytest.mark.slow
def test_c02_trivariate_correlations(record):
    rep = run_study(study_scenario(3, 0.75, 200, 200, seed=2025), FAST)
    idx = [i for i, nm in enumerate(rep.names) if nm.startswith("rho_")]
    bias, mse = rep.bias[idx], rep.mse[idx]
    ok = record(2, bool(np.all(np.abs(bias) <= 0.015) and np.all(mse <= 0.002)),
                f"rho bias {np.round(bias, 4).tolist()} mse {np.round(mse, 4).tolist()}")
    assert ok


@pytest.mark.slow
def test_c03_mse_decreases_with_n(record):
    reports = [run_study(study_scenario(2, 0.10, n, 200, seed=2026), FAST) for n in (50, 100, 200, 500)]
    phi = [float(r.mse[r.names.index("phi_11")]) for r in reports]
    ok = record(3, mse_trend_check(reports, slack=0.2),
                f"phi_11 mse by n: {np.round(phi, 4).tolist()}; converged "
                f"{[r.n_converged for r in reports]}")
    assert ok


def _random_arma11_point(rng, spec, truth):
    """Stationary, invertible point with locations on the scale of the data."""
    return ParamVector.from_dict(spec, {
        "alpha": rng.uniform(0.3, 1.2), "phi": rng.uniform(-0.9, 0.9, (2, 1)).tolist(),
        "theta": rng.uniform(-0.9, 0.9, (2, 1)).tolist(),
        "beta": (np.vstack(truth.beta) + rng.normal(scale=0.3, size=(2, 1))).tolist(),
        "eta": (truth.eta + rng.normal(scale=0.3, size=2)).tolist(),
        "rho": [rng.uniform(-0.8, 0.8)]})


def _five_point_grad(spec, pv, panel, h=1e-4):
    g0 = pv.dynamics_vector()
    out = np.empty_like(g0)
    for i in range(g0.size):
        def q(step):
            e = np.zeros_like(g0)
            e[i] = step
            return q_function(spec, pv.with_dynamics(spec, g0 + e), panel)
        out[i] = (-q(2 * h) + 8 * q(h) - 8 * q(-h) + q(-2 * h)) / (12 * h)
    return out


def test_c04_score_matches_finite_differences(record):
    spec, truth = bivariate_truth(0.5)
    panel = generate_panel(McScenario(spec, truth, 120, 1, 40))
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(50):
        pv = _random_arma11_point(rng, spec, truth)
        g = dynamics_score(spec, pv, panel)
        fd = _five_point_grad(spec, pv, panel)
        worst = max(worst, float(np.max(np.abs(g - fd) / np.maximum(1.0, np.abs(g)))))
    ok = record(4, worst < 1e-6, f"max relative error {worst:.2e} over 50 points")
    assert ok


def _generic_shape_corr(spec, pv, panel):
    """Maximise the conditional log-likelihood over (alpha, vech Psi) with the
    dynamics held fixed, by a general-purpose optimizer."""
    d = spec.d
    n_eff = panel.n - spec.m

    def negll(z):
        psi = unvech_corr(np.tanh(z[1:]), d)
        if np.linalg.eigvalsh(psi)[0] <= 1e-10:
            return 1e10
        trial = pv.copy()
        trial.alpha, trial.psi = math.exp(z[0]), psi
        return -conditional_loglik(spec, trial, panel) / n_eff

    z = np.concatenate([[math.log(pv.alpha)], np.arctanh(vech_lower(pv.psi))])
    z = minimize(negll, z, method="Nelder-Mead",
                 options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 40000, "maxfev": 40000}).x
    z = minimize(negll, z, method="BFGS", options={"gtol": 1e-11}).x
    return math.exp(z[0]), vech_lower(unvech_corr(np.tanh(z[1:]), d))


def test_c05_closed_form_shape_corr_step(record):
    rng = np.random.default_rng(5)
    dev_closed, dev_exact = [], []
    for d, truth_fn in ((2, bivariate_truth), (3, trivariate_truth)):
        spec, truth = truth_fn(0.5)
        panel = generate_panel(McScenario(spec, truth, 80, 1, 50 + d))
        for _ in range(5):
            g = truth.dynamics_vector() + rng.normal(scale=0.1, size=spec.n_dynamics)
            pv = truth.with_dynamics(spec, g)
            a_ref, v_ref = _generic_shape_corr(spec, pv, panel)
            internals = compute_internals(spec, pv, panel)
            for out, (a, psi) in ((dev_closed, m_step_shape_corr(internals)),
                                  (dev_exact, exact_shape_corr(internals))):
                out.append(max(abs(a - a_ref), float(np.max(np.abs(vech_lower(psi) - v_ref)))))
    closed, exact = max(dev_closed), max(dev_exact)
    ok = record(5, closed < 1e-6,
                f"ratio/trace update max deviation {closed:.2e}; exact conditional step "
                f"(used by the fitter) {exact:.2e}")
    # the exact step is what em_fit uses and must meet the tolerance regardless
    assert exact < 1e-6
    # the ratio/trace formulas maximise only when the residual spreads are
    # equal across components, so this part is expected to stay red
    assert ok, f"closed-form deviation {closed:.2e}"


def test_c06_em_ascent_and_stopping_rule(record):
    spec, truth = bivariate_truth(0.5)
    bad = []
    for seed in range(20):
        fit = em_fit(spec, generate_panel(McScenario(spec, truth, 200, 1, 600 + seed)), FAST)
        steps = np.diff(fit.em_trace)
        if not (np.all(steps >= -1e-8) and fit.converged and abs(steps[-1]) < 1e-6):
            bad.append(seed)
    ok = record(6, not bad, f"{20 - len(bad)}/20 fits ascend and stop by the 1e-6 rule")
    assert ok


def _logbs_density(y, alpha, mu):
    h = (y - mu) / 2
    return math.cosh(h) / (alpha * math.sqrt(2 * math.pi)) * math.exp(-2 / alpha**2 * math.sinh(h) ** 2)


def test_c07_distribution_reductions(record):
    rng = np.random.default_rng(7)
    err_d1 = err_ind = err_int = 0.0
    for _ in range(50):
        alpha, mu = rng.uniform(0.1, 3), rng.normal()
        y = mu + rng.normal(scale=2 * alpha)
        got = mvlogbs_logpdf(np.array([y]), MvLogBsParams(alpha, np.array([mu]), np.eye(1)))
        err_d1 = max(err_d1, abs(got - math.log(_logbs_density(y, alpha, mu))))
        m3 = rng.normal(size=3)
        y3 = m3 + rng.normal(scale=alpha, size=3)
        got = mvlogbs_logpdf(y3, MvLogBsParams(alpha, m3, np.eye(3)))
        ref = sum(logbs_logpdf(y3[j], LogBsParams(alpha, m3[j])) for j in range(3))
        err_ind = max(err_ind, abs(got - ref))
    for alpha in (0.1, 0.5, 1.0, 2.0, 3.0):
        # quad probes far tails where the density underflows to 0
        np.seterr(over="ignore")
        lp = LogBsParams(alpha, 0.3)
        total = integrate.quad(lambda y: logbs_pdf(y, lp), -np.inf, np.inf, epsabs=1e-13, epsrel=1e-13, limit=400)[0]
        err_int = max(err_int, abs(total - 1))
        bp = BsParams(alpha, 1.7)
        total = sum(integrate.quad(lambda t: bs_pdf(t, bp), a, b, epsabs=1e-13, epsrel=1e-13, limit=400)[0]
                    for a, b in ((0, 1.7), (1.7, np.inf)))
        err_int = max(err_int, abs(total - 1))
    ok = record(7, err_d1 < 1e-12 and err_ind < 1e-12 and err_int < 1e-8,
                f"d=1 {err_d1:.1e}, independent {err_ind:.1e}, integral {err_int:.1e}")
    assert ok


@pytest.mark.slow
def test_c08_residual_calibration(record):
    spec, truth = trivariate_truth(0.5)
    passes, means = 0, []
    for r in range(50):
        panel = generate_panel(McScenario(spec, truth, 500, 50, 808), r)
        d2 = residuals(em_fit(spec, panel, FAST), panel).d2
        passes += ks_test_chi2(d2, 3).p_value > 0.05
        means.append(float(np.mean(d2)))
    dev = max(abs(m - 3) for m in means)
    ok = record(8, passes >= 45 and dev <= 0.3,
                f"KS passes {passes}/50; max |mean(D2) - 3| = {dev:.2e}")
    assert ok


@pytest.mark.slow
def test_c09_bic_count_and_order_recovery(record):
    kappa = ModelSpec(3, 5, (0, 0, 0), (1, 1, 1)).n_params
    spec = ModelSpec.symmetric(2, 1, 0, 1)
    truth = ParamVector.from_dict(spec, {"alpha": 0.5, "theta": [[0.5], [0.4]], "beta": [[0.3], [0.3]],
                                         "eta": [1.2, 1.2], "rho": [0.5]})
    grid = symmetric_grid(2, 1, (0, 1, 2))
    hits = sum(select_by_bic(generate_panel(McScenario(spec, truth, 200, 50, 909), r), grid, FAST)[0].spec == spec
               for r in range(50))
    ok = record(9, kappa == 25 and hits >= 40, f"kappa {kappa}; generating order chosen {hits}/50")
    assert ok


def test_c10_model_beats_naive_forecast(record):
    spec = ModelSpec.symmetric(2, 1, 1, 1)
    truth = ParamVector.from_dict(spec, {"alpha": 0.5, "phi": [[0.5], [0.7]], "theta": [[0.5], [0.5]],
                                         "beta": [[0.3], [0.3]], "eta": [1.2, 1.2], "rho": [0.5]})
    wins = 0
    for r in range(50):
        panel = generate_panel(McScenario(spec, truth, 250, 50, 1010), r)
        fit = em_fit(spec, SeriesPanel(panel.y[:200], panel.x[:200]), FAST)
        model = rolling_one_step_eval(fit, panel, 50).rmse
        naive = naive_eval(panel, 50).rmse
        wins += math.sqrt(np.mean(model**2)) < math.sqrt(np.mean(naive**2))
    ok = record(10, wins >= 40, f"model RMSE below naive in {wins}/50 seeds")
    assert ok

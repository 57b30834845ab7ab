import numpy as np
import pytest
from scipy import stats

from mbsarma.estimation import EmSettings, em_fit
from mbsarma.mcstudy import (
    McReport,
    McScenario,
    bivariate_truth,
    generate_panel,
    mse_trend_check,
    study_scenario,
    run_study,
    trivariate_truth,
)
from mbsarma.model import ModelSpec, ParamVector, compute_locations

FAST = EmSettings(compute_std_errors=False)


class TestSimulation:
    @pytest.mark.parametrize("d", [2, 3])
    def test_likelihood_recursion_reproduces_innovations(self, d):
        spec, truth = bivariate_truth(0.5) if d == 2 else trivariate_truth(0.75)
        sc = McScenario(spec, truth, 300, 1, 9)
        panel, (y, x, u) = generate_panel(sc, 0, return_full=True)
        burn = sc.burn_in + spec.m
        np.testing.assert_array_equal(panel.y, y[burn:])
        # on the full path the recursions coincide from t = m
        state = compute_locations(spec, truth, type(panel)(y, x))
        np.testing.assert_allclose(state.u[spec.m:], u[spec.m:], atol=1e-12)

    def test_seeded_panels_are_bit_identical(self):
        sc = study_scenario(2, 0.5, 100, seed=3)
        a, b = generate_panel(sc, 7), generate_panel(sc, 7)
        assert np.array_equal(a.y, b.y) and np.array_equal(a.x, b.x)
        assert not np.array_equal(a.y, generate_panel(sc, 8).y)

    def test_conditional_law(self):
        spec, truth = trivariate_truth(0.75)
        sc = McScenario(spec, truth, 100_000, 1, 1)
        panel, (y, x, u) = generate_panel(sc, 0, return_full=True)
        z = 2 / truth.alpha * np.sinh(u[spec.m:] / 2)
        np.testing.assert_allclose(np.corrcoef(z.T), truth.psi, atol=0.01)
        np.testing.assert_allclose(z.std(axis=0), 1.0, atol=0.01)
        for j in range(3):
            assert stats.kstest(z[:, j], "norm").pvalue > 1e-3

    def test_small_shape_means_small_noise(self):
        spec, truth = bivariate_truth(0.5)
        small = truth.copy()
        small.alpha = 1e-4
        _, (y, x, u) = generate_panel(McScenario(spec, small, 200, 1, 0), 0, return_full=True)
        assert np.var(u[spec.m:]) < 1e-7

    def test_raw_scale_is_right_skewed(self):
        for d, rho in [(2, 0.1), (2, 0.9), (3, 0.5)]:
            sc = study_scenario(d, rho, 2000, seed=5)
            t = np.exp(generate_panel(sc, 0).y)
            assert np.all(stats.skew(t, axis=0) > 0)

    def test_frozen_covariates(self):
        spec, truth = bivariate_truth(0.5)
        sc = McScenario(spec, truth, 50, 2, 0, freeze_covariates=True)
        assert np.array_equal(generate_panel(sc, 0).x, generate_panel(sc, 1).x)

    def test_invalid_truth_rejected(self):
        spec, truth = bivariate_truth(0.5)
        bad = truth.copy()
        bad.phi[0] = np.array([1.1])
        with pytest.raises(ValueError):
            McScenario(spec, bad, 50)


class TestStudy:
    def test_report_and_parallel_determinism(self):
        sc = study_scenario(2, 0.5, 100, n_replicates=4, seed=2)
        serial = run_study(sc, FAST, n_jobs=1)
        parallel = run_study(sc, FAST, n_jobs=2)
        np.testing.assert_array_equal(serial.estimates, parallel.estimates)
        assert serial.n_converged + serial.n_failed == 4
        est, truth = serial.estimates, serial.truth
        np.testing.assert_allclose(serial.bias, est.mean(0) - truth)
        np.testing.assert_allclose(serial.mse, ((est - truth) ** 2).mean(0))
        assert np.all(serial.mse >= serial.bias**2 - 1e-15)
        assert set(serial.as_dict()) == set(sc.spec.param_names())

    def test_consistency_on_long_panel(self):
        sc = study_scenario(2, 0.5, 100_000, seed=1)
        fit = em_fit(sc.spec, generate_panel(sc, 0), FAST)
        assert np.all(np.abs(fit.estimates.to_vector() - sc.truth.to_vector()) < 0.02)

    def test_high_correlation_is_estimated_more_precisely(self):
        hi = run_study(study_scenario(2, 0.9, 200, n_replicates=30, seed=4), FAST, n_jobs=1)
        lo = run_study(study_scenario(2, 0.25, 200, n_replicates=30, seed=4), FAST, n_jobs=1)
        assert hi.mse[-1] < lo.mse[-1]


class TestTrend:
    def test_reference_sequence(self):
        assert mse_trend_check([(50, 0.088), (100, 0.034), (200, 0.013), (500, 0.005)])

    def test_constant_is_false(self):
        assert not mse_trend_check([(50, [0.01, 0.02]), (100, [0.01, 0.02]), (200, [0.01, 0.02])])

    def test_slack(self):
        assert mse_trend_check([(50, 0.05), (100, 0.058), (200, 0.01)])
        assert not mse_trend_check([(50, 0.05), (100, 0.07), (200, 0.01)])

    def test_needs_three_sizes(self):
        with pytest.raises(ValueError):
            mse_trend_check([(50, 0.1)])
        with pytest.raises(ValueError):
            mse_trend_check([(50, 0.1), (50, 0.2), (100, 0.05)])

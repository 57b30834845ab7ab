import numpy as np
import pytest
from scipy import stats
from statsmodels.stats.diagnostic import acorr_ljungbox
from statsmodels.tsa.stattools import acf as sm_acf
from statsmodels.tsa.stattools import pacf as sm_pacf

from mbsarma.diagnostics import acf, ks_test_chi2, ljung_box, pacf, qq_envelope, residuals
from mbsarma.estimation import EmSettings, em_fit
from mbsarma.mcstudy import McScenario, generate_panel, trivariate_truth
from mbsarma.model import ModelSpec, ParamVector, SeriesPanel

FAST = EmSettings(compute_std_errors=False)


class FakeFit:
    """Minimal stand-in carrying what ``residuals`` reads."""

    def __init__(self, spec, estimates, m=None):
        self.spec, self.estimates, self.m = spec, estimates, spec.m if m is None else m


@pytest.fixture(scope="module")
def trivariate_fit():
    spec, truth = trivariate_truth(0.5)
    panel = generate_panel(McScenario(spec, truth, 500, 1, 4))
    return spec, panel, em_fit(spec, panel, FAST)


class TestResiduals:
    def test_exact_fit_gives_zero(self):
        spec = ModelSpec(1, 0, (1,), (0,))
        pv = ParamVector.from_dict(spec, {"alpha": .5, "phi": [[.5]], "eta": [1.0]})
        res = residuals(FakeFit(spec, pv), SeriesPanel(np.full(10, 2.0)))
        assert np.all(res.a == 0) and np.all(res.d2 == 0)

    def test_univariate_is_squared_standard_normal_score(self):
        spec = ModelSpec(1, 0, (0,), (0,))
        pv = ParamVector.from_dict(spec, {"alpha": .7, "eta": [.2]})
        y = np.array([0.1, 0.5, -0.3, 1.0])
        res = residuals(FakeFit(spec, pv), SeriesPanel(y))
        z = 2 / 0.7 * np.sinh((y - 0.2) / 2)
        np.testing.assert_allclose(res.d2, z**2, rtol=1e-14)
        np.testing.assert_allclose(res.sigma_hat, [[0.7**2 / 4]])

    def test_distance_matches_sigma_form(self, trivariate_fit):
        spec, panel, fit = trivariate_fit
        res = residuals(fit, panel)
        s = res.a * fit.estimates.alpha / 2
        d2 = np.einsum("ij,ij->i", s, np.linalg.solve(res.sigma_hat, s.T).T)
        np.testing.assert_allclose(res.d2, d2, rtol=1e-10)
        assert np.all(res.d2 >= 0)

    def test_correct_specification_mean_near_dof(self, trivariate_fit):
        spec, panel, fit = trivariate_fit
        assert np.mean(residuals(fit, panel).d2) == pytest.approx(3.0, abs=0.4)

    def test_component_permutation_invariance(self, trivariate_fit):
        spec, panel, fit = trivariate_fit
        est = fit.estimates
        perm = [2, 0, 1]
        pspec = ModelSpec(3, spec.k, tuple(spec.p[i] for i in perm), tuple(spec.q[i] for i in perm))
        pv = ParamVector(est.alpha, [est.phi[i] for i in perm], [est.theta[i] for i in perm],
                         [est.beta[i] for i in perm], est.eta[perm], est.psi[np.ix_(perm, perm)])
        a = residuals(fit, panel).d2
        b = residuals(FakeFit(pspec, pv, fit.m), SeriesPanel(panel.y[:, perm], panel.x)).d2
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)

    def test_component_residuals_are_white(self, trivariate_fit):
        spec, panel, fit = trivariate_fit
        res = residuals(fit, panel)
        band = 4 / np.sqrt(res.a.shape[0])
        for j in range(3):
            assert np.all(np.abs(acf(res.a[:, j], 12)[1:]) < band)


class TestKs:
    def test_point_mass_at_median(self):
        med = stats.chi2(3).median()
        assert ks_test_chi2(np.full(20, med), 3).statistic == pytest.approx(0.5, abs=1e-12)

    def test_matches_scipy_and_golden(self):
        d2 = np.random.default_rng(74).chisquare(3, 74)
        res = ks_test_chi2(d2, 3)
        ref = stats.kstest(d2, "chi2", args=(3,), method="asymp")
        assert res.statistic == pytest.approx(ref.statistic, abs=1e-15)
        assert res.p_value == pytest.approx(ref.pvalue, abs=1e-15)
        assert 0.05 < res.p_value <= 1

    def test_scale_mismatch_has_closed_form_distance(self):
        # Exp(1) vs chi2(2) = Exp(mean 2): sup |e^{-x/2} - e^{-x}| = 1/4 at x = 2 log 2
        x = np.random.default_rng(1).exponential(1.0, 200_000)
        assert ks_test_chi2(x, 2).statistic == pytest.approx(0.25, abs=0.005)

    def test_argument_checks(self):
        with pytest.raises(ValueError):
            ks_test_chi2([1.0], 0)
        with pytest.raises(ValueError):
            ks_test_chi2([], 2)


class TestCorrelograms:
    def test_against_statsmodels(self):
        x = np.random.default_rng(2).normal(size=300).cumsum() * 0.1 + np.random.default_rng(3).normal(size=300)
        np.testing.assert_allclose(acf(x, 15), sm_acf(x, nlags=15, fft=False), atol=1e-12)
        np.testing.assert_allclose(pacf(x, 10), sm_pacf(x, nlags=10, method="ldb")[1:], atol=1e-10)
        lb = acorr_ljungbox(x, lags=[12])
        res = ljung_box(x, 12)
        assert res.statistic == pytest.approx(float(lb["lb_stat"].iloc[0]), rel=1e-12)
        assert res.p_value == pytest.approx(float(lb["lb_pvalue"].iloc[0]), rel=1e-9, abs=1e-300)

    def test_white_noise_band(self):
        x = np.random.default_rng(4).normal(size=10_000)
        r = acf(x, 12)
        assert r[0] == 1.0
        assert np.all(np.abs(r[1:]) < 4 / 100)

    def test_ar1_theory(self):
        rng = np.random.default_rng(5)
        e = rng.normal(size=10_000)
        x = np.empty_like(e)
        x[0] = e[0]
        for t in range(1, e.size):
            x[t] = 0.5 * x[t - 1] + e[t]
        assert acf(x, 1)[1] == pytest.approx(0.5, abs=0.03)
        assert abs(pacf(x, 2)[1]) < 0.03

    def test_constant_series_is_an_error(self):
        with pytest.raises(ValueError):
            acf(np.ones(20), 3)
        with pytest.raises(ValueError):
            acf(np.arange(5.0), 5)


class TestQq:
    def test_shapes_and_positions(self):
        d2 = np.random.default_rng(6).chisquare(2, 40)
        tab = qq_envelope(d2, 2)
        assert tab.theoretical.shape == tab.lower.shape == (40,)
        np.testing.assert_allclose(stats.chi2(2).cdf(tab.theoretical), (np.arange(1, 41) - 0.5) / 40)
        assert np.all(tab.lower <= tab.upper) and np.all(np.diff(tab.observed) >= 0)

    def test_large_sample_hugs_diagonal(self):
        d2 = np.random.default_rng(7).chisquare(3, 20_000)
        tab = qq_envelope(d2, 3, n_sim=40)
        mid = slice(200, -200)
        np.testing.assert_allclose(tab.observed[mid], tab.theoretical[mid], rtol=0.05)

    def test_coverage_for_correct_distribution(self):
        # pointwise bands move together along the order statistics, so single
        # runs scatter widely; the typical run sits well inside
        cov = [qq_envelope(np.random.default_rng(s).chisquare(3, 150), 3, seed=1000 + s).coverage()
               for s in range(30)]
        assert np.median(cov) >= 0.9

    def test_too_few_simulations(self):
        with pytest.raises(ValueError):
            qq_envelope(np.ones(5), 2, n_sim=10, level=0.95)

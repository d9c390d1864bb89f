import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causalcalib.causality import (
    ADF_CRITICAL_VALUES,
    CausalCase,
    adf_test,
    ensure_stationary,
    f_statistic,
    granger_lag,
    granger_sweep,
    ols,
    report_to_dict,
)
from causalcalib.errors import InputError, RankDeficientError
from causalcalib.rng import CounterRng
from causalcalib.synth import VarSpec, gen_coupled_var, gen_random_walk, gen_white_noise


def normal_eq_ols(y, X):
    """Brute-force normal-equations oracle."""
    return np.linalg.solve(X.T @ X, X.T @ y)


class TestOls:
    def test_exact_linear_data(self):
        X = np.column_stack([np.ones(3), [1.0, 2.0, 3.0]])
        fit = ols(np.array([2.0, 4.0, 6.0]), X)
        assert fit.coefficients == pytest.approx([0.0, 2.0], abs=1e-12)
        assert fit.ssr == pytest.approx(0.0, abs=1e-24)

    def test_constant_target(self):
        X = np.column_stack([np.ones(4), [1.0, 2.0, 3.0, 4.0]])
        fit = ols(np.array([5.0, 5.0, 5.0, 5.0]), X)
        assert fit.coefficients == pytest.approx([5.0, 0.0], abs=1e-12)

    def test_hand_fit_slope(self):
        X = np.column_stack([np.ones(4), [1.0, 2.0, 3.0, 4.0]])
        fit = ols(np.array([1.0, 2.0, 2.0, 4.0]), X)
        assert fit.coefficients[1] == pytest.approx(0.9, abs=1e-9)
        assert fit.coefficients[0] == pytest.approx(0.0, abs=1e-9)

    def test_matches_normal_equations_on_random_systems(self):
        rng = CounterRng(77)
        for trial in range(50):
            rows = 10 + int(rng.integers(40))
            cols = 2 + int(rng.integers(4))
            X = np.column_stack([np.ones(rows), rng.normal((rows, cols - 1))])
            y = rng.normal(rows)
            fit = ols(y, X)
            oracle = normal_eq_ols(y, X)
            scale = max(np.abs(oracle).max(), 1e-8)
            assert np.abs(fit.coefficients - oracle).max() / scale < 1e-8

    def test_residuals_orthogonal_to_design(self):
        rng = CounterRng(5)
        X = np.column_stack([np.ones(60), rng.normal((60, 3))])
        y = rng.normal(60)
        fit = ols(y, X)
        assert np.abs(X.T @ fit.residuals).max() <= 1e-8 * np.linalg.norm(y)

    def test_rank_deficiency_reports_column(self):
        X = np.column_stack([np.ones(10), np.arange(10.0), np.arange(10.0)])
        with pytest.raises(RankDeficientError) as err:
            ols(np.arange(10.0), X)
        assert err.value.column == 2

    def test_more_params_than_rows_rejected(self):
        with pytest.raises(InputError, match="more observations"):
            ols(np.array([1.0, 2.0]), np.ones((2, 2)))

    def test_loglik_definition(self):
        # hand arithmetic: sigma2 = ssr / T
        X = np.column_stack([np.ones(3), [1.0, 2.0, 4.0]])
        y = np.array([1.0, 3.0, 3.0])
        fit = ols(y, X)
        sigma2 = fit.ssr / 3
        expected = -1.5 * (np.log(2 * np.pi) + np.log(sigma2) + 1.0)
        assert fit.log_likelihood == pytest.approx(expected, rel=1e-12)


class TestAdf:
    def test_white_noise_rejects(self):
        result = adf_test(gen_white_noise(500, 42))
        assert result.reject_unit_root
        assert result.statistic < ADF_CRITICAL_VALUES["5%"]

    def test_random_walk_fails_to_reject(self):
        result = adf_test(gen_random_walk(500, 42))
        assert not result.reject_unit_root

    def test_constant_series_errors(self):
        with pytest.raises((RankDeficientError, InputError)):
            adf_test(np.ones(100))

    def test_short_series_rejected(self):
        with pytest.raises(InputError, match="too short"):
            adf_test(np.arange(10.0))

    def test_critical_values_table(self):
        result = adf_test(gen_white_noise(100, 1))
        assert result.critical_values == {"1%": -3.43, "5%": -2.86, "10%": -2.57}

    def test_matches_reference_implementation(self):
        from statsmodels.tsa.stattools import adfuller

        for seed in (3, 11, 29):
            series = gen_white_noise(300, seed)
            mine = adf_test(series)
            stat, _, lags, _, _, _ = adfuller(series, regression="c", autolag="AIC")
            assert mine.statistic == pytest.approx(stat, abs=1e-8)
            assert mine.lags_used == lags

    def test_ar1_is_stationary(self):
        rng = CounterRng(8)
        y = np.zeros(400)
        eps = rng.normal(400)
        for t in range(1, 400):
            y[t] = 0.6 * y[t - 1] + eps[t]
        assert adf_test(y).reject_unit_root


class TestGrangerLag:
    def test_f_statistic_hand_arithmetic(self):
        # ((120 - 100) / 2) / (100 / 100) = 10
        assert f_statistic(120.0, 100.0, 2, 100) == pytest.approx(10.0, abs=1e-12)

    def test_reported_ssr_fields_reproduce_the_f_stat(self):
        y = gen_white_noise(250, 31)
        x = gen_white_noise(250, 32)
        res = granger_lag(y, x, 3)
        dof = (250 - 3) - (2 * 3 + 1)
        assert res.f_stat == pytest.approx(
            f_statistic(res.ssr_restricted, res.ssr_unrestricted, 3, dof), rel=1e-12
        )

    def test_coupled_pair_detected(self):
        x, y = gen_coupled_var(VarSpec(T=800, phi_y=0.4, beta_x=0.9, lag_x=2, noise_sd=1.0, seed=3))
        result = granger_lag(y, x, 2)
        assert result.p_value < 1e-6
        assert result.ssr_restricted >= result.ssr_unrestricted >= 0.0

    def test_zero_x_is_rank_deficient(self):
        y = gen_white_noise(100, 4)
        with pytest.raises(RankDeficientError):
            granger_lag(y, np.zeros(100), 2)

    def test_insufficient_observations(self):
        with pytest.raises(InputError, match="insufficient"):
            granger_lag(np.arange(7.0), np.arange(7.0) * 2, 2)

    def test_matches_reference_implementation(self):
        from statsmodels.tsa.stattools import grangercausalitytests

        x, y = gen_coupled_var(VarSpec(T=400, phi_y=0.5, beta_x=0.6, lag_x=3, noise_sd=1.0, seed=9))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ref = grangercausalitytests(np.column_stack([y, x]), [1, 2, 3], verbose=False)
        for k in (1, 2, 3):
            f_ref, p_ref, _, _ = ref[k][0]["ssr_ftest"]
            mine = granger_lag(y, x, k)
            assert mine.f_stat == pytest.approx(f_ref, rel=1e-10)
            assert mine.p_value == pytest.approx(p_ref, rel=1e-8, abs=1e-300)

    def test_affine_invariance_in_x(self):
        x, y = gen_coupled_var(VarSpec(T=300, phi_y=0.3, beta_x=0.5, lag_x=1, noise_sd=1.0, seed=6))
        base = granger_lag(y, x, 3)
        scaled = granger_lag(y, 2.5 * x - 7.0, 3)
        assert scaled.f_stat == pytest.approx(base.f_stat, rel=1e-8)
        assert scaled.p_value == pytest.approx(base.p_value, rel=1e-8)

    def test_nested_ssr_ordering_random_pairs(self):
        for seed in range(10):
            y = gen_white_noise(150, seed)
            x = gen_white_noise(150, 1000 + seed)
            res = granger_lag(y, x, 4)
            assert res.ssr_restricted >= res.ssr_unrestricted
            assert res.f_stat >= 0.0
            assert 0.0 <= res.p_value <= 1.0

    def test_denominator_dof_override(self):
        y = gen_white_noise(200, 2)
        x = gen_white_noise(200, 3)
        default = granger_lag(y, x, 2)
        wide = granger_lag(y, x, 2, denominator_dof=1000)
        assert default.f_stat != wide.f_stat


class TestGrangerSweep:
    def test_coupled_var_classified(self):
        x, y = gen_coupled_var(VarSpec(T=2000, phi_y=0.5, beta_x=0.8, lag_x=3, noise_sd=1.0, seed=0))
        report = granger_sweep(y, x, max_lag=5, alpha=0.01)
        assert report.case is CausalCase.X_CAUSES_Y
        assert report.direction_xy[2].p_value < 0.01
        assert 3 in report.significant_lags_xy

    def test_swapped_arguments_flip_the_case(self):
        x, y = gen_coupled_var(VarSpec(T=2000, phi_y=0.5, beta_x=0.8, lag_x=3, noise_sd=1.0, seed=0))
        report = granger_sweep(x, y, max_lag=5, alpha=0.01)
        assert report.case is CausalCase.Y_CAUSES_X

    def test_results_in_lag_order_with_threads(self):
        x, y = gen_coupled_var(VarSpec(T=500, phi_y=0.4, beta_x=0.7, lag_x=2, noise_sd=1.0, seed=4))
        serial = granger_sweep(y, x, max_lag=6, alpha=0.05, threads=1)
        parallel = granger_sweep(y, x, max_lag=6, alpha=0.05, threads=4)
        assert [r.lag for r in parallel.direction_xy] == list(range(1, 7))
        for a, b in zip(serial.direction_xy + serial.direction_yx,
                        parallel.direction_xy + parallel.direction_yx):
            assert a.f_stat == b.f_stat and a.p_value == b.p_value

    def test_random_walk_inputs_get_differenced(self):
        y = gen_random_walk(600, 12)
        x = gen_random_walk(600, 13)
        report = granger_sweep(y, x, max_lag=3, alpha=0.05)
        assert report.differenced_x and report.differenced_y

    def test_bad_arguments(self):
        x = gen_white_noise(100, 0)
        with pytest.raises(InputError, match="max_lag"):
            granger_sweep(x, x, max_lag=0)
        with pytest.raises(InputError, match="alpha"):
            granger_sweep(x, x, max_lag=1, alpha=1.5)

    def test_report_dict_schema(self):
        x, y = gen_coupled_var(VarSpec(T=300, phi_y=0.3, beta_x=0.6, lag_x=1, noise_sd=1.0, seed=5))
        payload = report_to_dict(granger_sweep(y, x, max_lag=2, alpha=0.05))
        assert set(payload) == {
            "alpha", "max_lag", "case", "x_to_y", "y_to_x",
            "significant_lags_x_to_y", "significant_lags_y_to_x",
            "differenced_x", "differenced_y",
        }
        assert {"lag", "f_stat", "p_value", "ssr_r", "ssr_u"} == set(payload["x_to_y"][0])


class TestEnsureStationary:
    def test_stationary_passthrough(self):
        series = gen_white_noise(300, 21)
        out, differenced = ensure_stationary(series, "s")
        assert not differenced
        assert np.array_equal(out, series)

    def test_walk_differenced_once(self):
        walk = gen_random_walk(400, 22)
        out, differenced = ensure_stationary(walk, "s")
        assert differenced
        assert np.array_equal(out, np.diff(walk))

    def test_double_unit_root_aborts(self):
        walk2 = np.cumsum(gen_random_walk(400, 23))
        with pytest.raises(InputError, match="non-stationary even after"):
            ensure_stationary(walk2, "s")


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_pvalues_monotone_in_f_for_fixed_dof(seed):
    rng = CounterRng(seed)
    from causalcalib.special import f_sf

    dof1 = 1 + int(rng.integers(10))
    dof2 = 10 + int(rng.integers(200))
    f_lo = float(rng.uniform()) * 3.0
    f_hi = f_lo + 0.5 + float(rng.uniform())
    assert f_sf(f_hi, dof1, dof2) < f_sf(f_lo, dof1, dof2)

import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mcarma_gof.errors import MissingCriticalValue
from mcarma_gof.fourier import uniform_t_grid
from mcarma_gof.gof import (NullDistribution, TestResult, cvm_statistic, decide, gr_statistic,
                            resolve_null, run_test, sn_cvm_statistic, sn_gr_statistic,
                            statistic_from_trajectory, wilson_interval)
from mcarma_gof.limit import LimitSamplerConfig
from mcarma_gof.model import spectral_density
from mcarma_gof.simulate import exact_gaussian_sample
from mcarma_gof.spectral import cumulative_trace_trajectory, empirical_spectral_process, injected_periodogram
from mcarma_gof.weights import indicator_identity

STATS = [gr_statistic, cvm_statistic, sn_gr_statistic, sn_cvm_statistic]
SMALL_LIMIT = LimitSamplerConfig(truncation_M=50, t_intervals=256, replicates=2000, seed=0)


@pytest.mark.parametrize("stat", STATS)
def test_injected_true_density_gives_zero(stat, mcar_disc):
    P = 1024
    w = 2 * np.pi * np.arange(P) / P
    pg = injected_periodogram(spectral_density(mcar_disc, w), 500)
    assert stat(None, mcar_disc, uniform_t_grid(128), periodogram=pg) < 1e-10


def test_gr_is_sup_of_spectral_process(carma_disc):
    Y = exact_gaussian_sample(carma_disc, 120, seed=3).observations
    t = uniform_t_grid(64)
    vals = [abs(empirical_spectral_process(Y, carma_disc, indicator_identity(x)).real) for x in t]
    assert gr_statistic(Y, carma_disc, t) == pytest.approx(max(vals), abs=1e-8)


def test_cvm_is_trapezoid_of_squared_trajectory(carma_disc):
    Y = exact_gaussian_sample(carma_disc, 120, seed=3).observations
    t = uniform_t_grid(64)
    traj = cumulative_trace_trajectory(Y, carma_disc, "plain", t)
    ref = np.sum(0.5 * (traj[1:] ** 2 + traj[:-1] ** 2) * np.diff(t))
    assert cvm_statistic(Y, carma_disc, t) == pytest.approx(ref, abs=1e-8)


@given(st.integers(0, 5000))
def test_statistics_nonnegative_and_sign_invariant(carma_disc, seed):
    Y = np.random.default_rng(seed).standard_normal((40, 1))
    t = uniform_t_grid(32)
    for stat in STATS:
        a = stat(Y, carma_disc, t)
        assert a >= 0
        assert stat(-Y, carma_disc, t) == pytest.approx(a, rel=1e-12, abs=1e-12)


def test_statistic_from_trajectory_rejects_unknown_variant():
    with pytest.raises(ValueError):
        statistic_from_trajectory(np.zeros(3), np.arange(3.0), "ks")


def test_analytic_critical_value():
    null = resolve_null("sn_gr", None)
    assert null.source == "analytic_brownian"
    assert null.critical_value(0.05) == pytest.approx(9.9583, abs=5e-4)
    assert null.critical_value(1.0) == 0.0
    with pytest.raises(ValueError):
        null.critical_value(0.0)


def test_run_test_decision(carma_disc):
    Y = exact_gaussian_sample(carma_disc, 500, seed=1).observations
    res = run_test(Y, carma_disc, "sn_gr", 0.05)
    assert res.critical_value == pytest.approx(9.958289934805654)
    assert res.reject == (res.statistic > res.critical_value)
    assert res.n == 500 and res.critical_source == "analytic_brownian"
    always = run_test(Y, carma_disc, "sn_gr", 1.0)
    assert always.reject and always.critical_value == 0.0


def test_extreme_level_rarely_rejects(carma_disc):
    # level 1e-4 uses the 0.9999 quantile as critical value
    Y = exact_gaussian_sample(carma_disc, 300, seed=2).observations
    assert not run_test(Y, carma_disc, "sn_gr", 1e-4).reject


def test_mc_limit_null_for_plain_statistics(carma_disc):
    Y = exact_gaussian_sample(carma_disc, 300, seed=2).observations
    res = run_test(Y, carma_disc, "gr", 0.05, limit_config=SMALL_LIMIT)
    assert res.critical_source.startswith("mc_limit(")
    assert 0 <= res.p_low <= res.p_value <= res.p_high <= 1


def test_missing_critical_values(carma_disc):
    with pytest.raises(MissingCriticalValue):
        resolve_null("gr", carma_disc, "analytic_brownian")
    with pytest.raises(MissingCriticalValue):
        resolve_null("sn_gr", carma_disc, "auto", driver="nig")
    with pytest.raises(MissingCriticalValue):
        resolve_null("sn_gr", carma_disc, "mc_finite_n")
    with pytest.raises(MissingCriticalValue):
        resolve_null("sn_gr", carma_disc, "bootstrap")


def test_finite_n_null_and_p_value():
    null = resolve_null("gr", None, "mc_finite_n", null_samples=np.arange(1.0, 101.0))
    assert null.critical_value(0.05) == 95.0
    p, (lo, hi) = null.p_value(90.5)
    assert p == pytest.approx(0.10) and lo < p < hi
    assert null.label.startswith("mc_finite_n(")


@given(st.floats(0, 50), st.floats(0.001, 1.0))
def test_reject_iff_statistic_exceeds_critical(stat, level):
    null = NullDistribution("gr", "mc_finite_n", np.linspace(0, 20, 101), {})
    r = decide(stat, "gr", level, null, 10)
    assert r.reject == (r.statistic > r.critical_value)


def test_wilson_interval_contains_estimate():
    lo, hi = wilson_interval(5, 100)
    assert lo < 0.05 < hi
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_csv_row_schema():
    r = TestResult(1.5, "sn_gr", 0.05, 9.9, "analytic_brownian", False, 100, 0.5, 0.5, 0.5)
    buf = io.StringIO()
    buf.write(TestResult.csv_header())
    buf.write(r.csv_row())
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# schema: testresult-v1"
    assert lines[1].split(",")[0] == "variant"
    assert lines[2].startswith("sn_gr,100,1.5,0.05,9.9,analytic_brownian,False")

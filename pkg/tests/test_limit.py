import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mcarma_gof.errors import EmptySample, NotPSDBeyondTolerance
from mcarma_gof.fourier import uniform_t_grid
from mcarma_gof.limit import (LimitSampler, LimitSamplerConfig, analytic_limit_covariance,
                              analytic_sn_gr_quantile, estimate_quantiles,
                              integral_bm_squared_samples, limit_kernels, sample_W, sup_abs_bm_cdf,
                              sup_abs_bm_quantile, w0_factor)
from mcarma_gof.model import autocovariance_true, fourth_moment_matrix
from mcarma_gof.simulate import LevyDriver
from mcarma_gof.weights import WeightFunction, WeightTerm, exp_smooth, fourier_kernel

import oracles


@given(st.floats(0.2, 4.0))
def test_sup_abs_bm_cdf_against_high_precision(x):
    assert abs(sup_abs_bm_cdf(x) - oracles.sup_abs_bm_cdf_mp(x)) < 1e-13


def test_sup_abs_bm_quantile_roundtrip():
    for p in (0.05, 0.5, 0.9, 0.999):
        assert sup_abs_bm_cdf(sup_abs_bm_quantile(p)) == pytest.approx(p, abs=1e-12)


def test_analytic_sn_gr_quantile_oracle():
    for p in (0.9, 0.95, 0.975, 0.99):
        ref = math.sqrt(2) * math.pi * oracles.sup_abs_bm_quantile_mp(p)
        assert analytic_sn_gr_quantile(p) == pytest.approx(ref, abs=1e-9)


def test_integral_bm_squared_moments():
    s = integral_bm_squared_samples(200, 200_000, seed=1)
    # E = 1/2, Var = 1/3
    assert s.mean() == pytest.approx(0.5, abs=4 * math.sqrt(1 / 3 / s.size))
    assert s.var() == pytest.approx(1 / 3, rel=0.03)


# quantiles of int_0^1 B^2 from the Gil-Pelaez inversion in oracles.py
INT_BM2_Q = {0.9: 1.1958202744794784, 0.95: 1.6557390690762148, 0.99: 2.787459178994962}


def test_kl_quantiles_against_inversion_oracle():
    s = integral_bm_squared_samples(200, 400_000, seed=2)
    q = estimate_quantiles(s, list(INT_BM2_Q))
    for got, (p, ref) in zip(q, INT_BM2_Q.items()):
        assert got == pytest.approx(ref, rel=0.015 if p < 0.99 else 0.03)


def test_inversion_oracle_frozen_values():
    assert oracles.int_bm2_quantile(0.9) == pytest.approx(INT_BM2_Q[0.9], abs=1e-8)


def test_estimate_quantiles_definition():
    s = np.array([5.0, 1.0, 3.0, 2.0, 4.0])
    assert list(estimate_quantiles(s, [0.2, 0.21, 0.6, 0.99])) == [1.0, 2.0, 3.0, 5.0]
    assert list(estimate_quantiles([7.0], [0.1, 0.5, 0.99])) == [7.0, 7.0, 7.0]
    with pytest.raises(EmptySample):
        estimate_quantiles([], [0.5])
    with pytest.raises(ValueError):
        estimate_quantiles([1.0], [1.0])


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=50),
       st.lists(st.floats(0.001, 0.999), min_size=2, max_size=6))
def test_estimate_quantiles_monotone_and_in_sample(samples, levels):
    levels = sorted(levels)
    q = estimate_quantiles(samples, levels)
    assert np.all(np.diff(q) >= 0)
    assert set(q) <= set(samples)


def test_sample_W_covariance(mcar_disc, rng):
    W = sample_W(mcar_disc.sigma_N, rng, size=200_000)
    v = W.reshape(W.shape[0], -1)
    assert np.allclose(np.cov(v.T), np.kron(mcar_disc.sigma_N, mcar_disc.sigma_N), atol=0.02)


def test_w0_factor_gaussian_degenerate(mcarma_disc):
    f = w0_factor(fourth_moment_matrix(mcarma_disc, "gaussian"))
    assert f.degenerate
    assert np.all(f.draw(np.random.default_rng(0), 3) == 0)


def test_w0_factor_nig_reconstructs(mcar_disc):
    m4 = fourth_moment_matrix(mcar_disc, LevyDriver.nig(), provider="analytic")
    f = w0_factor(m4)
    assert not f.degenerate
    assert np.allclose(f.factor @ f.factor.T, m4.cumulant, atol=1e-8 * np.abs(m4.cumulant).max())


def test_w0_factor_rejects_indefinite():
    with pytest.raises(NotPSDBeyondTolerance):
        w0_factor(np.diag([1.0, -0.5, 0.0, 0.0]))


def test_kernels_real_and_start_at_zero(mcar_disc):
    k = limit_kernels(mcar_disc, "self_normalized", 5, uniform_t_grid(64))
    assert np.abs(k.K[..., 0]).max() < 1e-14 and np.abs(k.K0[..., 0]).max() < 1e-14
    assert np.isrealobj(k.K)


@pytest.mark.parametrize("t", [np.pi / 4, np.pi / 2, np.pi])
@pytest.mark.parametrize("fixture", ["carma_disc", "mcar_disc", "mcarma_disc"])
def test_sn_brownian_covariance_is_2pi_t(fixture, t, request):
    from mcarma_gof.weights import self_normalized

    disc = request.getfixturevalue(fixture)
    g = self_normalized(t, disc)
    # the sn trajectory carries 1/sqrt(m)
    assert analytic_limit_covariance(g, g, disc) / disc.m == pytest.approx(2 * np.pi * t, abs=1e-6)


def cos_kernel(h, m=1):
    return (fourier_kernel(h, m) + fourier_kernel(-h, m)) * 0.5


@pytest.mark.parametrize("h", [0, 1, 3])
def test_bartlett_formula(carma_disc, h):
    # Var(sqrt(n) Gamma_bar(h)) -> sum_k [Gamma(k)^2 + Gamma(k+h) Gamma(k-h)] (Gaussian)
    g = cos_kernel(h) if h else fourier_kernel(0)
    K = carma_disc.truncation_J + h + 2
    gam = lambda k: autocovariance_true(carma_disc, k)[0, 0]  # noqa: E731
    ref = sum(gam(k) ** 2 + gam(k + h) * gam(k - h) for k in range(-K, K + 1))
    assert analytic_limit_covariance(g, g, carma_disc) == pytest.approx(ref, rel=1e-9)


def test_bartlett_with_fourth_cumulant():
    # univariate AR(1) sampled OU with NIG noise: the kappa4 term adds
    # kappa4(N) * (sum_j phi_j^2)^2 for g = 1
    from mcarma_gof import validate_model
    from mcarma_gof.model import discretize

    disc = discretize(validate_model([[-0.8]], [[1.0]], [[1.0]], [[1.0]]), 1.0)
    m4 = fourth_moment_matrix(disc, LevyDriver.nig(0.7, 0.0, 1.0), provider="analytic")
    g = fourier_kernel(0)
    gauss = analytic_limit_covariance(g, g, disc)
    full = analytic_limit_covariance(g, g, disc, m4)
    phi2 = float(np.sum(disc.phi[:, 0, 0] ** 2))
    assert full - gauss == pytest.approx(m4.cumulant[0, 0] * phi2 ** 2, rel=1e-9)


def test_one_and_two_sided_forms_agree_in_variance(carma_disc):
    m4 = fourth_moment_matrix(carma_disc, LevyDriver.nig(0.8), provider="analytic")
    cfg = LimitSamplerConfig(truncation_M=100, t_intervals=64, replicates=20_000, seed=4)
    v = []
    for form in ("two_sided", "one_sided"):
        s = LimitSampler(carma_disc, m4, "plain", cfg, form=form)
        _, _, traj = s.statistics(keep_trajectories=[16, 64])
        v.append(traj.var(axis=0))
    assert np.allclose(v[0], v[1], rtol=0.06)


def test_direct_mode_variance(carma_disc):
    cfg = LimitSamplerConfig(truncation_M=10, t_intervals=128, replicates=20_000, seed=1, mode="direct")
    s = LimitSampler(carma_disc, None, "self_normalized", cfg)
    _, _, traj = s.statistics(keep_trajectories=[32, 128])
    ref = 2 * np.pi * np.array([np.pi / 4, np.pi])
    assert np.allclose(traj.var(axis=0), ref, rtol=0.04)


def test_sampler_is_seed_deterministic(mcar_disc):
    cfg = LimitSamplerConfig(truncation_M=20, t_intervals=64, replicates=700, seed=3, chunk=300)
    s = LimitSampler(mcar_disc, None, "plain", cfg)
    a = s.statistics()
    b = s.statistics()
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert s.degenerate_w0


def test_asymmetric_weight_flagged_only_with_cumulant(mcar_disc):
    from mcarma_gof.errors import AsymmetricZeroCoefficient

    skew = np.array([[[0.0, 1.0], [0.0, 0.0]]])
    from mcarma_gof.weights import TrigPolynomial
    g = WeightFunction("custom", 2, (WeightTerm(TrigPolynomial([0], skew)),))
    m4 = fourth_moment_matrix(mcar_disc, LevyDriver.nig(), provider="analytic")
    analytic_limit_covariance(g, g, mcar_disc)  # Gaussian part is always defined
    with pytest.raises(AsymmetricZeroCoefficient):
        analytic_limit_covariance(g, g, mcar_disc, m4)
    assert np.isfinite(analytic_limit_covariance(g, g, mcar_disc, m4, check_symmetry=False))


def test_nig_correction_vanishes_as_tails_lighten(carma_disc):
    from mcarma_gof.weights import self_normalized

    g = self_normalized(np.pi, carma_disc)
    base = analytic_limit_covariance(g, g, carma_disc)
    extra = []
    for a in (1.0, 3.0, 10.0, 30.0):
        m4 = fourth_moment_matrix(carma_disc, LevyDriver.nig(a, 0.0, a), provider="analytic")
        extra.append(analytic_limit_covariance(g, g, carma_disc, m4, check_symmetry=False) - base)
    assert all(e > 0 for e in extra)
    assert all(x > y for x, y in zip(extra, extra[1:]))
    # linear in the standardized cumulant 3 / (alpha delta), i.e. 3 / a^2 here
    assert extra[0] / extra[2] == pytest.approx(100.0, rel=1e-9)

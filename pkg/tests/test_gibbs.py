# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
import math
import time

import numpy as np
import pytest
from scipy import integrate, stats

from wavebvs.common.errors import SamplerError
from wavebvs.experiment.surfaces import gen_covariate
from wavebvs.lattice.grid import Grid, LatticeSpec
from wavebvs.sampler.gibbs import (
    ChainState,
    coordinate_conditional,
    init_chain,
    least_squares,
    log_joint,
    run_chain,
    run_chains,
    sample_inv_gamma,
    sweep_model1,
    sweep_model2,
    update_variances_model1,
    update_variances_model2,
)
from wavebvs.sampler.prior import (
    Hyperparams,
    Model,
    PriorSchedule,
    log_prior_odds,
)
from wavebvs.wavelet.design import build_design

HYPER_I = Hyperparams(nu=6.0, mu=6.0, model=Model.I)
HYPER_II = Hyperparams(nu=6.0, mu=6.0, model=Model.II)


def quadrature_conditional(X, y, beta, gamma, sigma2, tau2, theta, hyper, j):
    """P(gamma_j = 1 | rest) and slab moments by integrating the joint posterior."""

    def lj(b, g):
        beta_j = beta.copy()
        gamma_j = gamma.copy()
        beta_j[j] = b
        gamma_j[j] = g
        return log_joint(beta_j, gamma_j, sigma2, tau2, X, y, theta, hyper)

    # locate the slab mode from the closed form only to centre the integration
    resid = y - X.dot(beta) + beta[j] * X.column(j)
    t2 = tau2[j] if np.ndim(tau2) else tau2
    v2 = X.col_sqnorms[j] + sigma2 / t2
    centre = float(resid @ X.column(j)) / v2
    width = 40.0 * math.sqrt(sigma2 / v2)
    ref = lj(centre, True)

    def density(b):
        return math.exp(lj(b, True) - ref)

    opts = dict(epsabs=0.0, epsrel=1e-13, limit=200)
    lo, hi = centre - width, centre + width
    mass = integrate.quad(density, lo, hi, **opts)[0]
    mean = integrate.quad(lambda b: b * density(b), lo, hi, **opts)[0] / mass
    var = integrate.quad(lambda b: (b - mean) ** 2 * density(b), lo, hi, **opts)[0] / mass
    spike = math.exp(lj(0.0, False) - ref)
    return mass / (mass + spike), mean, var


@pytest.mark.parametrize("hyper", [HYPER_I, HYPER_II], ids=["model1", "model2"])
def test_conditional_matches_quadrature(toy, rng, hyper):
    X, _, y = toy
    theta = rng.uniform(0.1, 0.9, size=X.m)
    log_odds = log_prior_odds(theta)
    beta = rng.normal(size=X.m)
    gamma = rng.random(X.m) < 0.5
    beta[~gamma] = 0.0
    sigma2 = 0.7
    tau2 = rng.uniform(0.5, 3.0, size=X.m) if hyper.model is Model.II else 1.3

    for j in range(X.m):
        resid = y - X.dot(beta) + beta[j] * X.column(j)
        u = float(resid @ X.column(j))
        t2 = tau2[j] if np.ndim(tau2) else tau2
        p, mean, var, _ = coordinate_conditional(
            u, X.col_sqnorms[j], sigma2, t2, log_odds[j]
        )
        p_q, mean_q, var_q = quadrature_conditional(
            X, y, beta, gamma, sigma2, tau2, theta, hyper, j
        )
        assert p == pytest.approx(p_q, abs=1e-8)
        assert mean == pytest.approx(mean_q, abs=1e-8)
        assert var == pytest.approx(var_q, abs=1e-8)


def test_conditional_limits():
    # u = 0 and tiny prior odds against inclusion: the slab is nearly certain
    p, mean, var, _ = coordinate_conditional(0.0, 1.0, 1.0, 1.0, -50.0)
    assert p == pytest.approx(1.0)
    assert mean == 0.0
    assert var == pytest.approx(0.5)
    p, _, _, _ = coordinate_conditional(0.0, 1.0, 1.0, 1.0, 50.0)
    assert p < 1e-20


def test_residual_recursion_matches_direct(rng):
    spec = LatticeSpec(2)
    x = gen_covariate("xb", spec)
    X = build_design(spec, x)
    y = rng.normal(size=spec.n) + X.dot(rng.normal(size=X.m) * (rng.random(X.m) < 0.2))
    sched = PriorSchedule.builtin("1", 0.8)
    state = init_chain(X, y, 1e-4, seed=3, hyper=HYPER_I)
    for _ in range(100):
        sweep_model1(state, X, y, sched, HYPER_I, random_scan=True)
        update_variances_model1(state, X, y, HYPER_I)
        direct = y - X.dot(state.beta)
        assert np.max(np.abs(direct - state.residual)) < 1e-8
        assert not np.any(state.beta[~state.gamma])
    others = state.beta.copy()
    others[5] = 0.0
    np.testing.assert_allclose(
        state.partial_residual(X, 5), y - X.dot(others), atol=1e-8
    )


def test_debug_mode_detects_drift(toy):
    X, _, y = toy
    state = init_chain(X, y, 1e-4, seed=0, hyper=HYPER_I)
    state.residual = state.residual + 1e-3
    with pytest.raises(SamplerError, match="drifted"):
        sweep_model1(state, X, y, PriorSchedule.builtin("1", 1.0), HYPER_I, debug=True)


def test_non_finite_residual_raises(toy):
    X, _, y = toy
    state = init_chain(X, y, 1e-4, seed=0, hyper=HYPER_I)
    state.residual[0] = np.nan
    with pytest.raises(SamplerError) as info:
        sweep_model1(state, X, y, PriorSchedule.builtin("1", 1.0), HYPER_I)
    assert info.value.coordinate == 0


def test_near_zero_theta_excludes_everything(toy):
    X, _, y = toy
    log_odds = log_prior_odds(np.full(X.m, 1e-300))
    state = init_chain(X, y, 1e-4, seed=1, hyper=HYPER_I)
    sweep_model1(state, X, y, log_odds, HYPER_I)
    assert not state.gamma.any()
    assert not state.beta.any()
    np.testing.assert_allclose(state.residual, y)


def test_least_squares_start_is_exact(toy, rng):
    X, _, _ = toy
    beta_star = rng.normal(size=X.m)
    y = X.dot(beta_star)
    beta_hat, ridge = least_squares(X, y)
    assert not ridge
    state = init_chain(X, y, 0.0, seed=0)
    np.testing.assert_allclose(state.beta, beta_star, atol=1e-10)
    assert state.gamma.all()
    assert state.sigma2 == pytest.approx(1.0 / 6.0)


def test_rank_deficient_design_uses_ridge():
    spec = LatticeSpec(0)
    X = build_design(spec, Grid.on_lattice(spec, np.ones(spec.n)))
    y = np.arange(spec.n, dtype=np.float64)
    beta_hat, ridge = least_squares(X, y)
    assert ridge
    assert np.all(np.isfinite(beta_hat))
    assert init_chain(X, y, 1e-4, seed=0).ridge_fallback


def test_init_chain_model2_has_vector_slab_variance(toy):
    X, _, y = toy
    state = init_chain(X, y, 1e-4, seed=0, hyper=HYPER_II)
    assert state.model is Model.II
    np.testing.assert_allclose(state.tau2, np.full(X.m, 1.0 / 6.0))
    with pytest.raises(ValueError):
        init_chain(X, y, -1.0, seed=0)


def test_inverse_gamma_draws_pass_ks():
    rng = np.random.default_rng(11)
    a, b = 3.5, 2.0
    draws = sample_inv_gamma(rng, a, b, 100_000)
    assert stats.kstest(draws, stats.invgamma(a, scale=b).cdf).pvalue > 0.01


def test_reciprocal_chi_square_draws_pass_ks():
    rng = np.random.default_rng(12)
    mu = 6.0
    draws = sample_inv_gamma(rng, mu / 2.0, 0.5, 100_000)
    assert stats.kstest(1.0 / draws, stats.chi2(mu).cdf).pvalue > 0.01


def test_model2_excluded_slab_variances_follow_prior(toy):
    X, _, y = toy
    state = init_chain(X, y, 1e-4, seed=5, hyper=HYPER_II)
    state.gamma[:] = False
    state.beta[:] = 0.0
    state.residual = y.copy()
    draws = []
    for _ in range(4000):
        update_variances_model2(state, X, y, HYPER_II)
        draws.append(state.tau2.copy())
    draws = np.concatenate(draws)
    assert stats.kstest(1.0 / draws, stats.chi2(HYPER_II.mu).cdf).pvalue > 0.01


def test_model2_included_shape(toy):
    X, _, y = toy
    state = init_chain(X, y, 1e-4, seed=6, hyper=HYPER_II)
    state.gamma[:] = True
    state.beta[:] = 2.0
    state.residual = y - X.dot(state.beta)
    draws = np.concatenate(
        [update_variances_model2(state, X, y, HYPER_II).tau2.copy() for _ in range(3000)]
    )
    ref = stats.invgamma(0.5 * (1.0 + HYPER_II.mu), scale=0.5 * (1.0 + 4.0))
    assert stats.kstest(draws, ref.cdf).pvalue > 0.01


def test_model2_sweep_keeps_invariants(toy):
    X, _, y = toy
    state = init_chain(X, y, 1e-4, seed=7, hyper=HYPER_II)
    for _ in range(50):
        sweep_model2(state, X, y, PriorSchedule.builtin("3", 0.8), HYPER_II, debug=True)
    assert state.tau2.shape == (X.m,)
    assert np.all(state.tau2 > 0)
    assert state.sigma2 > 0


def test_log_joint_drops_excluded_slab_terms(toy):
    X, _, y = toy
    beta = np.zeros(X.m)
    gamma = np.zeros(X.m, dtype=bool)
    theta = np.full(X.m, 0.5)
    base = log_joint(beta, gamma, 1.0, 1.0, X, y, theta, HYPER_I)
    # changing tau^2 only moves its own prior density when nothing is included
    shifted = log_joint(beta, gamma, 1.0, 2.0, X, y, theta, HYPER_I)
    expected = (-4.0 * math.log(2.0) - 0.25) - (-0.5)
    assert shifted - base == pytest.approx(expected)


@pytest.mark.parametrize("hyper", [HYPER_I, HYPER_II], ids=["model1", "model2"])
def test_run_chain_is_reproducible(toy, hyper):
    X, _, y = toy
    sched = PriorSchedule.builtin("2", 0.8)
    first = run_chain(X, y, sched, hyper, sweeps=60, burn_in=20, thin=3, seed=42)
    second = run_chain(X, y, sched, hyper, sweeps=60, burn_in=20, thin=3, seed=42)
    assert first.beta_draws.shape == (13, X.m)
    for name in ("beta_draws", "sigma2_draws", "tau2_draws", "log_post_draws", "gamma_freq"):
        np.testing.assert_array_equal(getattr(first, name), getattr(second, name))
    assert np.all((first.gamma_freq >= 0) & (first.gamma_freq <= 1))
    other = run_chain(X, y, sched, hyper, sweeps=60, burn_in=20, thin=3, seed=43)
    assert not np.array_equal(other.beta_draws, first.beta_draws)


def test_run_chain_validates_lengths(toy):
    X, _, y = toy
    sched = PriorSchedule.builtin("1", 0.8)
    with pytest.raises(ValueError):
        run_chain(X, y, sched, HYPER_I, sweeps=10, burn_in=10)
    with pytest.raises(ValueError):
        run_chain(X, y, sched, HYPER_I, sweeps=10, burn_in=2, thin=0)


def test_run_chains_independent_of_worker_count(toy):
    X, _, y = toy
    sched = PriorSchedule.builtin("1", 0.8)
    serial = run_chains(X, y, sched, HYPER_I, 3, sweeps=30, burn_in=10, seed=9, workers=1)
    pooled = run_chains(X, y, sched, HYPER_I, 3, sweeps=30, burn_in=10, seed=9, workers=3)
    assert [o.meta["chain"] for o in pooled] == [0, 1, 2]
    for a, b in zip(serial, pooled):
        np.testing.assert_array_equal(a.beta_draws, b.beta_draws)
    assert not np.array_equal(serial[0].beta_draws, serial[1].beta_draws)


def test_sampler_recovers_sparse_signal():
    rng = np.random.default_rng(0)
    spec = LatticeSpec(1)
    x = Grid.on_lattice(spec, rng.normal(size=spec.n))
    X = build_design(spec, x)
    beta_star = np.zeros(X.m)
    beta_star[[0, 1, X.d]] = [20.0, -8.0, 5.0]
    y = X.dot(beta_star) + 0.1 * rng.normal(size=spec.n)
    out = run_chain(X, y, PriorSchedule.builtin("1", 0.5), HYPER_I, 400, 200, seed=1)
    post_mean = out.beta_draws.mean(axis=0)
    np.testing.assert_allclose(post_mean[[0, 1, X.d]], [20.0, -8.0, 5.0], atol=0.5)
    assert np.all(out.gamma_freq[[0, 1, X.d]] > 0.99)


def successive_conditional(X, hyper, theta, iters, seed):
    """
    Alternates y ~ p(y | beta, sigma^2) with one Gibbs iteration; the
    parameters then keep the joint prior as their stationary law.
    """
    rng = np.random.default_rng(seed)
    log_odds = log_prior_odds(np.full(X.m, theta))
    size = X.m if hyper.model is Model.II else None
    tau2 = 1.0 / rng.chisquare(hyper.mu, size)
    gamma = rng.random(X.m) < theta
    beta = np.where(gamma, np.sqrt(tau2) * rng.standard_normal(X.m), 0.0)
    state = ChainState(
        beta=beta,
        gamma=gamma,
        sigma2=1.0 / rng.chisquare(hyper.nu),
        tau2=tau2,
        residual=np.zeros(X.n),
        rng=np.random.default_rng(seed + 1),
    )
    precisions = np.empty((iters, 2))
    for t in range(iters):
        y = X.dot(state.beta) + math.sqrt(state.sigma2) * rng.standard_normal(X.n)
        state.residual = y - X.dot(state.beta)
        if hyper.model is Model.II:
            sweep_model2(state, X, y, log_odds, hyper)
        else:
            sweep_model1(state, X, y, log_odds, hyper)
            update_variances_model1(state, X, y, hyper)
        precisions[t] = 1.0 / state.sigma2, np.mean(1.0 / state.tau2)
    return precisions


def batch_means(trace, n_batches=40):
    means = trace[: len(trace) // n_batches * n_batches].reshape(n_batches, -1).mean(axis=1)
    return means.mean(), means.std(ddof=1) / math.sqrt(n_batches)


@pytest.mark.parametrize("hyper", [HYPER_I, HYPER_II], ids=["model1", "model2"])
def test_successive_conditional_keeps_the_prior(toy, hyper):
    X, _, _ = toy
    precisions = successive_conditional(X, hyper, theta=0.3, iters=40_000, seed=31)
    # 1/sigma^2 ~ chi^2_nu and every 1/tau^2 ~ chi^2_mu a priori
    for trace, expected in zip(precisions.T, (hyper.nu, hyper.mu)):
        mean, se = batch_means(trace)
        assert abs(mean - expected) < 3.0 * se, (mean, expected, se)


def sweep_seconds(J, repeats=3, sweeps=5):
    rng = np.random.default_rng(J)
    spec = LatticeSpec(J)
    X = build_design(spec, Grid.on_lattice(spec, rng.normal(size=spec.n)))
    y = rng.normal(size=spec.n)
    log_odds = log_prior_odds(np.full(X.m, 0.5))
    state = init_chain(X, y, 1e-4, seed=J, hyper=HYPER_I)
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        for _ in range(sweeps):
            sweep_model1(state, X, y, log_odds, HYPER_I)
        best = min(best, (time.perf_counter() - start) / sweeps)
    return best, X.n * X.m


def test_sweep_cost_grows_with_design_size():
    small, small_nm = sweep_seconds(1)
    large, large_nm = sweep_seconds(2)
    # a sweep costs O(n m); allow three times that growth for timer noise
    assert large / small < 3.0 * large_nm / small_nm

# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
"""
Blockwise spike-and-slab Gibbs samplers.

Model I shares one slab variance tau^2 across all coordinates; Model II gives
every coordinate its own tau_j^2. Both draw (gamma_j, beta_j) jointly per
coordinate from

    P(gamma_j = 1 | rest) = 1 / (1 + rho_j)
    beta_j | gamma_j = 1, rest ~ N(u_j / v_j^2, sigma^2 / v_j^2)

with u_j = (y - X_{-j} beta_{-j})' X_j, v_j^2 = X_j'X_j + sigma^2 / tau_j^2 and

    log rho_j = log((1 - theta_j) / theta_j) + log(tau_j v_j / sigma)
                - u_j^2 / (2 sigma^2 v_j^2).

The sampler keeps the full residual R = y - X beta as its only state vector;
u_j = R'X_j + beta_j X_j'X_j and R is patched by (old - new) X_j after every
coordinate, which is the partial-residual recursion
V_j = V_{j-1} + beta_j^(t) X_j - beta_{j-1}^(t+1) X_{j-1} written for R.
"""
import logging
import math
import multiprocessing as mp
import time
from dataclasses import dataclass, field
from typing import Union

import numpy as np
import scipy.linalg
from scipy.special import expit, gammaln
from tqdm import trange

from wavebvs.common.errors import SamplerError
from wavebvs.lattice.basis import WaveletBasis
from wavebvs.sampler.prior import (
    Hyperparams,
    Model,
    PriorSchedule,
    log_prior_odds,
    theta_vector,
)
from wavebvs.wavelet.design import DesignMatrix

logger = logging.getLogger(__name__)

RIDGE = 1e-8
TAU2_FLOOR = 1e-300
RESIDUAL_TOL = 1e-8


@dataclass
class ChainState:
    beta: np.ndarray
    gamma: np.ndarray
    sigma2: float
    # float for Model I, length-m array for Model II
    tau2: Union[float, np.ndarray]
    residual: np.ndarray
    rng: np.random.Generator = field(repr=False)
    ridge_fallback: bool = False
    tau2_clamps: int = 0

    @property
    def model(self):
        return Model.II if np.ndim(self.tau2) == 1 else Model.I

    def partial_residual(self, X: DesignMatrix, j):
        """V_j = y - X_{-j} beta_{-j} for the coordinate about to be updated."""
        return self.residual + self.beta[j] * X.column(j)


@dataclass
class ChainOutput:
    beta_draws: np.ndarray
    sigma2_draws: np.ndarray
    # Model I: tau^2; Model II: mean of tau_j^2 over all coordinates
    tau2_draws: np.ndarray
    log_post_draws: np.ndarray
    gamma_freq: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_kept(self):
        return self.beta_draws.shape[0]

    def scalar_traces(self):
        return {
            "sigma2": self.sigma2_draws,
            "tau2": self.tau2_draws,
            "log_post": self.log_post_draws,
        }


def sample_inv_gamma(rng, shape, scale, size=None):
    """Draws from IG(shape, scale), density proportional to x^(-shape-1) exp(-scale/x)."""
    return np.asarray(scale) / rng.gamma(shape, 1.0, size)


def coordinate_conditional(u, sq, sigma2, tau2, log_odds):
    """
    Closed-form conditional of (gamma_j, beta_j) given everything else.

    :returns: (P(gamma_j = 1 | rest), slab mean, slab variance, log rho_j)
    """
    v2 = sq + sigma2 / tau2
    log_rho = (
        log_odds
        + 0.5 * (math.log(tau2) + math.log(v2) - math.log(sigma2))
        - u * u / (2.0 * sigma2 * v2)
    )
    return float(expit(-log_rho)), u / v2, sigma2 / v2, log_rho


def resolve_log_odds(sched, X: DesignMatrix):
    """Accepts a PriorSchedule or a precomputed length-m array of log prior odds."""
    if isinstance(sched, PriorSchedule):
        return log_prior_odds(theta_vector(sched, WaveletBasis(X.spec.J)))
    log_odds = np.asarray(sched, dtype=np.float64)
    if log_odds.shape != (X.m,):
        raise ValueError(
            "expected {} log prior odds, got shape {}".format(X.m, log_odds.shape)
        )
    return log_odds


def least_squares(X: DesignMatrix, y):
    """
    beta_hat = (X'X)^{-1} X'y.

    Falls back to (X'X + 1e-8 I)^{-1} X'y when X is rank deficient.
    :returns: (beta_hat, ridge_used)
    """
    cond = max(X.n, X.m) * np.finfo(np.float64).eps
    beta_hat, _, rank, _ = scipy.linalg.lstsq(X.matrix, y, cond=cond)
    if rank >= X.m:
        return beta_hat, False
    logger.warning(
        "Design matrix has rank %d < %d; using ridge %.0e on X'X", rank, X.m, RIDGE
    )
    XtX = X.columns @ X.columns.T
    XtX[np.diag_indices_from(XtX)] += RIDGE
    beta_hat = scipy.linalg.solve(XtX, X.columns @ y, assume_a="pos")
    return beta_hat, True


def init_chain(X: DesignMatrix, y, sigma_tilde2, seed, hyper=None, beta_hat=None):
    """
    Starts a chain at a draw from N(beta_hat, sigma_tilde2 I_m) around the least
    squares estimate, with every coordinate included and sigma^2, tau^2 at
    1/nu and 1/mu.
    """
    if sigma_tilde2 < 0:
        raise ValueError("sigma_tilde2 must be non-negative")
    hyper = hyper or Hyperparams()
    y = np.asarray(y, dtype=np.float64)
    rng = np.random.default_rng(seed)

    ridge_used = False
    if beta_hat is None:
        beta_hat, ridge_used = least_squares(X, y)
    beta = beta_hat + math.sqrt(sigma_tilde2) * rng.standard_normal(X.m)

    if hyper.model is Model.II:
        tau2 = np.full(X.m, 1.0 / hyper.mu)
    else:
        tau2 = 1.0 / hyper.mu
    return ChainState(
        beta=beta,
        gamma=np.ones(X.m, dtype=bool),
        sigma2=1.0 / hyper.nu,
        tau2=tau2,
        residual=y - X.dot(beta),
        rng=rng,
        ridge_fallback=ridge_used,
    )


def _sweep(state: ChainState, X: DesignMatrix, log_odds, random_scan=False):
    m = X.m
    cols = X.columns
    sqnorms = X.col_sqnorms
    beta = state.beta
    gamma = state.gamma
    R = state.residual
    sigma2 = state.sigma2
    per_coord_tau = np.ndim(state.tau2) == 1

    rng = state.rng
    order = rng.permutation(m) if random_scan else range(m)
    uniforms = rng.random(m)
    normals = rng.standard_normal(m)

    for step, j in enumerate(order):
        xj = cols[j]
        old = beta[j]
        u = float(xj @ R) + old * sqnorms[j]
        tau2 = state.tau2[j] if per_coord_tau else state.tau2
        p_incl, mean, var, log_rho = coordinate_conditional(
            u, sqnorms[j], sigma2, tau2, log_odds[j]
        )
        if not (math.isfinite(u) and math.isfinite(log_rho)):
            raise SamplerError("non-finite u_j or rho_j", coordinate=int(j))

        if uniforms[step] < p_incl:
            gamma[j] = True
            new = mean + math.sqrt(var) * normals[step]
        else:
            gamma[j] = False
            new = 0.0
        if new != old:
            R -= (new - old) * xj
            beta[j] = new
    return state


def _check_state(state: ChainState, X: DesignMatrix, y):
    direct = y - X.dot(state.beta)
    drift = float(np.max(np.abs(direct - state.residual)))
    if drift > RESIDUAL_TOL:
        raise SamplerError(
            "maintained residual drifted {:.3e} from y - X beta".format(drift)
        )
    assert not np.any(state.beta[~state.gamma]), "excluded coordinate with beta != 0"


def sweep_model1(state, X, y, sched, hyper=None, random_scan=False, debug=False):
    """Step (A) of the Model I sampler: one pass of (gamma_j, beta_j) draws."""
    _sweep(state, X, resolve_log_odds(sched, X), random_scan)
    if debug:
        _check_state(state, X, y)
    return state


def _draw_sigma2(state: ChainState, X: DesignMatrix, y, hyper: Hyperparams, debug):
    rss = float(state.residual @ state.residual)
    if debug:
        direct = y - X.dot(state.beta)
        if abs(float(direct @ direct) - rss) > RESIDUAL_TOL * max(1.0, rss):
            raise SamplerError("residual norm disagrees with direct recomputation")
    return float(
        sample_inv_gamma(state.rng, 0.5 * (X.n + hyper.nu), 0.5 * (1.0 + rss))
    )


def _clamp_tau2(state: ChainState, tau2):
    low = tau2 < TAU2_FLOOR
    n_low = int(np.count_nonzero(low))
    if n_low:
        state.tau2_clamps += n_low
        tau2 = np.where(low, TAU2_FLOOR, tau2) if np.ndim(tau2) else TAU2_FLOOR
    return tau2


def update_variances_model1(state, X, y, hyper: Hyperparams, debug=False):
    """Step (B) of the Model I sampler: sigma^2, then tau^2."""
    state.sigma2 = _draw_sigma2(state, X, y, hyper, debug)
    # excluded coordinates are exactly zero, so ||beta||^2 runs over included ones
    n_incl = int(np.count_nonzero(state.gamma))
    tau2 = float(
        sample_inv_gamma(
            state.rng,
            0.5 * (n_incl + hyper.mu),
            0.5 * (1.0 + float(state.beta @ state.beta)),
        )
    )
    state.tau2 = float(_clamp_tau2(state, tau2))
    return state


def update_variances_model2(state, X, y, hyper: Hyperparams, debug=False):
    """
    Steps (B) and (C) of the Model II sampler.

    tau_j^2 ~ 1/chi^2_mu for excluded coordinates and
    IG((1 + mu)/2, (1 + beta_j^2)/2) for included ones; then sigma^2.
    """
    shape = np.where(state.gamma, 0.5 * (1.0 + hyper.mu), 0.5 * hyper.mu)
    scale = 0.5 * (1.0 + state.beta ** 2)
    tau2 = sample_inv_gamma(state.rng, shape, scale)
    state.tau2 = _clamp_tau2(state, tau2)
    state.sigma2 = _draw_sigma2(state, X, y, hyper, debug)
    return state


def sweep_model2(
    state, X, y, sched, hyper: Hyperparams, random_scan=False, debug=False
):
    """One full Model II iteration: (gamma, beta) pass, tau_j^2 refresh, sigma^2."""
    _sweep(state, X, resolve_log_odds(sched, X), random_scan)
    if debug:
        _check_state(state, X, y)
    return update_variances_model2(state, X, y, hyper, debug)


def log_joint(beta, gamma, sigma2, tau2, X: DesignMatrix, y, theta, hyper):
    """
    Unnormalized log posterior of (beta, gamma, sigma^2, tau^2), the point
    mass at zero of excluded coordinates counted as 1.
    """
    beta = np.asarray(beta, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=bool)
    theta = np.asarray(theta, dtype=np.float64)
    resid = np.asarray(y, dtype=np.float64) - X.dot(beta)
    n = resid.shape[0]

    lp = -0.5 * n * math.log(2.0 * math.pi * sigma2) - float(resid @ resid) / (
        2.0 * sigma2
    )
    tau2_vec = np.broadcast_to(np.asarray(tau2, dtype=np.float64), beta.shape)
    incl = gamma
    lp += float(
        np.sum(
            -0.5 * np.log(2.0 * math.pi * tau2_vec[incl])
            - beta[incl] ** 2 / (2.0 * tau2_vec[incl])
        )
    )
    lp += _log_inv_chi2(sigma2, hyper.nu)
    if np.ndim(tau2) == 1:
        lp += float(np.sum(_log_inv_chi2(tau2_vec, hyper.mu)))
    else:
        lp += _log_inv_chi2(float(tau2), hyper.mu)
    lp += float(np.sum(np.where(gamma, np.log(theta), np.log1p(-theta))))
    return lp


def _log_inv_chi2(x, df):
    # density of x when 1/x ~ chi^2_df, in the sigma^{-df-2} form of the posterior
    return (
        -0.5 * df * math.log(2.0)
        - gammaln(0.5 * df)
        - (0.5 * df + 1.0) * np.log(x)
        - 1.0 / (2.0 * x)
    )


def run_chain(
    X: DesignMatrix,
    y,
    sched,
    hyper: Hyperparams,
    sweeps,
    burn_in,
    thin=1,
    seed=None,
    init_var=1e-4,
    beta_hat=None,
    random_scan=False,
    debug=False,
    silent=True,
    chain_index=0,
):
    """
    Runs one chain and keeps every ``thin``-th draw after ``burn_in`` sweeps.

    Output is bit-reproducible for a fixed (seed, inputs).
    """
    if not 0 <= burn_in < sweeps:
        raise ValueError(
            "need 0 <= burn_in < sweeps, got burn_in={} sweeps={}".format(
                burn_in, sweeps
            )
        )
    if thin < 1:
        raise ValueError("thin must be >= 1, got {}".format(thin))

    y = np.asarray(y, dtype=np.float64)
    theta = (
        theta_vector(sched, WaveletBasis(X.spec.J))
        if isinstance(sched, PriorSchedule)
        else np.asarray(sched, dtype=np.float64)
    )
    log_odds = log_prior_odds(theta)

    start = time.time()
    state = init_chain(X, y, init_var, seed, hyper, beta_hat)

    n_keep = (sweeps - burn_in) // thin
    beta_draws = np.empty((n_keep, X.m))
    sigma2_draws = np.empty(n_keep)
    tau2_draws = np.empty(n_keep)
    log_post_draws = np.empty(n_keep)
    gamma_counts = np.zeros(X.m)

    kept = 0
    for t in trange(
        1,
        sweeps + 1,
        desc="Chain {}".format(chain_index),
        disable=silent,
    ):
        if hyper.model is Model.I:
            sweep_model1(state, X, y, log_odds, hyper, random_scan, debug)
            update_variances_model1(state, X, y, hyper, debug)
        else:
            sweep_model2(state, X, y, log_odds, hyper, random_scan, debug)

        if t > burn_in and (t - burn_in) % thin == 0 and kept < n_keep:
            beta_draws[kept] = state.beta
            sigma2_draws[kept] = state.sigma2
            tau2_draws[kept] = float(np.mean(state.tau2))
            log_post_draws[kept] = log_joint(
                state.beta, state.gamma, state.sigma2, state.tau2, X, y, theta, hyper
            )
            gamma_counts += state.gamma
            kept += 1

    wall = time.time() - start
    if state.tau2_clamps:
        logger.warning(
            "Chain %d: slab variance clamped to %.0e %d times",
            chain_index,
            TAU2_FLOOR,
            state.tau2_clamps,
        )
    logger.info(
        "Chain %d finished: %d sweeps, %d kept draws, %.1fs",
        chain_index,
        sweeps,
        n_keep,
        wall,
    )
    meta = {
        "chain": chain_index,
        "seed": _seed_repr(seed),
        "model": hyper.model.value,
        "sweeps": sweeps,
        "burn_in": burn_in,
        "thin": thin,
        "kept": n_keep,
        "init_var": init_var,
        "random_scan": bool(random_scan),
        "ridge_fallback": bool(state.ridge_fallback),
        "tau2_clamps": state.tau2_clamps,
        "wall_time": wall,
    }
    return ChainOutput(
        beta_draws=beta_draws,
        sigma2_draws=sigma2_draws,
        tau2_draws=tau2_draws,
        log_post_draws=log_post_draws,
        gamma_freq=gamma_counts / max(n_keep, 1),
        meta=meta,
    )


def _seed_repr(seed):
    if isinstance(seed, np.random.SeedSequence):
        return {"entropy": seed.entropy, "spawn_key": list(seed.spawn_key)}
    return seed


def chain_seeds(seed, n_chains):
    """Independent per-chain streams derived from (seed, chain index)."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(n_chains)


# read-only inputs shared by every chain of a run_chains call in one process
_chain_job = {}


def _init_chain_job(job):
    _chain_job.clear()
    _chain_job.update(job)


def _run_chain_job(task):
    index, seed = task
    job = _chain_job
    output = run_chain(
        job["X"],
        job["y"],
        job["sched"],
        job["hyper"],
        job["sweeps"],
        job["burn_in"],
        job["thin"],
        seed,
        beta_hat=job["beta_hat"],
        chain_index=index,
        **job["kwargs"]
    )
    output.meta["ridge_fallback"] = job["ridge_used"]
    return output


def run_chains(
    X: DesignMatrix,
    y,
    sched,
    hyper: Hyperparams,
    n_chains,
    sweeps,
    burn_in,
    thin=1,
    seed=None,
    workers=1,
    **kwargs
):
    """
    Runs ``n_chains`` independent chains, over a process pool when
    ``workers > 1``.

    The least-squares start is solved once and shared; every chain owns its
    state and RNG stream, results come back in chain order and do not depend
    on ``workers``.
    """
    if n_chains < 1:
        raise ValueError("n_chains must be >= 1")
    y = np.asarray(y, dtype=np.float64)
    beta_hat, ridge_used = least_squares(X, y)
    job = {
        "X": X,
        "y": y,
        "sched": sched,
        "hyper": hyper,
        "sweeps": sweeps,
        "burn_in": burn_in,
        "thin": thin,
        "beta_hat": beta_hat,
        "ridge_used": ridge_used,
        "kwargs": kwargs,
    }
    tasks = list(enumerate(chain_seeds(seed, n_chains)))

    if workers <= 1 or n_chains == 1:
        _init_chain_job(job)
        try:
            return [_run_chain_job(task) for task in tasks]
        finally:
            _chain_job.clear()
    with mp.Pool(min(workers, n_chains), _init_chain_job, (job,)) as pool:
        return pool.map(_run_chain_job, tasks)

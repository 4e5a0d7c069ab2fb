# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from wavebvs.common.errors import LatticeMismatchError
from wavebvs.lattice.grid import Grid, save_grid
from wavebvs.wavelet.design import DesignMatrix
from wavebvs.wavelet.haar import basis_matrix, evaluation_matrix

logger = logging.getLogger(__name__)

DEFAULT_EVAL_SIDE = 100
PIXEL_CHUNK = 512


@dataclass(frozen=True, eq=False)
class PosteriorSummary:
    A_hat: Grid
    B_hat: Grid
    psd_B: Grid
    y_hat: Grid
    a_hat: np.ndarray = field(repr=False)
    b_hat: np.ndarray = field(repr=False)
    gamma_freq: np.ndarray = field(repr=False)
    n_draws: int = 0


def pool_draws(draws):
    """Stacks the kept beta draws of one ChainOutput or a list of them."""
    if not isinstance(draws, (list, tuple)):
        draws = [draws]
    beta = np.vstack([d.beta_draws for d in draws])
    weights = np.array([d.n_kept for d in draws], dtype=np.float64)
    gamma_freq = np.average(
        np.vstack([d.gamma_freq for d in draws]), axis=0, weights=weights
    )
    return beta, gamma_freq


def projected_sd(E, draws):
    """
    Sample standard deviation (T-1 denominator) of E_i . b over the draws, for
    every row E_i, without forming the coefficient covariance matrix.
    """
    T = draws.shape[0]
    centered = draws - draws.mean(axis=0)
    out = np.empty(E.shape[0])
    for start in range(0, E.shape[0], PIXEL_CHUNK):
        proj = centered @ E[start : start + PIXEL_CHUNK].T
        out[start : start + PIXEL_CHUNK] = np.sqrt(
            np.einsum("ti,ti->i", proj, proj) / (T - 1)
        )
    return out


def summarize(draws, X: DesignMatrix, x: Grid, eval_side=DEFAULT_EVAL_SIDE):
    """
    Posterior means of the intercept and slope surfaces on an evaluation grid,
    the pointwise posterior sd of the slope, and the fitted image on the
    training lattice.

    Parameters
    ----------
    draws: ChainOutput or list of ChainOutput
        Kept draws; several chains are pooled.
    X: DesignMatrix
        Design the draws were sampled under.
    x: Grid
        Covariate on the training lattice.
    eval_side: int
        Side of the evaluation grid, defaults to 100.

    Returns
    -------
    PosteriorSummary
        a_hat and b_hat are coefficients of the orthonormal basis whatever the
        scaling of ``X``.
    """
    beta, gamma_freq = pool_draws(draws)
    if beta.shape[0] < 2:
        raise ValueError(
            "need at least 2 kept draws to summarize, got {}".format(beta.shape[0])
        )
    if x.side != X.spec.side:
        raise LatticeMismatchError(
            "covariate side {} does not match the training lattice side {}".format(
                x.side, X.spec.side
            )
        )

    spec = X.spec
    if X.coef_scale != 1.0:
        beta = beta * X.coef_scale
    a_draws, b_draws = X.split(beta)
    a_hat = a_draws.mean(axis=0)
    b_hat = b_draws.mean(axis=0)

    E = evaluation_matrix(spec, eval_side)
    eval_spec = spec if eval_side == spec.side else None
    W = basis_matrix(spec)
    y_hat = W @ a_hat + x.values * (W @ b_hat)

    return PosteriorSummary(
        A_hat=Grid(eval_side, E @ a_hat, eval_spec),
        B_hat=Grid(eval_side, E @ b_hat, eval_spec),
        psd_B=Grid(eval_side, projected_sd(E, b_draws), eval_spec),
        y_hat=Grid.on_lattice(spec, y_hat),
        a_hat=a_hat,
        b_hat=b_hat,
        gamma_freq=gamma_freq,
        n_draws=beta.shape[0],
    )


def save_summary(summary: PosteriorSummary, output_dir):
    os.makedirs(output_dir, exist_ok=True)
    for name in ("A_hat", "B_hat", "psd_B", "y_hat"):
        save_grid(getattr(summary, name), os.path.join(output_dir, name + ".csv"))
    np.savetxt(
        os.path.join(output_dir, "coefficients.csv"),
        np.column_stack((summary.a_hat, summary.b_hat)),
        fmt="%.17g",
        delimiter=",",
        header="a_hat,b_hat",
        comments="",
    )
    logger.info("Wrote posterior surfaces to %s", output_dir)

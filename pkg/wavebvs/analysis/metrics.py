# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
"""
Accuracy of L replicated fits against a known truth on N evaluation pixels.

    bias2 = (1/N) sum_i (mean_l est_i^l - truth_i)^2
    var   = (1/N) sum_i (1/L) sum_l (est_i^l - mean_l est_i^l)^2
    mse   = bias2 + var
    mse_y = (1/(N L)) sum_i sum_l (A_i^l + x_i B_i^l - A_i - x_i B_i)^2

mse_y is by default taken over the n training pixels instead, comparing each
fitted image y_hat^l = W a^l + x o W b^l with the noise-free mean
A(s_i) + x(s_i) B(s_i). Off the lattice the slope error at a step edge is
multiplied by x^2, so the eval-grid form is dominated by where the edges fall
between evaluation pixels rather than by the fit.
"""
import csv
import io
from dataclasses import astuple, dataclass

import numpy as np

from wavebvs.common.errors import LatticeMismatchError

METRIC_COLUMNS = ("Bias2_A", "Bias2_B", "Var_A", "Var_B", "MSE_A", "MSE_B", "MSE_y")


@dataclass(frozen=True)
class SimMetrics:
    bias2_A: float
    bias2_B: float
    var_A: float
    var_B: float
    mse_A: float
    mse_B: float
    mse_y: float

    def as_row(self):
        return ["%.6g" % v for v in astuple(self)]

    def as_dict(self):
        return dict(zip(METRIC_COLUMNS, astuple(self)))


def _bias_var(estimates, truth):
    mean = estimates.mean(axis=0)
    bias2 = float(np.mean((mean - truth) ** 2))
    var = float(np.mean(np.mean((estimates - mean) ** 2, axis=0)))
    return bias2, var


def _check_sides(grids, side, what):
    for grid in grids:
        if grid.side != side:
            raise LatticeMismatchError(
                "{} must share one grid (sides {} and {})".format(what, side, grid.side)
            )


def sim_metrics(truth_A, truth_B, x, estimates, response=None):
    """
    :param truth_A, truth_B, x: Grids on the evaluation grid.
    :param estimates: sequence of (A_hat, B_hat) Grid pairs, one per replication.
    :param response: optional (mean, fitted) pair on the training lattice,
        ``mean`` the noise-free A + x B and ``fitted`` one y_hat Grid per
        replication; mse_y is then taken over the lattice.
    """
    if len(estimates) < 1:
        raise ValueError("need at least one replication")
    side = truth_A.side
    _check_sides(
        [truth_B, x] + [g for pair in estimates for g in pair],
        side,
        "metric inputs",
    )
    A_hat = np.vstack([a.values for a, _ in estimates])
    B_hat = np.vstack([b.values for _, b in estimates])
    bias2_A, var_A = _bias_var(A_hat, truth_A.values)
    bias2_B, var_B = _bias_var(B_hat, truth_B.values)

    if response is None:
        fit_err = A_hat + x.values * B_hat - (truth_A.values + x.values * truth_B.values)
    else:
        mean, fitted = response
        if len(fitted) != len(estimates):
            raise ValueError(
                "need one fitted image per replication, got {} for {}".format(
                    len(fitted), len(estimates)
                )
            )
        _check_sides(fitted, mean.side, "fitted images")
        fit_err = np.vstack([f.values for f in fitted]) - mean.values
    return SimMetrics(
        bias2_A=bias2_A,
        bias2_B=bias2_B,
        var_A=var_A,
        var_B=var_B,
        mse_A=bias2_A + var_A,
        mse_B=bias2_B + var_B,
        mse_y=float(np.mean(fit_err ** 2)),
    )


def write_metrics_csv(rows, path, leading=()):
    """
    Writes metric rows with the table columns; ``leading`` names extra
    columns (such as phi) that prefix every row as ``(values, SimMetrics)``.
    """
    with io.open(path, mode="w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(list(leading) + list(METRIC_COLUMNS))
        for prefix, metrics in rows:
            writer.writerow(["%g" % v for v in prefix] + metrics.as_row())

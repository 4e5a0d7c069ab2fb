# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
import logging

import numpy as np

from wavebvs.common.errors import LatticeMismatchError
from wavebvs.lattice.grid import Grid, LatticeSpec
from wavebvs.wavelet.haar import basis_matrix

logger = logging.getLogger(__name__)


class DesignMatrix:
    """
    The n x m design X = [W, x o W] of the concurrent linear model.

    Columns are stored as the rows of a C-contiguous (m, n) array so that
    ``columns[j]`` is a contiguous view of X_j; ``col_sqnorms[j]`` caches
    X_j'X_j.

    ``coef_scale`` maps coefficients of this design to those of the
    orthonormal basis: W_unit beta_unit = X beta with beta_unit = coef_scale * beta.
    """

    def __init__(self, spec: LatticeSpec, columns, coef_scale=1.0):
        columns = np.ascontiguousarray(columns, dtype=np.float64)
        if columns.shape != (2 * spec.d, spec.n):
            raise ValueError(
                "expected {} columns of length {}, got array of shape {}".format(
                    2 * spec.d, spec.n, columns.shape
                )
            )
        columns.setflags(write=False)
        self.spec = spec
        self.coef_scale = float(coef_scale)
        self.columns = columns
        self.col_sqnorms = np.einsum("ij,ij->i", columns, columns)
        self.col_sqnorms.setflags(write=False)

    @property
    def n(self):
        return self.columns.shape[1]

    @property
    def m(self):
        return self.columns.shape[0]

    @property
    def d(self):
        return self.m // 2

    @property
    def matrix(self):
        """X as an (n, m) view."""
        return self.columns.T

    def column(self, j):
        return self.columns[j]

    def dot(self, beta):
        """X beta."""
        return self.columns.T @ beta

    def split(self, beta):
        """Splits a length-m vector into its (a, b) intercept and slope blocks."""
        beta = np.asarray(beta)
        return beta[..., : self.d], beta[..., self.d :]


def build_design(y_spec: LatticeSpec, x: Grid, basis_norm="unit") -> DesignMatrix:
    """
    ``basis_norm = "unit"`` uses the orthonormal W (X_j'X_j = 1 on the W
    block). ``"pointwise"`` uses the basis function values 2^j phi(2^j s - k)
    themselves, i.e. sqrt(n) W, so coefficients live on the scale of the
    surfaces; slab priors on tau^2 then shrink on that scale.
    """
    if x.side != y_spec.side:
        raise LatticeMismatchError(
            "covariate grid has side {}, response lattice J={} has side {}".format(
                x.side, y_spec.J, y_spec.side
            )
        )
    if basis_norm == "unit":
        scale = 1.0
    elif basis_norm == "pointwise":
        scale = float(np.sqrt(y_spec.n))
    else:
        raise ValueError("unknown basis_norm {!r}".format(basis_norm))
    Wt = basis_matrix(y_spec).T * scale
    columns = np.vstack((Wt, Wt * x.values[None, :]))
    logger.info(
        "Built design matrix: n=%d, m=%d (J=%d, %s basis)",
        y_spec.n,
        columns.shape[0],
        y_spec.J,
        basis_norm,
    )
    return DesignMatrix(y_spec, columns, coef_scale=scale)

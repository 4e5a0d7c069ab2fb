# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
"""
Orthonormal 2D Haar analysis and synthesis.

The basis function for detail (r, j, k) at location s is
``norm * 2**j * phi_r(2**j * s - k)`` with the tensor shapes

    r = 1 (horizontal): psi(s1) * 1(s2)
    r = 2 (vertical):   1(s1) * psi(s2)
    r = 3 (diagonal):   psi(s1) * psi(s2)

where psi is +1 on [0, 1/2) and -1 on [1/2, 1). The scaling function is the
constant ``norm``. With ``norm = 1 / sqrt(n)`` of the training lattice the
rows evaluated at the n lattice points stack into a matrix W with
orthonormal columns (W'W = I_d).

W is n x d with n = 4d, so analysis followed by synthesis is the orthogonal
projection onto grids that are constant on 2x2 pixel blocks.
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from wavebvs.common.errors import LatticeMismatchError
from wavebvs.lattice.grid import Grid, LatticeSpec, grid_locations


def lattice_norm(spec: LatticeSpec):
    return 1.0 / np.sqrt(spec.n)


@dataclass(frozen=True, eq=False)
class CoeffVector:
    J: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).ravel()
        d = 4 ** (self.J + 1)
        if values.shape[0] != d:
            raise ValueError(
                "level J={} needs {} coefficients, got {}".format(
                    self.J, d, values.shape[0]
                )
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("coefficients must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def d(self):
        return self.values.shape[0]


def basis_rows(points, J, norm):
    """
    Evaluates W(s) for every row of ``points``.

    :param points: (N, 2) array of locations in [0, 1)^2.
    :returns: (N, 4**(J+1)) array, one basis row per location.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.shape[1] != 2:
        raise ValueError("points must have shape (N, 2)")
    if np.any(points < 0.0) or np.any(points >= 1.0):
        raise ValueError("locations must lie in the unit square [0,1)x[0,1)")

    N = points.shape[0]
    rows = np.zeros((N, 4 ** (J + 1)), dtype=np.float64)
    rows[:, 0] = norm
    pix = np.arange(N)
    for j in range(J + 1):
        scale = 2 ** j
        scaled = points * scale
        k = np.floor(scaled).astype(np.int64)
        # guards against 2^j * s rounding up to 2^j for s just below 1
        k = np.minimum(k, scale - 1)
        sign = np.where(scaled - k < 0.5, 1.0, -1.0)
        shift = k[:, 0] * scale + k[:, 1]
        amplitude = norm * scale
        rows[pix, 1 * 4 ** j + shift] = amplitude * sign[:, 0]
        rows[pix, 2 * 4 ** j + shift] = amplitude * sign[:, 1]
        rows[pix, 3 * 4 ** j + shift] = amplitude * sign[:, 0] * sign[:, 1]
    return rows


def basis_row(s, J, norm):
    """Basis row W(s) of length d = 4**(J+1) at a single location s."""
    return basis_rows(np.asarray(s, dtype=np.float64).reshape(1, 2), J, norm)[0]


@lru_cache(maxsize=8)
def _lattice_matrix(J):
    spec = LatticeSpec(J)
    W = basis_rows(grid_locations(spec.side), J, lattice_norm(spec))
    W.setflags(write=False)
    return W


def basis_matrix(spec: LatticeSpec):
    """The n x d matrix W whose rows are W(s_i) over the training lattice."""
    return _lattice_matrix(spec.J)


def evaluation_matrix(spec: LatticeSpec, side):
    """Basis rows on a side x side evaluation grid, normalized for ``spec``."""
    if side == spec.side:
        return basis_matrix(spec)
    return basis_rows(grid_locations(side), spec.J, lattice_norm(spec))


def forward_dwt(grid: Grid) -> CoeffVector:
    if grid.spec is None:
        raise LatticeMismatchError(
            "forward_dwt needs a grid on a training lattice (side 2^(J+2))"
        )
    if grid.spec.side != grid.side:
        raise LatticeMismatchError(
            "grid side {} does not match J={}".format(grid.side, grid.spec.J)
        )
    W = basis_matrix(grid.spec)
    return CoeffVector(grid.spec.J, W.T @ grid.values)


def inverse_dwt(coeffs: CoeffVector, spec: LatticeSpec) -> Grid:
    if coeffs.J != spec.J:
        raise LatticeMismatchError(
            "coefficients have level J={}, lattice has J={}".format(coeffs.J, spec.J)
        )
    W = basis_matrix(spec)
    return Grid.on_lattice(spec, W @ coeffs.values)


def synthesize(coeffs, spec: LatticeSpec, side):
    """Evaluates the surface W(s) c on a side x side grid (training or not)."""
    values = evaluation_matrix(spec, side) @ np.asarray(coeffs, dtype=np.float64)
    return Grid(side, values, spec if side == spec.side else None)

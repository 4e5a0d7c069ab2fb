# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
"""
Covariates and true intercept/slope surfaces of the simulation study.

Surfaces are functions of (s1, s2) evaluated pointwise at pixel locations,
so the same truth can be laid on the training lattice or any evaluation grid.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from wavebvs.common.errors import LatticeMismatchError
from wavebvs.lattice.grid import Grid, LatticeSpec, load_grid

logger = logging.getLogger(__name__)

# covariate name -> frequency k of 4 sin(k pi (s1 + s2))
COVARIATE_FREQUENCIES = {"xa": 4.0, "xb": 10.0, "xc": 15.0}


def covariate_fn(kind):
    if kind not in COVARIATE_FREQUENCIES:
        raise ValueError(
            "unknown covariate {!r}, expected one of {}".format(
                kind, sorted(COVARIATE_FREQUENCIES)
            )
        )
    k = COVARIATE_FREQUENCIES[kind]
    return lambda s1, s2: 4.0 * np.sin(k * np.pi * (s1 + s2))


def gen_covariate(kind, lattice):
    """
    :param lattice: a LatticeSpec or an integer side length.
    """
    if isinstance(lattice, LatticeSpec):
        return Grid.from_function(lattice.side, covariate_fn(kind), lattice)
    return Grid.from_function(int(lattice), covariate_fn(kind))


def step_A(s1, s2):
    low1 = s1 < 0.5
    low2 = s2 < 0.5
    return np.select(
        [low1 & low2, ~low1 & low2, low1 & ~low2], [1.0, 4.0, 7.0], default=10.0
    )


def step_B(s1, s2):
    # the 0.47 break is deliberately off the dyadic grid
    low2 = s2 < 0.5
    return np.select(
        [low2 & (s1 < 0.47), low2, s1 < 0.5], [1.0, 3.0, 5.0], default=7.0
    )


def smooth_B(s1, s2):
    return 4.0 * np.sin(2.0 * np.pi * s1) * np.cos(2.0 * np.pi * s2)


@dataclass(frozen=True)
class TruthSpec:
    name: str
    A: Callable
    B: Callable
    # for truths read from files, the grids themselves
    A_grid: Optional[Grid] = None
    B_grid: Optional[Grid] = None

    @classmethod
    def case_I(cls):
        return cls("I", step_A, step_B)

    @classmethod
    def case_II(cls):
        return cls("II", step_A, smooth_B)

    @classmethod
    def from_files(cls, A_path, B_path):
        A_grid = load_grid(A_path)
        B_grid = load_grid(B_path)
        if A_grid.side != B_grid.side:
            raise LatticeMismatchError("truth A and B files have different sides")
        return cls("files", None, None, A_grid, B_grid)

    @classmethod
    def named(cls, name):
        if name == "I":
            return cls.case_I()
        if name == "II":
            return cls.case_II()
        raise ValueError("unknown truth case {!r}".format(name))

    def surfaces(self, side, spec=None):
        """(A, B) on a side x side grid."""
        if self.A_grid is not None:
            if self.A_grid.side != side:
                raise LatticeMismatchError(
                    "truth files have side {}, requested {}".format(
                        self.A_grid.side, side
                    )
                )
            return self.A_grid, self.B_grid
        return (
            Grid.from_function(side, self.A, spec),
            Grid.from_function(side, self.B, spec),
        )


def simulate_data(truth: TruthSpec, x: Grid, sigma, seed):
    """
    y = A + x o B + eps with eps iid N(0, sigma^2), on the lattice of ``x``.

    :returns: (y, provenance) where provenance records what produced y.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive, got {}".format(sigma))
    A, B = truth.surfaces(x.side, x.spec)
    rng = np.random.default_rng(seed)
    noise = sigma * rng.standard_normal(x.n)
    y = x.with_values(A.values + x.values * B.values + noise)
    provenance = {
        "truth": truth.name,
        "sigma": float(sigma),
        "seed": seed if isinstance(seed, (int, type(None))) else str(seed),
        "side": x.side,
        "n": x.n,
    }
    logger.info("Simulated %d observations (truth %s, sigma=%g)", x.n, truth.name, sigma)
    return y, provenance

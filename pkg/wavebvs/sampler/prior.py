# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
"""
Hyperparameters and resolution-level Bernoulli inclusion schedules.

Built-in schedules (the scaling coefficients of both blocks always get 0.5):

    PRIOR1: theta = 0.5 * phi**j       for details of A and B
    PRIOR2: theta = 0.5 * phi**j       for details of A, 0.5 for details of B
    PRIOR3: theta = 0.5 * phi**(8*j)   for details of A, 0.5 for details of B
"""
import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from wavebvs.common.errors import DegeneratePriorError
from wavebvs.lattice.basis import WaveletBasis, WaveletIndex

BLOCK_A = "A"
BLOCK_B = "B"


class Model(enum.Enum):
    I = "I"
    II = "II"


class PriorKind(enum.Enum):
    PRIOR1 = "1"
    PRIOR2 = "2"
    PRIOR3 = "3"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Hyperparams:
    """Degrees of freedom of the chi-square priors on 1/sigma^2 and 1/tau^2."""

    nu: float = 6.0
    mu: float = 6.0
    model: Model = Model.I

    def __post_init__(self):
        for name in ("nu", "mu"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError("{} must be finite and positive, got {}".format(name, value))
        if not isinstance(self.model, Model):
            object.__setattr__(self, "model", Model(str(self.model)))


@dataclass(frozen=True, eq=False)
class PriorSchedule:
    kind: PriorKind
    phi: float = 1.0
    # per flat coordinate (A block then B block), CUSTOM only
    table: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if not isinstance(self.kind, PriorKind):
            object.__setattr__(self, "kind", PriorKind(str(self.kind)))
        if not (0.0 < self.phi <= 1.0):
            raise ValueError("phi must lie in (0, 1], got {}".format(self.phi))
        if self.kind is PriorKind.CUSTOM:
            if self.table is None:
                raise ValueError("a custom schedule needs an explicit table")
            table = np.array(self.table, dtype=np.float64).ravel()
            if np.any(table < 0.0) or np.any(table > 1.0):
                raise ValueError("custom inclusion probabilities must lie in [0, 1]")
            table.setflags(write=False)
            object.__setattr__(self, "table", table)

    @classmethod
    def builtin(cls, kind, phi):
        return cls(PriorKind(str(kind)), phi)


def _detail_theta(kind, phi, block, level):
    if kind is PriorKind.PRIOR1:
        return 0.5 * phi ** level
    if block == BLOCK_B:
        return 0.5
    if kind is PriorKind.PRIOR2:
        return 0.5 * phi ** level
    return 0.5 * phi ** (8 * level)


def inclusion_prob(sched: PriorSchedule, block, idx: WaveletIndex, J=None):
    """Prior probability theta_j that coefficient ``idx`` of ``block`` is nonzero."""
    if block not in (BLOCK_A, BLOCK_B):
        raise ValueError("block must be 'A' or 'B', got {!r}".format(block))
    if sched.kind is PriorKind.CUSTOM:
        d = sched.table.shape[0] // 2
        pos = idx.flatten(J)
        return float(sched.table[pos if block == BLOCK_A else d + pos])
    if idx.is_scaling:
        return 0.5
    return _detail_theta(sched.kind, sched.phi, block, idx.j)


def theta_vector(sched: PriorSchedule, basis: WaveletBasis):
    """Inclusion probabilities for all m = 2d coordinates, A block first."""
    if sched.kind is PriorKind.CUSTOM:
        if sched.table.shape[0] != 2 * basis.d:
            raise ValueError(
                "custom table has {} entries, basis needs {}".format(
                    sched.table.shape[0], 2 * basis.d
                )
            )
        return sched.table.copy()
    levels = basis.levels
    detail = levels >= 0
    theta = np.full(2 * basis.d, 0.5)
    for offset, block in ((0, BLOCK_A), (basis.d, BLOCK_B)):
        theta[offset : offset + basis.d][detail] = [
            _detail_theta(sched.kind, sched.phi, block, j) for j in levels[detail]
        ]
    return theta


def prior_odds_ratio(sched: PriorSchedule, block, idx: WaveletIndex, J=None):
    """(1 - theta_j) / theta_j, the prior odds against inclusion."""
    return odds_from_theta(inclusion_prob(sched, block, idx, J))


def odds_from_theta(theta):
    if not 0.0 < theta < 1.0:
        raise DegeneratePriorError(
            "inclusion probability {} makes the prior odds degenerate".format(theta)
        )
    return (1.0 - theta) / theta


def log_prior_odds(theta):
    """Vectorized log((1 - theta) / theta); rejects theta in {0, 1}."""
    theta = np.asarray(theta, dtype=np.float64)
    bad = (theta <= 0.0) | (theta >= 1.0)
    if np.any(bad):
        raise DegeneratePriorError(
            "inclusion probabilities at coordinates {} are 0 or 1".format(
                np.flatnonzero(bad)[:10].tolist()
            )
        )
    return np.log1p(-theta) - np.log(theta)

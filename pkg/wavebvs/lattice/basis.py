# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
"""
Wavelet index bookkeeping for the 2D Haar basis of maximal level J.

Flat order: the scaling coefficient first, then ascending level j, then
orientation r = 1, 2, 3, then row-major shift k = (k1, k2). With that order
the flat position of detail (r, j, k) is ``r * 4**j + k1 * 2**j + k2``.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

SCALING = "scaling"
DETAIL = "detail"

# r -> orientation name
ORIENTATIONS = {1: "horizontal", 2: "vertical", 3: "diagonal"}


@dataclass(frozen=True)
class WaveletIndex:
    kind: str
    r: Optional[int] = None
    j: Optional[int] = None
    k: Optional[Tuple[int, int]] = None

    @classmethod
    def scaling(cls):
        return cls(SCALING)

    @classmethod
    def detail(cls, r, j, k1, k2):
        return cls(DETAIL, r, j, (k1, k2))

    @property
    def is_scaling(self):
        return self.kind == SCALING

    def flatten(self, J=None):
        if self.is_scaling:
            return 0
        r, j, (k1, k2) = self.r, self.j, self.k
        if r not in ORIENTATIONS:
            raise ValueError("orientation r must be 1, 2 or 3, got {}".format(r))
        if j < 0 or (J is not None and j > J):
            raise ValueError("level {} outside 0..{}".format(j, J))
        if not (0 <= k1 < 2 ** j and 0 <= k2 < 2 ** j):
            raise ValueError("shift {} outside level-{} index set".format(self.k, j))
        return r * 4 ** j + k1 * 2 ** j + k2


def unflatten(pos, J):
    d = 4 ** (J + 1)
    if not 0 <= pos < d:
        raise ValueError("flat position {} outside 0..{}".format(pos, d - 1))
    if pos == 0:
        return WaveletIndex.scaling()
    j = (pos.bit_length() - 1) // 2
    r, rem = divmod(pos, 4 ** j)
    k1, k2 = divmod(rem, 2 ** j)
    return WaveletIndex.detail(r, j, k1, k2)


class WaveletBasis:
    """Index set {f_0} U {(r, j, k)} of the Haar basis with maximal level J."""

    def __init__(self, J):
        if J < 0:
            raise ValueError("J must be non-negative")
        self.J = J
        self.d = 4 ** (J + 1)

    def __len__(self):
        return self.d

    def __iter__(self):
        return (unflatten(pos, self.J) for pos in range(self.d))

    def __getitem__(self, pos):
        return unflatten(pos, self.J)

    def position(self, index: WaveletIndex):
        return index.flatten(self.J)

    @cached_property
    def levels(self):
        """Level of every flat position; -1 marks the scaling coefficient."""
        levels = np.full(self.d, -1, dtype=np.int64)
        for j in range(self.J + 1):
            levels[4 ** j : 4 ** (j + 1)] = j
        levels.setflags(write=False)
        return levels

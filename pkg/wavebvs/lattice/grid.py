# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
"""
Square raster data model shared by the transform, the design matrix and I/O.

Pixels are stored row-major: flat index ``k1 * side + k2`` holds the value at
location ``(s1, s2) = (k1 / side, k2 / side)``, so s1 runs down the raster
rows and s2 along the columns.
"""
import csv
import io
import logging
import os
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from PIL import Image

from wavebvs.common.errors import (
    GridFormatError,
    LatticeMismatchError,
    ZeroVarianceError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LatticeSpec:
    """Training lattice for maximal decomposition level ``J``."""

    J: int

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 0:
            raise ValueError("J must be a non-negative integer, got {}".format(self.J))

    @property
    def side(self):
        return 2 ** (self.J + 2)

    @property
    def n(self):
        return 4 ** (self.J + 2)

    @property
    def d(self):
        return 4 ** (self.J + 1)

    @property
    def locations(self):
        return grid_locations(self.side)

    @classmethod
    def from_side(cls, side):
        J = _side_to_level(side)
        if J is None:
            raise LatticeMismatchError(
                "side {} is not 2^(J+2) for any J >= 0".format(side)
            )
        return cls(J)


def _side_to_level(side):
    if side < 4 or side & (side - 1):
        return None
    return side.bit_length() - 3


def grid_locations(side):
    """Row-major (side*side, 2) array of pixel locations (k1/side, k2/side)."""
    ticks = np.arange(side, dtype=np.float64) / side
    s1, s2 = np.meshgrid(ticks, ticks, indexing="ij")
    return np.column_stack((s1.ravel(), s2.ravel()))


@dataclass(frozen=True, eq=False)
class Grid:
    """
    A square raster.

    ``spec`` is set for grids living on a training lattice; evaluation grids
    (for instance 100x100) carry only their side length.
    """

    side: int
    values: np.ndarray = field(repr=False)
    spec: Optional[LatticeSpec] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).ravel()
        if values.shape[0] != self.side * self.side:
            raise LatticeMismatchError(
                "grid of side {} needs {} values, got {}".format(
                    self.side, self.side * self.side, values.shape[0]
                )
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("grid values must be finite")
        if self.spec is not None and self.spec.side != self.side:
            raise LatticeMismatchError(
                "lattice J={} has side {}, grid has side {}".format(
                    self.spec.J, self.spec.side, self.side
                )
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def on_lattice(cls, spec, values):
        return cls(spec.side, values, spec)

    @classmethod
    def from_function(cls, side, fn, spec=None):
        locs = grid_locations(side)
        return cls(side, fn(locs[:, 0], locs[:, 1]), spec)

    @property
    def n(self):
        return self.side * self.side

    @property
    def locations(self):
        return grid_locations(self.side)

    def as_array(self):
        return self.values.reshape(self.side, self.side)

    def with_values(self, values):
        return Grid(self.side, values, self.spec)


def require_same_lattice(*grids):
    sides = {g.side for g in grids}
    if len(sides) != 1:
        raise LatticeMismatchError(
            "grids live on different lattices (sides {})".format(sorted(sides))
        )


def load_grid(path, format=None, spec=None, require_power_of_two=True):
    """
    Reads a square raster with power-of-two side.

    :param format: ``"csv"`` or ``"pgm"``; inferred from the extension when None.
    :param spec: optional LatticeSpec the grid must match; when None a spec is
        attached if the side is a valid training lattice side.
    :param require_power_of_two: False admits any square raster, such as the
        100x100 evaluation grids written by a fit.
    """
    if format is None:
        format = os.path.splitext(str(path))[1].lstrip(".").lower()
    if format == "csv":
        array = _read_csv(path)
    elif format == "pgm":
        array = _read_pgm(path)
    else:
        raise GridFormatError("unsupported raster format {!r}".format(format), path)

    side = array.shape[0]
    if array.shape[1] != side:
        raise GridFormatError(
            "raster is not square ({}x{})".format(array.shape[0], array.shape[1]),
            path,
        )
    if require_power_of_two and side & (side - 1):
        raise GridFormatError("side not a power of two ({})".format(side), path)

    if spec is None and _side_to_level(side) is not None:
        spec = LatticeSpec.from_side(side)
    elif spec is not None and spec.side != side:
        raise LatticeMismatchError(
            "{}: side {} does not match lattice J={} (side {})".format(
                path, side, spec.J, spec.side
            )
        )
    logger.info("Loaded %dx%d grid from %s", side, side, path)
    return Grid(side, array.ravel(), spec)


def _read_csv(path):
    try:
        with io.open(path, mode="r", encoding="utf-8-sig", newline="") as file:
            rows = [row for row in csv.reader(file)]
    except OSError as e:
        raise GridFormatError("unreadable file: {}".format(e), path)
    rows = [row for row in rows if any(cell.strip() for cell in row)]
    if not rows:
        raise GridFormatError("empty raster", path)

    width = len(rows[0])
    parsed = np.empty((len(rows), width), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise GridFormatError(
                "ragged row: expected {} cells, got {}".format(width, len(row)),
                path,
                row=i + 1,
            )
        for j, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise GridFormatError(
                    "non-numeric cell {!r}".format(cell.strip()),
                    path,
                    row=i + 1,
                    col=j + 1,
                )
            if not np.isfinite(value):
                raise GridFormatError(
                    "non-finite cell {!r}".format(cell.strip()),
                    path,
                    row=i + 1,
                    col=j + 1,
                )
            parsed[i, j] = value
    return parsed


def _read_pgm(path):
    try:
        with Image.open(path) as image:
            if image.format != "PPM" or image.mode not in ("L", "I", "I;16", "I;16B"):
                raise GridFormatError(
                    "expected a binary P5 greymap, got {} {}".format(
                        image.format, image.mode
                    ),
                    path,
                )
            maxval = 255.0 if image.mode == "L" else 65535.0
            array = np.asarray(image, dtype=np.float64)
    except OSError as e:
        raise GridFormatError("unreadable file: {}".format(e), path)
    return array / maxval


def save_grid(grid, path):
    """Writes one raster row per line; ``%.17g`` keeps finite values bit-exact."""
    np.savetxt(path, grid.as_array(), fmt="%.17g", delimiter=",")


def standardize(grid: Grid) -> Tuple[Grid, float, float]:
    """
    Centers and scales a grid to sample mean 0 and sample standard deviation 1.

    The standard deviation uses the n-1 denominator. Returns the standardized
    grid together with the removed mean and sd for un-scaling.
    """
    values = grid.values
    mean = float(np.mean(values))
    sd = float(np.std(values, ddof=1)) if values.shape[0] > 1 else 0.0
    if not sd > 0.0:
        raise ZeroVarianceError("cannot standardize a constant grid")
    return grid.with_values((values - mean) / sd), mean, sd

# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#


class WaveBVSError(Exception):
    """Base class for every error raised by the wavebvs package."""


class GridFormatError(WaveBVSError, ValueError):
    """
    Raised when a raster file cannot be turned into a square Grid.

    :param row: 1-based row (line) of the offending cell, if known.
    :param col: 1-based column of the offending cell, if known.
    """

    def __init__(self, message, path=None, row=None, col=None):
        context = []
        if path is not None:
            context.append(str(path))
        if row is not None:
            context.append("row {}".format(row))
        if col is not None:
            context.append("column {}".format(col))
        if context:
            message = "{} ({})".format(message, ", ".join(context))
        super().__init__(message)
        self.path = path
        self.row = row
        self.col = col


class ZeroVarianceError(WaveBVSError, ValueError):
    pass


class LatticeMismatchError(WaveBVSError, ValueError):
    pass


class DegeneratePriorError(WaveBVSError, ValueError):
    pass


class SamplerError(WaveBVSError, RuntimeError):
    def __init__(self, message, coordinate=None):
        if coordinate is not None:
            message = "{} (coordinate {})".format(message, coordinate)
        super().__init__(message)
        self.coordinate = coordinate


class ConstantChainsError(WaveBVSError, ValueError):
    pass


class ConfigError(WaveBVSError, ValueError):
    pass

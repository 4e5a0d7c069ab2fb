# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
"""
Choropleth classification of the slope surface.

Each pixel gets a category from B_hat against +-delta and 0, and an evidence
level from |B_hat / psd| with the approximate-normal cutoffs 1.96 and 1.64.
"""
import csv
import enum
import io
import logging
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from wavebvs.common.errors import LatticeMismatchError

logger = logging.getLogger(__name__)

STRONG_CUTOFF = 1.96
MODERATE_CUTOFF = 1.64


class Category(enum.IntEnum):
    GE_Delta = 0
    ZeroToDelta = 1
    NegDeltaToZero = 2
    LE_NegDelta = 3


class Evidence(enum.IntEnum):
    Strong = 0
    Moderate = 1
    Weak = 2


PALETTE = {
    Category.GE_Delta: (255, 0, 0),
    Category.ZeroToDelta: (255, 255, 0),
    Category.NegDeltaToZero: (0, 255, 0),
    Category.LE_NegDelta: (0, 0, 255),
}
INTENSITY = {Evidence.Strong: 1.0, Evidence.Moderate: 0.7, Evidence.Weak: 0.4}


@dataclass(frozen=True, eq=False)
class ClassMap:
    side: int
    category: np.ndarray = field(repr=False)
    evidence: np.ndarray = field(repr=False)
    delta: float
    B_hat: np.ndarray = field(repr=False)
    psd: np.ndarray = field(repr=False)

    def counts(self):
        return {
            c.name: int(np.count_nonzero(self.category == c)) for c in Category
        }


def categorize(B_hat, delta):
    B_hat = np.asarray(B_hat, dtype=np.float64)
    return np.select(
        [B_hat >= delta, B_hat >= 0.0, B_hat > -delta],
        [Category.GE_Delta, Category.ZeroToDelta, Category.NegDeltaToZero],
        default=Category.LE_NegDelta,
    ).astype(np.int8)


def grade_evidence(B_hat, psd):
    B_hat = np.asarray(B_hat, dtype=np.float64)
    psd = np.asarray(psd, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(B_hat) / psd
    # zero sd: any nonzero estimate is certain, an exact zero carries none
    ratio = np.where(psd > 0.0, ratio, np.where(B_hat != 0.0, np.inf, 0.0))
    return np.select(
        [ratio > STRONG_CUTOFF, ratio >= MODERATE_CUTOFF],
        [Evidence.Strong, Evidence.Moderate],
        default=Evidence.Weak,
    ).astype(np.int8)


def classify(summary, delta):
    if not delta > 0:
        raise ValueError("delta must be positive, got {}".format(delta))
    B_hat, psd = summary.B_hat, summary.psd_B
    if B_hat.side != psd.side:
        raise LatticeMismatchError("B_hat and psd_B live on different grids")
    return ClassMap(
        side=B_hat.side,
        category=categorize(B_hat.values, delta),
        evidence=grade_evidence(B_hat.values, psd.values),
        delta=float(delta),
        B_hat=B_hat.values,
        psd=psd.values,
    )


def delta_from_max_abs_frac(B_hat, frac):
    """delta = frac * max |B_hat|, e.g. frac = 1/3 gives a third of the peak."""
    if not 0.0 < frac <= 1.0:
        raise ValueError("frac must lie in (0, 1], got {}".format(frac))
    delta = frac * float(np.max(np.abs(np.asarray(B_hat))))
    if not delta > 0.0:
        raise ValueError("B_hat is identically zero; choose delta explicitly")
    return delta


def write_classmap_csv(classmap: ClassMap, path):
    with io.open(path, mode="w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(["row", "col", "B_hat", "psd", "category", "evidence"])
        for pos in range(classmap.side * classmap.side):
            row, col = divmod(pos, classmap.side)
            writer.writerow(
                [
                    row,
                    col,
                    "%.17g" % classmap.B_hat[pos],
                    "%.17g" % classmap.psd[pos],
                    Category(classmap.category[pos]).name,
                    Evidence(classmap.evidence[pos]).name,
                ]
            )
    logger.info("Wrote class map to %s", path)


def classmap_rgb(classmap: ClassMap):
    hue = np.array([PALETTE[c] for c in Category], dtype=np.float64)
    intensity = np.array([INTENSITY[e] for e in Evidence])
    rgb = hue[classmap.category] * intensity[classmap.evidence][:, None]
    return np.rint(rgb).astype(np.uint8).reshape(classmap.side, classmap.side, 3)


def render_classmap(classmap: ClassMap, path):
    """Binary PPM, category as hue and evidence as brightness, row 0 on top."""
    Image.fromarray(classmap_rgb(classmap)).save(path, format="PPM")
    logger.info("Rendered class map to %s", path)

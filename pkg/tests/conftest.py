# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
import numpy as np
import pytest

from wavebvs.lattice.grid import Grid, LatticeSpec
from wavebvs.sampler.gibbs import ChainOutput
from wavebvs.wavelet.design import build_design


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def toy(rng):
    """n = 16 pixels, m = 8 coefficients, random covariate and response."""
    spec = LatticeSpec(0)
    x = Grid.on_lattice(spec, rng.normal(size=spec.n))
    X = build_design(spec, x)
    y = rng.normal(size=spec.n) + X.dot(rng.normal(size=X.m))
    return X, x, y


def make_output(beta_draws, **meta):
    beta_draws = np.atleast_2d(np.asarray(beta_draws, dtype=np.float64))
    T, m = beta_draws.shape
    return ChainOutput(
        beta_draws=beta_draws,
        sigma2_draws=np.ones(T),
        tau2_draws=np.ones(T),
        log_post_draws=np.zeros(T),
        gamma_freq=np.ones(m),
        meta=dict(meta),
    )

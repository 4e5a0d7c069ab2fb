# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import assume, given, settings

from tests.conftest import make_output
from wavebvs.analysis.diagnostics import (
    CONSTANT_CHAINS,
    diagnose,
    format_report,
    gelman_rubin,
)
from wavebvs.common.errors import ConstantChainsError


def test_identical_chains():
    assert gelman_rubin([[1, 2, 3, 4], [1, 2, 3, 4]]) == pytest.approx(np.sqrt(0.75))


def test_constant_chains_are_flagged():
    with pytest.raises(ConstantChainsError):
        gelman_rubin([[0, 0, 0, 0], [0, 0, 0, 0]])


def test_preconditions():
    with pytest.raises(ValueError):
        gelman_rubin([[1, 2, 3]])
    with pytest.raises(ValueError):
        gelman_rubin([[1], [2]])


def test_chains_are_truncated_to_shortest():
    assert gelman_rubin([[1, 2, 3, 4, 100], [1, 2, 3, 4]]) == pytest.approx(np.sqrt(0.75))


def test_separated_chains_exceed_threshold():
    rng = np.random.default_rng(1)
    chains = [rng.normal(size=500), rng.normal(size=500) + 5.0]
    assert gelman_rubin(chains) > 1.1


def test_mixed_chains_are_near_one():
    rng = np.random.default_rng(2)
    rhat = gelman_rubin([rng.normal(size=10_000), rng.normal(size=10_000)])
    assert 0.95 < rhat < 1.05


@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(0, 2 ** 32 - 1),
    scale=st.floats(1e-3, 1e3),
    shift=st.floats(-1e3, 1e3),
)
def test_affine_invariance(seed, scale, shift):
    rng = np.random.default_rng(seed)
    chains = [rng.normal(size=50) + rng.normal() for _ in range(3)]
    assume(all(np.var(c) > 1e-6 for c in chains))
    base = gelman_rubin(chains)
    moved = gelman_rubin([scale * c + shift for c in chains])
    assert moved == pytest.approx(base, rel=1e-6)
    assert base >= np.sqrt(49 / 50) - 1e-12


def test_diagnose_and_report():
    rng = np.random.default_rng(3)
    outputs = []
    for _ in range(3):
        out = make_output(np.zeros((200, 2)))
        out.sigma2_draws = rng.normal(size=200)
        out.tau2_draws = rng.normal(size=200)
        outputs.append(out)
    results = diagnose(outputs)
    assert results["log_post"] == CONSTANT_CHAINS
    assert 0.9 < results["sigma2"] < 1.1
    report = format_report(results, 3, 200)
    assert "constant chains" in report
    assert "sigma2" in report and "R-hat" in report

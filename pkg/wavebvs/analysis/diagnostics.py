# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
"""
Gelman-Rubin potential scale reduction for M chains of a scalar trace.

With T the common chain length (longer chains are truncated to the shortest),
W the mean of the within-chain variances and B/T the between-chain variance
of the chain means,

    R = sqrt(((T - 1) / T * W + B / T) / W).
"""
import logging

import numpy as np
from tabulate import tabulate

from wavebvs.common.errors import ConstantChainsError

logger = logging.getLogger(__name__)

CONVERGENCE_THRESHOLD = 1.1
CONSTANT_CHAINS = "constant chains"


def gelman_rubin(chains):
    chains = [np.asarray(c, dtype=np.float64).ravel() for c in chains]
    if len(chains) < 2:
        raise ValueError("need at least 2 chains, got {}".format(len(chains)))
    T = min(c.shape[0] for c in chains)
    if T < 2:
        raise ValueError("every chain needs at least 2 points")
    if any(c.shape[0] != T for c in chains):
        logger.info("Truncating chains to the shortest length %d", T)
    traces = np.vstack([c[:T] for c in chains])

    M = traces.shape[0]
    means = traces.mean(axis=1)
    W = float(np.mean(traces.var(axis=1, ddof=1)))
    B = T / (M - 1) * float(np.sum((means - means.mean()) ** 2))
    if not W > 0.0:
        raise ConstantChainsError("within-chain variance is zero")
    return float(np.sqrt(((T - 1) / T * W + B / T) / W))


def diagnose(outputs, names=("sigma2", "tau2", "log_post")):
    """R-hat per monitored scalar; ``CONSTANT_CHAINS`` in place of degenerate values."""
    results = {}
    for name in names:
        traces = [o.scalar_traces()[name] for o in outputs]
        try:
            rhat = gelman_rubin(traces)
        except ConstantChainsError:
            logger.warning("R-hat for %s: %s", name, CONSTANT_CHAINS)
            results[name] = CONSTANT_CHAINS
            continue
        if rhat >= CONVERGENCE_THRESHOLD:
            logger.warning(
                "R-hat for %s is %.4f >= %.1f; chains may not have mixed",
                name,
                rhat,
                CONVERGENCE_THRESHOLD,
            )
        results[name] = rhat
    return results


def format_report(results, n_chains, n_kept):
    rows = [
        [
            name,
            value if isinstance(value, str) else "{:.4f}".format(value),
            ""
            if isinstance(value, str) or value < CONVERGENCE_THRESHOLD
            else "not converged",
        ]
        for name, value in results.items()
    ]
    header = "Gelman-Rubin diagnostics over {} chains, {} kept draws each\n\n".format(
        n_chains, n_kept
    )
    return header + tabulate(rows, headers=["trace", "R-hat", "note"]) + "\n"

# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
"""
Repeated simulate-and-fit runs scored against the known truth.

Replication l simulates with its own seed ``replication_seed(seed, l)``, so a
row for any phi or model is computed on the same L data sets.
"""
import logging
import multiprocessing as mp
import os

from tabulate import tabulate
from tqdm import tqdm

from wavebvs.analysis.metrics import METRIC_COLUMNS, sim_metrics, write_metrics_csv
from wavebvs.common.errors import ConfigError
from wavebvs.common.params import ExperimentConfig
from wavebvs.common.utils import write_json, write_to_file
from wavebvs.experiment.fit import (
    covariate_of,
    data_seeds,
    eval_truth,
    fit_data,
    load_fit_data,
    replication_seed,
    response_of,
    truth_of,
)
from wavebvs.lattice.grid import LatticeSpec

logger = logging.getLogger(__name__)

TABLE_PHIS = (1.0, 0.9, 0.8, 0.7)


def bayes_estimator(cfg: ExperimentConfig, data, chain_seed, workers=1):
    """(A_hat, B_hat) on the evaluation grid and y_hat on the training lattice."""
    summary = fit_data(cfg, data, chain_seed, workers=workers).summary
    return summary.A_hat, summary.B_hat, summary.y_hat


def _replicate_one(task):
    cfg, index, estimator, chain_workers = task
    data_seed, chain_seed = data_seeds(replication_seed(cfg.seed, index))
    data = load_fit_data(cfg, data_seed)
    return tuple(estimator(cfg, data, chain_seed, chain_workers))


def replicate(cfg: ExperimentConfig, estimator=None):
    """
    Runs ``cfg.replications`` simulate-and-fit rounds.

    :param estimator: callable ``(cfg, data, chain_seed, workers)`` returning
        (A_hat, B_hat) on the evaluation grid, optionally followed by the
        fitted image on the training lattice, which mse_y_grid = lattice
        needs. Defaults to the Gibbs fit. With workers > 1 replications run
        in separate processes and the estimator must be picklable.
    :returns: SimMetrics over the replications.
    """
    if cfg.real_data or cfg.truth == "none":
        raise ConfigError("replicate needs a simulation truth (truth = I, II or files)")
    estimator = estimator or bayes_estimator

    L = cfg.replications
    workers = cfg.n_workers
    # parallelism goes to replications; the chains of one fit then run in turn
    chain_workers = 1 if workers > 1 and L > 1 else workers
    tasks = [(cfg, index, estimator, chain_workers) for index in range(L)]

    if workers > 1 and L > 1:
        with mp.Pool(min(workers, L)) as pool:
            results = pool.map(_replicate_one, tasks)
    else:
        results = [
            _replicate_one(task)
            for task in tqdm(tasks, desc="Replications", disable=cfg.silent)
        ]

    truth = truth_of(cfg)
    estimates = [result[:2] for result in results]
    response = None
    if cfg.mse_y_grid == "lattice":
        if any(len(result) < 3 for result in results):
            raise ConfigError(
                "mse_y_grid = lattice needs an estimator that returns the fitted image"
            )
        x = covariate_of(cfg, LatticeSpec(cfg.J))
        response = response_of(cfg, truth, x, [result[2] for result in results])

    side = estimates[0][0].side
    A, B, x_eval = eval_truth(cfg, truth, side)
    metrics = sim_metrics(A, B, x_eval, estimates, response=response)
    logger.info(
        "phi=%g model %s: MSE_A=%.4g MSE_B=%.4g MSE_y=%.4g",
        cfg.prior_phi,
        cfg.model,
        metrics.mse_A,
        metrics.mse_B,
        metrics.mse_y,
    )
    return metrics


def cmd_replicate(cfg: ExperimentConfig, table=False, estimator=None):
    """
    Writes ``metrics.csv`` with one row, or one row per phi in TABLE_PHIS
    when ``table`` is set.
    """
    out = cfg.out
    os.makedirs(out, exist_ok=True)
    write_to_file(os.path.join(out, "config.txt"), cfg.to_text())

    phis = TABLE_PHIS if table else (cfg.prior_phi,)
    rows = []
    for phi in phis:
        metrics = replicate(cfg.replace(prior_phi=phi), estimator)
        rows.append(((phi,) if table else (), metrics))

    leading = ("phi",) if table else ()
    write_metrics_csv(rows, os.path.join(out, "metrics.csv"), leading=leading)
    write_json(
        os.path.join(out, "summary.json"),
        {
            "replications": cfg.replications,
            "rows": [dict(metrics.as_dict(), phi=phi) for phi, (_, metrics) in zip(phis, rows)],
        },
    )
    logger.info(
        "\n%s",
        tabulate(
            [[*prefix, *m.as_row()] for prefix, m in rows],
            headers=list(leading) + list(METRIC_COLUMNS),
        ),
    )
    return out

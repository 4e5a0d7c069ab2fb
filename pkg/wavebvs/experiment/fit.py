# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
"""
Single-fit pipeline: data, chains, posterior surfaces, diagnostics, class map
and metrics, with every artifact written under ``config.out``.
"""
import logging
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from wavebvs.analysis.classify import (
    classify,
    delta_from_max_abs_frac,
    render_classmap,
    write_classmap_csv,
)
from wavebvs.analysis.diagnostics import diagnose, format_report
from wavebvs.analysis.metrics import sim_metrics, write_metrics_csv
from wavebvs.analysis.posterior import save_summary, summarize
from wavebvs.common.errors import ConfigError, LatticeMismatchError
from wavebvs.common.params import ExperimentConfig
from wavebvs.common.utils import write_json, write_to_file
from wavebvs.experiment.surfaces import TruthSpec, gen_covariate, simulate_data
from wavebvs.lattice.grid import Grid, LatticeSpec, load_grid, save_grid, standardize
from wavebvs.sampler.chain_io import load_chains, save_chains
from wavebvs.sampler.gibbs import run_chains
from wavebvs.sampler.prior import Hyperparams, PriorKind, PriorSchedule
from wavebvs.wavelet.design import build_design

logger = logging.getLogger(__name__)


@dataclass
class FitData:
    y: Grid
    x: Grid
    truth: Optional[TruthSpec] = None
    provenance: dict = field(default_factory=dict)


@dataclass
class FitResult:
    outputs: list
    summary: object
    design: object


def data_seeds(seed):
    """(data seed, chain seed) streams of one simulate-and-fit run."""
    return np.random.SeedSequence(seed).spawn(2)


def replication_seed(master_seed, index):
    """Stable integer seed of replication ``index``."""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])


def make_schedule(cfg: ExperimentConfig):
    if cfg.prior_kind == PriorKind.CUSTOM.value:
        table = np.loadtxt(cfg.prior_table, delimiter=",", ndmin=1).ravel()
        return PriorSchedule(PriorKind.CUSTOM, cfg.prior_phi, table)
    return PriorSchedule.builtin(cfg.prior_kind, cfg.prior_phi)


def make_hyper(cfg: ExperimentConfig):
    return Hyperparams(nu=cfg.hyper_nu, mu=cfg.hyper_mu, model=cfg.model)


def truth_of(cfg: ExperimentConfig):
    if cfg.truth == "none":
        return None
    if cfg.truth == "files":
        return TruthSpec.from_files(cfg.truth_A_path, cfg.truth_B_path)
    return TruthSpec.named(cfg.truth)


def covariate_of(cfg: ExperimentConfig, spec):
    if cfg.covariate == "file":
        return load_grid(cfg.covariate_path, spec=spec)
    return gen_covariate(cfg.covariate, spec)


def load_fit_data(cfg: ExperimentConfig, data_seed=None):
    """Reads the response (real-data mode) or simulates it from the truth."""
    if cfg.real_data:
        y = load_grid(cfg.response_path)
        if y.spec is None:
            raise LatticeMismatchError(
                "response side {} is not 2^(J+2) for any J".format(y.side)
            )
        x = covariate_of(cfg, y.spec)
        mode = cfg.standardize_mode
        if mode == "own":
            y, _, _ = standardize(y)
        if mode in ("own", "shared", "covariate"):
            x, x_mean, x_sd = standardize(x)
        if mode == "shared":
            y = y.with_values((y.values - x_mean) / x_sd)
        # only truth files can describe an observed response
        truth = truth_of(cfg) if cfg.truth == "files" else None
        return FitData(
            y, x, truth, {"response": cfg.response_path, "standardize": mode}
        )

    truth = truth_of(cfg)
    if truth is None:
        raise ConfigError("truth = none needs response_path")
    spec = LatticeSpec(cfg.J)
    x = covariate_of(cfg, spec)
    y, provenance = simulate_data(truth, x, cfg.sigma, data_seed)
    provenance["seed"] = cfg.seed
    if cfg.standardize_mode != "none":
        raise ConfigError("standardize applies to real data only")
    return FitData(y, x, truth, provenance)


def fit_data(cfg: ExperimentConfig, data: FitData, chain_seed, workers=None):
    X = build_design(data.y.spec, data.x, cfg.basis_norm)
    outputs = run_chains(
        X,
        data.y.values,
        make_schedule(cfg),
        make_hyper(cfg),
        cfg.chains,
        cfg.sweeps,
        cfg.burn_in,
        cfg.thin,
        seed=chain_seed,
        workers=cfg.n_workers if workers is None else workers,
        init_var=cfg.init_var,
        random_scan=cfg.random_scan,
        debug=cfg.debug,
        silent=cfg.silent,
    )
    return FitResult(outputs, summarize(outputs, X, data.x, cfg.eval_side), X)


def eval_truth(cfg: ExperimentConfig, truth: TruthSpec, side):
    """(A, B, x) on the evaluation grid for metrics."""
    if cfg.covariate == "file":
        x = load_grid(cfg.covariate_path)
        if x.side != side:
            raise LatticeMismatchError(
                "metrics with a covariate file need eval_side = {}".format(x.side)
            )
    else:
        x = gen_covariate(cfg.covariate, side)
    A, B = truth.surfaces(side)
    return A, B, x


def lattice_mean(truth: TruthSpec, x: Grid):
    """Noise-free mean A + x o B on the training lattice of ``x``."""
    A, B = truth.surfaces(x.side, x.spec)
    return x.with_values(A.values + x.values * B.values)


def response_of(cfg: ExperimentConfig, truth: TruthSpec, x: Grid, fitted):
    """
    (mean, fitted) pair scoring mse_y on the training lattice, or None when
    mse_y is taken on the eval grid.
    """
    if cfg.mse_y_grid != "lattice":
        return None
    if truth.A_grid is not None and truth.A_grid.side != x.side:
        logger.warning(
            "Truth files have side %d, not the lattice side %d; scoring MSE_y on the eval grid",
            truth.A_grid.side,
            x.side,
        )
        return None
    return lattice_mean(truth, x), list(fitted)


def resolve_delta(cfg: ExperimentConfig, B_hat):
    if cfg.delta is not None:
        return cfg.delta
    if cfg.delta_max_abs_frac is not None:
        return delta_from_max_abs_frac(B_hat.values, cfg.delta_max_abs_frac)
    return None


def write_classification(cfg, summary, out):
    delta = resolve_delta(cfg, summary.B_hat)
    if delta is None:
        logger.warning("No delta or delta_max_abs_frac given; skipping class map")
        return None
    classmap = classify(summary, delta)
    write_classmap_csv(classmap, os.path.join(out, "classmap.csv"))
    render_classmap(classmap, os.path.join(out, "classmap.ppm"))
    return classmap


def cmd_fit(cfg: ExperimentConfig):
    out = cfg.out
    os.makedirs(out, exist_ok=True)
    write_to_file(os.path.join(out, "config.txt"), cfg.to_text())

    data_seed, chain_seed = data_seeds(cfg.seed)
    data = load_fit_data(cfg, data_seed)
    save_grid(data.y, os.path.join(out, "y.csv"))
    save_grid(data.x, os.path.join(out, "x.csv"))

    result = fit_data(cfg, data, chain_seed)
    save_chains(result.outputs, out)
    summary = result.summary
    save_summary(summary, out)

    report = {
        "J": data.y.spec.J,
        "n": result.design.n,
        "m": result.design.m,
        "basis_norm": cfg.basis_norm,
        "chains": len(result.outputs),
        "kept_draws": summary.n_draws,
        "ridge_fallback": any(o.meta["ridge_fallback"] for o in result.outputs),
        "tau2_clamps": sum(o.meta["tau2_clamps"] for o in result.outputs),
        "provenance": data.provenance,
    }

    if len(result.outputs) >= 2:
        rhat = diagnose(result.outputs)
        write_to_file(
            os.path.join(out, "diagnostics.txt"),
            format_report(rhat, len(result.outputs), result.outputs[0].n_kept),
        )
        report["rhat"] = rhat
    else:
        write_to_file(
            os.path.join(out, "diagnostics.txt"),
            "Gelman-Rubin diagnostics need at least 2 chains\n",
        )

    classmap = write_classification(cfg, summary, out)
    if classmap is not None:
        report["delta"] = classmap.delta
        report["classes"] = classmap.counts()

    if data.truth is not None and cfg.standardize_mode == "none":
        side = data.truth.A_grid.side if data.truth.A_grid is not None else cfg.eval_side
        if side != summary.A_hat.side:
            raise LatticeMismatchError(
                "truth files have side {}, eval_side is {}".format(
                    side, summary.A_hat.side
                )
            )
        A, B, x_eval = eval_truth(cfg, data.truth, side)
        metrics = sim_metrics(
            A,
            B,
            x_eval,
            [(summary.A_hat, summary.B_hat)],
            response=response_of(cfg, data.truth, data.x, [summary.y_hat]),
        )
        write_metrics_csv([((), metrics)], os.path.join(out, "metrics.csv"))
        report["metrics"] = metrics.as_dict()

    write_json(os.path.join(out, "summary.json"), report)
    logger.info("Fit written to %s", out)
    return out


def cmd_simulate(cfg: ExperimentConfig):
    """Writes a simulated data set (y, x and the truth on the lattice)."""
    out = cfg.out
    os.makedirs(out, exist_ok=True)
    data = load_fit_data(cfg.replace(response_path=None), data_seeds(cfg.seed)[0])
    A, B = data.truth.surfaces(data.x.side, data.x.spec)
    for name, grid in (("y", data.y), ("x", data.x), ("A", A), ("B", B)):
        save_grid(grid, os.path.join(out, name + ".csv"))
    write_json(os.path.join(out, "provenance.json"), data.provenance)
    return out


def cmd_classify(cfg: ExperimentConfig):
    """Re-summarizes the chains saved under ``cfg.out`` and writes the class map."""
    out = cfg.out
    outputs = load_chains(out)
    x = load_grid(os.path.join(out, "x.csv"))
    X = build_design(x.spec, x, cfg.basis_norm)
    summary = summarize(outputs, X, x, cfg.eval_side)
    if write_classification(cfg, summary, out) is None:
        raise ConfigError("classify needs delta or delta_max_abs_frac")
    return out


def cmd_metrics(cfg: ExperimentConfig):
    """Scores the saved A_hat/B_hat surfaces of one fit against the truth."""
    out = cfg.out
    truth = truth_of(cfg)
    if truth is None:
        raise ConfigError("metrics needs a truth (truth = I, II or files)")
    A_hat = load_grid(os.path.join(out, "A_hat.csv"), require_power_of_two=False)
    B_hat = load_grid(os.path.join(out, "B_hat.csv"), require_power_of_two=False)
    A, B, x = eval_truth(cfg, truth, A_hat.side)
    response = None
    if cfg.mse_y_grid == "lattice":
        y_hat = load_grid(os.path.join(out, "y_hat.csv"))
        x_fit = load_grid(os.path.join(out, "x.csv"))
        response = response_of(cfg, truth, x_fit, [y_hat])
    metrics = sim_metrics(A, B, x, [(A_hat, B_hat)], response=response)
    write_metrics_csv([((), metrics)], os.path.join(out, "metrics.csv"))
    return metrics

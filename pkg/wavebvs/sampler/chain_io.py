# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
import glob
import logging
import os

import numpy as np

from wavebvs.common.utils import read_json, write_json
from wavebvs.sampler.gibbs import ChainOutput

logger = logging.getLogger(__name__)

BETA_FILE = "beta.csv"
SCALARS_FILE = "scalars.csv"
GAMMA_FILE = "gamma_freq.csv"
META_FILE = "meta.json"
SCALAR_COLUMNS = ("sigma2", "tau2", "log_post")


def chain_dir(output_dir, index):
    return os.path.join(output_dir, "chains", "chain_{}".format(index))


def save_chain_output(output: ChainOutput, path):
    """
    Writes one chain to ``path``: kept beta draws (one draw per line), the
    scalar traces, inclusion frequencies and run metadata.
    """
    os.makedirs(path, exist_ok=True)
    np.savetxt(
        os.path.join(path, BETA_FILE),
        np.atleast_2d(output.beta_draws),
        fmt="%.17g",
        delimiter=",",
    )
    scalars = np.column_stack(
        (output.sigma2_draws, output.tau2_draws, output.log_post_draws)
    )
    np.savetxt(
        os.path.join(path, SCALARS_FILE),
        scalars,
        fmt="%.17g",
        delimiter=",",
        header=",".join(SCALAR_COLUMNS),
        comments="",
    )
    np.savetxt(os.path.join(path, GAMMA_FILE), output.gamma_freq, fmt="%.17g")
    write_json(os.path.join(path, META_FILE), output.meta)


def load_chain_output(path):
    if not os.path.isfile(os.path.join(path, BETA_FILE)):
        raise FileNotFoundError("no chain artifacts under {}".format(path))
    beta = np.loadtxt(os.path.join(path, BETA_FILE), delimiter=",", ndmin=2)
    scalars = np.loadtxt(
        os.path.join(path, SCALARS_FILE), delimiter=",", skiprows=1, ndmin=2
    )
    gamma_freq = np.loadtxt(os.path.join(path, GAMMA_FILE), ndmin=1)
    return ChainOutput(
        beta_draws=beta,
        sigma2_draws=scalars[:, 0],
        tau2_draws=scalars[:, 1],
        log_post_draws=scalars[:, 2],
        gamma_freq=gamma_freq,
        meta=read_json(os.path.join(path, META_FILE)),
    )


def save_chains(outputs, output_dir):
    for index, output in enumerate(outputs):
        save_chain_output(output, chain_dir(output_dir, index))
    logger.info("Wrote %d chains under %s", len(outputs), output_dir)


def load_chains(output_dir):
    paths = glob.glob(os.path.join(output_dir, "chains", "chain_*"))
    paths.sort(key=lambda p: int(p.rsplit("_", 1)[-1]))
    if not paths:
        raise FileNotFoundError("no saved chains under {}".format(output_dir))
    return [load_chain_output(p) for p in paths]

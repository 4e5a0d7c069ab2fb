# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#

# Experiment configuration: a flat key = value file plus command line overrides.
import argparse
import configparser
import dataclasses
import io
import os
from dataclasses import dataclass
from typing import Optional

from wavebvs.common.errors import ConfigError
from wavebvs.common.utils import default_workers
from wavebvs.lattice.grid import load_grid

SECTION = "wavebvs"

# key -> (type, default, help); every key is also the command line flag --key
CONFIG_KEYS = {
    "J": (int, 3, "maximal Haar level; the training lattice has side 2^(J+2)"),
    "model": (str, "I", "I: one slab variance, II: one slab variance per coefficient"),
    "prior.kind": (str, "1", "inclusion schedule: 1, 2, 3 or custom"),
    "prior.phi": (float, 0.8, "per-level decay of the inclusion probability"),
    "prior.table": (str, None, "CSV of the m inclusion probabilities (custom only)"),
    "hyper.nu": (float, 6.0, "degrees of freedom of the prior on 1/sigma^2"),
    "hyper.mu": (float, 6.0, "degrees of freedom of the prior on 1/tau^2"),
    "basis_norm": (str, "unit", "unit: W has orthonormal columns; pointwise: W(s) holds the basis function values"),
    "sweeps": (int, 2000, "Gibbs sweeps per chain, burn-in included"),
    "burn_in": (int, 1000, "sweeps discarded at the start of every chain"),
    "thin": (int, 1, "keep every thin-th draw after burn-in"),
    "chains": (int, 5, "independent chains per fit"),
    "replications": (int, 5, "simulate-and-fit repetitions L"),
    "sigma": (float, 1.0, "noise sd of simulated responses"),
    "covariate": (str, "xa", "xa, xb, xc or file"),
    "covariate_path": (str, None, "covariate raster (csv or pgm)"),
    "response_path": (str, None, "response raster; fitting real data when set"),
    "truth": (str, "I", "I, II, files or none"),
    "truth_A_path": (str, None, "true intercept raster (truth = files)"),
    "truth_B_path": (str, None, "true slope raster (truth = files)"),
    "seed": (int, 0, "master random seed"),
    "out": (str, "output", "output directory"),
    "delta": (float, None, "classification threshold"),
    "delta_max_abs_frac": (float, None, "set delta to this fraction of max |B_hat|"),
    "eval_side": (int, 100, "side of the evaluation grid for surfaces and metrics"),
    "mse_y_grid": (str, "lattice", "MSE_y on the training lattice (fitted values) or on the eval grid"),
    "init_var": (float, 1e-4, "variance of the jitter around the least squares start"),
    "standardize": (str, None, "none, own, shared or covariate; own for real data by default"),
    "random_scan": (bool, False, "visit coordinates in a random order every sweep"),
    "workers": (int, None, "worker processes; defaults to $WAVEBVS_WORKERS or 1"),
    "debug": (bool, False, "check the maintained residual after every sweep"),
    "silent": (bool, False, "disable progress bars"),
}

FULL_SCALE = {"replications": 50, "sweeps": 5000, "burn_in": 2500}

MODELS = ("I", "II")
PRIOR_KINDS = ("1", "2", "3", "custom")
COVARIATES = ("xa", "xb", "xc", "file")
TRUTHS = ("I", "II", "files", "none")
STANDARDIZE = ("none", "own", "shared", "covariate")
BASIS_NORMS = ("unit", "pointwise")
MSE_Y_GRIDS = ("lattice", "eval")


def field_name(key):
    return key.replace(".", "_")


def str_to_bool(value):
    if isinstance(value, bool):
        return value
    lowered = str(value).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean: {!r}".format(value))


def _convert(key, value):
    kind = CONFIG_KEYS[key][0]
    if value is None or isinstance(value, kind) and not (
        kind is int and isinstance(value, bool)
    ):
        return value
    try:
        if kind is bool:
            return str_to_bool(value)
        if kind is int:
            return int(str(value).strip())
        return kind(str(value).strip())
    except ValueError:
        raise ConfigError("{}: cannot read {!r} as {}".format(key, value, kind.__name__))


@dataclass(frozen=True)
class ExperimentConfig:
    J: int
    model: str
    prior_kind: str
    prior_phi: float
    prior_table: Optional[str]
    hyper_nu: float
    hyper_mu: float
    basis_norm: str
    sweeps: int
    burn_in: int
    thin: int
    chains: int
    replications: int
    sigma: float
    covariate: str
    covariate_path: Optional[str]
    response_path: Optional[str]
    truth: str
    truth_A_path: Optional[str]
    truth_B_path: Optional[str]
    seed: int
    out: str
    delta: Optional[float]
    delta_max_abs_frac: Optional[float]
    eval_side: int
    mse_y_grid: str
    init_var: float
    standardize: Optional[str]
    random_scan: bool
    workers: Optional[int]
    debug: bool
    silent: bool

    @classmethod
    def from_mapping(cls, mapping):
        """Builds a config from ``key -> value`` pairs over the built-in defaults."""
        unknown = sorted(set(mapping) - set(CONFIG_KEYS))
        if unknown:
            raise ConfigError("unknown config keys: {}".format(", ".join(unknown)))
        values = {key: spec[1] for key, spec in CONFIG_KEYS.items()}
        for key, value in mapping.items():
            if isinstance(value, str) and value.strip() == "":
                value = None
            values[key] = _convert(key, value)
        return cls(**{field_name(k): v for k, v in values.items()})

    def get(self, key):
        return getattr(self, field_name(key))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def real_data(self):
        return self.response_path is not None

    @property
    def n_workers(self):
        return self.workers if self.workers is not None else default_workers()

    @property
    def standardize_mode(self):
        if self.standardize is not None:
            return self.standardize
        return "own" if self.real_data else "none"

    @property
    def scores_truth(self):
        """Whether fits are scored against a truth (only on the original scale)."""
        return self.truth != "none" and self.standardize_mode == "none"

    def to_text(self):
        lines = []
        for key in sorted(CONFIG_KEYS):
            value = self.get(key)
            if value is None:
                continue
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append("{} = {}".format(key, value))
        return "\n".join(lines) + "\n"

    def validate(self):
        """Raises ConfigError on the first inconsistent setting; returns self."""

        def check(cond, message, *args):
            if not cond:
                raise ConfigError(message.format(*args))

        check(self.J >= 0, "J must be non-negative, got {}", self.J)
        check(self.model in MODELS, "model must be one of {}", MODELS)
        check(self.prior_kind in PRIOR_KINDS, "prior.kind must be one of {}", PRIOR_KINDS)
        check(0.0 < self.prior_phi <= 1.0, "prior.phi must lie in (0, 1]")
        check(
            self.prior_kind != "custom" or self.prior_table is not None,
            "prior.kind = custom needs prior.table",
        )
        check(self.hyper_nu > 0 and self.hyper_mu > 0, "hyper.nu and hyper.mu must be positive")
        check(self.basis_norm in BASIS_NORMS, "basis_norm must be one of {}", BASIS_NORMS)
        check(self.mse_y_grid in MSE_Y_GRIDS, "mse_y_grid must be one of {}", MSE_Y_GRIDS)
        for key in ("sweeps", "thin", "chains", "replications", "eval_side"):
            check(self.get(key) >= 1, "{} must be positive, got {}", key, self.get(key))
        check(
            0 <= self.burn_in < self.sweeps,
            "burn_in must lie in [0, sweeps), got {} with sweeps = {}",
            self.burn_in,
            self.sweeps,
        )
        check(self.sigma > 0, "sigma must be positive")
        check(self.init_var >= 0, "init_var must be non-negative")
        check(self.covariate in COVARIATES, "covariate must be one of {}", COVARIATES)
        check(
            self.covariate != "file" or self.covariate_path is not None,
            "covariate = file needs covariate_path",
        )
        check(self.truth in TRUTHS, "truth must be one of {}", TRUTHS)
        check(
            self.truth != "files"
            or (self.truth_A_path is not None and self.truth_B_path is not None),
            "truth = files needs truth_A_path and truth_B_path",
        )
        check(
            self.standardize is None or self.standardize in STANDARDIZE,
            "standardize must be one of {}",
            STANDARDIZE,
        )
        check(self.delta is None or self.delta > 0, "delta must be positive")
        check(
            self.delta_max_abs_frac is None or 0 < self.delta_max_abs_frac <= 1,
            "delta_max_abs_frac must lie in (0, 1]",
        )
        check(self.workers is None or self.workers >= 1, "workers must be positive")
        for key in (
            "prior.table",
            "covariate_path",
            "response_path",
            "truth_A_path",
            "truth_B_path",
        ):
            path = self.get(key)
            check(path is None or os.path.isfile(path), "{}: no such file {}", key, path)
        if self.truth == "files" and self.scores_truth:
            side = load_grid(self.truth_A_path, require_power_of_two=False).side
            check(
                side == self.eval_side,
                "truth files have side {}; set eval_side = {} to score against them",
                side,
                side,
            )
        return self


def load_config_text(text):
    """Parses flat ``key = value`` text; ``#`` and ``;`` start comment lines."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[{}]\n{}".format(SECTION, text))
    except configparser.Error as e:
        raise ConfigError("malformed config: {}".format(e))
    return dict(parser.items(SECTION))


def load_config_file(path):
    try:
        with io.open(path, mode="r", encoding="utf-8") as file:
            return load_config_text(file.read())
    except OSError as e:
        raise ConfigError("cannot read config {}: {}".format(path, e))


def resolve_config(params):
    """
    defaults < config file < command line flags < --full-scale.

    :param params: ``args.__dict__`` of a WaveBVSParser.
    """
    mapping = {}
    if params.get("config"):
        mapping.update(load_config_file(params["config"]))
    for key in CONFIG_KEYS:
        if params.get(key) is not None:
            mapping[key] = params[key]
    if params.get("full_scale"):
        mapping.update(FULL_SCALE)
    return ExperimentConfig.from_mapping(mapping).validate()


class WaveBVSParser(argparse.ArgumentParser):
    """
    Provide an opt-producer and CLI argument parser.

    Every config key is a flag whose default is None, so a flag only
    overrides the config file when it is given.

    :param add_config_args:
        (default True) adds --config, --full-scale and one flag per config key.
    """

    def __init__(
        self, add_config_args=True, description="wavebvs parser", **kwargs
    ):
        kwargs.setdefault("formatter_class", argparse.HelpFormatter)
        super().__init__(
            description=description,
            allow_abbrev=False,
            conflict_handler="resolve",
            **kwargs
        )
        self.add_arg = self.add_argument

        if add_config_args:
            self.add_common_args()
            self.add_model_args()
            self.add_sampler_args()
            self.add_simulation_args()
            self.add_output_args()

    def _add_keys(self, group, keys):
        for key in keys:
            kind, default, help = CONFIG_KEYS[key]
            if kind is bool:
                group.add_argument(
                    "--" + key, dest=key, action="store_const", const=True,
                    default=None, help=help,
                )
            else:
                group.add_argument(
                    "--" + key, dest=key, type=kind, default=None,
                    help="{} (default: {})".format(help, default),
                )

    def add_common_args(self):
        parser = self.add_argument_group("Common Arguments")
        parser.add_argument("--config", default=None, help="flat key = value config file")
        parser.add_argument(
            "--full-scale",
            dest="full_scale",
            action="store_true",
            help="L=50 replications of 5000 sweeps with 2500 burn-in",
        )
        self._add_keys(parser, ("seed", "workers", "debug", "silent"))

    def add_model_args(self):
        parser = self.add_argument_group("Model Arguments")
        self._add_keys(
            parser,
            (
                "J", "model", "prior.kind", "prior.phi", "prior.table",
                "hyper.nu", "hyper.mu", "basis_norm",
            ),
        )

    def add_sampler_args(self):
        parser = self.add_argument_group("Sampler Arguments")
        self._add_keys(
            parser,
            ("sweeps", "burn_in", "thin", "chains", "init_var", "random_scan"),
        )

    def add_simulation_args(self):
        parser = self.add_argument_group("Data Arguments")
        self._add_keys(
            parser,
            (
                "replications", "sigma", "covariate", "covariate_path",
                "response_path", "truth", "truth_A_path", "truth_B_path",
                "standardize",
            ),
        )

    def add_output_args(self):
        parser = self.add_argument_group("Output Arguments")
        self._add_keys(
            parser, ("out", "delta", "delta_max_abs_frac", "eval_side", "mse_y_grid")
        )

# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
import sys

from wavebvs.common.errors import WaveBVSError
from wavebvs.common.params import WaveBVSParser, resolve_config
from wavebvs.common.utils import get_logger
from wavebvs.experiment.fit import cmd_classify, cmd_fit, cmd_metrics, cmd_simulate
from wavebvs.experiment.replicate import cmd_replicate

COMMANDS = {
    "simulate": "simulate a data set from a truth surface pair",
    "fit": "run the Gibbs chains and write surfaces, diagnostics and class map",
    "replicate": "repeat simulate-and-fit and report bias, variance and MSE",
    "classify": "rebuild the class map from the chains of an earlier fit",
    "metrics": "score the surfaces of an earlier fit against the truth",
}


def build_parser():
    parser = WaveBVSParser(
        add_config_args=False,
        description="Bayesian wavelet variable selection for spatially varying coefficients",
        prog="wavebvs",
    )
    subparsers = parser.add_subparsers(
        dest="command", parser_class=WaveBVSParser, metavar="command"
    )
    subparsers.required = True
    for name, help in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help, description=help)
        if name == "replicate":
            sub.add_arg(
                "--table",
                action="store_true",
                help="one row per phi in 1, 0.9, 0.8, 0.7 on the same data seeds",
            )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    params = args.__dict__
    command = params["command"]

    try:
        cfg = resolve_config(params)
    except WaveBVSError as e:
        get_logger().error("Invalid configuration: %s", e)
        return 2

    logger = get_logger(cfg.out)
    logger.info("wavebvs %s\n%s", command, cfg.to_text())
    try:
        if command == "simulate":
            cmd_simulate(cfg)
        elif command == "fit":
            cmd_fit(cfg)
        elif command == "replicate":
            cmd_replicate(cfg, table=params.get("table", False))
        elif command == "classify":
            cmd_classify(cfg)
        elif command == "metrics":
            cmd_metrics(cfg)
    except WaveBVSError as e:
        logger.error("%s failed: %s", command, e)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

# Copyright (c) wavebvs developers.
# All rights reserved.
#
# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.
#
import io
import json
import logging
import os
import sys

WORKERS_ENV_VAR = "WAVEBVS_WORKERS"


def get_logger(output_dir=None, file_name="log"):
    handlers = [logging.StreamHandler(sys.stdout)]
    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
        handlers.insert(
            0,
            logging.FileHandler(
                "{}/{}.txt".format(output_dir, file_name), mode="a", delay=False
            ),
        )
    logging.basicConfig(
        format="%(asctime)s - %(levelname)s - %(name)s -   %(message)s",
        datefmt="%m/%d/%Y %H:%M:%S",
        level=logging.INFO,
        handlers=handlers,
        force=True,
    )

    logger = logging.getLogger("WaveBVS")
    logger.setLevel(logging.INFO)
    return logger


def write_to_file(path, string, mode="w"):
    with io.open(path, mode=mode, encoding="utf-8") as writer:
        writer.write(string)


def write_json(path, obj):
    """Writes `obj` with sorted keys so that identical inputs give identical bytes."""
    with io.open(path, mode="w", encoding="utf-8") as file:
        json.dump(obj, file, indent=2, sort_keys=True)
        file.write("\n")


def read_json(path):
    with io.open(path, mode="r", encoding="utf-8") as file:
        return json.load(file)


def default_workers():
    value = os.environ.get(WORKERS_ENV_VAR)
    if value is None or value.strip() == "":
        return 1
    try:
        workers = int(value)
    except ValueError:
        raise ValueError(
            "{} must be a positive integer, got {!r}".format(WORKERS_ENV_VAR, value)
        )
    return max(1, workers)

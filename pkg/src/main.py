# -*- coding: utf-8 -*-
import logging
import sys

from src.adapters import (
    CameraFileAdapter,
    ImageFileAdapter,
    MaskImageAdapter,
    PlySceneAdapter,
    StatsFileAdapter,
)
from src.core.application.commands import Application, cli

DEFAULT_CONFIG = {
    "THREADS": 1,
    "RESORT_K": 16,
    "BACKGROUND": (0.0, 0.0, 0.0),
    "T_MIN": 1e-4,
    "LOG_LEVEL": "WARNING",
    "STATS_FORMAT_VERSION": 1,
    "BENCH_SAMPLES": 30,
    "EYE_OFFSET": 0.032,
    "LARGE_FOV_FACTOR": 3,
}


def create_app(test_config=None):
    """
    Create and configure the rasterizer application.

    :param test_config: Optional overrides for the default configuration.
    :return: Application with its configuration and wired adapters.
    """
    config = dict(DEFAULT_CONFIG)

    if test_config:
        config.update(test_config)

    logging.basicConfig(
        level=config["LOG_LEVEL"],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    return Application(
        config=config,
        scenes=PlySceneAdapter(),
        cameras=CameraFileAdapter(),
        masks=MaskImageAdapter(),
        images=ImageFileAdapter(),
        stats=StatsFileAdapter(config["STATS_FORMAT_VERSION"]),
    )


def main(argv=None):
    """Run the command-line interface and return its exit code."""
    return cli.main(args=argv, obj=create_app(), prog_name="tilesplat", standalone_mode=True)


if __name__ == "__main__":
    sys.exit(main())

"""Pinjected configuration for test module"""

from loguru import logger
from pinjected import design

from tropical_vz import load_env_design

# load_env_design already carries the tropical_vz defaults;
# tests only pin the logger and keep the worker pool small.
test_defaults = design(
    logger=logger,
    tvz_threads=2,
)

__design__ = load_env_design + test_defaults

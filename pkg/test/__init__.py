"""Test package for tropical-vz"""

from loguru import logger
from pinjected import design

# Set logger in design so all child modules can use it
__design__ = design(logger=logger)

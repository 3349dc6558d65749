"""Hybrid (vector + attribute) approximate nearest-neighbor search."""

from ._hqann import *  # noqa: F401,F403
from ._hqann import __doc__  # noqa: F401

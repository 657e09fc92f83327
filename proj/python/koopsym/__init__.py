"""Symmetry-aware Koopman operator approximation."""

from ._core import *  # noqa: F401,F403
from ._core import KoopsymError, __doc__  # noqa: F401

__version__ = "0.1.0"

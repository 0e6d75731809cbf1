"""Quantum-model envelopment workbench and QKD attack simulator."""

from ._qmenv import *  # noqa: F401,F403
from ._qmenv import QmenvError, __doc__  # noqa: F401

__version__ = "0.1.0"

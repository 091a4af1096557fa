"""Autonomous bosonic error-correction toolkit.

Fast per-diagonal Lindblad solver, dense reference integrator, code
analysis and a curriculum PPO agent for searching codes and recovery ladders.
"""
__version__ = "0.1.0"

from .core import (  # noqa: F401
    AQECError,
    Codeword,
    ConfigurationError,
    DegenerateCodeError,
    DegenerateLadderError,
    FockDensityMatrix,
    InvalidStateError,
    OutOfRangeError,
    ProjectorLadder,
    StructuralError,
    SystemParams,
)
from .analytic import AnalyticSolver, LossChannelSet, evolve, evolve_series  # noqa: F401

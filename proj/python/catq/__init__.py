"""Stationary analysis of a cellular cell with retrials, catastrophes and backup channels."""

from ._core import (
    Config,
    ConfigError,
    NumericalError,
    UnstableError,
    evaluate_backup,
    measures,
    optimize,
    simulate,
    solve,
    stability,
    sweep,
)

__all__ = [
    "Config",
    "ConfigError",
    "NumericalError",
    "UnstableError",
    "evaluate_backup",
    "measures",
    "optimize",
    "simulate",
    "solve",
    "stability",
    "sweep",
]

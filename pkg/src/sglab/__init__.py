"""Desk-scale numerical laboratory for adiabatic Hamiltonians whose cost
function is a scrambled Hamming weight.

The package builds matrix-free operators over n-bit strings, extracts low-lying
spectra and minimum gaps, evaluates variational and min-ratio energy bounds,
integrates the time-dependent Schrodinger equation, and exposes the whole thing
through a small HTTP service plus the ``sglab`` command line client.
"""

__version__ = "0.1.0"

from .bitperm import ScrambleTable, hamming_weight, popcount
from .hamiltonian import AdiabaticOperator, cost_rms, neighbor_sum
from .errors import (
    ConfigError,
    ConvergenceError,
    ParameterRegimeError,
    ResourceLimitError,
    SglabError,
)

__all__ = [
    "AdiabaticOperator",
    "ConfigError",
    "ConvergenceError",
    "ParameterRegimeError",
    "ResourceLimitError",
    "ScrambleTable",
    "SglabError",
    "__version__",
    "cost_rms",
    "hamming_weight",
    "neighbor_sum",
    "popcount",
]

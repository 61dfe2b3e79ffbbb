"""Adapted Lebesgue-integral representations of Brownian functionals."""

__version__ = "0.1.0"

from .grid_paths import PathBundle, TimeGrid, build_grid, generate_paths
from .payoffs import (MartingalePath, PowerSigma, SigmaIntegral, TerminalFunction, TimeAverage,
                      evaluate_payoff, ito_integral)
from .representations import (RateProcess, alpha_from_p, canonical_rate, fractional_rate, integrate_rate,
                              lebesgue_form_rate, volterra_rate)
from .resolvent import ResolventTable, resolvent_table

__all__ = [
    "PathBundle", "TimeGrid", "build_grid", "generate_paths",
    "MartingalePath", "PowerSigma", "SigmaIntegral", "TerminalFunction", "TimeAverage",
    "evaluate_payoff", "ito_integral",
    "RateProcess", "alpha_from_p", "canonical_rate", "fractional_rate", "integrate_rate",
    "lebesgue_form_rate", "volterra_rate",
    "ResolventTable", "resolvent_table",
]

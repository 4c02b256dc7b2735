"""Ergodic sum capacity of macrodiversity MIMO multiple-access channels.

Engines: an exact closed form for two sources (:mod:`.capacity_exact`),
a general approximation (:mod:`.capacity_approx`), a Jensen upper bound
with its SNR limits (:mod:`.capacity_bounds`) and a Monte Carlo oracle
(:mod:`.montecarlo`).
"""

__version__ = "0.1.0"

from .capacity_approx import ApproxResult, approx_capacity, approx_capacity_details
from .capacity_bounds import BoundBreakdown, high_snr_approx, jensen_bound, low_snr_approx, theta_coeffs
from .capacity_exact import ExactResult, exact_capacity_details, exact_capacity_two_source, i_a, i_b
from .channel import (
    CorrelationSpec,
    DropGeometry,
    PowerMatrix,
    ScenarioSpec,
    apply_correlation,
    exponential_profile,
    noise_power,
    random_drop,
    scenario_table1,
)
from .errors import (
    ConfigError,
    DefinitenessError,
    DegeneracyError,
    DomainError,
    MacrocapError,
    ModelError,
    ShapeError,
)
from .montecarlo import McEstimate, mc_capacity, sample_channel

__all__ = [
    "ApproxResult", "BoundBreakdown", "ConfigError", "CorrelationSpec", "DefinitenessError",
    "DegeneracyError", "DomainError", "DropGeometry", "ExactResult", "MacrocapError", "McEstimate",
    "ModelError", "PowerMatrix", "ScenarioSpec", "ShapeError", "apply_correlation", "approx_capacity",
    "approx_capacity_details", "exact_capacity_details", "exact_capacity_two_source",
    "exponential_profile", "high_snr_approx", "i_a", "i_b", "jensen_bound", "low_snr_approx",
    "mc_capacity", "noise_power", "random_drop", "sample_channel", "scenario_table1", "theta_coeffs",
]

"""Capacity bounds for the non-coherent Rayleigh-fading multi-antenna channel.

Capacities are in nats throughout.  Numerical kernels run under numba when
it is installed; set ``NCRAYLEIGH_BACKEND=numpy`` to force the pure-numpy
path.
"""

from .asymptotics import asymptotic_capacity, asymptotic_zeta, min_power_beta_positive
from .channel import AntennaConfig, DiscreteInput, PowerBudget, mutual_information
from .discrete import KtReport, OptimizerOptions, kt_check, optimize_discrete_input
from .errors import (
    BracketInvalid,
    DomainError,
    MissingColumn,
    NcRayleighError,
    NoConvergence,
    NoSolution,
    NonFinite,
)
from .reference import coherent_capacity_mc, sengupta_capacity
from .specfun import AccuracySpec, digamma, log_gamma, trigamma
from .supremum import CapacityResult, OptimalOutputDensity, capacity_beta_positive, capacity_supremum
from .sweep import SweepConfig, SweepRow, run_sweep

__version__ = "0.1.0"

__all__ = [
    "AccuracySpec", "AntennaConfig", "BracketInvalid", "CapacityResult", "DiscreteInput", "DomainError",
    "KtReport", "MissingColumn", "NcRayleighError", "NoConvergence", "NoSolution", "NonFinite",
    "OptimalOutputDensity", "OptimizerOptions", "PowerBudget", "SweepConfig", "SweepRow",
    "asymptotic_capacity", "asymptotic_zeta", "capacity_beta_positive", "capacity_supremum",
    "coherent_capacity_mc", "digamma", "kt_check", "log_gamma", "min_power_beta_positive",
    "mutual_information", "optimize_discrete_input", "run_sweep", "sengupta_capacity", "trigamma",
]

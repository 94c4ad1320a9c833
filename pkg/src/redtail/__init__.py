"""redtail: simulation and tail-bound verification for redundancy scheduling.

Parallel-server fork/join models with replica cancellation, under FCFS or
preemptive LCFS, with heavy-tailed (Pareto) job sizes.  The package simulates
response/waiting-time tails, evaluates the analytic bound curves and tail-index
predictions, and cross-checks the two against each other.
"""

from . import asymptotics, boundsys, engine, expcli, heavytail, kernels, recursion, tailstats
from .errors import ConfigurationError, DomainError, EstimationError, InstabilityError

__all__ = [
    "asymptotics",
    "boundsys",
    "engine",
    "expcli",
    "heavytail",
    "kernels",
    "recursion",
    "tailstats",
    "ConfigurationError",
    "DomainError",
    "EstimationError",
    "InstabilityError",
]

__version__ = "0.1.0"

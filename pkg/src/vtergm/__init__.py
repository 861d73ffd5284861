"""Temporal exponential-family random graph models for count-valued networks.

Transitions between consecutive networks are decomposed into an
augmentation network (elementwise max) and a diminution network
(elementwise min); each process carries its own statistics and
coefficients, estimated jointly by MCMC maximum likelihood.
"""

from .dynamics import TransitionPair, decompose, recompose
from .estimate import (
    FitResult,
    FitSchedule,
    algorithm1_partial_stepping,
    algorithm2_newton_raphson,
    fit,
    standard_errors,
)
from .gof import forecast, gof_simulate
from .networks import (
    NetworkSeries,
    ParamVector,
    ValuedNetwork,
    max_dim_value,
    validate_series,
)
from .sampler import ProposalConfig, cd_sample, simulate
from .statistics import (
    Covariates,
    ModelSpec,
    StatisticSpec,
    change_statistics,
    evaluate,
    evaluate_vector,
)

__version__ = "0.1.0"

__all__ = [
    "ValuedNetwork",
    "NetworkSeries",
    "ParamVector",
    "validate_series",
    "max_dim_value",
    "TransitionPair",
    "decompose",
    "recompose",
    "StatisticSpec",
    "ModelSpec",
    "Covariates",
    "evaluate",
    "evaluate_vector",
    "change_statistics",
    "ProposalConfig",
    "cd_sample",
    "simulate",
    "FitSchedule",
    "FitResult",
    "fit",
    "standard_errors",
    "algorithm1_partial_stepping",
    "algorithm2_newton_raphson",
    "gof_simulate",
    "forecast",
]

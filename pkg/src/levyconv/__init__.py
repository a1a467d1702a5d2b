"""Simulation of Levy-driven stochastic convolutions and law-equality experiments."""

from levyconv.errors import (
    ConfigurationError,
    HypothesisError,
    InvalidInputError,
    LevyConvError,
    ResolutionError,
    ResourceError,
    SingularityError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "HypothesisError",
    "InvalidInputError",
    "LevyConvError",
    "ResolutionError",
    "ResourceError",
    "SingularityError",
]

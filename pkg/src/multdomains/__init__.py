"""Multiplicative functions of uniform random points in large integer domains."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    ContractViolationError,
    DomainError,
    EmptyDomainError,
    MultDomainsError,
    NumericError,
    ResourceError,
    StrategyError,
    SummabilityError,
)

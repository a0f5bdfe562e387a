"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI maps it to.
"""


class MultDomainsError(Exception):
    exit_code = 1


class ConfigError(MultDomainsError, ValueError):
    exit_code = 2


class EmptyDomainError(ConfigError):
    pass


class ContractViolationError(MultDomainsError):
    """A caller-asserted property (e.g. monotonicity) was observed to fail."""

    exit_code = 2


class ResourceError(MultDomainsError):
    exit_code = 3


class StrategyError(ResourceError):
    """Rejection sampling would be too inefficient for this domain."""


class OutOfRangeError(MultDomainsError, IndexError):
    exit_code = 3


class NumericError(MultDomainsError, ArithmeticError):
    exit_code = 4


class DomainError(NumericError, ValueError):
    """Argument outside the mathematical domain of a function (e.g. zeta at s <= 1)."""


class SummabilityError(NumericError):
    pass


class SingularValueError(NumericError):
    pass

"""Exception hierarchy shared by all modules."""


class DiscoveryError(Exception):
    """Base class for errors raised by hyperdisco."""


class ConfigurationError(DiscoveryError, ValueError):
    """Invalid configuration: unknown mode, bad library spec, missing file."""


class DomainError(DiscoveryError, ValueError):
    """Input outside the mathematical domain (e.g. non-positive stretch)."""


class ContractViolation(DiscoveryError, ValueError):
    """A caller broke a documented precondition."""


class DegenerateError(DiscoveryError, ValueError):
    """Data or model is degenerate (all-zero block, empty active set, ...)."""


class ParseError(DiscoveryError, ValueError):
    """Malformed dataset file."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row

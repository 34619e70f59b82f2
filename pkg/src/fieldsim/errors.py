"""Exception types shared across the package.

Three families: contract violations raised by simulation units when a
caller breaks the port protocol, configuration errors raised while
loading or validating documents, and simulation errors raised when a
run fails part-way through.
"""

from __future__ import annotations


class FieldsimError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(FieldsimError):
    """A simulation unit was driven outside its port contract.

    Examples: writing to an unknown or non-input port, passing a
    non-finite value, stepping with a non-positive step size.
    """


class UnknownUnitError(FieldsimError):
    """Requested unit type is not present in the registry."""


class ConfigError(FieldsimError):
    """A configuration document failed to parse or validate.

    ``diagnostics`` holds one human-readable message per problem found,
    so callers can report everything at once instead of stopping at the
    first issue.
    """

    def __init__(self, message: str, diagnostics: list[str] | None = None):
        super().__init__(message)
        self.diagnostics = list(diagnostics) if diagnostics else [message]


class SimulationError(FieldsimError):
    """A co-simulation run failed after it had started."""

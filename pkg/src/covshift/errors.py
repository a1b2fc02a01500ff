"""Semantic exceptions shared across the package."""


class CovshiftError(Exception):
    """Base class for errors raised by this package."""


class DomainError(CovshiftError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class UnsupportedOperationError(CovshiftError, TypeError):
    """The operation is undefined for this object (e.g. density of an atom)."""

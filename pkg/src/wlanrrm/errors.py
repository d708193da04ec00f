"""Shared exception types."""


class ValidationError(ValueError):
    """A domain object violates one of its invariants."""


class FormatError(ValueError):
    """A file does not match its documented schema (message names line/field)."""


class CapacityError(RuntimeError):
    """An exhaustive computation would exceed its guard limit."""


class CheckpointError(ValueError):
    """A model checkpoint is incompatible or corrupted."""


class NumericsError(ArithmeticError):
    """A non-finite value appeared; message names the offending tensor."""

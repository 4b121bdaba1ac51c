"""Exception hierarchy; the CLI maps each class to an exit code."""


class FacrocError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(FacrocError, ValueError):
    """A dataset schema is malformed or inconsistent with the data."""


class DataError(FacrocError, ValueError):
    """Input data cannot be parsed or violates a precondition."""


class DegenerateSliceError(DataError):
    """A pair slice has no pairs, or lacks positive or negative pairs.

    ``group`` names the slice that failed (``"all"``, ``"p"`` or ``"pbar"``).
    """

    def __init__(self, message, group=None):
        super().__init__(message)
        self.group = group


class InfeasibleFairnessError(FacrocError, ValueError):
    """The requested balance target exceeds what the data can support."""

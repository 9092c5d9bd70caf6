"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: UsageError -> 1, DataError -> 2,
NumericError -> 3.
"""


class Som3dError(Exception):
    """Base class for all som3d errors."""


class UsageError(Som3dError):
    """Bad command-line arguments or run configuration."""


class DataError(Som3dError):
    """Input data is missing, unparseable, or inconsistent with the model."""


class NumericError(Som3dError):
    """A computation is mathematically undefined or produced invalid values."""


class DimensionMismatchError(NumericError):
    """Operands do not share the required dimensionality."""


class DegenerateDimensionError(NumericError):
    """A data dimension is constant where spread is required."""


class UndefinedCorrelationError(NumericError):
    """Pearson correlation is undefined because an operand is constant."""


class UnknownCategoryError(DataError):
    """A category label is not present in the model vocabulary."""

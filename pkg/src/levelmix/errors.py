"""Exception types shared across the package.

Grouped by how the CLI maps them to exit codes: usage problems exit 1,
bad or missing data exits 2, numerical failures exit 3.
"""


class LevelMixError(Exception):
    """Base class for all package errors."""


class UsageError(LevelMixError):
    """Bad command line or bad call arguments."""


class DataError(LevelMixError):
    """Malformed or missing input data."""


class NumericError(LevelMixError):
    """Numerical failure during training or fitting."""


# corpus
class RaggedRows(DataError):
    pass


class EmptyLevel(DataError):
    pass


class LevelTooSmall(DataError):
    pass


class IdOutOfRange(DataError):
    pass


class LengthMismatch(DataError):
    pass


class MissingLabels(DataError):
    pass


# neuralnet
class DimensionMismatch(DataError):
    pass


class NoCache(LevelMixError):
    pass


class ShapeMismatch(DataError):
    pass


class NonPositiveVariance(NumericError):
    pass


class NonPositiveTemperature(UsageError):
    pass


# gmvae
class InvalidConfig(UsageError):
    pass


class NonFiniteLoss(NumericError):
    pass


class ComponentOutOfRange(UsageError):
    pass


# baseline
class DegenerateData(DataError):
    pass


class SingularCovariance(NumericError):
    pass


# evaluation
class GeneratorFailure(NumericError):
    pass


class EmptyComponent(DataError):
    pass


class UnsupportedGame(UsageError):
    pass


class UncoveredTile(DataError):
    pass


class EmptyMatrix(DataError):
    pass

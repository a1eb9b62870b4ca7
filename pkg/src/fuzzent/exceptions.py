"""Exception hierarchy shared by all fuzzent modules."""


class FuzzentError(Exception):
    """Base class for every error raised by this library."""


class ValidationError(FuzzentError, ValueError):
    """A domain object was constructed with invalid contents."""


class NonSymmetric(FuzzentError):
    """Matrix expected to be symmetric is not."""


class NotPositiveDefinite(FuzzentError):
    """Matrix is not positive definite even after ridge escalation."""


class EmptyInput(FuzzentError):
    """An operation received an empty sequence."""


class AllZeroWeights(FuzzentError):
    """Weights sum to zero where positive total mass is required."""


class NonFiniteScore(FuzzentError):
    """A score passed to the exponential normalizer is NaN or infinite."""


class LengthMismatch(FuzzentError):
    """Two vectors that must have equal length do not."""


class DimensionMismatch(FuzzentError):
    """Vector/matrix dimensions are incompatible."""


class ShapeMismatch(FuzzentError):
    """Array shapes are inconsistent with the algorithm configuration."""


class MetricMismatch(FuzzentError):
    """Metric state kind does not match the algorithm variant."""


class EmptyCluster(FuzzentError):
    """A cluster lost all membership mass and no rescue RNG was supplied."""


class NonDecreasingObjective(FuzzentError):
    """The objective increased between iterations; indicates a bug."""


class ParseError(FuzzentError):
    """A CSV cell could not be parsed as a finite number."""

    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(
            f"row {row}, column {column!r}: cannot parse {value!r} as a finite number"
        )


class UnknownLabelColumn(FuzzentError):
    """The requested label column is not in the CSV header."""


class UndefinedIndex(FuzzentError):
    """A validity index is undefined for the given input (e.g. N < 2)."""


class IdenticalIdealCenters(FuzzentError):
    """Robustness detection needs two distinct ideal centers."""


class MissingTvGrid(FuzzentError):
    """Joint (T_u, T_v) selection requires a grid of T_v candidates."""

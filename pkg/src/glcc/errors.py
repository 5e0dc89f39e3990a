"""Exception types shared across the package."""


class GLCCError(Exception):
    """Base class for all package errors."""


class ParameterError(GLCCError, ValueError):
    """An argument is outside its valid range."""


class DataFormatError(GLCCError):
    """A data file is missing or malformed."""


class DataIntegrityError(DataFormatError):
    """Data parses but contradicts itself (e.g. an edge leaving its graph)."""


class ShapeError(GLCCError, ValueError):
    """Array dimensions do not match."""


class NormalizationError(GLCCError, ValueError):
    """Rows that must be unit-norm are not."""


class NumericalError(GLCCError, ArithmeticError):
    """A loss or gradient became non-finite.

    ``term`` names the offending loss term.
    """

    def __init__(self, term: str, message: str = ""):
        self.term = term
        super().__init__(message or f"non-finite value in loss term {term!r}")


class DegenerateBatchError(GLCCError):
    """A batch yields no usable anchors for a loss."""


class EvaluationError(GLCCError):
    """Evaluation is impossible, e.g. the dataset has no labels."""


class CheckpointError(GLCCError):
    """A checkpoint is corrupt or has an incompatible version."""

"""Exception types shared across the package.

Untrained-model errors reuse sklearn's NotFittedError so the estimators
behave like any other scikit-learn estimator.
"""

from sklearn.exceptions import NotFittedError

__all__ = [
    "GaplessError",
    "InvalidInputError",
    "UnscalableFeatureError",
    "MemberUnusableError",
    "NoUsableMemberError",
    "DivergenceError",
    "ModelFormatError",
    "NotFittedError",
]


class GaplessError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(GaplessError, ValueError):
    """Caller-supplied data or configuration violates a precondition."""


class UnscalableFeatureError(InvalidInputError):
    """A feature has no observed value in the training data, so its
    scaling range cannot be determined."""

    def __init__(self, feature_name: str):
        self.feature_name = feature_name
        super().__init__(
            f"feature {feature_name!r} has no observed value in the training "
            "data and cannot be scaled"
        )


class MemberUnusableError(GaplessError):
    """An ensemble member's feature subset is not fully observed for the
    given instance, so the member cannot produce a prediction."""


class NoUsableMemberError(GaplessError):
    """No ensemble member has all of its features observed; the instance
    cannot be answered."""


class DivergenceError(GaplessError):
    """Training produced a non-finite loss."""

    def __init__(self, cycle: int, message: str = ""):
        self.cycle = cycle
        super().__init__(message or f"non-finite loss at training cycle {cycle}")


class ModelFormatError(GaplessError):
    """A serialized model document is malformed or of the wrong kind."""

"""Exception hierarchy for the llm_energy package.

Two base classes split failures by their nature:

* :class:`ValidationError` — the caller handed us something malformed
  (bad arguments, unparseable files, violated preconditions).  The CLI
  maps these to exit code 1.
* :class:`ComputationError` — the inputs were well-formed but the
  computation cannot produce a meaningful result (singular designs,
  degenerate data, non-positive energies).  The CLI maps these to exit
  code 2.
"""

from __future__ import annotations

__all__ = [
    "ValidationError",
    "ComputationError",
    "ZeroOutputLengthError",
    "ArityMismatchError",
    "InsufficientObservationsError",
    "NonPositiveCurvatureError",
    "NegativeRadicandError",
    "DegenerateModelError",
    "SingularFitError",
    "DegenerateRangeError",
]


class ValidationError(ValueError):
    """Malformed input or violated precondition."""


class ComputationError(RuntimeError):
    """Well-formed input for which no meaningful result exists."""


class ZeroOutputLengthError(ValidationError):
    """Per-token quantities are undefined when no tokens are generated."""


class ArityMismatchError(ValidationError):
    """Coefficient vector length does not match the model family's arity."""


class InsufficientObservationsError(ValidationError):
    """Fewer observations than the model needs for positive degrees of freedom."""


class NonPositiveCurvatureError(ComputationError):
    """The per-token energy curve has no interior minimum (theta4 <= 0)."""


class NegativeRadicandError(ComputationError):
    """The optimum formula's radicand is negative; no real optimum exists."""


class DegenerateModelError(ComputationError):
    """Predicted energy is non-positive, so efficiency is undefined."""


class SingularFitError(ComputationError):
    """Rank-deficient design matrix.

    Attributes:
        features: Names of the collinear feature columns involved.
    """

    def __init__(self, message: str, features: list[str] | None = None):
        super().__init__(message)
        self.features = list(features or [])


class DegenerateRangeError(ComputationError):
    """Min-max normalization is undefined when all values are equal."""

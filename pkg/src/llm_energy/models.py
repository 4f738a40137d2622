"""Analytical per-token energy model families and the sweet-spot optimum.

Six families express energy-per-token ``E_tok`` as a linear combination of
features of the sequence shape ``(n_in, n_out)``:

========================  =================================================
Family                    E_tok features
========================  =================================================
``BASELINE1``             ``[1]``
``BASELINE2``             ``[1, 1/n_out]``
``BASELINE3``             ``[1, 1/(n_in+n_out)]``
``BASELINE4``             ``[1, n_in/n_out, n_in]``
``SWEETSPOT_FLOPS``       ``[1, n_in^2/n_out, n_in, n_in/n_out, n_out]``
``SWEETSPOT_FULL``        adds ``1/n_out`` to ``SWEETSPOT_FLOPS``
========================  =================================================

The two SweetSpot families trade a quadratic prompt-processing cost
(amortized over output length) against a linear decoding cost, which gives
``E_tok`` an interior minimum in ``n_out``.  Setting the derivative to zero
yields the closed form ``n_out* = sqrt((t1 n_in^2 + t3 n_in + t5) / t4)``
(with ``t5 = 0`` for the FLOPs-only family).  A vectorized brute-force scan
provides an independent check of that optimum for any family.

The package ships a fixture of thirteen fitted coefficient sets (one per
bundled architecture) with their measured and predicted peak-efficiency
configurations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .arch import SequenceShape
from .errors import (
    ArityMismatchError,
    DegenerateModelError,
    NegativeRadicandError,
    NonPositiveCurvatureError,
    ValidationError,
    ZeroOutputLengthError,
)

__all__ = [
    "ModelFamily",
    "ThetaVector",
    "SweetSpotPrediction",
    "ThetaEntry",
    "features",
    "predict_e_tok",
    "predict_e_tot",
    "efficiency",
    "sweet_spot_closed_form",
    "sweet_spot_brute_force",
    "load_theta",
    "bundled_theta",
    "get_theta",
]


class ModelFamily(str, Enum):
    """Identifier of one analytical model family."""

    BASELINE1 = "BASELINE1"
    BASELINE2 = "BASELINE2"
    BASELINE3 = "BASELINE3"
    BASELINE4 = "BASELINE4"
    SWEETSPOT_FLOPS = "SWEETSPOT_FLOPS"
    SWEETSPOT_FULL = "SWEETSPOT_FULL"

    @property
    def feature_names(self) -> tuple[str, ...]:
        return _FAMILY_FEATURES[self]

    @property
    def arity(self) -> int:
        return len(_FAMILY_FEATURES[self])


_FAMILY_FEATURES: dict[ModelFamily, tuple[str, ...]] = {
    ModelFamily.BASELINE1: ("1",),
    ModelFamily.BASELINE2: ("1", "1/n_out"),
    ModelFamily.BASELINE3: ("1", "1/(n_in+n_out)"),
    ModelFamily.BASELINE4: ("1", "n_in/n_out", "n_in"),
    ModelFamily.SWEETSPOT_FLOPS: ("1", "n_in^2/n_out", "n_in", "n_in/n_out", "n_out"),
    ModelFamily.SWEETSPOT_FULL: ("1", "n_in^2/n_out", "n_in", "n_in/n_out", "n_out", "1/n_out"),
}

# Scalar and vectorized (n_out as array) evaluators per feature name.
_FEATURE_FUNCS: dict[str, Callable[[float, float], float]] = {
    "1": lambda i, o: 1.0,
    "n_in^2/n_out": lambda i, o: i * i / o,
    "n_in": lambda i, o: i * 1.0,
    "n_in/n_out": lambda i, o: i / o,
    "n_out": lambda i, o: o * 1.0,
    "1/n_out": lambda i, o: 1.0 / o,
    "1/(n_in+n_out)": lambda i, o: 1.0 / (i + o),
}


@dataclass(frozen=True)
class ThetaVector:
    """Fitted coefficients of one model family.

    Attributes:
        family: The model family the coefficients belong to.
        coefficients: Ordered coefficients, one per family feature.  Units
            are Joules scaled per feature.
        fitted_on: Optional free-form provenance string.
    """

    family: ModelFamily
    coefficients: tuple[float, ...]
    fitted_on: str | None = None

    def __post_init__(self) -> None:
        try:
            coeffs = tuple(float(c) for c in self.coefficients)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"coefficients must be numbers: {exc}") from exc
        object.__setattr__(self, "coefficients", coeffs)
        if len(coeffs) != self.family.arity:
            raise ArityMismatchError(
                f"{self.family.value} takes {self.family.arity} coefficients, got {len(coeffs)}"
            )
        if not all(math.isfinite(c) for c in coeffs):
            raise ValidationError(f"coefficients must all be finite, got {coeffs}")

    def to_json_dict(self) -> dict:
        doc: dict = {"family": self.family.value, "coefficients": list(self.coefficients)}
        if self.fitted_on is not None:
            doc["fitted_on"] = self.fitted_on
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ThetaVector":
        if not isinstance(doc, dict) or "family" not in doc or "coefficients" not in doc:
            raise ValidationError("theta document needs 'family' and 'coefficients' keys")
        try:
            family = ModelFamily(doc["family"])
        except ValueError as exc:
            known = ", ".join(f.value for f in ModelFamily)
            raise ValidationError(f"unknown family {doc['family']!r}; known: {known}") from exc
        coefficients = doc["coefficients"]
        if not isinstance(coefficients, (list, tuple)):
            raise ValidationError(f"'coefficients' must be a list, got {type(coefficients).__name__}")
        return cls(family=family, coefficients=tuple(coefficients), fitted_on=doc.get("fitted_on"))


@dataclass(frozen=True)
class SweetSpotPrediction:
    """Predicted peak-efficiency output length for one input length.

    Attributes:
        n_in: Input length the prediction is for.
        n_out_star_continuous: Real-valued optimum of the closed form.
        n_out_star_rounded: Nearest integer to the continuous optimum
            (ties round up), floored at 1.
        snapped_to_grid: When a token grid was supplied, the grid point
            bracketing the continuous optimum with the lower predicted
            E_tok; otherwise None.
    """

    n_in: int
    n_out_star_continuous: float
    n_out_star_rounded: int
    snapped_to_grid: int | None = None


def features(family: ModelFamily, shape: SequenceShape) -> list[float]:
    """Evaluate the family's feature vector at a sequence shape."""
    if shape.n_out == 0:
        raise ZeroOutputLengthError(
            f"{family.value} features are undefined at n_out = 0 (per-token quantities need output)"
        )
    return [_FEATURE_FUNCS[name](shape.n_in, shape.n_out) for name in family.feature_names]


def predict_e_tok(theta: ThetaVector, shape: SequenceShape) -> float:
    """Predicted energy per generated token, in Joules/token."""
    feats = features(theta.family, shape)
    return math.fsum(c * f for c, f in zip(theta.coefficients, feats))


def predict_e_tot(theta: ThetaVector, shape: SequenceShape) -> float:
    """Predicted total energy of the request: ``n_out * E_tok``, in Joules."""
    return shape.n_out * predict_e_tok(theta, shape)


def efficiency(theta: ThetaVector, shape: SequenceShape) -> float:
    """Predicted energy efficiency, in tokens per Joule (reciprocal of E_tok)."""
    e_tok = predict_e_tok(theta, shape)
    if e_tok <= 0:
        raise DegenerateModelError(
            f"predicted E_tok {e_tok!r} is non-positive at {shape}; efficiency undefined"
        )
    return 1.0 / e_tok


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def sweet_spot_closed_form(
    theta: ThetaVector,
    n_in: int,
    grid: Sequence[int] | None = None,
) -> SweetSpotPrediction:
    """Closed-form output length minimizing E_tok for a given input length.

    ``n_out* = sqrt((t1 n_in^2 + t3 n_in + t5) / t4)``, where ``t5 = 0``
    for ``SWEETSPOT_FLOPS``.  Requires positive curvature (``t4 > 0``) and
    a non-negative radicand.  When ``grid`` is given, the two grid points
    bracketing the continuous optimum are evaluated and the one with the
    lower predicted E_tok is reported as ``snapped_to_grid``.
    """
    if not isinstance(n_in, int) or isinstance(n_in, bool) or n_in < 0:
        raise ValidationError(f"n_in must be a non-negative integer, got {n_in!r}")
    if theta.family not in (ModelFamily.SWEETSPOT_FULL, ModelFamily.SWEETSPOT_FLOPS):
        raise ValidationError(
            f"sweet spot is defined for the SweetSpot families, not {theta.family.value}"
        )
    c = theta.coefficients
    theta1, theta3, theta4 = c[1], c[3], c[4]
    theta5 = c[5] if theta.family is ModelFamily.SWEETSPOT_FULL else 0.0
    if theta4 <= 0:
        raise NonPositiveCurvatureError(
            f"theta4 = {theta4!r} <= 0: E_tok has no interior minimum in n_out"
        )
    numerator = theta1 * n_in * n_in + theta3 * n_in + theta5
    if numerator < 0:
        raise NegativeRadicandError(
            f"theta1*n_in^2 + theta3*n_in + theta5 = {numerator!r} < 0: no real optimum"
        )
    star = math.sqrt(numerator / theta4)
    rounded = max(1, _round_half_up(star))
    snapped = None
    if grid is not None:
        points = sorted(set(grid))
        if not points or any(
            not isinstance(p, int) or isinstance(p, bool) or p < 1 for p in points
        ):
            raise ValidationError("grid must be a non-empty collection of integers >= 1")
        lower = max((p for p in points if p <= star), default=points[0])
        upper = min((p for p in points if p >= star), default=points[-1])
        snapped = min(
            (lower, upper),
            key=lambda p: (predict_e_tok(theta, SequenceShape(n_in, p)), p),
        )
    return SweetSpotPrediction(
        n_in=n_in,
        n_out_star_continuous=star,
        n_out_star_rounded=rounded,
        snapped_to_grid=snapped,
    )


def sweet_spot_brute_force(theta: ThetaVector, n_in: int, n_out_max: int) -> int:
    """Exhaustive argmin of predicted E_tok over integer ``n_out in [1, n_out_max]``.

    Works for every family; ties break toward the smaller ``n_out``.
    """
    if not isinstance(n_in, int) or isinstance(n_in, bool) or n_in < 0:
        raise ValidationError(f"n_in must be a non-negative integer, got {n_in!r}")
    if not isinstance(n_out_max, int) or isinstance(n_out_max, bool) or n_out_max < 1:
        raise ValidationError(f"n_out_max must be a positive integer, got {n_out_max!r}")
    n_out = np.arange(1, n_out_max + 1, dtype=np.float64)
    columns = {
        "1": np.ones_like(n_out),
        "n_in^2/n_out": (n_in * n_in) / n_out,
        "n_in": np.full_like(n_out, float(n_in)),
        "n_in/n_out": n_in / n_out,
        "n_out": n_out,
        "1/n_out": 1.0 / n_out,
        "1/(n_in+n_out)": 1.0 / (n_in + n_out),
    }
    e_tok = np.zeros_like(n_out)
    for coeff, name in zip(theta.coefficients, theta.family.feature_names):
        e_tok += coeff * columns[name]
    # np.argmin returns the first occurrence, i.e. the smallest n_out on a tie.
    return int(np.argmin(e_tok)) + 1


@dataclass(frozen=True)
class ThetaEntry:
    """One bundled fitted-coefficient record.

    Attributes:
        model: Primary model label.
        theta: The fitted coefficients.
        peak_measured: Measured peak-efficiency (n_in, n_out) configuration.
        peak_predicted: Closed-form predicted peak configuration (rounded).
        also_listed_as: Alternate label the same model appears under, if any.
    """

    model: str
    theta: ThetaVector
    peak_measured: tuple[int, int]
    peak_predicted: tuple[int, int]
    also_listed_as: str | None = None


_THETA_REGISTRY: list[ThetaEntry] | None = None


def bundled_theta() -> list[ThetaEntry]:
    """Return the thirteen bundled fitted coefficient sets, in registry order."""
    global _THETA_REGISTRY
    if _THETA_REGISTRY is None:
        text = resources.files("llm_energy.data").joinpath("fitted_theta.json").read_text("utf-8")
        entries = []
        for doc in json.loads(text):
            entries.append(
                ThetaEntry(
                    model=doc["model"],
                    theta=ThetaVector.from_json_dict(doc["theta"]),
                    peak_measured=(doc["peak_measured"]["n_in"], doc["peak_measured"]["n_out"]),
                    peak_predicted=(doc["peak_predicted"]["n_in"], doc["peak_predicted"]["n_out"]),
                    also_listed_as=doc.get("also_listed_as"),
                )
            )
        _THETA_REGISTRY = entries
    return list(_THETA_REGISTRY)


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() else "-" for c in name.lower()).strip("-")


def get_theta(model: str) -> ThetaEntry:
    """Look up a bundled coefficient set by model label (aliases accepted)."""
    wanted = _slug(model)
    for entry in bundled_theta():
        labels = [entry.model] + ([entry.also_listed_as] if entry.also_listed_as else [])
        if any(_slug(label) == wanted for label in labels):
            return entry
    known = ", ".join(e.model for e in bundled_theta())
    raise ValidationError(f"unknown model {model!r}; bundled: {known}")


def load_theta(path: str | Path) -> ThetaVector:
    """Load a ThetaVector from JSON.

    Accepts a plain theta document ``{family, coefficients[, fitted_on]}``,
    a fit-result document carrying a ``"theta"`` key, or a bundled-style
    entry carrying ``{"model", "theta"}``.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read theta file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON in theta file {path}: {exc}") from exc
    if isinstance(doc, dict) and "theta" in doc and isinstance(doc["theta"], dict):
        doc = doc["theta"]
    if not isinstance(doc, dict):
        raise ValidationError(f"theta file {path} must hold a JSON object")
    return ThetaVector.from_json_dict(doc)

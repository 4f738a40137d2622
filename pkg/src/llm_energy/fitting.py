"""Least-squares fitting of energy-model coefficients, with inference stats.

Every model family is linear in its coefficients, so the fit is ordinary
least squares on per-token energy.  The solver is a numerically stable
orthogonal decomposition (SVD via ``numpy.linalg.lstsq``) applied to a
column-scaled design: feature magnitudes span roughly 1e-7…1e4, so columns
are rescaled to unit Euclidean norm before solving and the scaling is
inverted on the way out.  No non-negativity constraint is imposed on the
coefficients.

The objective is unweighted least squares on ``E_tok``; a flag switches to
``E_tot``-space fitting (residuals on per-request total energy) for
sensitivity studies.  Model quality is always scored as MAPE on ``E_tok``
so scores stay comparable across objectives.

Coefficient inference: standard errors come from the diagonal of the
residual-variance-scaled inverse normal matrix, t-statistics are
``theta / stderr``, and two-sided p-values use the Student-t survival
function evaluated through the regularized incomplete beta function
(accuracy target 1e-10).  Significance buckets: ``p < 0.001 -> ***``,
``p < 0.01 -> **``, ``p < 0.05 -> *``, else ``n.s.``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import betainc

from .errors import (
    ComputationError,
    InsufficientObservationsError,
    SingularFitError,
    ValidationError,
)
from .models import ModelFamily, ThetaVector, features, predict_e_tok
from .arch import SequenceShape
from .trace import EnergyGrid

__all__ = [
    "FitResult",
    "FamilyComparison",
    "fit",
    "mape",
    "coefficient_stats",
    "compare_families",
    "significance_bucket",
    "student_t_p_value",
]

# SSE at or below this fraction of the response's squared norm is treated as
# an exact fit (zero residual variance up to floating-point association noise).
_EXACT_FIT_RELATIVE_SSE = 1e-20


def significance_bucket(p_value: float) -> str:
    """Map a p-value to its significance bucket."""
    if p_value < 0.001:
        return "***"
    if p_value < 0.01:
        return "**"
    if p_value < 0.05:
        return "*"
    return "n.s."


def student_t_p_value(t_stat: float, dof: int) -> float:
    """Two-sided Student-t p-value via the regularized incomplete beta function.

    ``p = I_x(dof/2, 1/2)`` with ``x = dof / (dof + t^2)``; accurate to
    better than 1e-10 against the direct survival function.
    """
    if dof < 1:
        raise ValidationError(f"degrees of freedom must be >= 1, got {dof}")
    if math.isinf(t_stat):
        return 0.0
    x = dof / (dof + t_stat * t_stat)
    return float(betainc(dof / 2.0, 0.5, x))


@dataclass(frozen=True)
class FitResult:
    """Fitted coefficients of one family plus inference statistics.

    Attributes:
        theta: The fitted coefficient vector.
        stderr: Standard error per coefficient (0.0 on an exact fit).
        t_stats: ``theta / stderr`` per coefficient (signed infinity on an
            exact fit with a nonzero coefficient).
        p_values: Two-sided Student-t p-values.
        significance: Bucket per coefficient (``***``, ``**``, ``*``, ``n.s.``).
        mape_percent: Mean absolute percentage error on E_tok.
        sse: Sum of squared residuals in the fitting space.
        n_obs: Number of observations used.
        exact_fit: True when residual variance is zero (p-values are
            reported as 0 rather than dividing by a zero variance).
        objective: ``"e_tok"`` or ``"e_tot"`` — the residual space fitted.
    """

    theta: ThetaVector
    stderr: tuple[float, ...]
    t_stats: tuple[float, ...]
    p_values: tuple[float, ...]
    significance: tuple[str, ...]
    mape_percent: float
    sse: float
    n_obs: int
    exact_fit: bool = False
    objective: str = "e_tok"

    def to_json_dict(self) -> dict:
        """JSON-ready dict; non-finite t-statistics become null."""
        return {
            "family": self.theta.family.value,
            "theta": self.theta.to_json_dict(),
            "stderr": list(self.stderr),
            "t_stats": [t if math.isfinite(t) else None for t in self.t_stats],
            "p_values": list(self.p_values),
            "significance": list(self.significance),
            "mape_percent": self.mape_percent,
            "sse": self.sse,
            "n_obs": self.n_obs,
            "exact_fit": self.exact_fit,
            "objective": self.objective,
        }


def _design_matrix(family: ModelFamily, grid: EnergyGrid) -> np.ndarray:
    rows = [
        features(family, SequenceShape(obs.n_in, obs.n_out)) for obs in grid.observations
    ]
    return np.asarray(rows, dtype=np.float64)


def coefficient_stats(
    design: np.ndarray,
    theta_values: np.ndarray,
    response: np.ndarray,
    feature_names: tuple[str, ...] | None = None,
) -> tuple[tuple[float, ...], tuple[float, ...], tuple[float, ...], tuple[str, ...], bool]:
    """Standard errors, t-stats, p-values, and buckets for an OLS solution.

    Returns ``(stderr, t_stats, p_values, significance, exact_fit)``.  On a
    zero-residual-variance (exact) fit, p-values are reported as 0 and the
    flag is set instead of dividing by zero.
    """
    X = np.asarray(design, dtype=np.float64)
    y = np.asarray(response, dtype=np.float64)
    theta = np.asarray(theta_values, dtype=np.float64)
    n_obs, arity = X.shape
    dof = n_obs - arity
    if dof < 1:
        raise InsufficientObservationsError(
            f"need more observations than coefficients, got {n_obs} for {arity}"
        )
    residuals = y - X @ theta
    sse = float(residuals @ residuals)
    if sse <= _EXACT_FIT_RELATIVE_SSE * max(1.0, float(y @ y)):
        stderr = (0.0,) * arity
        t_stats = tuple(math.copysign(math.inf, c) if c != 0 else 0.0 for c in theta)
        p_values = (0.0,) * arity
        significance = tuple(significance_bucket(0.0) for _ in range(arity))
        return stderr, t_stats, p_values, significance, True
    scale = np.linalg.norm(X, axis=0)
    scale[scale == 0] = 1.0
    scaled_normal = (X / scale).T @ (X / scale)
    try:
        inv_scaled = np.linalg.inv(scaled_normal)
    except np.linalg.LinAlgError as exc:
        raise SingularFitError(
            f"normal matrix is singular: {exc}",
            features=list(feature_names or ()),
        ) from exc
    sigma2 = sse / dof
    variances = sigma2 * np.diag(inv_scaled) / (scale * scale)
    stderr = tuple(float(math.sqrt(max(v, 0.0))) for v in variances)
    t_stats = tuple(
        float(c / se) if se > 0 else (math.copysign(math.inf, c) if c else 0.0)
        for c, se in zip(theta, stderr)
    )
    p_values = tuple(student_t_p_value(t, dof) for t in t_stats)
    significance = tuple(significance_bucket(p) for p in p_values)
    return stderr, t_stats, p_values, significance, False


def _collinear_feature_names(
    scaled_design: np.ndarray, rank: int, names: tuple[str, ...]
) -> list[str]:
    # Pivoted QR orders columns by decreasing independent contribution; the
    # pivots beyond the numerical rank are the dependent (collinear) columns.
    _, _, pivots = scipy.linalg.qr(scaled_design, mode="economic", pivoting=True)
    return [names[j] for j in sorted(pivots[rank:])]


def fit(family: ModelFamily, grid: EnergyGrid, *, e_tot_space: bool = False) -> FitResult:
    """Fit one family's coefficients to a grid by least squares.

    Args:
        family: Model family to fit.
        grid: Observations; needs strictly more cells than the family has
            coefficients.
        e_tot_space: When True, minimize residuals on per-request total
            energy (``n_out * E_tok``) instead of per-token energy.

    Raises:
        InsufficientObservationsError: Too few observations.
        SingularFitError: Rank-deficient design; names the collinear features.
    """
    arity = family.arity
    n_obs = len(grid)
    if n_obs <= arity:
        raise InsufficientObservationsError(
            f"{family.value} needs more than {arity} observations, got {n_obs}"
        )
    X_tok = _design_matrix(family, grid)
    y_tok = np.asarray([obs.e_tok for obs in grid.observations], dtype=np.float64)
    if e_tot_space:
        n_out = np.asarray([obs.n_out for obs in grid.observations], dtype=np.float64)
        X = X_tok * n_out[:, None]
        y = y_tok * n_out
    else:
        X, y = X_tok, y_tok
    scale = np.linalg.norm(X, axis=0)
    scale[scale == 0] = 1.0
    scaled = X / scale
    solution, _, rank, _ = np.linalg.lstsq(scaled, y, rcond=None)
    if rank < arity:
        collinear = _collinear_feature_names(scaled, rank, family.feature_names)
        raise SingularFitError(
            f"design matrix for {family.value} is rank-deficient "
            f"(rank {rank} of {arity}); collinear features: {', '.join(collinear)}",
            features=collinear,
        )
    coefficients = solution / scale
    residuals = y - X @ coefficients
    sse = float(residuals @ residuals)
    stderr, t_stats, p_values, significance, exact = coefficient_stats(
        X, coefficients, y, feature_names=family.feature_names
    )
    theta = ThetaVector(
        family=family,
        coefficients=tuple(float(c) for c in coefficients),
        fitted_on=grid.model_name or None,
    )
    return FitResult(
        theta=theta,
        stderr=stderr,
        t_stats=t_stats,
        p_values=p_values,
        significance=significance,
        mape_percent=mape(theta, grid),
        sse=sse,
        n_obs=n_obs,
        exact_fit=exact,
        objective="e_tot" if e_tot_space else "e_tok",
    )


def mape(theta: ThetaVector, grid: EnergyGrid) -> float:
    """Mean absolute percentage error of predicted vs observed E_tok.

    ``100 * mean(|predicted - observed| / observed)`` over the grid cells.
    """
    if len(grid) == 0:
        raise ValidationError("cannot compute MAPE on an empty grid")
    total = 0.0
    for obs in grid.observations:
        predicted = predict_e_tok(theta, SequenceShape(obs.n_in, obs.n_out))
        total += abs(predicted - obs.e_tok) / obs.e_tok
    return 100.0 * total / len(grid)


@dataclass(frozen=True)
class FamilyComparison:
    """Fit results for every family on one grid, ordered by family."""

    results: dict[ModelFamily, FitResult] = field(default_factory=dict)
    errors: dict[ModelFamily, str] = field(default_factory=dict)

    @property
    def best_family(self) -> ModelFamily | None:
        """The minimum-MAPE family among the successful fits."""
        fitted = [(r.mape_percent, f) for f, r in self.results.items()]
        if not fitted:
            return None
        best_mape = min(m for m, _ in fitted)
        for family in ModelFamily:
            if family in self.results and self.results[family].mape_percent == best_mape:
                return family
        return None

    def to_json_dict(self) -> dict:
        doc: dict = {"families": {}, "best_family": None}
        for family in ModelFamily:
            if family in self.results:
                doc["families"][family.value] = self.results[family].to_json_dict()
            elif family in self.errors:
                doc["families"][family.value] = {"error": self.errors[family]}
        if self.best_family is not None:
            doc["best_family"] = self.best_family.value
        return doc

    def to_text(self) -> str:
        """ASCII-aligned comparison table (one row per family)."""
        header = ("family", "sse", "mape_percent", "best")
        rows = []
        for family in ModelFamily:
            if family in self.results:
                result = self.results[family]
                rows.append(
                    (
                        family.value,
                        f"{result.sse:.6g}",
                        f"{result.mape_percent:.2f}",
                        "<-- min MAPE" if family == self.best_family else "",
                    )
                )
            elif family in self.errors:
                rows.append((family.value, "error", self.errors[family], ""))
        widths = [
            max(len(header[col]), *(len(row[col]) for row in rows)) for col in range(4)
        ]
        lines = [
            "  ".join(header[col].ljust(widths[col]) for col in range(4)).rstrip(),
            "  ".join("-" * widths[col] for col in range(4)).rstrip(),
        ]
        for row in rows:
            lines.append("  ".join(row[col].ljust(widths[col]) for col in range(4)).rstrip())
        return "\n".join(lines) + "\n"


def compare_families(grid: EnergyGrid, *, e_tot_space: bool = False) -> FamilyComparison:
    """Fit all six families; failures are recorded per family, not raised.

    Output order is fixed by family identifier regardless of any internal
    evaluation order.
    """
    results: dict[ModelFamily, FitResult] = {}
    errors: dict[ModelFamily, str] = {}
    for family in ModelFamily:
        try:
            results[family] = fit(family, grid, e_tot_space=e_tot_space)
        except (ValidationError, ComputationError) as exc:
            errors[family] = str(exc)
    return FamilyComparison(results=results, errors=errors)

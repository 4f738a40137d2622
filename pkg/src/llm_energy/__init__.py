"""Energy cost models for transformer LLM inference.

The package answers three questions about decoder-only LLM serving:

* **How much work is a request?**  Exact closed-form FLOP and
  memory-access counts for the prefill and decode phases
  (:mod:`llm_energy.costs`).
* **How much energy will it draw?**  Six analytical per-token energy model
  families fitted to measured grids by least squares, with coefficient
  inference statistics (:mod:`llm_energy.models`,
  :mod:`llm_energy.fitting`), plus the closed-form "sweet spot": the
  output length minimizing energy per generated token.
* **What do the measurements say?**  Power-trace integration, energy-grid
  construction, min-max-normalized aggregation, and efficiency-spread
  reporting (:mod:`llm_energy.trace`), with a deterministic synthetic
  generator for oracle-grade test data (:mod:`llm_energy.synth`).

A single CLI (``llm-energy``) binds the pieces into reproducible
pipelines; report commands optionally render matplotlib figures next to
their delimited outputs.
"""

from .arch import ModelArch, SequenceShape, bundled_architectures, get_architecture, load_arch
from .costs import (
    cost_breakdown,
    decode_flops,
    decode_mem_ops,
    prefill_flops,
    prefill_mem_ops,
    total_flops,
    total_mem_ops,
)
from .errors import (
    ArityMismatchError,
    ComputationError,
    DegenerateModelError,
    DegenerateRangeError,
    InsufficientObservationsError,
    NegativeRadicandError,
    NonPositiveCurvatureError,
    SingularFitError,
    ValidationError,
    ZeroOutputLengthError,
)
from .fitting import (
    FamilyComparison,
    FitResult,
    coefficient_stats,
    compare_families,
    fit,
    mape,
    significance_bucket,
    student_t_p_value,
)
from .models import (
    ModelFamily,
    SweetSpotPrediction,
    ThetaEntry,
    ThetaVector,
    bundled_theta,
    efficiency,
    features,
    get_theta,
    load_theta,
    predict_e_tok,
    predict_e_tot,
    sweet_spot_brute_force,
    sweet_spot_closed_form,
)
from .synth import SynthResult, SynthSpec, generate, load_synth_spec, write_synth_result
from .trace import (
    COARSE_INTERVAL_S,
    EnergyGrid,
    EnergyObservation,
    NormalizedGrid,
    PowerTrace,
    SpreadResult,
    aggregate_normalized,
    build_grid,
    efficiency_spread,
    integrate_power,
    normalize_min_max,
    read_grid_csv,
    read_power_trace_csv,
    write_grid_csv,
    write_heatmap_csv,
)

__version__ = "1.0.0"

__all__ = [
    "__version__",
    # arch
    "ModelArch",
    "SequenceShape",
    "bundled_architectures",
    "get_architecture",
    "load_arch",
    # costs
    "prefill_flops",
    "decode_flops",
    "total_flops",
    "prefill_mem_ops",
    "decode_mem_ops",
    "total_mem_ops",
    "cost_breakdown",
    # models
    "ModelFamily",
    "ThetaVector",
    "ThetaEntry",
    "SweetSpotPrediction",
    "features",
    "predict_e_tok",
    "predict_e_tot",
    "efficiency",
    "sweet_spot_closed_form",
    "sweet_spot_brute_force",
    "bundled_theta",
    "get_theta",
    "load_theta",
    # fitting
    "FitResult",
    "FamilyComparison",
    "fit",
    "mape",
    "coefficient_stats",
    "compare_families",
    "significance_bucket",
    "student_t_p_value",
    # trace
    "PowerTrace",
    "EnergyObservation",
    "COARSE_INTERVAL_S",
    "EnergyGrid",
    "NormalizedGrid",
    "SpreadResult",
    "integrate_power",
    "build_grid",
    "normalize_min_max",
    "aggregate_normalized",
    "efficiency_spread",
    "read_power_trace_csv",
    "read_grid_csv",
    "write_grid_csv",
    "write_heatmap_csv",
    # synth
    "SynthSpec",
    "SynthResult",
    "generate",
    "load_synth_spec",
    "write_synth_result",
    # errors
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

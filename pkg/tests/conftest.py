"""Shared fixtures: the reference coefficient set and synthetic-grid helpers.

REFERENCE_THETA is the bundled coefficient row for the smallest model in the
registry (Llama 3.2 1B); it doubles as the generator for most synthetic
grids because its six coefficients are all positive and well-conditioned.
"""

from __future__ import annotations

import pytest

from llm_energy import (
    EnergyObservation,
    EnergyGrid,
    ModelFamily,
    SynthSpec,
    ThetaVector,
    generate,
)

REFERENCE_THETA = (
    5.005153e-03,
    1.079941e-07,
    6.825240e-06,
    2.611042e-03,
    3.852659e-06,
    5.406443e-01,
)

# 13 powers of two spanning the full supported sequence range.
POW2_AXES = tuple(2**k for k in range(1, 14))


@pytest.fixture
def reference_theta() -> ThetaVector:
    return ThetaVector(family=ModelFamily.SWEETSPOT_FULL, coefficients=REFERENCE_THETA)


def make_synth_grid(
    sigma: float,
    seed: int,
    axes: tuple[int, ...] = POW2_AXES,
    coefficients: tuple[float, ...] = REFERENCE_THETA,
    model_name: str = "synthetic",
):
    """Generate a square synthetic grid from the reference coefficients."""
    spec = SynthSpec(
        n_in_axis=axes,
        n_out_axis=axes,
        sigma=sigma,
        seed=seed,
        theta=ThetaVector(family=ModelFamily.SWEETSPOT_FULL, coefficients=coefficients),
        model_name=model_name,
    )
    return generate(spec)


def grid_from_e_tok(cells: dict[tuple[int, int], float], model_name: str = "") -> EnergyGrid:
    """Build a grid whose observed per-token energies are given directly."""
    observations = tuple(
        EnergyObservation(n_in=k[0], n_out=k[1], n_req=1, e_tot=v * k[1])
        for k, v in cells.items()
    )
    return EnergyGrid(observations=observations, model_name=model_name)

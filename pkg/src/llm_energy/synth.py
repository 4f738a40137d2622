"""Synthetic energy-grid generator with known ground truth.

Grids are produced either from a known coefficient vector (``E_tok`` is the
family's feature dot product) or from an architecture's cost counts
(``E_tok = (j_per_flop * total_flops + j_per_mem_op * total_mem_ops) / n_out``),
then perturbed by multiplicative log-normal noise:
``observed = true * exp(eps)`` with ``eps ~ Normal(0, sigma^2)``.
Multiplicative noise is used because per-token energy spans orders of
magnitude across a grid; additive noise would swamp the small cells.

Determinism contract: each cell's noise comes from its own stream,
``Generator(Philox(key=seed, counter=[0, 0, n_in, n_out]))`` — a named,
portable, counter-based 64-bit generator whose key is the experiment seed
and whose counter block is the cell coordinate.  Identical specs therefore
produce bit-identical grids on every platform, cells may be generated in
parallel, and the grid does not depend on axis ordering.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._util import atomic_write_text
from .arch import ModelArch, SequenceShape, _arch_from_dict
from .costs import total_flops, total_mem_ops
from .errors import ComputationError, ValidationError
from .models import ThetaVector, predict_e_tok
from .trace import EnergyGrid, EnergyObservation, write_grid_csv

__all__ = ["SynthSpec", "SynthResult", "generate", "load_synth_spec", "write_synth_result"]

_MAX_SEED = 2**64


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic grid.

    Exactly one generator must be set: either ``theta`` (coefficient-based
    ground truth) or ``arch`` with both energy scales (count-based ground
    truth, Joules per FLOP and Joules per element access).

    Attributes:
        n_in_axis: Input lengths, each >= 1.
        n_out_axis: Output lengths, each >= 1.
        sigma: Log-normal noise parameter, >= 0 (0 disables noise).
        seed: 64-bit experiment seed.
        theta: Coefficient-based generator, or None.
        arch: Architecture for the count-based generator, or None.
        joules_per_flop: Energy scale for compute, required with ``arch``.
        joules_per_mem_op: Energy scale for memory traffic, required with
            ``arch``.
        model_name: Label stamped onto the generated grid.
    """

    n_in_axis: tuple[int, ...]
    n_out_axis: tuple[int, ...]
    sigma: float
    seed: int
    theta: ThetaVector | None = None
    arch: ModelArch | None = None
    joules_per_flop: float | None = None
    joules_per_mem_op: float | None = None
    model_name: str = "synthetic"

    def __post_init__(self) -> None:
        for axis_name in ("n_in_axis", "n_out_axis"):
            axis = tuple(getattr(self, axis_name))
            object.__setattr__(self, axis_name, axis)
            if not axis:
                raise ValidationError(f"{axis_name} must be non-empty")
            for value in axis:
                if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                    raise ValidationError(f"{axis_name} values must be integers >= 1, got {value!r}")
            if len(set(axis)) != len(axis):
                raise ValidationError(f"{axis_name} has duplicate values")
        object.__setattr__(self, "sigma", float(self.sigma))
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValidationError(f"sigma must be finite and >= 0, got {self.sigma!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < _MAX_SEED:
            raise ValidationError(f"seed must be an integer in [0, 2^64), got {self.seed!r}")
        has_theta = self.theta is not None
        has_arch = self.arch is not None
        if has_theta == has_arch:
            raise ValidationError("exactly one generator must be given: theta or arch")
        if has_arch:
            for scale_name in ("joules_per_flop", "joules_per_mem_op"):
                scale = getattr(self, scale_name)
                if scale is None or not math.isfinite(float(scale)):
                    raise ValidationError(f"{scale_name} must be a finite number with an arch generator")
                object.__setattr__(self, scale_name, float(scale))

    def generator_json_dict(self) -> dict:
        if self.theta is not None:
            return {"theta": self.theta.to_json_dict()}
        assert self.arch is not None
        return {
            "arch": self.arch.to_json_dict(),
            "joules_per_flop": self.joules_per_flop,
            "joules_per_mem_op": self.joules_per_mem_op,
        }


@dataclass(frozen=True)
class SynthResult:
    """A generated grid together with its noise-free ground truth."""

    grid: EnergyGrid
    true_e_tok: dict[tuple[int, int], float]
    spec: SynthSpec

    def truth_json_dict(self) -> dict:
        return {
            "model_name": self.spec.model_name,
            "generator": self.spec.generator_json_dict(),
            "sigma": self.spec.sigma,
            "seed": self.spec.seed,
            "cells": [
                {"n_in": n_in, "n_out": n_out, "e_tok_true": value}
                for (n_in, n_out), value in sorted(self.true_e_tok.items())
            ],
        }


def _true_e_tok(spec: SynthSpec, n_in: int, n_out: int) -> float:
    shape = SequenceShape(n_in, n_out)
    if spec.theta is not None:
        return predict_e_tok(spec.theta, shape)
    assert spec.arch is not None
    energy = (
        spec.joules_per_flop * total_flops(spec.arch, shape)
        + spec.joules_per_mem_op * total_mem_ops(spec.arch, shape)
    )
    return energy / n_out


def _cell_noise(seed: int, n_in: int, n_out: int, sigma: float) -> float:
    stream = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, n_in, n_out]))
    return float(stream.normal(0.0, sigma))


def generate(spec: SynthSpec) -> SynthResult:
    """Generate the grid described by ``spec``, with ground truth alongside.

    Raises :class:`ComputationError` when the generator yields a
    non-positive or non-finite energy for any cell.
    """
    observations = []
    true_values: dict[tuple[int, int], float] = {}
    for n_in in spec.n_in_axis:
        for n_out in spec.n_out_axis:
            true = _true_e_tok(spec, n_in, n_out)
            if not (math.isfinite(true) and true > 0):
                raise ComputationError(
                    f"generated E_tok at cell ({n_in}, {n_out}) is {true!r}; "
                    "the generator must produce positive finite energy"
                )
            observed = true * math.exp(_cell_noise(spec.seed, n_in, n_out, spec.sigma))
            if not math.isfinite(observed):
                raise ComputationError(
                    f"noisy E_tok at cell ({n_in}, {n_out}) is non-finite"
                )
            true_values[(n_in, n_out)] = true
            observations.append(
                EnergyObservation(n_in=n_in, n_out=n_out, n_req=1, e_tot=observed * n_out)
            )
    grid = EnergyGrid(observations=tuple(observations), model_name=spec.model_name)
    return SynthResult(grid=grid, true_e_tok=true_values, spec=spec)


def load_synth_spec(path: str | Path, seed_override: int | None = None) -> SynthSpec:
    """Load a :class:`SynthSpec` from JSON.

    The document carries either a ``"theta"`` object or an ``"arch"``
    object with ``"joules_per_flop"`` and ``"joules_per_mem_op"``, plus
    ``"n_in_axis"``, ``"n_out_axis"``, ``"sigma"``, and optionally
    ``"seed"`` and ``"model_name"``.  ``seed_override`` replaces (or
    supplies) the seed; generation never invents one.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read synth spec {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON in synth spec {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError(f"synth spec {path} must hold a JSON object")
    missing = {"n_in_axis", "n_out_axis", "sigma"} - doc.keys()
    if missing:
        raise ValidationError(f"synth spec missing keys: {sorted(missing)}")
    seed = seed_override if seed_override is not None else doc.get("seed")
    if seed is None:
        raise ValidationError(
            "no seed: the synth spec has no 'seed' field and no seed was supplied"
        )
    theta = None
    arch = None
    if "theta" in doc:
        theta = ThetaVector.from_json_dict(doc["theta"])
    if "arch" in doc:
        arch = _arch_from_dict(doc["arch"])
    try:
        axes = (
            tuple(int(v) for v in doc["n_in_axis"]),
            tuple(int(v) for v in doc["n_out_axis"]),
        )
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"axes must be lists of integers: {exc}") from exc
    return SynthSpec(
        n_in_axis=axes[0],
        n_out_axis=axes[1],
        sigma=doc["sigma"],
        seed=seed,
        theta=theta,
        arch=arch,
        joules_per_flop=doc.get("joules_per_flop"),
        joules_per_mem_op=doc.get("joules_per_mem_op"),
        model_name=doc.get("model_name", "synthetic"),
    )


def write_synth_result(result: SynthResult, grid_path: str | Path) -> list[Path]:
    """Write the grid CSV plus its sibling ground-truth JSON.

    Returns the paths written: ``[grid_path, <grid stem>.truth.json]``.
    """
    grid_path = Path(grid_path)
    truth_path = grid_path.with_suffix(".truth.json")
    write_grid_csv(result.grid, grid_path)
    atomic_write_text(truth_path, json.dumps(result.truth_json_dict(), indent=2) + "\n")
    return [grid_path, truth_path]

"""Synthetic-grid generation: determinism, noise model, file round-trips."""

import json
import math

import pytest

from conftest import POW2_AXES, REFERENCE_THETA, make_synth_grid

from llm_energy import (
    ComputationError,
    ModelArch,
    ModelFamily,
    SequenceShape,
    SynthSpec,
    ThetaVector,
    ValidationError,
    fit,
    generate,
    load_synth_spec,
    predict_e_tok,
    write_synth_result,
)


def _theta_spec(**overrides) -> SynthSpec:
    base = dict(
        n_in_axis=(2, 8, 64),
        n_out_axis=(4, 32, 256),
        sigma=0.0,
        seed=0,
        theta=ThetaVector(family=ModelFamily.SWEETSPOT_FULL, coefficients=REFERENCE_THETA),
        model_name="t",
    )
    base.update(overrides)
    return SynthSpec(**base)


class TestSpecValidation:
    def test_requires_exactly_one_generator(self):
        with pytest.raises(ValidationError):
            _theta_spec(theta=None)  # neither theta nor arch
        arch = ModelArch(hidden_size=64, num_layers=2, num_heads=4)
        with pytest.raises(ValidationError):
            _theta_spec(arch=arch, joules_per_flop=1e-12, joules_per_mem_op=1e-11)

    def test_arch_generator_needs_both_scales(self):
        arch = ModelArch(hidden_size=64, num_layers=2, num_heads=4)
        with pytest.raises(ValidationError):
            _theta_spec(theta=None, arch=arch, joules_per_flop=1e-12)

    def test_axis_validation(self):
        with pytest.raises(ValidationError):
            _theta_spec(n_in_axis=())
        with pytest.raises(ValidationError):
            _theta_spec(n_in_axis=(1, 1, 2))
        with pytest.raises(ValidationError):
            _theta_spec(n_out_axis=(0, 1))

    def test_sigma_and_seed_validation(self):
        with pytest.raises(ValidationError):
            _theta_spec(sigma=-0.1)
        with pytest.raises(ValidationError):
            _theta_spec(sigma=float("nan"))
        with pytest.raises(ValidationError):
            _theta_spec(seed=-1)
        with pytest.raises(ValidationError):
            _theta_spec(seed=2**64)
        assert _theta_spec(seed=2**64 - 1).seed == 2**64 - 1


class TestNoiselessGeneration:
    def test_cells_equal_model_predictions_exactly(self, reference_theta):
        """With sigma = 0 on power-of-two axes, the stored totals divide
        back to the model's per-token predictions bit-for-bit."""
        result = make_synth_grid(sigma=0.0, seed=5)
        for obs in result.grid.observations:
            predicted = predict_e_tok(reference_theta, SequenceShape(*obs.key))
            assert obs.e_tok == predicted  # exact: n_out is a power of two
            assert result.true_e_tok[obs.key] == predicted

    def test_grid_covers_axes(self):
        result = make_synth_grid(sigma=0.0, seed=5)
        assert result.grid.n_in_axis == POW2_AXES
        assert result.grid.n_out_axis == POW2_AXES
        assert len(result.grid) == 169


class TestNoiseModel:
    def test_bit_identical_reruns(self):
        a = make_synth_grid(sigma=0.05, seed=123)
        b = make_synth_grid(sigma=0.05, seed=123)
        assert a.grid.observations == b.grid.observations

    def test_seed_changes_noise(self):
        a = make_synth_grid(sigma=0.05, seed=1)
        b = make_synth_grid(sigma=0.05, seed=2)
        assert a.grid.observations != b.grid.observations

    def test_axis_order_does_not_change_cell_values(self):
        fwd = generate(_theta_spec(sigma=0.2, seed=9))
        rev = generate(
            _theta_spec(
                sigma=0.2, seed=9,
                n_in_axis=(64, 8, 2), n_out_axis=(256, 32, 4),
            )
        )
        assert {o.key: o.e_tot for o in fwd.grid.observations} == {
            o.key: o.e_tot for o in rev.grid.observations
        }

    def test_noise_is_multiplicative_lognormal(self):
        """log(observed / true) must reproduce each cell's own stream draw."""
        import numpy as np

        result = generate(_theta_spec(sigma=0.3, seed=77))
        for obs in result.grid.observations:
            true = result.true_e_tok[obs.key]
            stream = np.random.Generator(
                np.random.Philox(key=77, counter=[0, 0, obs.n_in, obs.n_out])
            )
            expected = true * math.exp(float(stream.normal(0.0, 0.3)))
            assert obs.e_tok == pytest.approx(expected, rel=1e-15)

    def test_zero_sigma_is_noise_free(self, reference_theta):
        result = generate(_theta_spec(sigma=0.0, seed=31337))
        for obs in result.grid.observations:
            assert obs.e_tok == predict_e_tok(reference_theta, SequenceShape(*obs.key))


class TestArchBasedGenerator:
    def _spec(self, jpf: float, jpm: float) -> SynthSpec:
        arch = ModelArch(hidden_size=64, num_layers=2, num_heads=4)
        return SynthSpec(
            n_in_axis=(2, 8, 32, 128, 512),
            n_out_axis=(2, 8, 32, 128, 512),
            sigma=0.0,
            seed=0,
            arch=arch,
            joules_per_flop=jpf,
            joules_per_mem_op=jpm,
            model_name="counts",
        )

    def test_pure_compute_energy_is_in_the_flops_family_span(self):
        """With the memory scale at zero, per-token energy is an exact
        linear combination of the five compute-shape features, so that
        family fits it with zero residual."""
        result = generate(self._spec(jpf=1e-9, jpm=0.0))
        fitted = fit(ModelFamily.SWEETSPOT_FLOPS, result.grid)
        assert fitted.sse < 1e-18
        assert fitted.exact_fit
        assert fitted.mape_percent < 1e-9

    def test_mixed_energy_is_positive_everywhere(self):
        result = generate(self._spec(jpf=1e-9, jpm=5e-9))
        assert all(o.e_tot > 0 for o in result.grid.observations)

    def test_generator_must_stay_positive(self):
        with pytest.raises(ComputationError):
            generate(self._spec(jpf=0.0, jpm=0.0))


class TestFrozenRoundTrip:
    def test_noisy_recovery_matches_frozen_run(self):
        """Regression pin for the documented seed-42 generation."""
        result = make_synth_grid(sigma=0.01, seed=42)
        fitted = fit(ModelFamily.SWEETSPOT_FULL, result.grid)
        worst = max(
            abs(c - t) / abs(t)
            for c, t in zip(fitted.theta.coefficients, REFERENCE_THETA)
        )
        assert worst == pytest.approx(0.0168, abs=0.0002)
        assert fitted.mape_percent == pytest.approx(0.845, abs=0.001)


class TestFiles:
    def test_spec_json_round_trip(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({
            "n_in_axis": [2, 4], "n_out_axis": [8, 16],
            "sigma": 0.1, "seed": 7,
            "theta": {
                "family": "SWEETSPOT_FULL",
                "coefficients": list(REFERENCE_THETA),
            },
            "model_name": "from-file",
        }))
        spec = load_synth_spec(path)
        assert spec.seed == 7
        assert spec.model_name == "from-file"
        assert spec.theta.coefficients == REFERENCE_THETA

    def test_seed_must_come_from_somewhere(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({
            "n_in_axis": [2], "n_out_axis": [2], "sigma": 0.0,
            "theta": {"family": "BASELINE1", "coefficients": [1.0]},
        }))
        with pytest.raises(ValidationError, match="seed"):
            load_synth_spec(path)
        assert load_synth_spec(path, seed_override=11).seed == 11

    def test_seed_override_wins(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({
            "n_in_axis": [2], "n_out_axis": [2], "sigma": 0.0, "seed": 1,
            "theta": {"family": "BASELINE1", "coefficients": [1.0]},
        }))
        assert load_synth_spec(path, seed_override=99).seed == 99

    def test_arch_spec_from_json(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({
            "n_in_axis": [2, 4], "n_out_axis": [2, 4], "sigma": 0.0, "seed": 0,
            "arch": {"hidden_size": 16, "num_layers": 1, "num_heads": 2},
            "joules_per_flop": 1e-10, "joules_per_mem_op": 1e-9,
        }))
        spec = load_synth_spec(path)
        assert spec.arch.hidden_size == 16
        result = generate(spec)
        assert len(result.grid) == 4

    def test_writes_grid_and_truth_side_by_side(self, tmp_path):
        result = make_synth_grid(sigma=0.01, seed=4, axes=(2, 8))
        grid_path = tmp_path / "out" / "grid.csv"
        grid_path.parent.mkdir()
        written = write_synth_result(result, grid_path)
        assert [p.name for p in written] == ["grid.csv", "grid.truth.json"]
        assert all(p.exists() for p in written)
        truth = json.loads(written[1].read_text())
        assert truth["sigma"] == 0.01
        assert truth["seed"] == 4
        assert "theta" in truth["generator"]
        assert len(truth["cells"]) == 4
        by_key = {(c["n_in"], c["n_out"]): c["e_tok_true"] for c in truth["cells"]}
        assert by_key[(2, 8)] == result.true_e_tok[(2, 8)]

    def test_truth_document_shape(self):
        result = make_synth_grid(sigma=0.0, seed=0, axes=(2, 4))
        doc = result.truth_json_dict()
        assert doc["model_name"] == "synthetic"
        assert {c["n_in"] for c in doc["cells"]} == {2, 4}

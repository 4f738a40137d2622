"""Cost-model checks: hand-derived anchors, component-sum oracles, and
structural properties (additivity, monotonicity, curvature)."""

import random
import warnings

import pytest

from llm_energy import (
    ModelArch,
    SequenceShape,
    ValidationError,
    cost_breakdown,
    decode_flops,
    decode_mem_ops,
    prefill_flops,
    prefill_mem_ops,
    total_flops,
    total_mem_ops,
)

UNIT = ModelArch(hidden_size=1, num_layers=1, num_heads=1)


def _arch(d: int, length: int, n_q: int) -> ModelArch:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # random dims need not divide
        return ModelArch(hidden_size=d, num_layers=length, num_heads=n_q)


# ---------------------------------------------------------------------------
# Component-sum oracles, written independently of the library's factored
# formulas: one term per attention/FFN stage, one step per decoded token.


def oracle_prefill_flops(d: int, length: int, n: int) -> int:
    proj = 6 * n * d * d       # fused Q/K/V projections
    scores = 2 * n * n * d     # attention scores
    mix = 2 * n * n * d        # value mixing
    out = 2 * n * d * d        # output projection
    ffn = 16 * n * d * d       # two 4x FFN matmuls
    return length * (proj + scores + mix + out + ffn)


def oracle_prefill_mem(d: int, length: int, n_q: int, n: int) -> int:
    proj = 2 * n * d + d * d
    scores = 2 * n * d + n * n * n_q
    mix = 2 * n * d + n * n * n_q
    out = 2 * n * d + d * d
    ffn = 2 * n * d + 8 * d * d
    return length * (proj + scores + mix + out + ffn)


def oracle_decode_flops(d: int, length: int, n_in: int, n_out: int) -> int:
    total = 0
    for t in range(1, n_out + 1):
        context = n_in + t - 1
        total += 24 * d * d + 4 * context * d
    return length * total


def oracle_decode_mem(d: int, length: int, n_q: int, n_in: int, n_out: int) -> int:
    total = 0
    for t in range(1, n_out + 1):
        context = n_in + t - 1
        total += 7 * d + 10 * d * d + (n_q + d) * context
    return length * total


class TestHandDerivedAnchors:
    """Every count checked against explicit arithmetic at unit dimensions."""

    def test_prefill_flops_unit(self):
        # L(24 n d^2 + 4 n^2 d) at d=L=1: n=1 -> 28; n=2 -> 48+16=64
        assert prefill_flops(UNIT, 1) == 28
        assert prefill_flops(UNIT, 2) == 64

    def test_decode_flops_unit(self):
        # per step 24d^2 + 4(context)d: one token from context 1 -> 28
        assert decode_flops(UNIT, 1, 1) == 28
        # two tokens: contexts 1 and 2 -> 28 + 32 = 60
        assert decode_flops(UNIT, 1, 2) == 60

    def test_total_flops_unit(self):
        assert total_flops(UNIT, SequenceShape(1, 1)) == 56

    def test_prefill_mem_unit(self):
        # L(10 n d + 10 d^2 + 2 n^2 n_q): n=1 -> 22; n=2 -> 20+10+8 = 38
        assert prefill_mem_ops(UNIT, 1) == 22
        assert prefill_mem_ops(UNIT, 2) == 38

    def test_decode_mem_unit(self):
        # per step 7d + 10d^2 + (n_q+d)(context): context 1 -> 19
        assert decode_mem_ops(UNIT, 1, 1) == 19
        # contexts 1,2 -> 19 + (7+10+4) = 40
        assert decode_mem_ops(UNIT, 1, 2) == 40

    def test_total_mem_unit(self):
        assert total_mem_ops(UNIT, SequenceShape(1, 1)) == 41

    def test_wider_model(self):
        # d=2, L=1: prefill flops n=1 -> 24*4 + 4*2 = 104
        arch = _arch(2, 1, 1)
        assert prefill_flops(arch, 1) == 104
        # prefill mem n=1 -> 10*2 + 10*4 + 2*1 = 62
        assert prefill_mem_ops(arch, 1) == 62

    def test_layers_scale_linearly(self):
        one = _arch(3, 1, 2)
        three = _arch(3, 3, 2)
        assert prefill_flops(three, 5) == 3 * prefill_flops(one, 5)
        assert decode_mem_ops(three, 5, 4) == 3 * decode_mem_ops(one, 5, 4)

    def test_production_scale_value(self):
        # d=4096, L=32: worked out longhand once, frozen as a regression pin
        arch = _arch(4096, 32, 32)
        assert prefill_flops(arch, 2048) == 28_587_302_322_176
        assert decode_flops(arch, 2048, 256) == 3_590_525_550_592
        assert total_flops(arch, SequenceShape(2048, 256)) == 32_177_827_872_768


class TestComponentSumOracle:
    def test_seeded_random_sweep(self):
        rng = random.Random(20240817)
        for _ in range(300):
            d = rng.randint(1, 8)
            length = rng.randint(1, 4)
            n_q = rng.randint(1, 8)
            n_in = rng.randint(1, 64)
            n_out = rng.randint(0, 64)
            arch = _arch(d, length, n_q)
            shape = SequenceShape(n_in, n_out)
            assert prefill_flops(arch, n_in) == oracle_prefill_flops(d, length, n_in)
            assert prefill_mem_ops(arch, n_in) == oracle_prefill_mem(d, length, n_q, n_in)
            assert decode_flops(arch, n_in, n_out) == oracle_decode_flops(d, length, n_in, n_out)
            assert decode_mem_ops(arch, n_in, n_out) == oracle_decode_mem(d, length, n_q, n_in, n_out)
            assert total_flops(arch, shape) == (
                oracle_prefill_flops(d, length, n_in) + oracle_decode_flops(d, length, n_in, n_out)
            )
            assert total_mem_ops(arch, shape) == (
                oracle_prefill_mem(d, length, n_q, n_in)
                + oracle_decode_mem(d, length, n_q, n_in, n_out)
            )


class TestStructuralProperties:
    def test_decode_is_additive_in_output_length(self):
        # generating a+b tokens = generating a, then b more from the longer context
        arch = _arch(6, 3, 2)
        for n_in, a, b in [(1, 1, 1), (7, 3, 5), (32, 10, 22), (5, 0, 9)]:
            assert decode_flops(arch, n_in, a + b) == (
                decode_flops(arch, n_in, a) + decode_flops(arch, n_in + a, b)
            )
            assert decode_mem_ops(arch, n_in, a + b) == (
                decode_mem_ops(arch, n_in, a) + decode_mem_ops(arch, n_in + a, b)
            )

    def test_total_equals_prefill_plus_decode(self):
        rng = random.Random(7)
        for _ in range(100):
            arch = _arch(rng.randint(1, 16), rng.randint(1, 6), rng.randint(1, 16))
            n_in, n_out = rng.randint(1, 100), rng.randint(0, 100)
            assert total_flops(arch, SequenceShape(n_in, n_out)) == (
                prefill_flops(arch, n_in) + decode_flops(arch, n_in, n_out)
            )
            assert total_mem_ops(arch, SequenceShape(n_in, n_out)) == (
                prefill_mem_ops(arch, n_in) + decode_mem_ops(arch, n_in, n_out)
            )

    def test_monotone_in_lengths(self):
        arch = _arch(8, 2, 4)
        for n in range(1, 40):
            assert prefill_flops(arch, n + 1) > prefill_flops(arch, n)
            assert prefill_mem_ops(arch, n + 1) > prefill_mem_ops(arch, n)
            assert decode_flops(arch, 16, n + 1) > decode_flops(arch, 16, n)
            assert decode_flops(arch, n + 1, 16) > decode_flops(arch, n, 16)

    def test_prefill_curvature_is_constant(self):
        # second difference of L(24nd^2 + 4n^2 d) in n is exactly 8 L d
        arch = _arch(5, 3, 2)
        for n in range(2, 50):
            second = (
                prefill_flops(arch, n + 1)
                - 2 * prefill_flops(arch, n)
                + prefill_flops(arch, n - 1)
            )
            assert second == 8 * 3 * 5

    def test_zero_output_tokens(self):
        arch = _arch(4, 2, 2)
        assert decode_flops(arch, 10, 0) == 0
        assert decode_mem_ops(arch, 10, 0) == 0
        assert total_flops(arch, SequenceShape(10, 0)) == prefill_flops(arch, 10)

    def test_huge_inputs_do_not_overflow(self):
        # Python integers are arbitrary precision; a 1M-token count is exact
        arch = _arch(16384, 128, 128)
        value = total_flops(arch, SequenceShape(1_000_000, 1_000_000))
        assert value > 2**63  # would overflow a fixed 64-bit counter
        assert isinstance(value, int)

    def test_breakdown_matches_parts(self):
        arch = _arch(8, 2, 4)
        shape = SequenceShape(12, 7)
        parts = cost_breakdown(arch, shape)
        assert parts["prefill_flops"] == prefill_flops(arch, 12)
        assert parts["decode_flops"] == decode_flops(arch, 12, 7)
        assert parts["total_flops"] == total_flops(arch, shape)
        assert parts["prefill_mem_ops"] == prefill_mem_ops(arch, 12)
        assert parts["decode_mem_ops"] == decode_mem_ops(arch, 12, 7)
        assert parts["total_mem_ops"] == total_mem_ops(arch, shape)


class TestValidation:
    @pytest.mark.parametrize("bad", [-1, 1.5, True, None, "4"])
    def test_rejects_bad_token_counts(self, bad):
        with pytest.raises(ValidationError):
            prefill_flops(UNIT, bad)
        with pytest.raises(ValidationError):
            decode_flops(UNIT, 1, bad)

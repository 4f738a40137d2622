"""Closed-form FLOP and memory-operation counts for transformer inference.

Inference is split into the *prefill* phase (the whole prompt is processed
in parallel, quadratic in input length) and the *decode* phase (tokens are
generated one at a time against a KV cache, linear per step).  Each count
below is an exact closed form over the architecture shape (``d`` hidden
size, ``L`` layers, ``n_q`` heads) and the token counts; totals factor the
prefill + decode sum into a single expression that must agree exactly.

All arithmetic is plain Python integer arithmetic, which is
arbitrary-precision: counts around 1e14 (and far beyond) are represented
exactly and cannot silently overflow.  Memory counts are in tensor
*elements*, not bytes — any constant byte-width factor is absorbed by the
energy-model coefficients fitted downstream.

Scaling, softmax, layer normalization, and dropout costs are neglected.
"""

from __future__ import annotations

from .arch import ModelArch, SequenceShape
from .errors import ValidationError

__all__ = [
    "prefill_flops",
    "decode_flops",
    "total_flops",
    "prefill_mem_ops",
    "decode_mem_ops",
    "total_mem_ops",
    "cost_breakdown",
]


def _check_count(name: str, value: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise ValidationError(f"{name} must be a non-negative integer, got {value!r}")
    return value


def prefill_flops(arch: ModelArch, n_in: int) -> int:
    """FLOPs to process an ``n_in``-token prompt: ``L(24 n_in d^2 + 4 n_in^2 d)``.

    Per layer: QKV and output projections plus the FFN contribute
    ``24 n_in d^2``; the two attention matrix products (scores and value
    mixing) contribute ``4 n_in^2 d``.
    """
    _check_count("n_in", n_in)
    d, L = arch.hidden_size, arch.num_layers
    return L * (24 * n_in * d * d + 4 * n_in * n_in * d)


def decode_flops(arch: ModelArch, n_in: int, n_out: int) -> int:
    """FLOPs to generate ``n_out`` tokens after an ``n_in``-token prompt.

    Step ``t`` attends over the ``n_in + t - 1`` cached positions, so the
    per-step cost is ``L(24 d^2 + 4 (n_in + t - 1) d)``; summed over all
    steps this closes to ``L(24 n_out d^2 + 4 d (n_out n_in + n_out(n_out-1)/2))``.
    """
    _check_count("n_in", n_in)
    _check_count("n_out", n_out)
    d, L = arch.hidden_size, arch.num_layers
    return L * (24 * n_out * d * d + 4 * d * (n_out * n_in + n_out * (n_out - 1) // 2))


def total_flops(arch: ModelArch, shape: SequenceShape) -> int:
    """Total FLOPs for one request, factored form.

    ``2 L d (12 d n_in + 12 d n_out + 2 n_in^2 + 2 n_out n_in + n_out^2 - n_out)``
    — algebraically identical to ``prefill_flops + decode_flops`` and
    verified to match it exactly for every input.
    """
    d, L = arch.hidden_size, arch.num_layers
    n_in, n_out = shape.n_in, shape.n_out
    return 2 * L * d * (
        12 * d * n_in
        + 12 * d * n_out
        + 2 * n_in * n_in
        + 2 * n_out * n_in
        + n_out * n_out
        - n_out
    )


def prefill_mem_ops(arch: ModelArch, n_in: int) -> int:
    """Element reads/writes for prefill: ``L(10 n_in d + 10 d^2 + 2 n_in^2 n_q)``.

    Activation traffic is linear in ``n_in``, weight traffic is ``10 d^2``
    per layer, and the per-head attention score matrices contribute
    ``2 n_in^2 n_q``.
    """
    _check_count("n_in", n_in)
    d, L, n_q = arch.hidden_size, arch.num_layers, arch.num_heads
    return L * (10 * n_in * d + 10 * d * d + 2 * n_in * n_in * n_q)


def decode_mem_ops(arch: ModelArch, n_in: int, n_out: int) -> int:
    """Element reads/writes for decode.

    Step ``t`` costs ``L(7 d + 10 d^2 + (n_q + d)(n_in + t - 1))`` — weight
    traffic every step plus KV-cache traffic growing with the attended
    length.  Summed over all steps this closes to
    ``L(7 d n_out + 10 d^2 n_out + (n_q + d)(n_in n_out + n_out(n_out-1)/2))``.
    """
    _check_count("n_in", n_in)
    _check_count("n_out", n_out)
    d, L, n_q = arch.hidden_size, arch.num_layers, arch.num_heads
    return L * (
        7 * d * n_out
        + 10 * d * d * n_out
        + (n_q + d) * (n_in * n_out + n_out * (n_out - 1) // 2)
    )


def total_mem_ops(arch: ModelArch, shape: SequenceShape) -> int:
    """Total element accesses for one request: prefill + decode, exactly."""
    return prefill_mem_ops(arch, shape.n_in) + decode_mem_ops(arch, shape.n_in, shape.n_out)


def cost_breakdown(arch: ModelArch, shape: SequenceShape) -> dict[str, int]:
    """All six counts for one request, keyed for reporting."""
    return {
        "prefill_flops": prefill_flops(arch, shape.n_in),
        "decode_flops": decode_flops(arch, shape.n_in, shape.n_out),
        "total_flops": total_flops(arch, shape),
        "prefill_mem_ops": prefill_mem_ops(arch, shape.n_in),
        "decode_mem_ops": decode_mem_ops(arch, shape.n_in, shape.n_out),
        "total_mem_ops": total_mem_ops(arch, shape),
    }

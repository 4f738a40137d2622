"""Transformer architecture shapes and sequence-length descriptors.

A :class:`ModelArch` carries the three quantities the cost formulas need
(hidden size ``d``, layer count ``L``, attention head count ``n_q``) plus
informational metadata (parameter count, attention variant).  The package
ships a registry of thirteen reference decoder-only architectures spanning
1B to 9B parameters, loadable by name.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ValidationError

__all__ = [
    "ModelArch",
    "SequenceShape",
    "load_arch",
    "bundled_architectures",
    "get_architecture",
]

_ARCH_KEYS = {"name", "params_b", "hidden_size", "num_layers", "num_heads", "attention"}


@dataclass(frozen=True)
class ModelArch:
    """Shape of a decoder-only transformer.

    Attributes:
        hidden_size: Model (embedding) dimension ``d``, in elements.
        num_layers: Number of transformer layers ``L``.
        num_heads: Number of attention (query) heads ``n_q``.
        name: Display name; informational only.
        params_b: Parameter count in billions; informational only.
        attention: Attention variant label (e.g. ``"MHA"``, ``"GQA4"``);
            informational only — the cost formulas are variant-independent.
    """

    hidden_size: int
    num_layers: int
    num_heads: int
    name: str = ""
    params_b: float | None = None
    attention: str = ""

    def __post_init__(self) -> None:
        for attr in ("hidden_size", "num_layers", "num_heads"):
            value = getattr(self, attr)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValidationError(f"{attr} must be a positive integer, got {value!r}")
        if self.hidden_size % self.num_heads != 0:
            warnings.warn(
                f"hidden_size {self.hidden_size} is not divisible by num_heads "
                f"{self.num_heads}; head partitioning is non-standard",
                stacklevel=2,
            )

    def to_json_dict(self) -> dict:
        doc: dict = {
            "hidden_size": self.hidden_size,
            "num_layers": self.num_layers,
            "num_heads": self.num_heads,
        }
        if self.name:
            doc["name"] = self.name
        if self.params_b is not None:
            doc["params_b"] = self.params_b
        if self.attention:
            doc["attention"] = self.attention
        return doc


@dataclass(frozen=True)
class SequenceShape:
    """Input/output token counts of one inference request."""

    n_in: int
    n_out: int

    def __post_init__(self) -> None:
        for attr in ("n_in", "n_out"):
            value = getattr(self, attr)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ValidationError(f"{attr} must be a non-negative integer, got {value!r}")


def _arch_from_dict(doc: dict) -> ModelArch:
    if not isinstance(doc, dict):
        raise ValidationError(f"architecture document must be a JSON object, got {type(doc).__name__}")
    missing = {"hidden_size", "num_layers", "num_heads"} - doc.keys()
    if missing:
        raise ValidationError(f"architecture document missing keys: {sorted(missing)}")
    unknown = doc.keys() - _ARCH_KEYS
    if unknown:
        raise ValidationError(f"architecture document has unknown keys: {sorted(unknown)}")
    return ModelArch(
        hidden_size=doc["hidden_size"],
        num_layers=doc["num_layers"],
        num_heads=doc["num_heads"],
        name=doc.get("name", ""),
        params_b=doc.get("params_b"),
        attention=doc.get("attention", ""),
    )


def load_arch(path: str | Path) -> ModelArch:
    """Load a single architecture from a JSON file."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read architecture file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON in architecture file {path}: {exc}") from exc
    return _arch_from_dict(doc)


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() else "-" for c in name.lower()).strip("-")


_REGISTRY: list[ModelArch] | None = None


def bundled_architectures() -> list[ModelArch]:
    """Return the thirteen bundled reference architectures, in registry order."""
    global _REGISTRY
    if _REGISTRY is None:
        text = resources.files("llm_energy.data").joinpath("architectures.json").read_text("utf-8")
        _REGISTRY = [_arch_from_dict(doc) for doc in json.loads(text)]
    return list(_REGISTRY)


def get_architecture(name: str) -> ModelArch:
    """Look up a bundled architecture by name (case- and punctuation-insensitive)."""
    wanted = _slug(name)
    for arch in bundled_architectures():
        if _slug(arch.name) == wanted:
            return arch
    known = ", ".join(a.name for a in bundled_architectures())
    raise ValidationError(f"unknown architecture {name!r}; bundled: {known}")

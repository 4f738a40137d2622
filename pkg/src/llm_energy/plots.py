"""Figure rendering for the CLI report paths.

All figures are written as PNG files next to the delimited outputs they
illustrate; nothing here opens a window (the Agg backend is forced) and
nothing here is required to produce the CSV/JSON data itself.  Writes are
atomic (temp file + rename) like every other output.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .arch import SequenceShape  # noqa: E402
from .fitting import FamilyComparison  # noqa: E402
from .models import (  # noqa: E402
    ModelFamily,
    ThetaVector,
    predict_e_tok,
    sweet_spot_closed_form,
)

__all__ = ["save_heatmap", "save_efficiency_curves", "save_mape_bars"]

_DPI = 150


def _atomic_savefig(fig, path: str | Path) -> None:
    target = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.", suffix=".png")
    os.close(fd)
    try:
        fig.savefig(
            tmp_name,
            format="png",
            dpi=_DPI,
            bbox_inches="tight",
            metadata={"Software": "llm-energy"},
        )
        os.replace(tmp_name, target)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise
    finally:
        plt.close(fig)


def save_heatmap(
    path: str | Path,
    n_in_axis: Sequence[int],
    n_out_axis: Sequence[int],
    values: Mapping[tuple[int, int], float],
    *,
    title: str = "",
    cbar_label: str = "",
) -> None:
    """Render a (n_in x n_out) cell matrix as a heatmap PNG.

    Rows are input lengths (top to bottom), columns output lengths; cells
    absent from ``values`` are blank.
    """
    matrix = np.full((len(n_in_axis), len(n_out_axis)), np.nan)
    for row, n_in in enumerate(n_in_axis):
        for col, n_out in enumerate(n_out_axis):
            if (n_in, n_out) in values:
                matrix[row, col] = values[(n_in, n_out)]
    fig, ax = plt.subplots(figsize=(7.0, 5.2))
    image = ax.imshow(matrix, aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(n_out_axis)), [str(v) for v in n_out_axis], rotation=45)
    ax.set_yticks(range(len(n_in_axis)), [str(v) for v in n_in_axis])
    ax.set_xlabel("output tokens")
    ax.set_ylabel("input tokens")
    if title:
        ax.set_title(title)
    fig.colorbar(image, ax=ax, label=cbar_label)
    _atomic_savefig(fig, path)


def save_efficiency_curves(
    path: str | Path,
    theta: ThetaVector,
    n_in_values: Sequence[int],
    n_out_max: int,
    *,
    title: str = "",
) -> None:
    """Render efficiency (tokens/J) vs output length, one curve per input length.

    For the SweetSpot families the closed-form optimum of each curve is
    marked with a dot and a dashed drop line.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    n_out = np.arange(1, n_out_max + 1)
    for n_in in n_in_values:
        e_tok = np.array(
            [predict_e_tok(theta, SequenceShape(n_in, int(o))) for o in n_out]
        )
        with np.errstate(divide="ignore"):
            e_eff = np.where(e_tok > 0, 1.0 / e_tok, np.nan)
        (line,) = ax.plot(n_out, e_eff, label=f"n_in = {n_in}")
        if theta.family in (ModelFamily.SWEETSPOT_FULL, ModelFamily.SWEETSPOT_FLOPS):
            star = sweet_spot_closed_form(theta, int(n_in))
            rounded = star.n_out_star_rounded
            if rounded <= n_out_max:
                peak = predict_e_tok(theta, SequenceShape(n_in, rounded))
                if peak > 0:
                    ax.plot([rounded], [1.0 / peak], "o", color=line.get_color())
                    ax.axvline(rounded, linestyle="--", linewidth=0.8, color=line.get_color(), alpha=0.4)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("output tokens")
    ax.set_ylabel("efficiency (tokens/J)")
    if title:
        ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    _atomic_savefig(fig, path)


def save_mape_bars(path: str | Path, comparison: FamilyComparison, *, title: str = "") -> None:
    """Render the per-family MAPE comparison as a bar chart."""
    families = [f for f in ModelFamily if f in comparison.results]
    mapes = [comparison.results[f].mape_percent for f in families]
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    bars = ax.bar(range(len(families)), mapes, color="tab:blue")
    if comparison.best_family in families:
        bars[families.index(comparison.best_family)].set_color("tab:green")
    ax.set_xticks(range(len(families)), [f.value for f in families], rotation=30, ha="right")
    ax.set_ylabel("MAPE (%)")
    positive = [m for m in mapes if m > 0]
    if positive and max(mapes) / min(positive) > 50:
        ax.set_yscale("log")
    if title:
        ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    _atomic_savefig(fig, path)

"""Command-line interface binding the library into reproducible pipelines.

One binary, seven subcommands::

    llm-energy flops      --arch A --n-in N --n-out M       cost breakdown
    llm-energy integrate  --trace F [--t-start S --t-end S] trace -> Joules
    llm-energy fit        --grid F [--family NAME|all]      least-squares fit
    llm-energy sweetspot  --n-in N[,N...] [--theta SRC]     optimal output length
    llm-energy sweep      --theta SRC --n-in-axis ... --out predicted heatmap CSV
    llm-energy synth      --spec F --out F [--seed N]       synthetic grid + truth
    llm-energy aggregate  --grid F [--grid F ...] --out F   normalized mean heatmap

Conventions:

* flags are long-form only; ``--arch``/``--theta`` accept a file path or a
  bundled registry name (path wins when both exist);
* every file write is atomic (temp file + rename) and reruns with the same
  inputs are byte-identical — JSON floats use shortest round-trip
  formatting, text tables use 6 significant digits;
* randomness (synth) always comes from an explicit seed, either in the
  spec file or via ``--seed``; there is no time-based default;
* exit codes: 0 success, 1 validation error (bad inputs, parse failures),
  2 computation error (degenerate data: singular fits, undefined optima);
* report commands take ``--plot`` to render a PNG figure next to the
  delimited output (requires ``--out``); data files are identical with or
  without it;
* no environment variables are consulted.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from ._util import atomic_write_text
from .arch import ModelArch, SequenceShape, get_architecture, load_arch
from .costs import cost_breakdown
from .errors import ComputationError, ValidationError
from .fitting import FitResult, compare_families, fit
from .models import (
    ModelFamily,
    ThetaVector,
    bundled_theta,
    get_theta,
    load_theta,
    predict_e_tok,
    sweet_spot_brute_force,
    sweet_spot_closed_form,
)
from .synth import generate, load_synth_spec, write_synth_result
from .trace import (
    aggregate_normalized,
    integrate_power,
    read_grid_csv,
    read_power_trace_csv,
    write_heatmap_csv,
)

__all__ = ["CommandOutcome", "main"]


@dataclass
class CommandOutcome:
    """Result of one CLI command.

    Attributes:
        exit_code: 0 success, 1 validation error, 2 computation error.
        files: Paths written; on exit code 0 every declared output exists.
        summary: One human-readable line describing what happened.
    """

    exit_code: int
    summary: str
    files: list[Path] = field(default_factory=list)


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors are validation errors (exit 1)."""

    def error(self, message: str):  # noqa: D102 - argparse override
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ValidationError(f"{flag} must be a comma-separated integer list: {exc}") from exc
    if not values:
        raise ValidationError(f"{flag} must name at least one integer")
    return values


def _resolve_arch(source: str) -> ModelArch:
    if Path(source).exists():
        return load_arch(source)
    return get_architecture(source)


def _resolve_theta(source: str) -> tuple[str, ThetaVector]:
    if Path(source).exists():
        theta = load_theta(source)
        return (theta.fitted_on or Path(source).stem, theta)
    entry = get_theta(source)
    return (entry.model, entry.theta)


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _aligned_table(header: tuple[str, ...], rows: list[tuple[str, ...]]) -> str:
    widths = [
        max(len(header[col]), *(len(row[col]) for row in rows)) if rows else len(header[col])
        for col in range(len(header))
    ]
    lines = [
        "  ".join(header[col].ljust(widths[col]) for col in range(len(header))).rstrip(),
        "  ".join("-" * widths[col] for col in range(len(header))).rstrip(),
    ]
    for row in rows:
        lines.append("  ".join(row[col].ljust(widths[col]) for col in range(len(header))).rstrip())
    return "\n".join(lines) + "\n"


def _emit(out: Path | None, text: str) -> list[Path]:
    """Write text to a file (atomically) or to stdout."""
    if out is None:
        sys.stdout.write(text)
        return []
    atomic_write_text(out, text)
    return [out]


# ---------------------------------------------------------------------------
# Subcommands


def cmd_flops(args: argparse.Namespace) -> CommandOutcome:
    arch = _resolve_arch(args.arch)
    shape = SequenceShape(args.n_in, args.n_out)
    counts = cost_breakdown(arch, shape)
    label = arch.name or "custom"
    if args.format == "json":
        doc = {
            "arch": arch.to_json_dict(),
            "n_in": shape.n_in,
            "n_out": shape.n_out,
            "counts": counts,
        }
        files = _emit(args.out, _json_text(doc))
    elif args.format == "csv":
        lines = ["metric,count"] + [f"{metric},{value}" for metric, value in counts.items()]
        files = _emit(args.out, "\n".join(lines) + "\n")
    else:
        rows = [(metric, str(value), f"{float(value):.4e}") for metric, value in counts.items()]
        table = f"arch: {label}  d={arch.hidden_size} L={arch.num_layers} n_q={arch.num_heads}  n_in={shape.n_in} n_out={shape.n_out}\n"
        table += _aligned_table(("metric", "exact", "approx"), rows)
        files = _emit(args.out, table)
    return CommandOutcome(
        exit_code=0,
        summary=f"counted {label} at n_in={shape.n_in} n_out={shape.n_out}",
        files=files,
    )


def cmd_integrate(args: argparse.Namespace) -> CommandOutcome:
    trace = read_power_trace_csv(args.trace)
    if (args.t_start is None) != (args.t_end is None):
        raise ValidationError("--t-start and --t-end must be given together")
    window = None if args.t_start is None else (args.t_start, args.t_end)
    energy = integrate_power(trace, window=window)
    if args.format == "json":
        text = _json_text({"energy_j": energy, "samples": len(trace.samples), "window": window})
    elif args.format == "csv":
        text = f"energy_j\n{energy!r}\n"
    else:
        text = f"energy_j = {energy:.6g}\n"
    sys.stdout.write(text)
    return CommandOutcome(exit_code=0, summary=f"integrated {energy:.6g} J from {args.trace}")


def _warn_if_flat_curvature(result: FitResult) -> None:
    names = result.theta.family.feature_names
    if "n_out" in names:
        theta4 = result.theta.coefficients[names.index("n_out")]
        if theta4 <= 0:
            print(
                f"warning: fitted n_out coefficient {theta4:.6g} <= 0 for "
                f"{result.theta.family.value}; the closed-form sweet spot is undefined",
                file=sys.stderr,
            )


def _fit_result_table(result: FitResult) -> str:
    head = (
        f"family {result.theta.family.value}  n_obs {result.n_obs}  "
        f"sse {result.sse:.6g}  mape_percent {result.mape_percent:.6g}  "
        f"exact_fit {str(result.exact_fit).lower()}  objective {result.objective}\n"
    )
    rows = []
    for i, name in enumerate(result.theta.family.feature_names):
        rows.append(
            (
                name,
                f"{result.theta.coefficients[i]:.6g}",
                f"{result.stderr[i]:.6g}",
                f"{result.t_stats[i]:.6g}",
                f"{result.p_values[i]:.6g}",
                result.significance[i],
            )
        )
    return head + _aligned_table(
        ("feature", "theta", "stderr", "t_stat", "p_value", "significance"), rows
    )


def cmd_fit(args: argparse.Namespace) -> CommandOutcome:
    grid = read_grid_csv(args.grid)
    files: list[Path] = []
    if args.plot and args.out is None:
        raise ValidationError("--plot requires --out (the figure lands next to it)")
    if args.family == "all":
        comparison = compare_families(grid, e_tot_space=args.e_tot_space)
        for result in comparison.results.values():
            _warn_if_flat_curvature(result)
        if args.format == "json":
            sys.stdout.write(_json_text(comparison.to_json_dict()))
        elif args.format == "csv":
            lines = ["family,sse,mape_percent"]
            for family in ModelFamily:
                if family in comparison.results:
                    r = comparison.results[family]
                    lines.append(f"{family.value},{r.sse!r},{r.mape_percent!r}")
                elif family in comparison.errors:
                    lines.append(f"{family.value},error,")
            sys.stdout.write("\n".join(lines) + "\n")
        else:
            sys.stdout.write(comparison.to_text())
        if args.out is not None:
            atomic_write_text(args.out, _json_text(comparison.to_json_dict()))
            files.append(args.out)
        if args.plot:
            from .plots import save_mape_bars

            png = args.out.with_suffix(".png")
            save_mape_bars(png, comparison, title=f"model comparison: {grid.model_name}")
            files.append(png)
        best = comparison.best_family.value if comparison.best_family else "none"
        summary = f"fitted 6 families on {len(grid)} cells; min MAPE: {best}"
    else:
        try:
            family = ModelFamily(args.family)
        except ValueError as exc:
            known = ", ".join(f.value for f in ModelFamily)
            raise ValidationError(f"unknown family {args.family!r}; use one of {known} or 'all'") from exc
        result = fit(family, grid, e_tot_space=args.e_tot_space)
        _warn_if_flat_curvature(result)
        if args.format == "json":
            sys.stdout.write(_json_text(result.to_json_dict()))
        elif args.format == "csv":
            lines = ["feature,theta,stderr,t_stat,p_value,significance"]
            for i, name in enumerate(family.feature_names):
                t = result.t_stats[i]
                lines.append(
                    f"{name},{result.theta.coefficients[i]!r},{result.stderr[i]!r},"
                    f"{t!r},{result.p_values[i]!r},{result.significance[i]}"
                )
            sys.stdout.write("\n".join(lines) + "\n")
        else:
            sys.stdout.write(_fit_result_table(result))
        if args.out is not None:
            atomic_write_text(args.out, _json_text(result.to_json_dict()))
            files.append(args.out)
        if args.plot:
            raise ValidationError("--plot is available for --family all (MAPE comparison chart)")
        summary = (
            f"fitted {family.value} on {len(grid)} cells; mape {result.mape_percent:.6g}%"
        )
    return CommandOutcome(exit_code=0, summary=summary, files=files)


def cmd_sweetspot(args: argparse.Namespace) -> CommandOutcome:
    n_in_values = _parse_int_list(args.n_in, "--n-in")
    grid_points = None if args.n_out_grid is None else _parse_int_list(args.n_out_grid, "--n-out-grid")
    if args.theta is not None and args.model is not None:
        raise ValidationError("give either --theta or --model, not both")
    if args.theta is not None:
        sources = [_resolve_theta(args.theta)]
    elif args.model is not None:
        entry = get_theta(args.model)
        sources = [(entry.model, entry.theta)]
    else:
        sources = [(entry.model, entry.theta) for entry in bundled_theta()]
    records = []
    for label, theta in sources:
        for n_in in n_in_values:
            prediction = sweet_spot_closed_form(theta, n_in, grid=grid_points)
            check = sweet_spot_brute_force(theta, n_in, args.n_out_max)
            records.append((label, prediction, check))
    if args.format == "json":
        doc = [
            {
                "label": label,
                "n_in": p.n_in,
                "n_out_star_continuous": p.n_out_star_continuous,
                "n_out_star_rounded": p.n_out_star_rounded,
                "snapped_to_grid": p.snapped_to_grid,
                "brute_force": check,
            }
            for label, p, check in records
        ]
        files = _emit(args.out, _json_text(doc))
    elif args.format == "csv":
        lines = ["label,n_in,n_out_star_continuous,n_out_star_rounded,snapped_to_grid,brute_force"]
        for label, p, check in records:
            snapped = "" if p.snapped_to_grid is None else str(p.snapped_to_grid)
            lines.append(
                f"{label},{p.n_in},{p.n_out_star_continuous!r},{p.n_out_star_rounded},{snapped},{check}"
            )
        files = _emit(args.out, "\n".join(lines) + "\n")
    else:
        rows = [
            (
                label,
                str(p.n_in),
                f"{p.n_out_star_continuous:.6g}",
                str(p.n_out_star_rounded),
                "-" if p.snapped_to_grid is None else str(p.snapped_to_grid),
                str(check),
            )
            for label, p, check in records
        ]
        files = _emit(
            args.out,
            _aligned_table(
                ("label", "n_in", "continuous", "rounded", "snapped", "brute_force"), rows
            ),
        )
    if args.plot:
        if args.out is None:
            raise ValidationError("--plot requires --out (the figure lands next to it)")
        if len(sources) != 1:
            raise ValidationError("--plot needs a single coefficient set (--theta or --model)")
        from .plots import save_efficiency_curves

        label, theta = sources[0]
        png = args.out.with_suffix(".png")
        save_efficiency_curves(png, theta, n_in_values, args.n_out_max, title=label)
        files.append(png)
    return CommandOutcome(
        exit_code=0,
        summary=f"predicted {len(records)} sweet spot(s) for {len(sources)} coefficient set(s)",
        files=files,
    )


def cmd_sweep(args: argparse.Namespace) -> CommandOutcome:
    label, theta = _resolve_theta(args.theta)
    n_in_axis = _parse_int_list(args.n_in_axis, "--n-in-axis")
    n_out_axis = _parse_int_list(args.n_out_axis, "--n-out-axis")
    values: dict[tuple[int, int], float] = {}
    for n_in in n_in_axis:
        for n_out in n_out_axis:
            e_tok = predict_e_tok(theta, SequenceShape(n_in, n_out))
            if args.quantity == "e_eff":
                if e_tok <= 0:
                    raise ComputationError(
                        f"predicted E_tok {e_tok!r} at ({n_in}, {n_out}) is non-positive; "
                        "efficiency sweep undefined"
                    )
                values[(n_in, n_out)] = 1.0 / e_tok
            else:
                values[(n_in, n_out)] = e_tok
    files: list[Path] = []
    if args.format == "json":
        doc = {
            "label": label,
            "quantity": args.quantity,
            "n_in_axis": n_in_axis,
            "n_out_axis": n_out_axis,
            "cells": [
                {"n_in": k[0], "n_out": k[1], "value": v} for k, v in sorted(values.items())
            ],
        }
        atomic_write_text(args.out, _json_text(doc))
    else:
        write_heatmap_csv(args.out, n_in_axis, n_out_axis, values)
    files.append(args.out)
    if args.plot:
        from .plots import save_heatmap

        png = args.out.with_suffix(".png")
        save_heatmap(
            png,
            n_in_axis,
            n_out_axis,
            values,
            title=f"predicted {args.quantity}: {label}",
            cbar_label="tokens/J" if args.quantity == "e_eff" else "J/token",
        )
        files.append(png)
    return CommandOutcome(
        exit_code=0,
        summary=f"swept {len(values)} cells of predicted {args.quantity} for {label}",
        files=files,
    )


def cmd_synth(args: argparse.Namespace) -> CommandOutcome:
    spec = load_synth_spec(args.spec, seed_override=args.seed)
    result = generate(spec)
    files = write_synth_result(result, args.out)
    return CommandOutcome(
        exit_code=0,
        summary=(
            f"generated {len(result.grid)} cells (sigma {spec.sigma:.6g}, seed {spec.seed})"
        ),
        files=list(files),
    )


def cmd_aggregate(args: argparse.Namespace) -> CommandOutcome:
    grids = [read_grid_csv(path) for path in args.grid]
    aggregated = aggregate_normalized(grids)
    files: list[Path] = []
    if args.format == "json":
        doc = {
            "models": [g.model_name for g in grids],
            "n_in_axis": list(aggregated.n_in_axis),
            "n_out_axis": list(aggregated.n_out_axis),
            "cells": [
                {"n_in": k[0], "n_out": k[1], "value": v} for k, v in aggregated.values
            ],
        }
        atomic_write_text(args.out, _json_text(doc))
    else:
        write_heatmap_csv(
            args.out, aggregated.n_in_axis, aggregated.n_out_axis, aggregated.as_dict()
        )
    files.append(args.out)
    if args.plot:
        from .plots import save_heatmap

        png = args.out.with_suffix(".png")
        save_heatmap(
            png,
            aggregated.n_in_axis,
            aggregated.n_out_axis,
            aggregated.as_dict(),
            title=f"normalized mean efficiency ({len(grids)} grids)",
            cbar_label="normalized efficiency",
        )
        files.append(png)
    return CommandOutcome(
        exit_code=0,
        summary=f"aggregated {len(grids)} grid(s) into {len(aggregated.values)} cells",
        files=files,
    )


# ---------------------------------------------------------------------------
# Parser assembly


def _add_format_flag(parser: argparse.ArgumentParser, choices=("table", "json", "csv"), default="table") -> None:
    parser.add_argument(
        "--format", choices=list(choices), default=default, help=f"output format (default {default})"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="llm-energy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("flops", help="FLOP/memory-operation breakdown for one request")
    p.add_argument("--arch", required=True, help="architecture JSON file or bundled name")
    p.add_argument("--n-in", type=int, required=True, help="input tokens")
    p.add_argument("--n-out", type=int, required=True, help="output tokens")
    p.add_argument("--out", type=Path, help="write the report here instead of stdout")
    _add_format_flag(p)
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("integrate", help="trapezoidal energy integral of a power trace")
    p.add_argument("--trace", required=True, help="power trace CSV (timestamp_s,power_w)")
    p.add_argument("--t-start", type=float, help="window start (seconds)")
    p.add_argument("--t-end", type=float, help="window end (seconds)")
    _add_format_flag(p)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("fit", help="least-squares fit of one family (or all) to a grid")
    p.add_argument("--grid", required=True, help="grid CSV (n_in,n_out,n_req,e_tot_j)")
    p.add_argument("--family", default="all", help="family identifier or 'all' (default)")
    p.add_argument("--e-tot-space", action="store_true", help="fit residuals on total energy instead of per-token energy")
    p.add_argument("--out", type=Path, help="write the result JSON here")
    p.add_argument("--plot", action="store_true", help="with --family all: render a MAPE bar chart next to --out")
    _add_format_flag(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sweetspot", help="peak-efficiency output length predictions")
    p.add_argument("--n-in", required=True, help="comma-separated input lengths")
    p.add_argument("--theta", help="coefficients: JSON file or bundled model name")
    p.add_argument("--model", help="bundled model name (same as --theta with a name)")
    p.add_argument("--n-out-grid", help="comma-separated token grid to snap onto")
    p.add_argument("--n-out-max", type=int, default=8192, help="brute-force scan bound (default 8192)")
    p.add_argument("--out", type=Path, help="write the table here instead of stdout")
    p.add_argument("--plot", action="store_true", help="render efficiency curves next to --out")
    _add_format_flag(p)
    p.set_defaults(func=cmd_sweetspot)

    p = sub.add_parser("sweep", help="predicted energy/efficiency heatmap over a grid")
    p.add_argument("--theta", required=True, help="coefficients: JSON file or bundled model name")
    p.add_argument("--n-in-axis", required=True, help="comma-separated input lengths")
    p.add_argument("--n-out-axis", required=True, help="comma-separated output lengths")
    p.add_argument("--quantity", choices=["e_tok", "e_eff"], default="e_eff", help="cell quantity (default e_eff)")
    p.add_argument("--out", type=Path, required=True, help="heatmap file to write")
    p.add_argument("--plot", action="store_true", help="render a heatmap PNG next to --out")
    _add_format_flag(p, choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="generate a synthetic grid with ground truth")
    p.add_argument("--spec", required=True, help="synth spec JSON file")
    p.add_argument("--seed", type=int, help="seed override (required when the spec has none)")
    p.add_argument("--out", type=Path, required=True, help="grid CSV to write (truth JSON lands beside it)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("aggregate", help="min-max-normalized mean efficiency across grids")
    p.add_argument("--grid", action="append", required=True, help="grid CSV (repeatable)")
    p.add_argument("--out", type=Path, required=True, help="heatmap file to write")
    p.add_argument("--plot", action="store_true", help="render a heatmap PNG next to --out")
    _add_format_flag(p, choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_aggregate)

    return parser


def main(argv: list[str] | None = None) -> int:
    """Entry point; returns the exit code (0 ok, 1 validation, 2 computation)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        outcome = args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ComputationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 0
    except Exception as exc:  # pragma: no cover - crash guard
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    for path in outcome.files:
        print(f"wrote {path}", file=sys.stderr)
    print(f"ok: {outcome.summary}", file=sys.stderr)
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())

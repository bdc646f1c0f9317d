#!/usr/bin/env python3
"""Command-line surface of the Sard counterexample lab.

Subcommands: schedule, eval, pushforward, probe, figure-data.
Exit codes: 0 pass, 1 certified failure, 2 usage error, 3 resource cap,
4 inconclusive probe.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from dotenv import load_dotenv
from pydantic import ValidationError

import analysis_suite
import export_utils
import measure_lab
import schedule as schedule_mod
from errors import DepthCapExceeded, InconclusiveProbe, LabError
from evaluator import FunctionHandle
from geometry import classify_points, enumerate_cells
from models import CellAddress, RunConfig, fraction_text

logger = logging.getLogger(__name__)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_CAP, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4
PROBE_KINDS = ("nondiff", "critical", "levelset", "holder", "interpolation")
PROBE_DIMENSION = {"nondiff": 1, "critical": 2, "levelset": 2}
FIGURES = ("construction-1d", "construction-2d", "critical-sets")
PUSHFORWARD_MODES = ("partial", "certified", "critical", "cover", "split")
NONDIFF_MAX_LEVEL = 15

# flag attribute -> RunConfig field
FLAG_FIELDS = {
    "dim": "dimension",
    "kind": "schedule",
    "cap": "eval_cap",
    "tol": "tol",
    "seed": "seed",
    "output_dir": "output_dir",
    "format": "output_format",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int, choices=(1, 2), default=None, help="1 (interval) or 2 (square)")
    common.add_argument("--kind", choices=(schedule_mod.INVERSE_SQUARE, schedule_mod.HARMONIC), default=None)
    common.add_argument("--cap", type=int, default=None, help="Evaluation depth cap")
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--output-dir", dest="output_dir", default=None)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--config", type=Path, default=None, help="JSON file with RunConfig fields")
    common.add_argument("--verbose", "-v", action="store_true")

    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule", parents=[common], help="Table of alpha_n, a_n, s_n, r_n")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--limit", action="store_true", help="Also enclose r = lim r_n")

    p = sub.add_parser("eval", parents=[common], help="Certified values of f")
    p.add_argument("--point", action="append", default=[], help="x or x,y; fractions such as 3/4 allowed")
    p.add_argument("--grid", type=int, default=None, help="Cell-centred grid with this many points per axis")

    p = sub.add_parser("pushforward", parents=[common], help="Pushforward measures and KS summary")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--mode", choices=PUSHFORWARD_MODES, default="partial")
    p.add_argument("--fine-level", dest="fine_level", type=int, default=None)

    p = sub.add_parser("probe", parents=[common], help="Certified probes and regularity checks")
    p.add_argument("probe_kind", choices=PROBE_KINDS)
    p.add_argument("--address", default="")
    p.add_argument("--n", type=int, default=None, help="Probed level (nondiff) or partial sum (interpolation)")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--h", type=float, default=None, help="Finite-difference step")
    p.add_argument("--M", dest="level", type=int, default=None, help="Separation level")
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--grid-res", dest="grid_res", type=int, default=analysis_suite.DEFAULT_GRID_RES)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--pairs", type=int, default=10_000)
    p.add_argument("--strategy", choices=analysis_suite.STRATEGIES, default="cross-gap")

    p = sub.add_parser("figure-data", parents=[common], help="CSV data behind the construction figures")
    p.add_argument("figure", choices=FIGURES)
    p.add_argument("--res", type=int, default=256)
    return parser


def load_config(args: argparse.Namespace, dimension: Optional[int] = None) -> RunConfig:
    """Defaults < environment < --config JSON < flags."""
    load_dotenv()
    values: Dict[str, object] = {
        "schedule": os.getenv("SARD_LAB_SCHEDULE", schedule_mod.INVERSE_SQUARE),
        "seed": int(os.getenv("SARD_LAB_SEED", "0")),
        "output_dir": os.getenv("SARD_LAB_OUTPUT_DIR", export_utils.DEFAULT_OUTPUT_DIR),
    }
    if dimension is not None:
        values["dimension"] = dimension
    if args.config is not None:
        values.update(json.loads(args.config.read_text(encoding="utf-8")))
    for flag, field in FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            values[field] = value
    values["verbose"] = bool(values.get("verbose")) or args.verbose
    return RunConfig(**values)


def _handle(config: RunConfig, dimension: Optional[int] = None) -> FunctionHandle:
    return FunctionHandle(dimension or config.dimension, config.schedule, depth_cap=config.eval_cap)


def _parse_point(text: str) -> tuple:
    return tuple(Fraction(part.strip()) for part in text.split(","))


def _out(config: RunConfig) -> Path:
    return export_utils.output_dir(config.output_dir)


# -- commands -----------------------------------------------------------------

def cmd_schedule(args: argparse.Namespace, config: RunConfig) -> bool:
    if args.n < 1:
        raise ValueError("--n must be >= 1")
    table = export_utils.schedule_frame(schedule_mod.schedule_table(config.schedule, args.n))
    print(table.to_string(index=False))
    export_utils.write_table(table, _out(config) / f"schedule_{config.schedule}", config.output_format)
    if args.limit:
        enclosure = schedule_mod.r_enclosure(config.schedule, config.tol)
        print(f"r in [{fraction_text(enclosure.lo)}, {fraction_text(enclosure.hi)}]")
        print(f"  decimal [{float(enclosure.lo):.12f}, {float(enclosure.hi):.12f}] width {float(enclosure.width):.3e}")
    return True


def cmd_eval(args: argparse.Namespace, config: RunConfig) -> bool:
    handle = _handle(config)
    axes = ["x", "y"][: handle.dimension]
    if args.grid:
        ticks = (np.arange(args.grid) + 0.5) / args.grid
        mesh = np.stack(np.meshgrid(*([ticks] * handle.dimension), indexing="ij"), axis=-1).reshape(-1, handle.dimension)
        values, radii, n_used = handle.f_eval_array(mesh, config.tol)
        table = pd.DataFrame({axis: mesh[:, i] for i, axis in enumerate(axes)})
        table["value"], table["radius"], table["n_used"] = values, radii, n_used
    else:
        if not args.point:
            raise ValueError("give --point at least once or --grid")
        rows = []
        for text in args.point:
            point = _parse_point(text)
            certified = handle.f_eval(point, config.tol)
            row = {axis: fraction_text(c) for axis, c in zip(axes, point)}
            row.update(
                value=certified.value,
                radius=certified.radius,
                n_used=certified.n_used,
                exact="" if certified.exact is None else fraction_text(certified.exact),
            )
            rows.append(row)
        table = pd.DataFrame(rows)
        print(table.to_string(index=False))
    path = export_utils.write_table(table, _out(config) / f"eval_{handle.dimension}d", config.output_format)
    print(f"Wrote {len(table)} rows to {path}")
    return True


def cmd_pushforward(args: argparse.Namespace, config: RunConfig) -> bool:
    dim, depth, out = config.dimension, args.depth, _out(config)
    if args.mode == "certified":
        sandwich = measure_lab.pushforward_certified(dim, depth, config.schedule)
        ks = measure_lab.ks_to_uniform(sandwich)
        print(f"strata {sandwich.strata}, sandwich width {fraction_text(sandwich.width())}, KS in [0, {fraction_text(ks.hi)}]")
        if sandwich.strata <= 1 << 16:
            points = sandwich.breakpoints()
            table = pd.DataFrame(
                {"t": points, "lower": [sandwich.lower_cdf(t) for t in points], "upper": [sandwich.upper_cdf(t) for t in points]}
            )
            export_utils.write_table(
                export_utils.with_rational_columns(table, ["t", "lower", "upper"]),
                out / f"pushforward_certified_{dim}d_{depth}",
                config.output_format,
            )
        return sandwich.width() == Fraction(1, sandwich.base ** depth)
    if args.mode == "critical":
        report = measure_lab.critical_pushforward_report(_handle(config), depth)
        export_utils.write_report(report, out / f"critical_pushforward_{dim}d_{depth}")
        print(f"uniform part: level mass {fraction_text(report.uniform_level_mass)}, "
              f"core mass in [{float(report.uniform_core_mass.lo):.9f}, {float(report.uniform_core_mass.hi):.9f}]")
        print(f"Z part: {len(report.z_measure)} atoms, mass {float(report.z_measure.total):.9f}")
        return report.passed
    if args.mode == "cover":
        report = measure_lab.image_cover_report(dim, depth, config.schedule)
        export_utils.write_report(report, out / f"image_cover_{dim}d_{depth}")
        print(f"{report.intervals} value intervals cover measure {fraction_text(report.image_measure)}")
        return report.passed
    if args.mode == "split":
        fine = args.fine_level or depth + 2
        report = measure_lab.equal_split_check(dim, depth, fine, config.schedule)
        export_utils.write_report(report, out / f"equal_split_{dim}d_{depth}_{fine}")
        print(f"{len(report.masses)} cells, shares equal: {report.passed}")
        return report.passed

    report = measure_lab.pushforward_partial(dim, depth, config.schedule)
    table = export_utils.measure_frame(report.measure)
    export_utils.write_table(table, out / f"pushforward_{dim}d_{depth}", config.output_format)
    export_utils.write_report(report, out / f"pushforward_{dim}d_{depth}")
    print(table.head(16).to_string(index=False))
    print(f"atoms {len(report.measure)}; level total {fraction_text(report.level_total)}; "
          f"core total in [{float(report.core_total.lo):.9f}, {float(report.core_total.hi):.9f}]")
    print(f"KS {fraction_text(report.ks)} (expected {fraction_text(report.expected_ks)})")
    return report.passed


def _nondiff(args, config) -> bool:
    handle = _handle(config, 1)
    address = CellAddress.parse(1, args.address)
    levels = [args.n] if args.n else analysis_suite.digit_one_levels(address, NONDIFF_MAX_LEVEL)
    if not levels:
        raise ValueError(f"address {args.address!r} has no digit 1 to probe")
    results = analysis_suite.nondiff_suite(handle, [(address, n) for n in levels])
    export_utils.write_reports(results, _out(config) / f"nondiff_{address.text() or 'root'}")
    for result in results:
        print(f"n={result.level:2d} {'PASS' if result.passed else 'FAIL'} "
              f"left >= {float(result.left_quotient.lo):.4f} right <= {float(result.right_quotient.hi):.4f}")
    return all(r.passed for r in results)


def _critical(args, config) -> bool:
    handle = _handle(config, 2)
    address = CellAddress.parse(2, args.address)
    depth = args.depth if args.depth is not None else len(address)
    report = analysis_suite.criticality_probe(handle, address, depth, fd_step=args.h)
    export_utils.write_report(report, _out(config) / f"critical_{address.text() or 'root'}_{depth}")
    print(f"analytic gradient exact zero: {report.analytic_exact_zero}")
    print(f"fd norm {report.fd_norm:.3e} <= bound {report.bound:.3e}: {report.passed}")
    return report.passed


def _levelset(args, config) -> bool:
    handle = _handle(config, 2)
    address = CellAddress.parse(2, args.address)
    level = args.level if args.level is not None else 1
    report, raster = analysis_suite.level_component_scan(handle, address, level, args.eps, args.grid_res)
    stem = _out(config) / f"levelset_{address.text()}_M{level}"
    export_utils.write_report(report, stem)
    export_utils.write_table(raster, stem.with_name(stem.name + "_raster"), "csv")
    print(f"frame separation {report.frame_min_separation:.3e} (certified {float(report.certified_separation):.3e})")
    print(f"component diameter {report.component_diameter:.4f} <= child {report.child_diameter:.4f} "
          f"<= cell {report.cell_diameter:.4f}: {report.passed}")
    return report.passed


def _holder(args, config) -> bool:
    handle = _handle(config)
    report = analysis_suite.holder_estimate(handle, args.alpha, args.pairs, args.strategy, config.seed, args.depth)
    export_utils.write_report(report, _out(config) / f"holder_{handle.dimension}d_{args.alpha}")
    print(f"alpha {args.alpha}: sampled {report.lower:.6f} <= series {report.upper:.6f} ({report.series_terms} terms)")
    return report.passed


def _interpolation(args, config) -> bool:
    handle = _handle(config)
    address = CellAddress.parse(handle.dimension, args.address)
    n = args.n or 4
    report = analysis_suite.interpolation_check(handle, n, args.alpha, address)
    export_utils.write_report(report, _out(config) / f"interpolation_{handle.dimension}d_{n}")
    print(f"seminorm {report.seminorm:.6f} <= {report.rhs:.6f} (margin {report.margin:.3e})")
    return report.passed


PROBES: Dict[str, Callable[[argparse.Namespace, RunConfig], bool]] = {
    "nondiff": _nondiff,
    "critical": _critical,
    "levelset": _levelset,
    "holder": _holder,
    "interpolation": _interpolation,
}


def cmd_probe(args: argparse.Namespace, config: RunConfig) -> bool:
    return PROBES[args.probe_kind](args, config)


def _exact_or_blank(value) -> str:
    return fraction_text(Fraction(value)) if isinstance(value, (int, Fraction)) else ""


def figure_construction_1d(config: RunConfig, res: int) -> Dict[str, pd.DataFrame]:
    handle = _handle(config, 1)
    xs = [Fraction(k, res) for k in range(res + 1)]
    rows = []
    for x in xs:
        row = {"x": float(x)}
        for n in (1, 2):
            value = handle.f_partial(n, x)
            row[f"f{n}"] = float(value)
            row[f"f{n}_exact"] = _exact_or_blank(value)
        rows.append(row)
    measures = []
    for n in (1, 2):
        report = measure_lab.pushforward_partial(1, n, config.schedule)
        table = export_utils.measure_frame(report.measure)
        table.insert(0, "n", n)
        measures.append(table)
    return {"construction_1d_graph": pd.DataFrame(rows), "construction_1d_pushforward": pd.concat(measures)}


def figure_construction_2d(config: RunConfig, res: int) -> Dict[str, pd.DataFrame]:
    handle = _handle(config, 2)
    ticks = (np.arange(res) + 0.5) / res
    mesh = np.stack(np.meshgrid(ticks, ticks, indexing="ij"), axis=-1).reshape(-1, 2)
    raster = pd.DataFrame({"x": mesh[:, 0], "y": mesh[:, 1]})
    for n in (1, 2):
        raster[f"f{n}"] = handle.f_partial_array(mesh, n)
    plateaus = []
    for n in (1, 2):
        side = handle.sequences.a(n + 1)
        for digits, corner in enumerate_cells(2, n + 1, handle.schedule):
            centre = tuple(c + side / 2 for c in corner)
            value = handle.f_partial(n, centre)
            plateaus.append(
                {"n": n, "address": "".join(map(str, digits)), "x": float(centre[0]), "y": float(centre[1]),
                 "value": _exact_or_blank(value), "value_decimal": float(value)}
            )
    return {"construction_2d_raster": raster, "construction_2d_plateaus": pd.DataFrame(plateaus)}


def critical_labels(points: np.ndarray, n: int, schedule=None) -> List[str]:
    """K{n+1} for the level-(n+1) family, Z{m} for the digit-0 frames, blank elsewhere."""
    reached, exit_digit = classify_points(points, n, schedule)
    labels = []
    for level, digit in zip(reached, exit_digit):
        if level > n:
            labels.append(f"K{n + 1}")
        elif level >= 1 and digit == 0:
            labels.append(f"Z{level}")
        else:
            labels.append("")
    return labels


def figure_critical_sets(config: RunConfig, res: int) -> Dict[str, pd.DataFrame]:
    ticks = (np.arange(res) + 0.5) / res
    mesh = np.stack(np.meshgrid(ticks, ticks, indexing="ij"), axis=-1).reshape(-1, 2)
    raster = pd.DataFrame({"x": mesh[:, 0], "y": mesh[:, 1]})
    for n in (1, 2):
        raster[f"region_f{n}"] = critical_labels(mesh, n, config.schedule)
    return {"critical_sets_raster": raster}


FIGURE_BUILDERS = {
    "construction-1d": figure_construction_1d,
    "construction-2d": figure_construction_2d,
    "critical-sets": figure_critical_sets,
}


def cmd_figure_data(args: argparse.Namespace, config: RunConfig) -> bool:
    tables = FIGURE_BUILDERS[args.figure](config, args.res)
    out = _out(config)
    for name, table in tables.items():
        path = export_utils.write_table(table, out / name, "csv")
        print(f"Wrote {len(table)} rows to {path}")
    return True


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunConfig], bool]] = {
    "schedule": cmd_schedule,
    "eval": cmd_eval,
    "pushforward": cmd_pushforward,
    "probe": cmd_probe,
    "figure-data": cmd_figure_data,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS

    dimension = PROBE_DIMENSION.get(getattr(args, "probe_kind", None)) if args.dim is None else None
    try:
        config = load_config(args, dimension)
    except (ValidationError, ValueError, OSError) as exc:
        print(f"Invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if config.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        ok = COMMANDS[args.command](args, config)
    except DepthCapExceeded as exc:
        print(f"Resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except InconclusiveProbe as exc:
        print(f"Inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (LabError, ValidationError, ValueError) as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_PASS if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

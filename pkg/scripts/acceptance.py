#!/usr/bin/env python3
"""Acceptance harness for the Sard counterexample lab.

Runs the ten desk-scale checks in order:
1. schedule identities, exact, n <= 64
2. enclosure of the limit product against an independent closed form
3. exact pushforward identity at finite depth
4. KS rate and the width of the certified CDF sandwich
5. uniform part of the critical-set pushforward (both schedules)
6. certified difference quotients on the designated 1D addresses
7. exact criticality on the 2D core and the finite-difference bound
8. Holder series bounds, sampled lower bounds and the interpolation inequality
9. dyadic critical values off the core and level-set component probes
10. structural content of the figure data

Each check prints PASS/FAIL with a short detail; a JSON summary is written to
the output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
from mpmath import mp, mpf

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

import analysis_suite  # noqa: E402
import cli  # noqa: E402
import export_utils  # noqa: E402
import measure_lab  # noqa: E402
import schedule as schedule_mod  # noqa: E402
from errors import InconclusiveProbe  # noqa: E402
from evaluator import FunctionHandle  # noqa: E402
from geometry import cell_of, critical_regions  # noqa: E402
from models import CellAddress, RunConfig  # noqa: E402

KINDS = (schedule_mod.INVERSE_SQUARE, schedule_mod.HARMONIC)


def check_schedule_identities(args):
    for kind in KINDS:
        seq = schedule_mod.resolve(kind).sequences
        for n in range(1, 65):
            r_prev = seq.r(n - 1)
            if seq.a(n) * 2 ** n != 2 * r_prev:
                return False, f"{kind}: a_{n} 2^{n} != 2 r_{n - 1}"
            if schedule_mod.core_measure(kind, 1, n) != r_prev:
                return False, f"{kind}: L1(J_{n}) != r_{n - 1}"
            if schedule_mod.core_measure(kind, 2, n) != r_prev * r_prev:
                return False, f"{kind}: L2(K_{n}) != r_{n - 1}^2"
    return True, "exact for n <= 64, both schedules"


def check_limit_product(args):
    mp.dps = 40
    oracle = mp.sqrt(2) * mp.sin(mp.pi / mp.sqrt(2)) / mp.pi
    enclosure = schedule_mod.r_enclosure(schedule_mod.INVERSE_SQUARE, 1e-9)
    lo = mpf(enclosure.lo.numerator) / enclosure.lo.denominator
    hi = mpf(enclosure.hi.numerator) / enclosure.hi.denominator
    contains = lo <= oracle <= hi
    harmonic = schedule_mod.r_enclosure(schedule_mod.HARMONIC, 1e-6, n_terms=10 ** 6)
    small = harmonic.hi <= Fraction(11, 10 ** 7)
    detail = f"r in [{float(lo):.12f}, {float(hi):.12f}] oracle {mp.nstr(oracle, 12)}; harmonic hi {float(harmonic.hi):.3e}"
    return contains and small, detail


def check_pushforward_identity(args):
    for dimension, top in ((1, 12), (2, 6)):
        for n in range(0, top + 1):
            report = measure_lab.pushforward_partial(dimension, n)
            if not report.matches_closed_form:
                return False, f"{dimension}D n={n} differs from the uniform atoms"
    return True, "1D n <= 12, 2D n <= 6"


def check_ks_rate(args):
    for dimension, top in ((1, 12), (2, 6)):
        for n in range(0, top + 1):
            report = measure_lab.pushforward_partial(dimension, n)
            if report.ks != report.expected_ks:
                return False, f"{dimension}D n={n}: KS {report.ks} != {report.expected_ks}"
    for m in range(0, 21):
        sandwich = measure_lab.pushforward_certified(1, m)
        if sandwich.width() != Fraction(1, 2 ** m):
            return False, f"sandwich width at depth {m} is {sandwich.width()}"
    return True, "KS = base^-n exactly; sandwich widths 2^-m for m <= 20"


def check_relaxed_failure(args):
    one = measure_lab.critical_pushforward_report(FunctionHandle(1), 6)
    two = measure_lab.critical_pushforward_report(FunctionHandle(2), 3)
    if one.uniform_core_mass.lo < Fraction(358, 1000) or two.uniform_core_mass.lo < Fraction(128, 1000):
        return False, f"uniform parts {float(one.uniform_core_mass.lo)}, {float(two.uniform_core_mass.lo)}"
    if not (one.relaxed_property_fails and two.relaxed_property_fails):
        return False, "inverse-square uniform part not certified positive"
    harmonic = FunctionHandle(1, schedule_mod.HARMONIC)
    for n in range(1, 9):
        report = measure_lab.critical_pushforward_report(harmonic, n)
        if report.uniform_level_mass != Fraction(1, n + 1) or not report.z_values_dyadic:
            return False, f"harmonic n={n}: level mass {report.uniform_level_mass}"
    return True, f"core mass >= {float(one.uniform_core_mass.lo):.6f} (1D), {float(two.uniform_core_mass.lo):.6f} (2D); harmonic 1/(n+1)"


def check_nondiff(args):
    entries = [e for e in export_utils.load_jsonl(args.addresses) if e["probe"] == "nondiff"]
    probes = 0
    for kind in KINDS:
        handle = FunctionHandle(1, kind)
        for entry in entries:
            address = CellAddress.parse(1, entry["address"])
            levels = analysis_suite.digit_one_levels(address, 15)
            for result in analysis_suite.nondiff_suite(handle, [(address, n) for n in levels]):
                probes += 1
                if not result.passed:
                    return False, f"{kind} {entry['id']} n={result.level}: {result.error}"
    return True, f"{probes} certified probes over {len(entries)} addresses, both schedules"


def check_criticality(args):
    handle = FunctionHandle(2)
    for n in range(1, 9):
        rng = np.random.default_rng([args.seed, n])
        for _ in range(100):
            address = CellAddress(dimension=2, digits=tuple(int(d) for d in rng.integers(0, 4, n)))
            gradient = handle.f_partial(n, cell_of(address, handle.schedule).midpoint, order=1)
            if any(not isinstance(g, (int, Fraction)) or g != 0 for g in gradient):
                return False, f"grad f_{n} at {address.text()} = {gradient}"
    rng = np.random.default_rng([args.seed, 10])
    worst = 0.0
    for _ in range(5):
        address = CellAddress(dimension=2, digits=tuple(int(d) for d in rng.integers(0, 4, 10)))
        report = analysis_suite.criticality_probe(handle, address, 10)
        if not report.passed:
            return False, f"{address.text()}: fd {report.fd_norm:.3e} > bound {report.bound:.3e}"
        worst = max(worst, report.fd_norm)
    return True, f"800 exact zeros; depth-10 fd norms <= {worst:.3e} within bound {handle.gradient_tail_bound(10):.3e} + fd error"


def check_regularity(args):
    pairs = 10 ** 4 if args.quick else 10 ** 5
    for dimension in (1, 2):
        handle = FunctionHandle(dimension)
        for alpha in (0.5, 0.9, 0.99):
            upper, terms, remainder = analysis_suite.holder_series_bound(handle, alpha)
            if not (np.isfinite(upper) and remainder <= 1e-8):
                return False, f"{dimension}D alpha={alpha}: series {upper} remainder {remainder}"
            report = analysis_suite.holder_estimate(handle, alpha, pairs, "cross-gap", seed=args.seed)
            if not report.passed:
                return False, f"{dimension}D alpha={alpha}: {report.lower} > {report.upper}"
    for dimension in (1, 2):
        handle = FunctionHandle(dimension)
        rng = np.random.default_rng([args.seed, dimension])
        for n in range(1, 9):
            for _ in range(10):
                length = int(rng.integers(0, n))
                address = CellAddress(dimension=dimension, digits=tuple(int(d) for d in rng.integers(0, handle.base, length)))
                report = analysis_suite.interpolation_check(handle, n, 0.5, address, refine=3)
                if not report.passed:
                    return False, f"{dimension}D f_{n} on {address.text() or 'root'}: margin {report.margin}"
    return True, f"series settle to 1e-8; {pairs} cross-gap pairs below the bounds; interpolation holds"


def check_weak_sard(args):
    handle = FunctionHandle(2)
    for n in range(1, 5):
        values = handle.critical_values_off_core(n)
        if any((v * 4 ** n).denominator != 1 for v in values):
            return False, f"non-dyadic critical value at n={n}"
    entries = [e for e in export_utils.load_jsonl(args.addresses) if e["probe"] == "levelset"]
    for entry in entries:
        address = CellAddress.parse(2, entry["address"])
        report = analysis_suite.level_component_probe(handle, address, entry["M"], entry["eps"], args.grid_res)
        if not report.passed:
            return False, f"{entry['id']}: {report.error}"
    return True, f"critical values dyadic for n <= 4; {len(entries)} level-set probes confined"


def _expected_label(point, n, cells, frames):
    if any(cell.contains(point) for cell in cells):
        return f"K{n + 1}"
    for region in frames:
        if region.contains(point):
            return f"Z{region.level}"
    return ""


def check_figure_data(args):
    config = RunConfig()
    one = cli.figure_construction_1d(config, 256)["construction_1d_graph"]
    for n in (1, 2):
        exact = {Fraction(t) for t in one[f"f{n}_exact"] if t}
        if exact != {Fraction(k, 2 ** n) for k in range(2 ** n)}:
            return False, f"1D f_{n} plateau values {sorted(exact)}"
    plateaus = cli.figure_construction_2d(config, 32)["construction_2d_plateaus"]
    for n in (1, 2):
        exact = {Fraction(t) for t in plateaus.loc[plateaus["n"] == n, "value"]}
        if exact != {Fraction(k, 4 ** n) for k in range(4 ** n)}:
            return False, f"2D f_{n} plateau values {sorted(exact)}"
    raster = cli.figure_critical_sets(config, 256)["critical_sets_raster"]
    for n in (1, 2):
        cells, frames = critical_regions(n, 2)
        sample = raster.iloc[::37]
        for x, y, label in zip(sample["x"], sample["y"], sample[f"region_f{n}"]):
            expected = _expected_label((Fraction(x), Fraction(y)), n, cells, frames)
            if label != expected:
                return False, f"critical raster n={n} at ({x}, {y}): {label!r} != {expected!r}"
    return True, "plateau values exact; critical-set raster matches exact geometry"


CHECKS = [
    ("schedule identities", check_schedule_identities),
    ("limit product", check_limit_product),
    ("pushforward identity", check_pushforward_identity),
    ("KS rate", check_ks_rate),
    ("relaxed-property failure", check_relaxed_failure),
    ("non-differentiability", check_nondiff),
    ("criticality on the core", check_criticality),
    ("regularity", check_regularity),
    ("weak-property probes", check_weak_sard),
    ("figure data", check_figure_data),
]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--addresses", type=Path, default=ROOT / "datasets" / "probe_addresses.jsonl")
    parser.add_argument("--only", type=int, nargs="*", default=None, help="Run only these check numbers")
    parser.add_argument("--quick", action="store_true", help="Smaller Holder sample sizes")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--grid-res", dest="grid_res", type=int, default=analysis_suite.DEFAULT_GRID_RES)
    parser.add_argument("--output-dir", dest="output_dir", default=None)
    args = parser.parse_args()

    selected = [(i, name, fn) for i, (name, fn) in enumerate(CHECKS, 1) if not args.only or i in args.only]
    passed = 0
    results = []
    for idx, name, check in selected:
        t0 = time.time()
        try:
            ok, detail = check(args)
        except InconclusiveProbe as exc:
            ok, detail = False, f"inconclusive: {exc}"
        except Exception as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        elapsed = time.time() - t0
        passed += int(ok)
        status = "PASS" if ok else "FAIL"
        print(f"[{idx}/{len(CHECKS)}] {status} {elapsed:.1f}s :: {name}")
        print(f"  detail: {detail}")
        results.append({"check": idx, "name": name, "ok": ok, "seconds": round(elapsed, 2), "detail": detail})

    out = export_utils.output_dir(args.output_dir) / "acceptance_last_run.json"
    out.write_text(json.dumps({"results": results}, indent=2), encoding="utf-8")
    print(f"\nSUMMARY {passed}/{len(selected)} checks passed")
    print(f"Wrote {out}")
    sys.exit(0 if passed == len(selected) else 1)


if __name__ == "__main__":
    main()

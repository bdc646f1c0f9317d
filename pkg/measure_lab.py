"""Pushforward measures of f_n and f restricted to the core sets.

Atomic measures are exact: every level-(n+1) cell carries the same share of
the core measure and f_n is constant on it, equal to the digit value of its
address. The normalised pushforward is therefore uniform on {k / base^n},
which ``pushforward_partial`` verifies cell by cell.
"""

import logging
import math
from collections import defaultdict
from fractions import Fraction
from itertools import product
from typing import Dict, Optional, Union

import numpy as np
from scipy import stats

import schedule as schedule_mod
from errors import DepthCapExceeded, LabError
from evaluator import FunctionHandle
from geometry import enumerate_cells, z_set
from models import (
    CellAddress,
    CriticalPushforwardReport,
    DiscreteMeasure,
    Enclosure,
    EqualSplitReport,
    ImageCoverReport,
    PushforwardReport,
    SamplerReport,
    StratifiedEnclosure,
)

logger = logging.getLogger(__name__)

PUSHFORWARD_CAP = {1: 14, 2: 8}
STRATIFIED_CAP = {1: 40, 2: 24}
SANDWICH_CHECK_DEPTH = {1: 6, 2: 3}
# cells whose plateau value is cross-checked through the evaluator
CROSS_CHECK_LIMIT = 4096
ENCLOSURE_TOL = 1e-9


def _base(dimension: int) -> int:
    if dimension not in (1, 2):
        raise LabError(f"dimension must be 1 or 2, got {dimension}")
    return 2 if dimension == 1 else 4


def _check_cap(dimension: int, n: int, caps: Dict[int, int], what: str) -> None:
    if n < 0:
        raise LabError(f"{what} must be >= 0, got {n}")
    if n > caps[dimension]:
        raise DepthCapExceeded(n, caps[dimension], what)


def closed_form_uniform(dimension: int, n: int) -> DiscreteMeasure:
    base = _base(dimension)
    count = base ** n
    return DiscreteMeasure.from_pairs({Fraction(k, count): Fraction(1, count) for k in range(count)})


def pushforward_partial(dimension: int, n: int, schedule=None) -> PushforwardReport:
    """Pushforward of the level-(n+1) core measure under f_n, built from the cells.

    The report carries the normalised measure; ``level_total`` times a weight
    is the exact mass of (f_n)#(1_{J_{n+1}} L) and ``core_total`` times a
    weight encloses the mass of (f_n)#(1_J L).
    """
    _check_cap(dimension, n, PUSHFORWARD_CAP, "pushforward depth")
    sched = schedule_mod.resolve(schedule)
    handle = FunctionHandle(dimension, sched)
    side = sched.sequences.a(n + 1)
    cell_mass = side ** dimension
    masses: Dict[Fraction, Fraction] = defaultdict(Fraction)
    level_total = Fraction(0)
    for index, (digits, corner) in enumerate(enumerate_cells(dimension, n + 1, sched)):
        location = CellAddress(dimension=dimension, digits=digits).value()
        if n >= 1 and index < CROSS_CHECK_LIMIT:
            midpoint = tuple(c + side / 2 for c in corner)
            if handle.f_partial(n, midpoint) != location:
                raise LabError(f"f_{n} at the midpoint of cell {digits} is not its digit value")
        masses[location] += cell_mass
        level_total += cell_mass
    measure = DiscreteMeasure.from_pairs(masses).normalized()
    expected = closed_form_uniform(dimension, n)
    ks = ks_to_uniform(measure)
    expected_ks = Fraction(1, _base(dimension) ** n)
    matches = measure == expected
    logger.info("pushforward %dD n=%d: %d atoms, level total %s", dimension, n, len(measure), level_total)
    return PushforwardReport(
        dimension=dimension,
        schedule=sched.kind,
        depth=n,
        measure=measure,
        level_total=level_total,
        core_total=schedule_mod.limit_core_measure(sched, dimension, ENCLOSURE_TOL)
        if sched.kind != schedule_mod.HARMONIC
        else Enclosure(lo=Fraction(0), hi=level_total),
        ks=ks,
        expected_ks=expected_ks,
        matches_closed_form=matches,
        passed=matches and ks == expected_ks and level_total == schedule_mod.core_measure(sched, dimension, n + 1),
    )


def pushforward_certified(dimension: int, depth: int, schedule=None) -> StratifiedEnclosure:
    """CDF sandwich of the normalised pushforward of the core measure under f.

    The staircases rest on two facts about the construction: every depth-m
    address carries the same share of the core, and the value intervals of
    the addresses tile [0, 1]. Both are checked on the cells up to
    ``SANDWICH_CHECK_DEPTH`` before the sandwich is returned.
    """
    _check_cap(dimension, depth, STRATIFIED_CAP, "stratified depth")
    check_depth = min(depth, SANDWICH_CHECK_DEPTH[dimension])
    partial = pushforward_partial(dimension, check_depth, schedule)
    cover = image_cover_report(dimension, check_depth, schedule)
    split = equal_split_check(dimension, check_depth, check_depth + 1, schedule)
    shallow = StratifiedEnclosure(dimension=dimension, depth=check_depth)
    if not (partial.passed and cover.passed and split.passed and shallow.brackets(partial.measure)):
        raise LabError(f"construction does not support the depth-{depth} sandwich (checked at depth {check_depth})")
    logger.debug("sandwich %dD depth %d backed by cells at depth %d", dimension, depth, check_depth)
    return StratifiedEnclosure(dimension=dimension, depth=depth)


def ks_to_uniform(target: Union[DiscreteMeasure, StratifiedEnclosure]) -> Union[Fraction, Enclosure]:
    """Sup distance between a CDF and t -> t on [0, 1].

    For an atomic measure the supremum is attained at an atom or approached
    from its left, so only those points are inspected.
    """
    if isinstance(target, StratifiedEnclosure):
        # both staircases are within 1/B of the identity and bracket it
        return Enclosure(lo=Fraction(0), hi=target.width())
    if target.total == 0:
        raise LabError("KS distance of a zero measure is undefined")
    measure = target if target.total == 1 else target.normalized()
    worst = Fraction(0)
    running = Fraction(0)
    for atom in measure.atoms:
        left = running
        running += atom.mass
        t = atom.location
        worst = max(worst, abs(t - left), abs(running - t))
    # after the last atom the CDF is 1 while t runs up to 1
    return max(worst, abs(1 - running))


def critical_pushforward_report(handle: FunctionHandle, n: int) -> CriticalPushforwardReport:
    """Split the level-n picture of the critical-set pushforward into core and Z parts."""
    dimension = handle.dimension
    _check_cap(dimension, n, PUSHFORWARD_CAP, "critical pushforward depth")
    if n < 1:
        raise LabError("critical pushforward needs n >= 1")
    sched = handle.schedule
    base = handle.base
    level_mass = schedule_mod.core_measure(sched, dimension, n + 1)
    if sched.kind == schedule_mod.HARMONIC:
        core_mass = Enclosure(lo=Fraction(0), hi=level_mass)
    else:
        core_mass = schedule_mod.limit_core_measure(sched, dimension, ENCLOSURE_TOL)

    z_masses: Dict[Fraction, Fraction] = defaultdict(Fraction)
    for m in range(1, n + 1):
        for region in z_set(m, dimension, sched):
            # the band's parent cell sits at level m; its address is the region's prefix
            sample = tuple((lo + hi) / 2 for lo, hi in zip(region.outer.lower, region.inner.lower))
            value = handle.f_partial(n, sample)
            z_masses[Fraction(value)] += region.measure
    z_measure = DiscreteMeasure.from_pairs(z_masses)
    denominator = base ** n
    dyadic = all((atom.location * denominator).denominator == 1 for atom in z_measure.atoms)
    transition_mass = 1 - level_mass - z_measure.total
    fails = core_mass.lo > 0
    return CriticalPushforwardReport(
        dimension=dimension,
        schedule=sched.kind,
        depth=n,
        uniform_level_mass=level_mass,
        uniform_core_mass=core_mass,
        z_measure=z_measure,
        transition_mass=transition_mass,
        z_values_dyadic=dyadic,
        relaxed_property_fails=fails,
        passed=dyadic and transition_mass >= 0,
    )


def image_cover_report(dimension: int, depth: int, schedule=None) -> ImageCoverReport:
    """The value intervals [v, v + B^-m] of all depth-m addresses tile [0, 1]."""
    _check_cap(dimension, depth, PUSHFORWARD_CAP, "image cover depth")
    sched = schedule_mod.resolve(schedule)
    base = _base(dimension)
    width = Fraction(1, base ** depth)
    starts = sorted(
        CellAddress(dimension=dimension, digits=digits).value()
        for digits in product(range(base), repeat=depth)
    )
    tiles = starts[0] == 0 and all(b - a == width for a, b in zip(starts, starts[1:])) and starts[-1] + width == 1
    image = width * len(starts) if tiles else Fraction(0)
    if sched.kind == schedule_mod.HARMONIC:
        core = Enclosure(lo=Fraction(0), hi=schedule_mod.core_measure(sched, dimension, depth + 1))
    else:
        core = schedule_mod.limit_core_measure(sched, dimension, ENCLOSURE_TOL)
    return ImageCoverReport(
        dimension=dimension,
        schedule=sched.kind,
        depth=depth,
        intervals=len(starts),
        image_measure=image,
        core_total=core,
        passed=tiles and image == 1,
    )


def equal_split_check(dimension: int, n: int, fine_level: int, schedule=None) -> EqualSplitReport:
    """Measure of the level-m family inside each level-(n+1) cell; all shares coincide."""
    if fine_level < n + 1:
        raise LabError(f"fine level {fine_level} must be at least {n + 1}")
    sched = schedule_mod.resolve(schedule)
    base = _base(dimension)
    fine_side = sched.sequences.a(fine_level)
    per_cell: Dict[tuple, Fraction] = defaultdict(Fraction)
    # descendants of a level-(n+1) cell share its first n digits
    for digits, _ in enumerate_cells(dimension, fine_level, sched):
        per_cell[digits[:n]] += fine_side ** dimension
    masses = tuple(per_cell[key] for key in sorted(per_cell))
    expected = schedule_mod.core_measure(sched, dimension, fine_level) / base ** n
    return EqualSplitReport(
        dimension=dimension,
        schedule=sched.kind,
        depth=n,
        fine_level=fine_level,
        masses=masses,
        passed=len(masses) == base ** n and all(m == expected for m in masses),
    )


def sample_core_values(handle: FunctionHandle, depth: int, size: int, seed: int = 0) -> SamplerReport:
    """Exploratory only: f at random deep-cell midpoints against the uniform law."""
    if depth > handle.depth_cap - 1:
        raise DepthCapExceeded(depth, handle.depth_cap - 1, "sampler depth")
    rng = np.random.default_rng(seed)
    digits = rng.integers(0, handle.base, size=(size, depth))
    dimension = handle.dimension
    seq = handle.sequences
    corners = np.zeros((size, dimension))
    for level in range(1, depth + 1):
        a_l, s_l = float(seq.a(level)), float(seq.s(level))
        d = digits[:, level - 1]
        if dimension == 1:
            offsets = d[:, None] * (a_l / 2)
        else:
            bx = np.isin(d, (0, 3)).astype(float)
            by = np.isin(d, (0, 1)).astype(float)
            offsets = np.stack([bx, by], axis=1) * (a_l / 2)
        corners = corners + offsets + s_l
    midpoints = corners + float(seq.a(depth + 1)) / 2
    values = handle.f_partial_array(midpoints, depth)
    result = stats.kstest(values, "uniform")
    return SamplerReport(
        dimension=dimension,
        depth=depth,
        size=size,
        seed=seed,
        statistic=float(result.statistic),
        pvalue=float(result.pvalue),
        passed=bool(result.statistic <= math.ldexp(1.0, -depth) + 2.0 / math.sqrt(size)),
    )

"""Nested cell families, digit addresses, point location and the frame regions.

Exact work (children, families, locate, frames) uses ``Fraction`` corners.
``descend`` is the float64 counterpart used by grid evaluation: it walks many
points down the construction at once and yields, per level, the quadrant or
half each point falls in.
"""

import logging
import math
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

import schedule as schedule_mod
from errors import DepthCapExceeded, GeometryError
from models import QUADRANT_BITS, CellAddress, FrameRegion, Outside, RationalCell
from plateau import halves, quadrant

logger = logging.getLogger(__name__)

FAMILY_CAP = {1: 24, 2: 12}

Point = Tuple[Fraction, ...]


def _base(dimension: int) -> int:
    if dimension not in (1, 2):
        raise GeometryError(f"dimension must be 1 or 2, got {dimension}")
    return 2 if dimension == 1 else 4


def _half_corner(corner: Point, side: Fraction, digit: int) -> Point:
    half = side / 2
    if len(corner) == 1:
        return (corner[0] + digit * half,)
    bx, by = QUADRANT_BITS[digit]
    return (corner[0] + bx * half, corner[1] + by * half)


def _child_corner(corner: Point, side: Fraction, s: Fraction, digit: int) -> Point:
    return tuple(c + s for c in _half_corner(corner, side, digit))


def unshrunk_part(cell: RationalCell, digit: int) -> RationalCell:
    """Half (1D) or quadrant (2D) selected by the digit, before shrinking."""
    _check_digit(cell.dimension, digit)
    if cell.dimension == 1:
        return halves(cell)[digit]
    return quadrant(cell, digit)


def _check_digit(dimension: int, digit: int) -> None:
    if not 0 <= digit < _base(dimension):
        raise GeometryError(f"digit {digit} out of range for dimension {dimension}")


def child(cell: RationalCell, level: int, digit: int, schedule=None) -> RationalCell:
    """Shrunk sub-cell at level n+1 selected by the digit."""
    _check_digit(cell.dimension, digit)
    a_n, s_n, _ = schedule_mod.geometry(schedule, level)
    if cell.side != a_n:
        raise GeometryError(f"cell of side {cell.side} is not a level-{level} cell (side {a_n})")
    corner = _child_corner(cell.lower, cell.side, s_n, digit)
    return RationalCell.from_corner(corner, cell.side / 2 - 2 * s_n)


def cell_of(address: CellAddress, schedule=None) -> RationalCell:
    """The level-(len+1) cell named by the address."""
    seq = schedule_mod.resolve(schedule).sequences
    corner: Point = (Fraction(0),) * address.dimension
    for level, digit in enumerate(address.digits, start=1):
        corner = _child_corner(corner, seq.a(level), seq.s(level), digit)
    return RationalCell.from_corner(corner, seq.a(address.level))


def enumerate_cells(dimension: int, n: int, schedule=None, cap: Optional[int] = None) -> Iterator[Tuple[Tuple[int, ...], Point]]:
    """(digits, lower corner) of every level-n cell, digits in lexicographic order."""
    base = _base(dimension)
    cap = FAMILY_CAP[dimension] if cap is None else cap
    if n < 1:
        raise GeometryError(f"level must be >= 1, got {n}")
    if n > cap:
        raise DepthCapExceeded(n, cap, "family level")
    seq = schedule_mod.resolve(schedule).sequences
    layer: List[Tuple[Tuple[int, ...], Point]] = [((), (Fraction(0),) * dimension)]
    for level in range(1, n):
        a_l, s_l = seq.a(level), seq.s(level)
        layer = [
            (digits + (d,), _child_corner(corner, a_l, s_l, d))
            for digits, corner in layer
            for d in range(base)
        ]
    logger.debug("Enumerated %d level-%d cells in %dD", len(layer), n, dimension)
    return iter(layer)


def family(dimension: int, n: int, schedule=None, cap: Optional[int] = None) -> List[RationalCell]:
    side = schedule_mod.resolve(schedule).sequences.a(n)
    return [RationalCell.from_corner(corner, side) for _, corner in enumerate_cells(dimension, n, schedule, cap)]


def _as_point(point) -> Point:
    if isinstance(point, (int, float, Fraction, str)):
        point = (point,)
    try:
        coords = tuple(Fraction(p) for p in point)
    except (TypeError, ValueError) as exc:
        raise GeometryError(f"cannot read point {point!r}: {exc}") from exc
    if len(coords) not in (1, 2):
        raise GeometryError(f"points have 1 or 2 coordinates, got {len(coords)}")
    if any(not 0 <= c <= 1 for c in coords):
        raise GeometryError(f"point {point!r} lies outside the unit cell")
    return coords


def locate_digits(point, depth: int, schedule=None) -> Tuple[Tuple[int, ...], Optional[int]]:
    """Digits of the cells containing the point down to ``depth`` and the exit level, if any."""
    coords = _as_point(point)
    if depth < 1:
        raise GeometryError(f"depth must be >= 1, got {depth}")
    dimension = len(coords)
    base = _base(dimension)
    seq = schedule_mod.resolve(schedule).sequences
    corner: Point = (Fraction(0),) * dimension
    digits: List[int] = []
    for level in range(1, depth + 1):
        a_l, s_l = seq.a(level), seq.s(level)
        inner = a_l / 2 - 2 * s_l
        for d in range(base):
            cand = _child_corner(corner, a_l, s_l, d)
            if all(c <= x <= c + inner for c, x in zip(cand, coords)):
                digits.append(d)
                corner = cand
                break
        else:
            return tuple(digits), level + 1
    return tuple(digits), None


def locate(point, depth: int, schedule=None) -> Union[CellAddress, Outside]:
    """Address of length ``depth`` whose closed cell contains the point, or Outside(level)."""
    digits, exit_level = locate_digits(point, depth, schedule)
    if exit_level is not None:
        return Outside(level=exit_level)
    return CellAddress(dimension=len(_as_point(point)), digits=digits)


def frame(address: CellAddress, level: int, schedule=None) -> FrameRegion:
    """Band between the unshrunk part of digit d_m of the level-m ancestor and its child."""
    if not 1 <= level <= len(address):
        raise GeometryError(f"frame level {level} needs 1 <= level <= {len(address)}")
    parent = cell_of(address.prefix(level - 1), schedule)
    digit = address.digits[level - 1]
    return FrameRegion(
        level=level,
        digit=digit,
        outer=unshrunk_part(parent, digit),
        inner=child(parent, level, digit, schedule),
    )


def z_set(n: int, dimension: int = 2, schedule=None) -> List[FrameRegion]:
    """Digit-0 frames of every level-n cell: the plateau where h_n is 0 minus the next core level."""
    regions = []
    for digits, _ in enumerate_cells(dimension, n, schedule):
        regions.append(frame(CellAddress(dimension=dimension, digits=digits + (0,)), n, schedule))
    return regions


def critical_regions(n: int, dimension: int = 2, schedule=None) -> Tuple[List[RationalCell], List[FrameRegion]]:
    """Cells of level n+1 and the Z frames of levels 1..n, where grad f_n vanishes."""
    cells = family(dimension, n + 1, schedule)
    frames = [region for m in range(1, n + 1) for region in z_set(m, dimension, schedule)]
    return cells, frames


def frame_samples(region: FrameRegion, count: int, exact: bool = False):
    """Deterministic lattice points of the closed band, at least ``count`` of them when possible.

    Lattice points sit at cell centres of a k x k (or k) subdivision of the
    outer part; those strictly inside the excluded child are dropped.
    """
    dimension = region.outer.dimension
    fraction = float(region.measure / region.outer.measure)
    k = max(2, math.ceil((count / fraction) ** (1.0 / dimension)) + 1)
    side = region.outer.side
    if exact:
        ticks = [
            [region.outer.lower[axis] + Fraction(2 * i + 1, 2 * k) * side for i in range(k)]
            for axis in range(dimension)
        ]
        lattice = [(x,) for x in ticks[0]] if dimension == 1 else [(x, y) for x in ticks[0] for y in ticks[1]]
        return [p for p in lattice if not region.inner.contains(p)][:count]
    offsets = (np.arange(k) + 0.5) / k * float(side)
    axes = [float(region.outer.lower[axis]) + offsets for axis in range(dimension)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dimension)
    lo = np.array([float(c) for c in region.inner.lower])
    hi = np.array([float(c) for c in region.inner.upper])
    keep = ~np.all((grid >= lo) & (grid <= hi), axis=1)
    return grid[keep][:count]


def cell_diameter(dimension: int, level: int, schedule=None) -> float:
    return float(schedule_mod.resolve(schedule).sequences.a(level)) * math.sqrt(dimension)


class LevelStep:
    """Per-level state yielded by ``descend`` for a batch of float points."""

    __slots__ = ("level", "side", "margin", "alive", "part_lower", "digit")

    def __init__(self, level, side, margin, alive, part_lower, digit):
        self.level = level
        self.side = side
        self.margin = margin
        self.alive = alive
        self.part_lower = part_lower
        self.digit = digit


def quadrant_digits(bits: np.ndarray) -> np.ndarray:
    """Vectorised QUADRANT_BITS inverse for an (N, 2) boolean array."""
    right, top = bits[:, 0], bits[:, 1]
    return np.where(top, np.where(right, 0, 1), np.where(right, 3, 2))


def descend(points: np.ndarray, depth: int, schedule=None) -> Iterator[LevelStep]:
    """Walk float points through levels 1..depth.

    ``alive`` marks points inside the level-m cell; ``digit`` is the half or
    quadrant of that cell holding the point and ``part_lower`` its lower
    corner. Stops early once no point is alive.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    seq = schedule_mod.resolve(schedule).sequences
    lower = np.zeros_like(pts)
    alive = np.all((pts >= 0.0) & (pts <= 1.0), axis=1)
    for level in range(1, depth + 1):
        side, margin = float(seq.a(level)), float(seq.s(level))
        half = side / 2
        bits = (pts - lower) >= half
        part_lower = lower + bits * half
        digit = bits[:, 0].astype(int) if pts.shape[1] == 1 else quadrant_digits(bits)
        yield LevelStep(level, side, margin, alive.copy(), part_lower, digit)
        inside = np.all((pts >= part_lower + margin) & (pts <= part_lower + half - margin), axis=1)
        alive &= inside
        lower = np.where(alive[:, None], part_lower + margin, lower)
        if not alive.any():
            return


def classify_points(points: np.ndarray, n: int, schedule=None) -> Tuple[np.ndarray, np.ndarray]:
    """(core level reached, digit at the exit level) for float points.

    A point with level n+1 lies in the level-(n+1) family; a point whose walk
    stops at level m <= n with exit digit 0 lies in Z_m.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    reached = np.zeros(len(pts), dtype=int)
    exit_digit = np.full(len(pts), -1, dtype=int)
    for step in descend(pts, n + 1, schedule):
        reached = np.where(step.alive, step.level, reached)
        exit_digit = np.where(step.alive, step.digit, exit_digit)
    return reached, exit_digit

"""Regularity and critical-set checks built on the evaluator.

Every reported inequality is one-sided in the safe direction: sampled
seminorms are lower bounds (truncation and rounding slack subtracted), series
bounds are upper bounds summed in mpmath interval arithmetic with a geometric
remainder.
"""

import logging
import math
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd
from mpmath import iv
from scipy import ndimage

from errors import EvaluationError, InconclusiveProbe, ProbeInapplicable
from evaluator import FLOAT_SLACK, FunctionHandle
from geometry import _child_corner, cell_diameter, cell_of, frame, frame_samples
from models import (
    CellAddress,
    CriticalityReport,
    HolderReport,
    InterpolationReport,
    LevelComponentReport,
    QuotientProbe,
    RationalCell,
)
from schedule import iv_rational

logger = logging.getLogger(__name__)

STRATEGIES = ("uniform", "cross-gap", "digit-aligned")
PAIR_BLOCK = 4096
SERIES_RTOL = 1e-10
MAX_SERIES_TERMS = 50000
DEFAULT_HOLDER_DEPTH = {1: 30, 2: 8}
DEFAULT_GRID_RES = 512
DEFAULT_FRAME_SAMPLES = 10_000
GRADIENT_SLACK = 1e-10
UNIT_ROUNDOFF = 2.0 ** -53


# -- sampled seminorms ------------------------------------------------------

def sampled_seminorm(fx, fy, x, y, alpha: float, slack: float = 0.0) -> float:
    """max over pairs of max(|f(x) - f(y)| - slack, 0) / |x - y|^alpha.

    ``fx``/``fy`` may be scalars per pair (shape (N,)) or vectors (shape (N, k)).
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    fx, fy = np.asarray(fx, dtype=float), np.asarray(fy, dtype=float)
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.ndim == 1:
        x, y = x[:, None], y[:, None]
    diff = fx - fy
    jump = np.abs(diff) if diff.ndim == 1 else np.linalg.norm(diff, axis=1)
    dist = np.linalg.norm(x - y, axis=1)
    keep = dist > 0
    if not keep.any():
        return 0.0
    ratios = np.maximum(jump[keep] - slack, 0.0) / dist[keep] ** alpha
    return float(ratios.max())


def _cell_corners(handle: FunctionHandle, digits: np.ndarray, levels: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Float lower corners, sides and margins of the level-``levels`` cells named by random digits."""
    count = len(levels)
    seq = handle.sequences
    corners = np.zeros((count, handle.dimension))
    for level in range(1, int(levels.max())):
        a_l, s_l = float(seq.a(level)), float(seq.s(level))
        mask = levels > level
        d = digits[:, level - 1]
        if handle.dimension == 1:
            offsets = d[:, None] * (a_l / 2)
        else:
            bx = np.isin(d, (0, 3)).astype(float)
            by = np.isin(d, (0, 1)).astype(float)
            offsets = np.stack([bx, by], axis=1) * (a_l / 2)
        corners = np.where(mask[:, None], corners + offsets + s_l, corners)
    top = int(levels.max())
    side_table = np.array([0.0] + [float(seq.a(m)) for m in range(1, top + 1)])
    margin_table = np.array([0.0] + [float(seq.s(m)) for m in range(1, top + 1)])
    return corners, side_table[levels], margin_table[levels]


def _uniform_pairs(handle, rng, size, depth):
    return rng.random((size, handle.dimension)), rng.random((size, handle.dimension))


def _cross_gap_pairs(handle, rng, size, depth):
    levels = rng.integers(1, depth + 1, size)
    digits = rng.integers(0, handle.base, (size, depth))
    corners, sides, _ = _cell_corners(handle, digits, levels)
    centre = corners + sides[:, None] / 2
    # points pulled towards the centre line, one on each side of it
    axis = rng.integers(0, handle.dimension, size)
    x = corners + rng.random((size, handle.dimension)) * sides[:, None]
    y = x.copy()
    rows = np.arange(size)
    below = (sides / 2) * rng.random(size) ** 2
    above = (sides / 2) * rng.random(size) ** 2
    x[rows, axis] = centre[rows, axis] - below
    y[rows, axis] = centre[rows, axis] + above
    return x, y


def _digit_aligned_pairs(handle, rng, size, depth):
    levels = rng.integers(1, depth + 1, size)
    digits = rng.integers(0, handle.base, (size, depth))
    corners, sides, margins = _cell_corners(handle, digits, levels)
    rows = np.arange(size)
    if handle.dimension == 1:
        # f is the digit prefix at the midpoint and one step higher at the child plateau
        centre = corners[:, 0] + sides / 2
        reach = np.where(rng.random(size) < 0.5, 1.0, rng.random(size))
        return centre[:, None], (centre + margins * reach)[:, None]
    peak = handle.profile.peak
    k = rng.integers(1, 4, size)
    bx = np.isin(k, (0, 3)).astype(float)
    by = np.isin(k, (0, 1)).astype(float)
    part_lower = corners + np.stack([bx, by], axis=1) * (sides / 2)[:, None]
    part_centre = part_lower + (sides / 4)[:, None]
    axis = rng.integers(0, 2, size)
    x = part_centre.copy()
    y = part_centre.copy()
    # steepest point of the transition against the start of the plateau
    x[rows, axis] = part_lower[rows, axis] + peak * margins
    y[rows, axis] = part_lower[rows, axis] + margins
    return x, y


_PAIR_GENERATORS: Dict[str, Callable] = {
    "uniform": _uniform_pairs,
    "cross-gap": _cross_gap_pairs,
    "digit-aligned": _digit_aligned_pairs,
}


def generate_pairs(handle: FunctionHandle, strategy: str, count: int, seed: int = 0, depth: Optional[int] = None):
    """Point pairs in blocks seeded by (seed, block) so a larger count extends a smaller one."""
    if strategy not in _PAIR_GENERATORS:
        raise ValueError(f"unknown pair strategy {strategy!r}; choose from {STRATEGIES}")
    if count < 1:
        raise ValueError("pairs must be >= 1")
    depth = depth or DEFAULT_HOLDER_DEPTH[handle.dimension]
    xs, ys = [], []
    for block in range(math.ceil(count / PAIR_BLOCK)):
        rng = np.random.default_rng([seed, block])
        x, y = _PAIR_GENERATORS[strategy](handle, rng, PAIR_BLOCK, depth)
        xs.append(np.clip(x, 0.0, 1.0))
        ys.append(np.clip(y, 0.0, 1.0))
    return np.concatenate(xs)[:count], np.concatenate(ys)[:count]


# -- series bounds ----------------------------------------------------------

def _holder_term(handle: FunctionHandle, m: int, alpha):
    """Interval bound on the alpha-seminorm of the level-m term (of f in 1D, of grad f in 2D)."""
    s_m = handle.sequences.interval_s(m)
    g1 = iv.mpf(handle.profile.g1_upper)
    if handle.dimension == 1:
        # 2 * 2^-m * |h|^(1-alpha) |h'|^alpha with |h| = 1
        return 2 * iv.exp(alpha * iv.log(g1 / s_m)) / iv.mpf(2) ** m
    g2 = iv.mpf(handle.profile.g2_upper)
    first = 3 * iv.sqrt(iv.mpf(2)) * g1 / s_m
    second = 3 * iv.sqrt(2 * g2 * g2 + 2 * g1 ** 4) / (s_m * s_m)
    return 2 * iv.exp((1 - alpha) * iv.log(first) + alpha * iv.log(second)) / iv.mpf(4) ** m


def _holder_ratio(handle: FunctionHandle, m: int, alpha):
    q = iv_rational(handle.schedule.margin_ratio(m))
    if handle.dimension == 1:
        return iv.exp(alpha * iv.log(q)) / 2
    return iv.exp((1 + alpha) * iv.log(q)) / 4


def holder_series_bound(handle: FunctionHandle, alpha: float, rtol: float = SERIES_RTOL) -> Tuple[float, int, float]:
    """(upper bound, terms summed, relative remainder) for [f]_alpha (1D) or [grad f]_alpha (2D)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    a = iv.mpf(alpha)
    total = iv.mpf(0)
    for m in range(1, MAX_SERIES_TERMS + 1):
        term = _holder_term(handle, m, a)
        total += term
        ratio = _holder_ratio(handle, m, a)
        if float(ratio.b) < 1.0 and handle._ratio_decreasing_from(m):
            remainder = term * ratio / (1 - ratio)
            relative = float(remainder.b) / float(total.a)
            if relative <= rtol:
                bound = float((total + remainder).b)
                logger.debug("Holder series alpha=%.3f: %.6e after %d terms", alpha, bound, m)
                return bound, m, relative
    raise EvaluationError(f"Holder series for alpha={alpha} did not settle within {MAX_SERIES_TERMS} terms")


def holder_estimate(
    handle: FunctionHandle,
    alpha: float,
    pairs: int,
    strategy: str = "cross-gap",
    seed: int = 0,
    depth: Optional[int] = None,
) -> HolderReport:
    """Sampled lower bound against the series upper bound.

    1D samples [f]_alpha through f_n with n = ``depth``; 2D samples
    [grad f_n]_alpha, which the same series bound dominates.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    depth = depth or min(DEFAULT_HOLDER_DEPTH[handle.dimension], handle.depth_cap)
    x, y = generate_pairs(handle, strategy, pairs, seed, depth)
    if handle.dimension == 1:
        fx, fy = handle.f_partial_array(x, depth), handle.f_partial_array(y, depth)
        slack = 2 * float(handle.tail(depth)) + 2 * FLOAT_SLACK
    else:
        fx, fy = handle.f_partial_array(x, depth, order=1), handle.f_partial_array(y, depth, order=1)
        slack = GRADIENT_SLACK
    lower = sampled_seminorm(fx, fy, x, y, alpha, slack)
    upper, terms, remainder = holder_series_bound(handle, alpha)
    return HolderReport(
        dimension=handle.dimension,
        schedule=handle.schedule.kind,
        alpha=alpha,
        depth=depth,
        strategy=strategy,
        samples=pairs,
        lower=lower,
        upper=upper,
        series_terms=terms,
        series_remainder=remainder,
        passed=lower <= upper,
    )


def holder_norm_bound(handle: FunctionHandle, alpha: float) -> float:
    """Bound on the C^{k,alpha} norm with base point 0 (k = 0 in 1D, k = 1 in 2D)."""
    upper, _, _ = holder_series_bound(handle, alpha)
    origin = (0,) * handle.dimension
    at_origin = handle.f_eval(origin, float(handle.tail(handle.depth_cap)))
    extra = abs(at_origin.value) + at_origin.radius
    if handle.dimension == 2:
        gradient = handle.f_partial(1, origin, order=1)
        extra += math.hypot(float(gradient[0]), float(gradient[1]))
    return upper + extra


# -- interpolation inequality ----------------------------------------------

def _seminorm_on_grid(coords: List[np.ndarray], values: np.ndarray, alpha: float, reference_stride: int) -> float:
    """Grid seminorm over axis neighbours, diagonal neighbours and a strided reference set."""
    best = 0.0
    dims = len(coords)
    mesh = np.stack(np.meshgrid(*coords, indexing="ij"), axis=-1)
    for axis in range(dims):
        for step in (1, 2, 4):
            lo = [slice(None)] * dims
            hi = [slice(None)] * dims
            lo[axis], hi[axis] = slice(0, -step), slice(step, None)
            a, b = values[tuple(lo)], values[tuple(hi)]
            pa, pb = mesh[tuple(lo)], mesh[tuple(hi)]
            best = max(best, sampled_seminorm(a.ravel(), b.ravel(), pa.reshape(-1, dims), pb.reshape(-1, dims), alpha))
    if dims == 2:
        a, b = values[:-1, :-1], values[1:, 1:]
        pa, pb = mesh[:-1, :-1], mesh[1:, 1:]
        best = max(best, sampled_seminorm(a.ravel(), b.ravel(), pa.reshape(-1, 2), pb.reshape(-1, 2), alpha))
    flat_points = mesh.reshape(-1, dims)
    flat_values = values.ravel()
    for index in range(0, len(flat_values), reference_stride):
        others = np.full(len(flat_values), flat_values[index])
        anchor = np.repeat(flat_points[index][None, :], len(flat_values), axis=0)
        best = max(best, sampled_seminorm(others, flat_values, anchor, flat_points, alpha))
    return best


def interpolation_check_samples(
    coords: List[np.ndarray],
    values: np.ndarray,
    gradients: np.ndarray,
    alpha: float,
    depth: int = 0,
    reference_stride: Optional[int] = None,
) -> InterpolationReport:
    """[f]_alpha <= 2 |f|^(1-alpha) |grad f|^alpha on a tensor grid of samples."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if any(len(c) < 2 for c in coords) or any(np.ptp(c) <= 0 for c in coords):
        raise EvaluationError("degenerate cell: need at least two distinct sample coordinates per axis")
    values = np.asarray(values, dtype=float)
    size = values.size
    stride = reference_stride or max(1, size // 256)
    seminorm = _seminorm_on_grid(coords, values, alpha, stride)
    sup_value = float(np.abs(values).max())
    grads = np.asarray(gradients, dtype=float).reshape(size, -1)
    sup_gradient = float(np.linalg.norm(grads, axis=1).max())
    rhs = 2.0 * sup_value ** (1.0 - alpha) * sup_gradient ** alpha
    margin = rhs - seminorm
    return InterpolationReport(
        alpha=alpha,
        depth=depth,
        points=size,
        seminorm=seminorm,
        sup_value=sup_value,
        sup_gradient=sup_gradient,
        rhs=rhs,
        margin=margin,
        passed=seminorm <= rhs + 1e-12,
    )


def interpolation_axes(
    handle: FunctionHandle, address: CellAddress, n: int, coarse: int = 16, refine: int = 4
) -> List[np.ndarray]:
    """Per-axis sample coordinates on cell_of(address): a uniform lattice plus the
    steepest points, part centres and plateau edges of the next ``refine`` levels."""
    cell = cell_of(address, handle.schedule)
    level = address.level
    seq = handle.sequences
    peak = handle.profile.peak
    axes = []
    for axis in range(handle.dimension):
        lo, side = float(cell.lower[axis]), float(cell.side)
        ticks = set((lo + (np.arange(coarse) + 0.5) / coarse * side).tolist())
        ticks.update((lo, lo + side))
        axes.append(ticks)
    for m in range(level, min(level + refine, n + 1)):
        a_m, s_m = float(seq.a(m)), float(seq.s(m))
        for corner in _descendant_corners(handle, address, m):
            for axis in range(handle.dimension):
                for bit in (0, 1):
                    part = float(corner[axis]) + bit * a_m / 2
                    half = a_m / 2
                    axes[axis].update(
                        (
                            part + peak * s_m,
                            part + (1 - peak) * s_m,
                            part + half - peak * s_m,
                            part + half - (1 - peak) * s_m,
                            part + s_m,
                            part + half - s_m,
                            part + half / 2,
                        )
                    )
    return [np.array(sorted(t)) for t in axes]


def _descendant_corners(handle: FunctionHandle, address: CellAddress, level: int) -> List[Tuple[Fraction, ...]]:
    """Distinct lower corners of the level-``level`` cells below cell_of(address)."""
    corners = {cell_of(address, handle.schedule).lower}
    seq = handle.sequences
    for m in range(address.level, level):
        a_m, s_m = seq.a(m), seq.s(m)
        corners = {_child_corner(corner, a_m, s_m, d) for corner in corners for d in range(handle.base)}
    return sorted(corners)


def interpolation_check(
    handle: FunctionHandle,
    n: int,
    alpha: float,
    address: Optional[CellAddress] = None,
    coarse: int = 16,
    refine: int = 4,
) -> InterpolationReport:
    """Interpolation inequality for f_n on the cell named by ``address`` (root by default)."""
    address = address or CellAddress(dimension=handle.dimension)
    coords = interpolation_axes(handle, address, n, coarse, refine)
    mesh = np.stack(np.meshgrid(*coords, indexing="ij"), axis=-1).reshape(-1, handle.dimension)
    values = handle.f_partial_array(mesh, n)
    gradients = handle.f_partial_array(mesh, n, order=1)
    shape = tuple(len(c) for c in coords)
    return interpolation_check_samples(coords, values.reshape(shape), gradients, alpha, depth=n)


# -- criticality on the 2D core --------------------------------------------

def _central_difference(handle: FunctionHandle, point: np.ndarray, step: float, depth: int) -> np.ndarray:
    probes = []
    for axis in range(2):
        offset = np.zeros(2)
        offset[axis] = step
        probes.extend([point + offset, point - offset])
    values = handle.f_partial_array(np.array(probes), depth)
    return np.array([(values[0] - values[1]) / (2 * step), (values[2] - values[3]) / (2 * step)])


def criticality_probe(
    handle: FunctionHandle,
    address: CellAddress,
    n: int,
    fd_step: Optional[float] = None,
    fd_depth: Optional[int] = None,
) -> CriticalityReport:
    """Exact grad f_n = 0 at the addressed midpoint and a certified FD bound on grad f there.

    With N = ``fd_depth`` the central difference of f_N differs from a partial
    of f_N by at most (h/2) sup|d^2 f_N| plus rounding, and that partial is
    bounded by gradient_tail_bound(n) because grad f_n vanishes at the point.
    """
    if handle.dimension != 2 or address.dimension != 2:
        raise ProbeInapplicable("criticality probes are defined for the 2D function")
    if len(address) < n:
        raise ProbeInapplicable(f"address of length {len(address)} is shorter than depth {n}")
    cell = cell_of(address, handle.schedule)
    point = cell.midpoint
    gradient = handle.f_partial(n, point, order=1)
    exact_zero = all(isinstance(g, (int, Fraction)) and g == 0 for g in gradient)

    step = fd_step if fd_step is not None else 4.0 ** -(n + 4)
    fd_depth = fd_depth if fd_depth is not None else min(handle.depth_cap, n + 4)
    if fd_depth < n:
        raise ProbeInapplicable(f"fd depth {fd_depth} must be at least {n}")
    tail = handle.gradient_tail_bound(n)
    curvature = handle.second_derivative_bound(fd_depth)
    slope = handle.gradient_tail_bound(0)
    rounding = (4 * (fd_depth + 1) * UNIT_ROUNDOFF + 2 * slope * UNIT_ROUNDOFF) / step
    fd_error = 0.5 * step * curvature + rounding + curvature * UNIT_ROUNDOFF
    if fd_error >= tail:
        raise InconclusiveProbe(
            f"fd step {step:.3e} gives error {fd_error:.3e}, not below the tail bound {tail:.3e}",
            needed_depth=n + 1,
        )
    x = np.array([float(c) for c in point])
    fd = _central_difference(handle, x, step, fd_depth)
    fd_half = _central_difference(handle, x, step / 2, fd_depth)
    richardson = (4 * fd_half - fd) / 3
    fd_norm = float(np.abs(fd).max())
    bound = tail + fd_error
    passed = exact_zero and fd_norm <= bound
    return CriticalityReport(
        address=address,
        depth=n,
        point=point,
        analytic_gradient=tuple(Fraction(g) for g in gradient),
        analytic_exact_zero=exact_zero,
        fd_step=step,
        fd_gradient=(float(fd[0]), float(fd[1])),
        fd_norm=fd_norm,
        richardson_norm=float(np.abs(richardson).max()),
        tail_bound=tail,
        fd_error=fd_error,
        bound=bound,
        passed=passed,
        error=None if passed else ("analytic gradient is not an exact zero" if not exact_zero else "fd estimate exceeds the bound"),
    )


# -- level-set components (2D) ---------------------------------------------

def level_component_scan(
    handle: FunctionHandle,
    address: CellAddress,
    level: int,
    eps: float,
    grid_res: int = DEFAULT_GRID_RES,
    samples: int = DEFAULT_FRAME_SAMPLES,
) -> Tuple[LevelComponentReport, pd.DataFrame]:
    """Frame separation at level M and the flood-filled component of {|f - f(x)| <= eps}."""
    if handle.dimension != 2 or address.dimension != 2:
        raise ProbeInapplicable("level-set probes are defined for the 2D function")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not 1 <= level < len(address):
        raise ProbeInapplicable(f"level {level} needs 1 <= M < {len(address)}")
    if address.digits[level - 1] == 0:
        raise ProbeInapplicable(f"digit at position {level} is 0")
    if not any(address.digits[level:]):
        raise ProbeInapplicable("all digits after the separation level are zero, so f(x) is the frame value")

    point = cell_of(address, handle.schedule).midpoint
    base_check = handle.f_eval(point, float(handle.tail(min(len(address) + 1, handle.depth_cap))))
    base_value = address.value()
    if base_check.radius != 0 or base_check.exact != base_value:
        raise EvaluationError(f"f at the midpoint of {address.text()} is not its digit value")
    frame_value = address.prefix(level).value()
    certified = base_value - frame_value
    threshold = float(certified) - 1e-12

    band = frame(address, level, handle.schedule)
    sample_points = frame_samples(band, samples)
    frame_values = handle.f_partial_array(sample_points, level + 1)
    separation = float(np.abs(frame_values - float(base_value)).min())

    domain = cell_of(address.prefix(level - 2), handle.schedule) if level >= 2 else RationalCell.unit(2)
    side = float(domain.side)
    step = side / grid_res
    margin = float(handle.sequences.s(level))
    if step > margin / 2:
        needed = math.ceil(2 * side / margin)
        raise InconclusiveProbe(f"grid step {step:.3e} exceeds half the frame width; use grid_res >= {needed}")
    # the lattice passes through x, so the seed node samples f(x) itself
    offsets = [((float(point[axis]) - float(domain.lower[axis])) / step) % 1.0 for axis in range(2)]
    ticks = [float(domain.lower[axis]) + (np.arange(grid_res) + offsets[axis]) * step for axis in range(2)]
    mesh = np.stack(np.meshgrid(*ticks, indexing="ij"), axis=-1).reshape(-1, 2)
    eval_depth = min(handle.depth_cap, len(address) + 2)
    values = handle.f_partial_array(mesh, eval_depth).reshape(grid_res, grid_res)
    mask = np.abs(values - float(base_value)) <= eps
    seed = tuple(
        min(grid_res - 1, int(round((float(point[axis]) - ticks[axis][0]) / step))) for axis in range(2)
    )
    if not mask[seed]:
        raise EvaluationError(f"grid node at x has |f - f(x)| = {abs(values[seed] - float(base_value)):.3e} > eps")
    labels, count = ndimage.label(mask, structure=ndimage.generate_binary_structure(2, 1))
    component = labels == labels[seed]
    rows, cols = np.nonzero(component)
    diameter = math.hypot((rows.max() - rows.min()) * step, (cols.max() - cols.min()) * step)
    logger.debug("flood fill: %d components, seed component has %d cells", count, int(component.sum()))

    cell_diam = cell_diameter(2, level, handle.schedule)
    child_diam = cell_diameter(2, level + 1, handle.schedule)
    passed = (
        separation > 0
        and certified > 0
        and eps < threshold
        and diameter <= cell_diam
        and diameter <= child_diam
    )
    report = LevelComponentReport(
        address=address,
        level=level,
        base_value=base_value,
        base_radius=Fraction(0),
        eps=eps,
        grid_res=grid_res,
        grid_step=step,
        component_size=int(component.sum()),
        component_diameter=diameter,
        cell_diameter=cell_diam,
        child_diameter=child_diam,
        frame_samples=len(sample_points),
        frame_min_separation=separation,
        certified_separation=certified,
        eps_threshold=threshold,
        passed=passed,
        error=None if passed else "component is not confined to the level cell",
    )
    raster = pd.DataFrame(
        {
            "x": mesh[:, 0],
            "y": mesh[:, 1],
            "value": values.ravel(),
            "in_component": component.ravel(),
        }
    )
    return report, raster


def level_component_probe(
    handle: FunctionHandle,
    address: CellAddress,
    level: int,
    eps: float,
    grid_res: int = DEFAULT_GRID_RES,
    samples: int = DEFAULT_FRAME_SAMPLES,
) -> LevelComponentReport:
    report, _ = level_component_scan(handle, address, level, eps, grid_res, samples)
    return report


# -- non-differentiability (1D) --------------------------------------------

def nondiff_suite(handle: FunctionHandle, probes: Iterable[Tuple[CellAddress, int]]) -> List[QuotientProbe]:
    """Run quotient probes; errors from individual probes propagate."""
    results = []
    for address, n in probes:
        outcome = handle.quotient_probe(address, n)
        if not outcome.passed:
            logger.warning("quotient probe failed at %s n=%d: %s", address.text(), n, outcome.error)
        results.append(outcome)
    return results


def digit_one_levels(address: CellAddress, max_level: int) -> List[int]:
    """Positions n <= max_level carrying digit 1."""
    return [n for n in range(1, min(max_level, len(address)) + 1) if address.digits[n - 1] == 1]

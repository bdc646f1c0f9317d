"""Smooth transition profile and the plateau bumps built from it.

Every construction level uses the same profile g(t) = e(t) / (e(t) + e(1 - t))
with e(t) = exp(-1/t), evaluated in the overflow-free form expit(1/(1-t) - 1/t).
Scalar helpers keep the plateau and the outside of the support exact (ints
0 and 1) so that callers summing exact rationals stay exact there.
"""

import logging
from fractions import Fraction
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
from scipy import optimize, special

from errors import GeometryError
from models import QUADRANT_BITS, BumpSpec, RationalCell

logger = logging.getLogger(__name__)

Real = Union[int, float, Fraction]

# slack added to the refined sup-norm constants when they are used as upper bounds
SUP_TOLERANCE = 1e-10
SUP_GRID_POINTS = 1 << 14


def transition(t, order: int = 0) -> np.ndarray:
    """Vectorised g, g' or g'' on any real input; flat outside (0, 1)."""
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    t = np.asarray(t, dtype=float)
    shape = t.shape
    t = np.atleast_1d(t)
    out = np.zeros_like(t)
    if order == 0:
        out[t >= 1.0] = 1.0
    inner = (t > 0.0) & (t < 1.0)
    if inner.any():
        ti = t[inner]
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            phi = 1.0 / ti - 1.0 / (1.0 - ti)
            g = special.expit(-phi)
            spread = g * (1.0 - g)
            w = 1.0 / ti ** 2 + 1.0 / (1.0 - ti) ** 2
            d1 = np.where(spread > 0.0, spread * w, 0.0)
            if order == 0:
                out[inner] = g
            elif order == 1:
                out[inner] = d1
            else:
                dw = -2.0 / ti ** 3 + 2.0 / (1.0 - ti) ** 3
                out[inner] = np.where(spread > 0.0, d1 * (1.0 - 2.0 * g) * w + spread * dw, 0.0)
    return out.reshape(shape)


def _refine_sup(order: int) -> Tuple[float, float]:
    grid = np.linspace(0.0, 1.0, SUP_GRID_POINTS + 1)
    values = np.abs(transition(grid, order))
    i = int(np.argmax(values))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, SUP_GRID_POINTS)]
    result = optimize.minimize_scalar(
        lambda t: -abs(float(transition(t, order))),
        bracket=(lo, grid[i], hi),
        method="golden",
        tol=1e-12,
    )
    best = max(float(values[i]), -float(result.fun))
    where = float(result.x) if -float(result.fun) >= values[i] else float(grid[i])
    return best, where


class PlateauProfile:
    """The transition g with its derivatives and sup-norm constants G1, G2."""

    def value(self, t: float) -> float:
        return float(transition(t, 0))

    def derivative(self, t: float) -> float:
        return float(transition(t, 1))

    def second_derivative(self, t: float) -> float:
        return float(transition(t, 2))

    @property
    def g1(self) -> float:
        return _sup_constants()[0]

    @property
    def g2(self) -> float:
        return _sup_constants()[1]

    @property
    def g1_upper(self) -> float:
        return self.g1 + SUP_TOLERANCE

    @property
    def g2_upper(self) -> float:
        return self.g2 + SUP_TOLERANCE

    @property
    def peak(self) -> float:
        """Argmax of g' on [0, 1]; g' is symmetric so 1 - peak is a maximiser too."""
        return _sup_constants()[2]


@lru_cache(maxsize=1)
def _sup_constants() -> Tuple[float, float, float]:
    g1, peak = _refine_sup(1)
    g2, _ = _refine_sup(2)
    logger.debug("Profile constants G1=%.12f (at t=%.6f), G2=%.12f", g1, peak, g2)
    return g1, g2, peak


@lru_cache(maxsize=1)
def default_profile() -> PlateauProfile:
    return PlateauProfile()


def _scale(x: Real) -> Union[Fraction, float]:
    return x if isinstance(x, (int, Fraction)) else float(x)


def psi_eval(spec: BumpSpec, x: Real, order: int = 0) -> Real:
    """psi_{a,b} and its first two derivatives at a scalar x.

    Plateau and outside-of-support values are returned as exact ints.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    x = _scale(x)
    ax = abs(x)
    if ax >= spec.a:
        return 0
    if ax <= spec.b:
        return 1 if order == 0 else 0
    profile = default_profile()
    width = spec.a - spec.b
    t = float((spec.a - ax) / width)
    if order == 0:
        return profile.value(t)
    if order == 1:
        sign = 1.0 if x > 0 else -1.0
        return -sign * profile.derivative(t) / float(width)
    return profile.second_derivative(t) / float(width) ** 2


def psi_array(a: float, b: float, u: np.ndarray, order: int = 0) -> np.ndarray:
    """Vectorised psi_{a,b}(u) in float64 for grid work."""
    u = np.asarray(u, dtype=float)
    width = a - b
    t = (a - np.abs(u)) / width
    if order == 0:
        return transition(t, 0)
    if order == 1:
        return -np.sign(u) * transition(t, 1) / width
    return transition(t, 2) / width ** 2


def sup_norms(spec: BumpSpec, profile: PlateauProfile = None) -> Tuple[float, float, float]:
    profile = profile or default_profile()
    width = float(spec.transition_width)
    return 1.0, profile.g1 / width, profile.g2 / width ** 2


def _check_margin(cell: RationalCell, s: Fraction, limit: Fraction) -> None:
    if not 0 < s < limit:
        raise GeometryError(f"shrink margin {s} must lie in (0, {limit}) for a cell of side {cell.side}")


def _bump_for(side: Fraction, s: Fraction) -> BumpSpec:
    return BumpSpec(a=side / 2, b=side / 2 - s)


def plateau_1d_eval(interval: RationalCell, s: Real, x: Real, order: int = 0) -> Real:
    """F_{I,s}: 1 on [lo + s, hi - s], 0 off (lo, hi)."""
    s = Fraction(s)
    _check_margin(interval, s, interval.side / 2)
    center = interval.midpoint[0]
    return psi_eval(_bump_for(interval.side, s), _scale(x) - center, order)


def plateau_2d_eval(square: RationalCell, s: Real, x: Tuple[Real, Real], order: int = 0):
    """Tensor product F_{Q,s}; order 1 gives the gradient."""
    s = Fraction(s)
    _check_margin(square, s, square.side / 2)
    spec = _bump_for(square.side, s)
    u = [_scale(xi) - ci for xi, ci in zip(x, square.midpoint)]
    v0, v1 = psi_eval(spec, u[0]), psi_eval(spec, u[1])
    if order == 0:
        return v0 * v1
    if order != 1:
        raise ValueError("plateau_2d_eval supports orders 0 and 1")
    return (psi_eval(spec, u[0], 1) * v1, v0 * psi_eval(spec, u[1], 1))


def halves(interval: RationalCell) -> Tuple[RationalCell, RationalCell]:
    lo, hi = interval.lower[0], interval.upper[0]
    center = (lo + hi) / 2
    return RationalCell(lower=(lo,), upper=(center,)), RationalCell(lower=(center,), upper=(hi,))


def quadrant(square: RationalCell, digit: int) -> RationalCell:
    half = square.side / 2
    bx, by = QUADRANT_BITS[digit]
    corner = (square.lower[0] + bx * half, square.lower[1] + by * half)
    return RationalCell.from_corner(corner, half)


def quadrant_digit(square: RationalCell, x: Tuple[Real, Real]) -> int:
    center = square.midpoint
    right, top = x[0] >= center[0], x[1] >= center[1]
    if top:
        return 0 if right else 1
    return 3 if right else 2


def step_1d_eval(interval: RationalCell, s: Real, x: Real, order: int = 0) -> Real:
    """H_{I,s} = 0 * F_{I_0,s} + 1 * F_{I_1,s}."""
    s = Fraction(s)
    _check_margin(interval, s, interval.side / 4)
    x = _scale(x)
    right = halves(interval)[1]
    if not right.lower[0] < x < right.upper[0]:
        return 0
    return plateau_1d_eval(right, s, x, order)


def step_2d_eval(square: RationalCell, s: Real, x: Tuple[Real, Real], order: int = 0):
    """H_{Q,s} = sum_k k * F_{Q_k,s}; only the quadrant containing x contributes."""
    s = Fraction(s)
    _check_margin(square, s, square.side / 4)
    x = tuple(_scale(xi) for xi in x)
    zero = 0 if order == 0 else (0, 0)
    if not square.contains(x):
        return zero
    k = quadrant_digit(square, x)
    if k == 0:
        return zero
    value = plateau_2d_eval(quadrant(square, k), s, x, order)
    if order == 0:
        return k * value
    return (k * value[0], k * value[1])

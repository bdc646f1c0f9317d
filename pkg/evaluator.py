"""Evaluation of h_n, the partial sums f_n and the limit f with certified radii.

``FunctionHandle`` bundles the dimension, the schedule and the depth cap.
Scalar methods take exact coordinates and keep every plateau term exact, so
values on plateaus come back as ``Fraction``; the ``*_array`` methods are the
float64 path for grids.
"""

import logging
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from mpmath import iv

import schedule as schedule_mod
from errors import DepthCapExceeded, EvaluationError, ProbeInapplicable, InconclusiveProbe
from geometry import (
    _as_point,
    cell_of,
    child,
    descend,
    enumerate_cells,
    frame_samples,
    locate_digits,
    z_set,
)
from models import CellAddress, CertifiedValue, Enclosure, QuotientProbe, RationalCell
from plateau import default_profile, psi_array, step_1d_eval, step_2d_eval, PlateauProfile
from schedule import iv_rational

logger = logging.getLogger(__name__)

EVAL_CAP = {1: 40, 2: 24}
CRITICAL_VALUES_CAP = 6
# rounding allowance of the float path on top of the truncation tail
FLOAT_SLACK = 1e-14
GRADIENT_TAIL_RTOL = 1e-12
MAX_SERIES_TERMS = 20000

Real = Union[int, float, Fraction]


def _exact(value) -> bool:
    return isinstance(value, (int, Fraction))


class FunctionHandle:
    """The function f = sum_n base^-n h_n for one dimension and schedule."""

    def __init__(
        self,
        dimension: int = 1,
        schedule=None,
        depth_cap: Optional[int] = None,
        profile: Optional[PlateauProfile] = None,
    ):
        if dimension not in (1, 2):
            raise EvaluationError(f"dimension must be 1 or 2, got {dimension}")
        limit = EVAL_CAP[dimension]
        depth_cap = limit if depth_cap is None else depth_cap
        if depth_cap > limit:
            raise DepthCapExceeded(depth_cap, limit, "evaluation depth")
        if depth_cap < 1:
            raise EvaluationError("depth cap must be at least 1")
        self.dimension = dimension
        self.schedule = schedule_mod.resolve(schedule)
        self.depth_cap = depth_cap
        self.profile = profile or default_profile()
        self._gradient_tails: Dict[int, float] = {}

    def __repr__(self) -> str:
        return f"FunctionHandle(dimension={self.dimension}, schedule={self.schedule.kind!r}, depth_cap={self.depth_cap})"

    @property
    def base(self) -> int:
        return 2 if self.dimension == 1 else 4

    @property
    def sequences(self):
        return self.schedule.sequences

    def tail(self, n: int) -> Fraction:
        """Bound on |f - f_n|: sum_{m>n} base^-m sup|h_m| with sup|h_m| = base - 1."""
        return Fraction(1, self.base ** n)

    def terms_for(self, tol: float) -> int:
        if not tol > 0:
            raise EvaluationError(f"tol must be positive, got {tol}")
        tol_q = Fraction(tol)
        n = 0
        while self.tail(n) > tol_q:
            n += 1
        return max(n, 1)

    def _check_level(self, n: int) -> None:
        if n < 1:
            raise EvaluationError(f"level must be >= 1, got {n}")
        if n > self.depth_cap:
            raise DepthCapExceeded(n, self.depth_cap, "evaluation depth")

    def _point(self, x) -> Tuple[Fraction, ...]:
        try:
            coords = _as_point(x)
        except ValueError as exc:
            raise EvaluationError(str(exc)) from exc
        if len(coords) != self.dimension:
            raise EvaluationError(f"expected a {self.dimension}D point, got {x!r}")
        return coords

    def _step(self, cell: RationalCell, level: int, x, order: int):
        s = self.sequences.s(level)
        if self.dimension == 1:
            return step_1d_eval(cell, s, x[0], order)
        return step_2d_eval(cell, s, x, order)

    def _check_order(self, order: int, scalar_derivative: bool) -> None:
        if order not in (0, 1):
            raise EvaluationError(f"order must be 0 or 1, got {order}")
        if order == 1 and self.dimension == 1 and not scalar_derivative:
            raise EvaluationError("f is not differentiable on the 1D core; pass scalar_derivative=True for h_n'")

    def h_eval(self, n: int, x, order: int = 0, scalar_derivative: bool = False):
        """h_n(x): the single step term whose level-n cell contains x, else 0."""
        self._check_level(n)
        self._check_order(order, scalar_derivative)
        coords = self._point(x)
        zero = 0 if order == 0 or self.dimension == 1 else (0, 0)
        if n > 1:
            digits, exit_level = locate_digits(coords, n - 1, self.schedule)
            if exit_level is not None:
                return zero
        else:
            digits = ()
        cell = cell_of(CellAddress(dimension=self.dimension, digits=digits), self.schedule)
        return self._step(cell, n, coords, order)

    def _partial(self, coords, n: int, order: int):
        digits, exit_level = locate_digits(coords, n, self.schedule)
        live_levels = n if exit_level is None else min(n, exit_level - 1)
        cell = RationalCell.unit(self.dimension)
        if order == 0 or self.dimension == 1:
            total: Real = Fraction(0)
        else:
            total = (Fraction(0), Fraction(0))
        for level in range(1, live_levels + 1):
            if level > 1:
                cell = child(cell, level - 1, digits[level - 2], self.schedule)
            weight = Fraction(1, self.base ** level)
            term = self._step(cell, level, coords, order)
            if isinstance(total, tuple):
                total = (total[0] + weight * term[0], total[1] + weight * term[1])
            else:
                total = total + weight * term
        return total, exit_level

    def f_partial(self, n: int, x, order: int = 0, scalar_derivative: bool = False):
        """f_n(x) = sum_{m<=n} base^-m h_m(x); order 1 gives the analytic gradient."""
        self._check_level(n)
        self._check_order(order, scalar_derivative)
        total, _ = self._partial(self._point(x), n, order)
        return total

    def f_eval(self, x, tol: float) -> CertifiedValue:
        """f(x) with radius tail(n); exact with radius 0 once x leaves the core."""
        n = self.terms_for(tol)
        if n > self.depth_cap:
            raise EvaluationError(f"tol={tol} is below the resolution of depth cap {self.depth_cap}")
        total, exit_level = self._partial(self._point(x), n, 0)
        if exit_level is not None:
            radius, n_used = Fraction(0), exit_level - 1
        else:
            radius, n_used = self.tail(n), n
        return CertifiedValue(
            value=float(total),
            radius=float(radius),
            n_used=n_used,
            exact=total if _exact(total) else None,
        )

    def f_core_exact(self, address: CellAddress) -> Tuple[Fraction, Fraction]:
        """(v, base^-m): on the core, f lies in [v, v + base^-m] for points with this prefix."""
        if address.dimension != self.dimension:
            raise EvaluationError(f"address dimension {address.dimension} does not match {self.dimension}")
        return address.value(), self.tail(len(address))

    def agrees_outside_core(self, n: int, points: Iterable) -> Tuple[int, bool]:
        """Check f = f_n exactly at the given points that lie outside the level-n family."""
        self._check_level(n)
        checked, agree = 0, True
        for p in points:
            coords = self._point(p)
            _, exit_level = locate_digits(coords, n, self.schedule)
            if exit_level is None or exit_level > n:
                continue
            full = self.f_eval(coords, float(self.tail(self.depth_cap)))
            partial = self.f_partial(n, coords)
            checked += 1
            if full.radius != 0 or full.exact is None or full.exact != partial:
                logger.warning("f differs from f_%d at %s", n, coords)
                agree = False
        return checked, agree

    # -- float path -------------------------------------------------------

    def _accumulate(self, points, n: int, order: int):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[1] != self.dimension:
            raise EvaluationError(f"points must have {self.dimension} columns")
        values = np.zeros(len(pts))
        grads = np.zeros((len(pts), self.dimension))
        reached = np.zeros(len(pts), dtype=int)
        for step in descend(pts, n + 1, self.schedule):
            reached = np.where(step.alive, step.level, reached)
            if step.level > n:
                break
            quarter = step.side / 4
            u = pts - (step.part_lower + quarter)
            psi = psi_array(quarter, quarter - step.margin, u)
            coef = np.where(step.alive, step.digit, 0) / float(self.base ** step.level)
            if order == 0:
                values += coef * np.prod(psi, axis=1)
                continue
            dpsi = psi_array(quarter, quarter - step.margin, u, 1)
            if self.dimension == 1:
                grads[:, 0] += coef * dpsi[:, 0]
            else:
                grads[:, 0] += coef * dpsi[:, 0] * psi[:, 1]
                grads[:, 1] += coef * psi[:, 0] * dpsi[:, 1]
        return (values if order == 0 else grads), reached

    def f_partial_array(self, points, n: int, order: int = 0) -> np.ndarray:
        """Vectorised f_n (order 0, shape (N,)) or its gradient (order 1, shape (N, dim))."""
        self._check_level(n)
        if order not in (0, 1):
            raise EvaluationError(f"order must be 0 or 1, got {order}")
        result, _ = self._accumulate(points, n, order)
        return result

    def f_eval_array(self, points, tol: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(values, radii, n_used) on the float path; radius 0 off the level-(n+1) family."""
        n = self.terms_for(tol)
        if n > self.depth_cap:
            raise EvaluationError(f"tol={tol} is below the resolution of depth cap {self.depth_cap}")
        values, reached = self._accumulate(points, n, 0)
        inside = reached > n
        radii = np.where(inside, float(self.tail(n)), 0.0) + FLOAT_SLACK
        n_used = np.where(inside, n, np.maximum(reached, 0))
        return values, radii, n_used

    # -- gradient bounds (2D) ---------------------------------------------

    def _gradient_term(self, m: int):
        """Interval bound 3 G1 4^-m / s_m on each partial of 4^-m h_m."""
        g1 = iv.mpf(self.profile.g1_upper)
        return 3 * g1 / (iv.mpf(4) ** m * self.sequences.interval_s(m))

    def _ratio_decreasing_from(self, m: int) -> bool:
        if self.schedule.kind != schedule_mod.CUSTOM:
            return True
        ratios = [self.schedule.margin_ratio(j) for j in range(m, m + 64)]
        return all(b <= a for a, b in zip(ratios, ratios[1:]))

    def gradient_tail_bound(self, n: int) -> float:
        """Certified bound sum_{m>n} 3 G1 4^-m / s_m on each partial of grad(f - f_n)."""
        if self.dimension != 2:
            raise EvaluationError("gradient_tail_bound is defined for the 2D function")
        if n < 0:
            raise EvaluationError(f"n must be >= 0, got {n}")
        if n in self._gradient_tails:
            return self._gradient_tails[n]
        total = iv.mpf(0)
        m = n + 1
        while m <= n + MAX_SERIES_TERMS:
            term = self._gradient_term(m)
            total += term
            # term(m+1)/term(m) = s_m / (4 s_{m+1})
            ratio = self.schedule.margin_ratio(m) / 4
            if ratio < 1 and self._ratio_decreasing_from(m):
                q = iv_rational(ratio)
                remainder = term * q / (1 - q)
                if float(remainder.b) <= GRADIENT_TAIL_RTOL * float(total.a):
                    bound = float((total + remainder).b)
                    logger.debug("gradient tail bound n=%d: %.6e after %d terms", n, bound, m - n)
                    self._gradient_tails[n] = bound
                    return bound
            m += 1
        raise EvaluationError(f"gradient tail series did not settle within {MAX_SERIES_TERMS} terms")

    def second_derivative_bound(self, n: int) -> float:
        """Certified sum_{m<=n} 3 G2 4^-m / s_m^2 bounding |d^2 f_n / dx_i^2|."""
        g2 = iv.mpf(self.profile.g2_upper)
        total = iv.mpf(0)
        for m in range(1, n + 1):
            s_m = self.sequences.interval_s(m)
            total += 3 * g2 / (iv.mpf(4) ** m * s_m * s_m)
        return float(total.b)

    # -- probes -----------------------------------------------------------

    def quotient_probe(self, address: CellAddress, n: int) -> QuotientProbe:
        """Certified difference quotients of f at an addressed 1D core point, scale n."""
        if self.dimension != 1 or address.dimension != 1:
            raise ProbeInapplicable("quotient probes are defined for the 1D function")
        if not 1 <= n <= len(address):
            raise ProbeInapplicable(f"level {n} needs an address of length >= {n}, got {len(address)}")
        if address.digits[n - 1] != 1:
            raise ProbeInapplicable(f"digit at position {n} is {address.digits[n - 1]}, not 1")
        self._check_level(min(n + 1, self.depth_cap))

        parent = cell_of(address.prefix(n - 1), self.schedule)
        c, b = parent.midpoint[0], parent.upper[0]
        probe_value = address.prefix(n - 1).value()
        check_tol = float(self.tail(min(n + 1, self.depth_cap)))
        for point in (c, b):
            certified = self.f_eval(point, check_tol)
            if certified.radius != 0 or certified.exact != probe_value:
                raise EvaluationError(f"f({point}) = {certified.exact} is not the digit prefix {probe_value}")

        x_cell = cell_of(address, self.schedule)
        x_lo, x_hi = x_cell.lower[0], x_cell.upper[0]
        v_deep, radius = self.f_core_exact(address)
        delta_f = Enclosure(lo=probe_value - v_deep - radius, hi=probe_value - v_deep)
        h_left = Enclosure(lo=c - x_hi, hi=c - x_lo)
        h_right = Enclosure(lo=b - x_hi, hi=b - x_lo)
        a_n, s_n, _ = schedule_mod.geometry(self.schedule, n)
        h_bound = (2 - self.schedule.alpha(n)) * a_n / 4

        left_q = delta_f / h_left
        right_q = delta_f / h_right
        checks = {
            "offsets": h_left.hi < 0 < h_right.lo,
            "offset size": max(h_left.magnitude_upper(), h_right.magnitude_upper()) <= h_bound,
            "increment": delta_f.magnitude_lower() >= Fraction(1, 2 ** n),
        }
        error = None
        if left_q.lo >= 1 and right_q.hi <= -1:
            checks["quotients"] = True
        elif left_q.hi < 1 or right_q.lo > -1:
            checks["quotients"] = False
        else:
            raise InconclusiveProbe(f"quotient enclosures at level {n} straddle +-1", needed_depth=len(address) + 4)
        failed = [name for name, ok in checks.items() if not ok]
        if failed:
            error = f"failed checks: {', '.join(failed)}"
        return QuotientProbe(
            address=address,
            level=n,
            x_enclosure=Enclosure(lo=x_lo, hi=x_hi),
            left_point=c,
            right_point=b,
            probe_value=probe_value,
            h_left=h_left,
            h_right=h_right,
            delta_f=delta_f,
            left_quotient=left_q,
            right_quotient=right_q,
            h_bound=h_bound,
            passed=not failed,
            error=error,
        )

    def critical_values_off_core(self, n: int, samples_per_frame: int = 4) -> List[Fraction]:
        """Values of f_n on the level-(n+1) plateaus and on sampled points of Z_1..Z_n."""
        if self.dimension != 2:
            raise EvaluationError("critical values off the core are computed for the 2D function")
        if n > CRITICAL_VALUES_CAP:
            raise DepthCapExceeded(n, CRITICAL_VALUES_CAP, "critical-value level")
        self._check_level(n)
        values = set()
        side = self.sequences.a(n + 1)
        for _, corner in enumerate_cells(2, n + 1, self.schedule):
            values.add(self._exact_value(n, tuple(c + side / 2 for c in corner)))
        for m in range(1, n + 1):
            for region in z_set(m, 2, self.schedule):
                for point in frame_samples(region, samples_per_frame, exact=True):
                    values.add(self._exact_value(n, point))
        logger.debug("f_%d attains %d distinct values off the core", n, len(values))
        return sorted(values)

    def _exact_value(self, n: int, point) -> Fraction:
        value = self.f_partial(n, point)
        if not _exact(value):
            raise EvaluationError(f"f_{n} at {point} is not a plateau value")
        return Fraction(value)

"""Parameter sequences alpha_n, a_n, s_n, r_n and enclosures of r = prod(1 - alpha_n).

All sequence values are exact ``Fraction`` objects. Interval versions (mpmath
``iv``) of a_n and s_n are kept alongside for the long certified series sums
in the analysis code, where exact denominators would grow without need.
"""

import logging
import math
import threading
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from mpmath import iv

from errors import ScheduleError
from models import Enclosure, ScheduleRow

logger = logging.getLogger(__name__)

INVERSE_SQUARE = "inverse-square"
HARMONIC = "harmonic"
CUSTOM = "custom"

# N starts here and doubles until the enclosure is tight enough
ENCLOSURE_START = 16
ENCLOSURE_MAX_TERMS = 1 << 20


def iv_rational(value: Fraction):
    return iv.mpf(value.numerator) / iv.mpf(value.denominator)


def iv_bounds(x) -> Tuple[Fraction, Fraction]:
    """Outward endpoints of an mpmath interval as exact rationals.

    At the default 53-bit ``iv.prec`` the endpoints are doubles, so the
    float conversion is exact.
    """
    return Fraction(float(x.a)), Fraction(float(x.b))


class AlphaSchedule:
    """Rule n -> alpha_n with 0 < alpha_n < 1.

    Custom rules may pass ``tail_bound(N)``, an upper bound for
    sum_{n>N} alpha_n; without it the limit enclosure is unavailable.
    """

    def __init__(
        self,
        kind: str = INVERSE_SQUARE,
        rule: Optional[Callable[[int], Fraction]] = None,
        tail_bound: Optional[Callable[[int], Fraction]] = None,
    ):
        if kind not in (INVERSE_SQUARE, HARMONIC, CUSTOM):
            raise ScheduleError(f"Unknown schedule kind {kind!r}")
        if kind == CUSTOM and rule is None:
            raise ScheduleError("A custom schedule needs a rule n -> alpha_n")
        self.kind = kind
        self.rule = rule
        self.tail_bound = tail_bound
        self.sequences = GeometrySequences(self)

    @classmethod
    def from_kind(cls, kind: str) -> "AlphaSchedule":
        if kind == INVERSE_SQUARE:
            return INVERSE_SQUARE_SCHEDULE
        if kind == HARMONIC:
            return HARMONIC_SCHEDULE
        raise ScheduleError(f"Schedule kind {kind!r} has no built-in rule")

    def alpha(self, n: int) -> Fraction:
        if n < 1:
            raise ScheduleError(f"alpha_n is defined for n >= 1, got {n}")
        if self.kind == INVERSE_SQUARE:
            return Fraction(1, 2 * n * n)
        if self.kind == HARMONIC:
            return Fraction(1, n + 1)
        value = Fraction(self.rule(n))
        if not 0 < value < 1:
            raise ScheduleError(f"alpha_{n} = {value} is outside (0, 1)")
        return value

    def margin_ratio(self, n: int) -> Fraction:
        """s_n / s_{n+1}, exact."""
        return self.alpha(n) / self.alpha(n + 1) * 2 / (1 - self.alpha(n))

    def __repr__(self) -> str:
        return f"AlphaSchedule({self.kind!r})"


class GeometrySequences:
    """Memoised a_n, s_n, r_n for one schedule; extended under a lock."""

    def __init__(self, schedule: AlphaSchedule):
        self.schedule = schedule
        self._lock = threading.Lock()
        # index 0 holds r_0 = 1; a and s are padded so that a[n] is a_n
        self._a: List[Fraction] = [Fraction(0), Fraction(1)]
        self._s: List[Fraction] = [Fraction(0)]
        self._r: List[Fraction] = [Fraction(1)]
        self._iv_a: list = [None, iv.mpf(1)]
        self._iv_s: list = [None]

    def _extend(self, n: int) -> None:
        with self._lock:
            while len(self._s) <= n:
                k = len(self._s)
                alpha = self.schedule.alpha(k)
                a_k = self._a[k]
                self._s.append(alpha * a_k / 4)
                self._r.append(self._r[k - 1] * (1 - alpha))
                self._a.append((1 - alpha) * a_k / 2)

    def _extend_interval(self, n: int) -> None:
        with self._lock:
            while len(self._iv_s) <= n:
                k = len(self._iv_s)
                alpha = iv_rational(self.schedule.alpha(k))
                a_k = self._iv_a[k]
                self._iv_s.append(alpha * a_k / 4)
                self._iv_a.append((1 - alpha) * a_k / 2)

    def a(self, n: int) -> Fraction:
        self._extend(n)
        return self._a[n]

    def s(self, n: int) -> Fraction:
        self._extend(n)
        return self._s[n]

    def r(self, n: int) -> Fraction:
        """Partial product over k <= n; r(0) = 1."""
        if n < 0:
            raise ScheduleError("r_n is defined for n >= 0")
        self._extend(max(n, 1))
        return self._r[n]

    def interval_s(self, n: int):
        self._extend_interval(n)
        return self._iv_s[n]


INVERSE_SQUARE_SCHEDULE = AlphaSchedule(INVERSE_SQUARE)
HARMONIC_SCHEDULE = AlphaSchedule(HARMONIC)


def resolve(schedule) -> AlphaSchedule:
    if isinstance(schedule, AlphaSchedule):
        return schedule
    if schedule is None:
        return INVERSE_SQUARE_SCHEDULE
    return AlphaSchedule.from_kind(str(schedule))


def alpha(schedule, n: int) -> Fraction:
    return resolve(schedule).alpha(n)


def geometry(schedule, n: int) -> Tuple[Fraction, Fraction, Fraction]:
    """(a_n, s_n, r_n) as exact rationals."""
    if n < 1:
        raise ScheduleError(f"geometry is defined for n >= 1, got {n}")
    seq = resolve(schedule).sequences
    return seq.a(n), seq.s(n), seq.r(n)


def schedule_table(schedule, n: int) -> List[ScheduleRow]:
    sched = resolve(schedule)
    rows = []
    for k in range(1, n + 1):
        a_k, s_k, r_k = geometry(sched, k)
        rows.append(ScheduleRow(n=k, alpha=sched.alpha(k), a=a_k, s=s_k, r=r_k))
    return rows


def core_measure(schedule, dimension: int, n: int) -> Fraction:
    """Lebesgue measure of the level-n family: 2^(n-1) a_n or 4^(n-1) a_n^2."""
    if dimension not in (1, 2):
        raise ScheduleError(f"dimension must be 1 or 2, got {dimension}")
    if n < 1:
        raise ScheduleError(f"core_measure is defined for n >= 1, got {n}")
    a_n = resolve(schedule).sequences.a(n)
    if dimension == 1:
        return 2 ** (n - 1) * a_n
    return 4 ** (n - 1) * a_n * a_n


def _power_tail(power: int, n_terms: int) -> Tuple[Fraction, Fraction]:
    """Bounds for sum_{n>N} n^-power from the trapezoid and midpoint rules."""
    first = Fraction(n_terms + 1)
    mid = Fraction(2 * n_terms + 1, 2)
    lower = 1 / ((power - 1) * first ** (power - 1)) + 1 / (2 * first ** power)
    upper = 1 / ((power - 1) * mid ** (power - 1))
    return lower, upper


def _log_tail_inverse_square(n_terms: int) -> Tuple[Fraction, Fraction]:
    """Bounds for T = sum_{n>N} log(1 - 1/(2n^2)).

    -a - a^2/2 - a^3/(3(1-a)) <= log(1-a) <= -a - a^2/2 on [0, 1).
    """
    s2_lo, s2_hi = _power_tail(2, n_terms)
    s4_lo, s4_hi = _power_tail(4, n_terms)
    _, s6_hi = _power_tail(6, n_terms)
    first_alpha = Fraction(1, 2 * (n_terms + 1) ** 2)
    cubic = s6_hi / 8 / (3 * (1 - first_alpha))
    upper = -s2_lo / 2 - s4_lo / 8
    lower = -s2_hi / 2 - s4_hi / 8 - cubic
    return lower, upper


def _log_tail_custom(schedule: AlphaSchedule, n_terms: int) -> Tuple[Fraction, Fraction]:
    if schedule.tail_bound is None:
        raise ScheduleError("custom schedule without a tail bound has no certified limit enclosure")
    tail = Fraction(schedule.tail_bound(n_terms))
    # log(1-a) >= -a/(1-a) >= -a/(1-a_max) when alpha is non-increasing past N
    return -tail / (1 - schedule.alpha(n_terms + 1)), Fraction(0)


def _enclosure_at(schedule: AlphaSchedule, n_terms: int) -> Enclosure:
    r_n = schedule.sequences.r(n_terms)
    if schedule.kind == INVERSE_SQUARE:
        t_lo, t_hi = _log_tail_inverse_square(n_terms)
    else:
        t_lo, t_hi = _log_tail_custom(schedule, n_terms)
    lo, _ = iv_bounds(iv_rational(r_n) * iv.exp(iv_rational(t_lo)))
    _, hi = iv_bounds(iv_rational(r_n) * iv.exp(iv_rational(t_hi)))
    return Enclosure(lo=lo, hi=min(hi, r_n))


def r_enclosure(schedule, tol: float, n_terms: Optional[int] = None) -> Enclosure:
    """Certified enclosure of r = lim r_n with width <= tol.

    The inverse-square schedule refines N = 16, 32, ... and returns the
    intersection of all rounds, so enclosures are nested as tol decreases.
    The harmonic schedule returns [0, r_N] with r_N = 1/(N+1).
    """
    if not tol > 0:
        raise ScheduleError(f"tol must be positive, got {tol}")
    sched = resolve(schedule)
    tol_q = Fraction(tol)
    if sched.kind == HARMONIC:
        if n_terms is None:
            n_terms = max(1, math.ceil(1.0 / tol))
        return Enclosure(lo=Fraction(0), hi=Fraction(1, n_terms + 1))

    result: Optional[Enclosure] = None
    n = ENCLOSURE_START
    while True:
        current = _enclosure_at(sched, n)
        result = current if result is None else result.intersect(current)
        logger.debug("r enclosure N=%d width=%.3e", n, float(result.width))
        if result.width <= tol_q and (n_terms is None or n >= n_terms):
            return result
        if n >= ENCLOSURE_MAX_TERMS:
            raise ScheduleError(f"could not reach width {tol} with N <= {ENCLOSURE_MAX_TERMS}")
        n *= 2


def limit_core_measure(schedule, dimension: int, tol: float = 1e-9) -> Enclosure:
    """Enclosure of r (1D) or r**2 (2D)."""
    enclosure = r_enclosure(schedule, tol)
    return enclosure ** dimension


def asymptotic_ratios(schedule, n: int, tol: float = 1e-9) -> Dict[str, Enclosure]:
    """a_n 2^n / (2r) and, for inverse-square, s_n n^2 2^n / (r/4); both tend to 1."""
    sched = resolve(schedule)
    r = r_enclosure(sched, tol)
    if r.lo <= 0:
        raise ScheduleError("ratios relative to r need r > 0")
    a_n, s_n, _ = geometry(sched, n)
    inverse_r = Enclosure(lo=1 / r.hi, hi=1 / r.lo)
    ratios = {"a": Enclosure.point(a_n * 2 ** n / 2) * inverse_r}
    if sched.kind == INVERSE_SQUARE:
        ratios["s"] = Enclosure.point(s_n * n * n * 2 ** n * 4) * inverse_r
    return ratios

import math
from fractions import Fraction
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    field_validator,
    model_validator,
)

SCHEMA_VERSION = "1.0"
QUADRANT_CONVENTION = "Q0=upper-right,Q1=upper-left,Q2=lower-left,Q3=lower-right"

# quadrant digit -> (x offset bit, y offset bit) of the half-side subsquare
QUADRANT_BITS: Dict[int, Tuple[int, int]] = {0: (1, 1), 1: (0, 1), 2: (0, 0), 3: (1, 0)}


def to_fraction(value: Any) -> Fraction:
    """Coerce ints, floats (exact binary value), "num/den" strings and mpf-like objects."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, float, str)):
        return Fraction(value)
    if isinstance(value, dict) and {"num", "den"} <= set(value):
        return Fraction(int(value["num"]), int(value["den"]))
    if hasattr(value, "man_exp"):
        man, exp = value.man_exp
        return Fraction(int(man)) * Fraction(2) ** int(exp)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def fraction_text(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


Rational = Annotated[
    Fraction,
    BeforeValidator(to_fraction),
    PlainSerializer(fraction_text, return_type=str),
]


class LabModel(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class BumpSpec(LabModel):
    """Outer and inner half-widths of the plateau bump psi_{a,b}."""
    a: Rational = Field(..., description="Outer half-width; psi vanishes outside (-a, a)")
    b: Rational = Field(..., description="Inner half-width; psi is 1 on [-b, b]")

    @model_validator(mode="after")
    def _check_widths(self) -> "BumpSpec":
        if not (0 <= self.b < self.a):
            raise ValueError(f"BumpSpec needs 0 <= b < a, got a={self.a}, b={self.b}")
        return self

    @property
    def transition_width(self) -> Fraction:
        return self.a - self.b


class RationalCell(LabModel):
    """Closed interval or square with exact rational corners."""
    lower: Tuple[Rational, ...] = Field(..., description="Lower corner, one entry per axis")
    upper: Tuple[Rational, ...] = Field(..., description="Upper corner, one entry per axis")

    @model_validator(mode="after")
    def _check_shape(self) -> "RationalCell":
        if len(self.lower) not in (1, 2) or len(self.lower) != len(self.upper):
            raise ValueError("cells are intervals or squares")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("cells must be nonempty")
        if len(self.lower) == 2 and self.upper[0] - self.lower[0] != self.upper[1] - self.lower[1]:
            raise ValueError("2D cells must be squares")
        return self

    @classmethod
    def unit(cls, dimension: int) -> "RationalCell":
        return cls(lower=(Fraction(0),) * dimension, upper=(Fraction(1),) * dimension)

    @classmethod
    def from_corner(cls, corner: Tuple[Fraction, ...], side: Fraction) -> "RationalCell":
        return cls(lower=tuple(corner), upper=tuple(c + side for c in corner))

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def side(self) -> Fraction:
        return self.upper[0] - self.lower[0]

    @property
    def midpoint(self) -> Tuple[Fraction, ...]:
        return tuple((lo + hi) / 2 for lo, hi in zip(self.lower, self.upper))

    @property
    def measure(self) -> Fraction:
        return self.side ** self.dimension

    def contains(self, point: Tuple[Fraction, ...]) -> bool:
        return all(lo <= p <= hi for lo, p, hi in zip(self.lower, point, self.upper))

    def contains_cell(self, other: "RationalCell") -> bool:
        return all(lo <= olo and ohi <= hi for lo, olo, ohi, hi in zip(self.lower, other.lower, other.upper, self.upper))


class CellAddress(LabModel):
    """Digit string selecting one child per level; an address of length m names a level-(m+1) cell."""
    dimension: Literal[1, 2] = Field(..., description="1 for intervals, 2 for squares")
    digits: Tuple[int, ...] = Field(default=(), description="Digits in base 2 (1D) or base 4 (2D)")

    @model_validator(mode="after")
    def _check_digits(self) -> "CellAddress":
        base = self.base
        bad = [d for d in self.digits if not 0 <= d < base]
        if bad:
            raise ValueError(f"digits {bad} out of range for base {base}")
        return self

    @classmethod
    def parse(cls, dimension: int, text: str) -> "CellAddress":
        cleaned = text.replace(",", "").replace(" ", "")
        if cleaned and not cleaned.isdigit():
            raise ValueError(f"address must be a digit string, got {text!r}")
        return cls(dimension=dimension, digits=tuple(int(c) for c in cleaned))

    @property
    def base(self) -> int:
        return 2 if self.dimension == 1 else 4

    @property
    def level(self) -> int:
        return len(self.digits) + 1

    def __len__(self) -> int:
        return len(self.digits)

    def prefix(self, length: int) -> "CellAddress":
        return CellAddress(dimension=self.dimension, digits=self.digits[:length])

    def value(self) -> Fraction:
        """Digit expansion sum d_i * base**-i."""
        total, scale = Fraction(0), Fraction(1)
        for d in self.digits:
            scale /= self.base
            total += d * scale
        return total

    def text(self) -> str:
        return "".join(str(d) for d in self.digits)


class Outside(LabModel):
    """The located point leaves the core at this level."""
    level: int = Field(..., description="First level whose family misses the point")


class FrameRegion(LabModel):
    """Band of width s_m between an unshrunk half/quadrant and its shrunk child."""
    level: int = Field(..., description="Construction level m of the parent cell")
    digit: int = Field(..., description="Half or quadrant digit the band belongs to")
    outer: RationalCell = Field(..., description="Unshrunk half or quadrant")
    inner: RationalCell = Field(..., description="Level-(m+1) child excluded from the band")

    @property
    def width(self) -> Fraction:
        return self.inner.lower[0] - self.outer.lower[0]

    @property
    def measure(self) -> Fraction:
        return self.outer.measure - self.inner.measure

    def contains(self, point: Tuple[Fraction, ...]) -> bool:
        if not self.outer.contains(point):
            return False
        return not all(lo < p < hi for lo, p, hi in zip(self.inner.lower, point, self.inner.upper))


class Enclosure(LabModel):
    """Closed interval [lo, hi] with exact rational endpoints."""
    lo: Rational
    hi: Rational

    @model_validator(mode="after")
    def _ordered(self) -> "Enclosure":
        if self.lo > self.hi:
            raise ValueError(f"empty enclosure [{self.lo}, {self.hi}]")
        return self

    @classmethod
    def point(cls, value: Fraction) -> "Enclosure":
        return cls(lo=value, hi=value)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, value: Union[Fraction, float, int]) -> bool:
        return self.lo <= value <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def intersect(self, other: "Enclosure") -> "Enclosure":
        return Enclosure(lo=max(self.lo, other.lo), hi=min(self.hi, other.hi))

    def magnitude_lower(self) -> Fraction:
        """Smallest |t| over the interval."""
        if self.contains_zero():
            return Fraction(0)
        return min(abs(self.lo), abs(self.hi))

    def magnitude_upper(self) -> Fraction:
        return max(abs(self.lo), abs(self.hi))

    def __add__(self, other: "Enclosure") -> "Enclosure":
        return Enclosure(lo=self.lo + other.lo, hi=self.hi + other.hi)

    def __sub__(self, other: "Enclosure") -> "Enclosure":
        return Enclosure(lo=self.lo - other.hi, hi=self.hi - other.lo)

    def __mul__(self, other: "Enclosure") -> "Enclosure":
        products = [x * y for x in (self.lo, self.hi) for y in (other.lo, other.hi)]
        return Enclosure(lo=min(products), hi=max(products))

    def __truediv__(self, other: "Enclosure") -> "Enclosure":
        if other.contains_zero():
            raise ZeroDivisionError("divisor enclosure contains zero")
        return self * Enclosure(lo=1 / other.hi, hi=1 / other.lo)

    def __pow__(self, exponent: int) -> "Enclosure":
        result = Enclosure.point(Fraction(1))
        for _ in range(exponent):
            result = result * self
        return result


class CertifiedValue(LabModel):
    """Value with a certified bound on |true - value|."""
    value: float = Field(..., description="Computed value (rounded when exact)")
    radius: float = Field(..., ge=0.0, description="Certified truncation radius")
    n_used: int = Field(..., description="Number of series terms summed")
    exact: Optional[Rational] = Field(None, description="Exact rational value when every summed term is exact")

    def contains(self, other: Union[Fraction, float]) -> bool:
        center = self.exact if self.exact is not None else self.value
        return abs(other - center) <= self.radius


class Atom(LabModel):
    location: Rational
    mass: Rational


class DiscreteMeasure(LabModel):
    """Finite atomic measure with exact rational atoms."""
    atoms: Tuple[Atom, ...] = Field(default=())
    total: Rational = Field(..., description="Sum of the atom masses")

    @model_validator(mode="after")
    def _check_atoms(self) -> "DiscreteMeasure":
        locations = [atom.location for atom in self.atoms]
        if any(b <= a for a, b in zip(locations, locations[1:])):
            raise ValueError("atom locations must be strictly increasing")
        if any(atom.mass <= 0 for atom in self.atoms):
            raise ValueError("atom masses must be positive")
        if sum((atom.mass for atom in self.atoms), Fraction(0)) != self.total:
            raise ValueError("total does not match the atom masses")
        return self

    @classmethod
    def from_pairs(cls, pairs: Dict[Fraction, Fraction]) -> "DiscreteMeasure":
        atoms = tuple(Atom(location=loc, mass=mass) for loc, mass in sorted(pairs.items()) if mass > 0)
        return cls(atoms=atoms, total=sum((atom.mass for atom in atoms), Fraction(0)))

    def normalized(self) -> "DiscreteMeasure":
        if self.total == 0:
            raise ValueError("cannot normalise a measure of zero total mass")
        atoms = tuple(Atom(location=a.location, mass=a.mass / self.total) for a in self.atoms)
        return DiscreteMeasure(atoms=atoms, total=Fraction(1))

    def __len__(self) -> int:
        return len(self.atoms)


class StratifiedEnclosure(LabModel):
    """CDF sandwich of the normalised pushforward at depth m.

    Each depth-m address carries weight base**-m on its value interval
    [v, v + base**-m]; the staircases below are the extreme CDFs compatible
    with that information.
    """
    dimension: Literal[1, 2]
    depth: int = Field(..., ge=0)

    @property
    def base(self) -> int:
        return 2 if self.dimension == 1 else 4

    @property
    def strata(self) -> int:
        return self.base ** self.depth

    def lower_cdf(self, t: Union[Fraction, int]) -> Fraction:
        t = Fraction(t)
        if t < 0:
            return Fraction(0)
        count = self.strata
        return Fraction(min(count, math.floor(t * count)), count)

    def upper_cdf(self, t: Union[Fraction, int]) -> Fraction:
        t = Fraction(t)
        if t < 0:
            return Fraction(0)
        count = self.strata
        return Fraction(min(count, math.floor(t * count) + 1), count)

    def width(self) -> Fraction:
        return Fraction(1, self.strata)

    def breakpoints(self, limit: int = 1 << 16) -> List[Fraction]:
        if self.strata > limit:
            raise ValueError(f"{self.strata} breakpoints exceed the export limit {limit}")
        return [Fraction(k, self.strata) for k in range(self.strata + 1)]

    def brackets(self, measure: DiscreteMeasure) -> bool:
        """True when the atomic CDF of a normalised measure lies inside the sandwich."""
        # the atomic CDF only jumps at atoms and the staircases only at k/B
        points = {a.location for a in measure.atoms}
        if self.strata <= 1 << 16:
            points.update(Fraction(k, self.strata) for k in range(self.strata + 1))
        running = Fraction(0)
        masses = {a.location: a.mass for a in measure.atoms}
        for t in sorted(points):
            running += masses.get(t, Fraction(0))
            if not self.lower_cdf(t) <= running <= self.upper_cdf(t):
                return False
        return True


class ReportBase(LabModel):
    schema_version: str = SCHEMA_VERSION
    quadrant_convention: str = QUADRANT_CONVENTION
    passed: bool = False
    error: Optional[str] = None


class QuotientProbe(ReportBase):
    """Certified difference quotients on both sides of an addressed core point."""
    address: CellAddress
    level: int = Field(..., description="Probed scale n, a position whose digit is 1")
    x_enclosure: Enclosure = Field(..., description="Deep cell enclosing the core point x0")
    left_point: Rational = Field(..., description="Midpoint c of the level-n cell")
    right_point: Rational = Field(..., description="Right endpoint b of the level-n cell")
    probe_value: Rational = Field(..., description="Exact f at both probe points")
    h_left: Enclosure
    h_right: Enclosure
    delta_f: Enclosure = Field(..., description="f(probe) - f(x0)")
    left_quotient: Enclosure
    right_quotient: Enclosure
    h_bound: Rational = Field(..., description="(2 - alpha_n) a_n / 4")


class PushforwardReport(ReportBase):
    dimension: Literal[1, 2]
    schedule: str
    depth: int
    measure: DiscreteMeasure = Field(..., description="Normalised atomic measure, weights base**-n")
    level_total: Rational = Field(..., description="Exact core measure of the level-(n+1) family")
    core_total: Enclosure = Field(..., description="Enclosure of the core measure r or r**2")
    ks: Rational = Field(..., description="Exact KS distance of the normalised measure to uniform")
    expected_ks: Rational
    matches_closed_form: bool


class CriticalPushforwardReport(ReportBase):
    dimension: Literal[1, 2]
    schedule: str
    depth: int
    uniform_level_mass: Rational = Field(..., description="Exact measure of the level-(n+1) core family")
    uniform_core_mass: Enclosure = Field(..., description="Enclosure of the limiting core measure")
    z_measure: DiscreteMeasure = Field(..., description="Values attained on the Z frames with exact masses")
    transition_mass: Rational = Field(..., description="Mass outside the core family and the Z frames")
    z_values_dyadic: bool
    relaxed_property_fails: bool = Field(..., description="Certified positive uniform part")


class ImageCoverReport(ReportBase):
    dimension: Literal[1, 2]
    schedule: str
    depth: int
    intervals: int
    image_measure: Rational
    core_total: Enclosure


class EqualSplitReport(ReportBase):
    dimension: Literal[1, 2]
    schedule: str
    depth: int
    fine_level: int
    masses: Tuple[Rational, ...]


class SamplerReport(ReportBase):
    dimension: Literal[1, 2]
    depth: int
    size: int
    seed: int
    statistic: float
    pvalue: float


class HolderReport(ReportBase):
    dimension: Literal[1, 2]
    schedule: str
    alpha: float = Field(..., gt=0.0, lt=1.0)
    depth: int = Field(..., description="Partial sum used for the sampled lower bound")
    strategy: str
    samples: int
    lower: float = Field(..., description="Sampled lower bound of the seminorm")
    upper: float = Field(..., description="Certified series upper bound")
    series_terms: int
    series_remainder: float


class InterpolationReport(ReportBase):
    alpha: float
    depth: int
    points: int
    seminorm: float
    sup_value: float
    sup_gradient: float
    rhs: float
    margin: float


class CriticalityReport(ReportBase):
    address: CellAddress
    depth: int
    point: Tuple[Rational, Rational]
    analytic_gradient: Tuple[Rational, Rational]
    analytic_exact_zero: bool
    fd_step: float
    fd_gradient: Tuple[float, float]
    fd_norm: float = Field(..., description="Max-norm of the central-difference gradient")
    richardson_norm: float
    tail_bound: float
    fd_error: float
    bound: float


class LevelComponentReport(ReportBase):
    address: CellAddress
    level: int = Field(..., description="Separation level M")
    base_value: Rational = Field(..., description="Exact f at the addressed cell midpoint")
    base_radius: Rational
    eps: float
    grid_res: int
    grid_step: float
    component_size: int
    component_diameter: float
    cell_diameter: float = Field(..., description="Diameter of the level-M cell")
    child_diameter: float = Field(..., description="Diameter of the level-(M+1) cell enclosing the component")
    frame_samples: int
    frame_min_separation: float
    certified_separation: Rational
    eps_threshold: float


class ScheduleRow(LabModel):
    n: int
    alpha: Rational
    a: Rational
    s: Rational
    r: Rational


class RunConfig(LabModel):
    """Validated settings shared by the command-line subcommands."""
    dimension: Literal[1, 2] = 1
    schedule: Literal["inverse-square", "harmonic"] = "inverse-square"
    eval_cap: Optional[int] = Field(None, ge=1)
    tol: float = Field(1e-6, gt=0.0)
    seed: int = 0
    output_dir: str = "output"
    output_format: Literal["csv", "json"] = "csv"
    verbose: bool = False

    @model_validator(mode="after")
    def _check_caps(self) -> "RunConfig":
        limit = 40 if self.dimension == 1 else 24
        if self.eval_cap is not None and self.eval_cap > limit:
            raise ValueError(f"eval_cap {self.eval_cap} exceeds the module limit {limit}")
        return self

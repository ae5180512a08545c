"""
Geometry, unit conventions and time representations for the expanded well

Everything downstream works in reduced units: lengths in units of the
original width a (so xi = x/a lies in [0, lambda]), times as fractions of
the revival period T = lambda^2 T1, energies in units of E1, densities as
a*rho and currents as j*m*a^2/(pi*hbar).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Union

import numpy as np
from numpy.typing import NDArray

from app.errors import GridError, InvalidModelError, InvalidTimeError

logger = logging.getLogger(__name__)

ArrayR = NDArray[np.float64]

# Largest denominator accepted when recognising lambda as a rational number
MAX_LAMBDA_DENOMINATOR = 1000
# Lattice sizes are kept below this so the FFT buffer stays small
MAX_LATTICE_SIZE = 1 << 22
# Alignment with lambda = r/s is dropped when it needs more points than this or than requested
MIN_ALIGNMENT_CAP = 1024

LambdaLike = Union[float, int, Fraction, str]


@dataclass(frozen=True)
class ReducedUnits:
    """
    Unit conventions shared by every module

    The physical constants hbar, m and a are absorbed, so only lambda
    survives as a parameter and the series phase reads exp(-2 pi i n^2 tau).
    """
    length: str = "a"
    time: str = "T = lambda^2 T1"
    energy: str = "E1 = pi^2 hbar^2 / (2 m a^2)"
    density: str = "a*rho"
    current: str = "j*m*a^2/(pi*hbar)"
    momentum: str = "p0 = pi*hbar/a"

    @staticmethod
    def t1_from_tau(tau: float, lam: float) -> float:
        """Convert a fraction of the revival period into units of T1"""
        return lam * lam * tau


REDUCED_UNITS = ReducedUnits()


@dataclass(frozen=True)
class WellModel:
    """
    Suddenly expanded infinite well of original width a and final width lambda*a

    Attributes:
        lam: Expansion factor, strictly greater than 1
        a: Original width, fixed to 1 in reduced units
        fraction: lam as an exact fraction when it has a small denominator
    """
    lam: float
    a: float = 1.0
    fraction: Optional[Fraction] = field(default=None, compare=False)

    @property
    def is_integer(self) -> bool:
        return self.fraction is not None and self.fraction.denominator == 1

    @property
    def is_rational(self) -> bool:
        return self.fraction is not None

    def __str__(self):
        if self.fraction is not None:
            return f"WellModel(lambda={self.fraction})"
        return f"WellModel(lambda={self.lam!r})"


def _recognise_fraction(value: float, exact: Optional[Fraction]) -> Optional[Fraction]:
    if exact is not None and exact.denominator <= MAX_LAMBDA_DENOMINATOR:
        return exact
    candidate = Fraction(value).limit_denominator(MAX_LAMBDA_DENOMINATOR)
    if abs(float(candidate) - value) <= 4 * np.finfo(float).eps * abs(value):
        return candidate
    return None


def make_model(lam: LambdaLike) -> WellModel:
    """
    Build a validated well model

    Args:
        lam: Expansion factor as a float, int, Fraction or string such as "3/2"

    Returns:
        WellModel: normalized model in reduced units

    Raises:
        InvalidModelError: if lam is not finite or lam <= 1
    """
    exact = None
    if isinstance(lam, str):
        try:
            exact = Fraction(lam.strip())
        except ValueError:
            try:
                value = float(lam)
            except ValueError:
                raise InvalidModelError(f"Cannot parse lambda from {lam!r}") from None
            exact = None
        else:
            value = float(exact)
    elif isinstance(lam, (Fraction, int)) and not isinstance(lam, bool):
        exact = Fraction(lam)
        value = float(exact)
    else:
        value = float(lam)

    if not math.isfinite(value):
        raise InvalidModelError(f"lambda must be finite, got {lam!r}")
    if value == 1.0:
        raise InvalidModelError(
            "lambda = 1 leaves the well unchanged: no expansion, degenerate quench")
    if value < 1.0:
        raise InvalidModelError(
            f"lambda = {value} < 1 describes a sudden compression, which is impossible: "
            "the initial state does not vanish at the new wall")

    model = WellModel(lam=value, fraction=_recognise_fraction(value, exact))
    logger.debug("Created %s", model)
    return model


@dataclass(frozen=True)
class RationalTime:
    """
    Exact fraction p/q of the revival period, reduced modulo the period

    Attributes:
        p: Numerator, 0 <= p < q
        q: Denominator, coprime with p
    """
    p: int
    q: int

    @property
    def value(self) -> float:
        return self.p / self.q

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.p, self.q)

    def reflected(self) -> "RationalTime":
        """Return 1 - tau (the time-reversed partner)"""
        return reduce_time(self.q - self.p, self.q)

    def shifted(self, delta: Union["RationalTime", Fraction, int]) -> "RationalTime":
        """Return tau + delta modulo the period"""
        if isinstance(delta, RationalTime):
            delta = delta.fraction
        total = self.fraction + Fraction(delta)
        return reduce_time(total.numerator, total.denominator)

    @classmethod
    def parse(cls, text: str) -> "RationalTime":
        """
        Parse "p/q" (or an integer) into a reduced time

        Raises:
            InvalidTimeError: for malformed text, zero denominators or negative times
        """
        try:
            value = Fraction(text.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise InvalidTimeError(f"Cannot parse rational time {text!r}: {e}") from None
        return reduce_time(value.numerator, value.denominator)

    def __str__(self):
        return f"{self.p}/{self.q}"


TimeLike = Union[RationalTime, float]


def reduce_time(p: int, q: int) -> RationalTime:
    """
    Reduce p/q to lowest terms and into the first period

    Args:
        p: Non-negative numerator
        q: Positive denominator

    Returns:
        RationalTime: coprime (p mod q, q)

    Raises:
        InvalidTimeError: if q == 0 or p < 0
    """
    p, q = int(p), int(q)
    if q == 0:
        raise InvalidTimeError("time denominator q must be non-zero")
    if q < 0:
        p, q = -p, -q
    if p < 0:
        raise InvalidTimeError(f"time numerator must be non-negative, got {p}")
    p %= q
    g = math.gcd(p, q)
    return RationalTime(p // g, q // g)


def as_time(value: Union[TimeLike, Fraction, str, int]) -> TimeLike:
    """Coerce user input into a RationalTime or a finite real tau"""
    if isinstance(value, RationalTime):
        return value
    if isinstance(value, str):
        return RationalTime.parse(value)
    if isinstance(value, (Fraction, int)) and not isinstance(value, bool):
        value = Fraction(value)
        return reduce_time(value.numerator, value.denominator)
    tau = float(value)
    if not math.isfinite(tau):
        raise InvalidTimeError(f"real time must be finite, got {value!r}")
    return tau


def time_value(tau: TimeLike) -> float:
    return tau.value if isinstance(tau, RationalTime) else float(tau)


def reflect_time(tau: TimeLike) -> TimeLike:
    """1 - tau for either time representation"""
    if isinstance(tau, RationalTime):
        return tau.reflected()
    return 1.0 - float(tau)


def shift_time(tau: TimeLike, delta: Fraction) -> TimeLike:
    """tau + delta for either time representation"""
    if isinstance(tau, RationalTime):
        return tau.shifted(delta)
    return float(tau) + float(delta)


def format_time(tau: TimeLike) -> str:
    return str(tau) if isinstance(tau, RationalTime) else repr(float(tau))


def eighth_period_cusps(lam: Union[float, Fraction]) -> List[Union[float, Fraction]]:
    """
    Candidate cusp abscissae of Psi at t = T/8

    Returns the five values {1, |lam/2 - 1|, lam/2, x4, lam - 1} where x4 is
    3 lam/2 - 1 below lam = 2 and 1 + lam/2 above. Exact when lam is a Fraction.
    """
    half = lam / 2
    x4 = 3 * half - 1 if lam < 2 else 1 + half
    return [1 + 0 * lam, abs(half - 1), half, x4, lam - 1]


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """
    Sorted sample points in [0, lambda]

    When lattice_size is set, every point equals lam * lattice_index[i] / lattice_size,
    which lets the evaluator sum the series with a single FFT.
    """
    points: ArrayR
    lam: float
    includes_endpoints: bool
    lattice_size: Optional[int] = None
    lattice_index: Optional[NDArray[np.int64]] = None

    def __len__(self):
        return len(self.points)

    @property
    def is_lattice(self) -> bool:
        return self.lattice_size is not None

    @property
    def step(self) -> float:
        """Largest spacing between consecutive points"""
        if len(self.points) < 2:
            return self.lam
        return float(np.max(np.diff(self.points)))

    def reflected(self) -> "SpatialGrid":
        """Grid of the mirror points lam - xi, in increasing order"""
        points = self.lam - self.points[::-1]
        index = None
        if self.lattice_index is not None:
            index = self.lattice_size - self.lattice_index[::-1]
            points = self.lam * index / self.lattice_size
        points = np.clip(points, 0.0, self.lam)
        return SpatialGrid(points, self.lam, self.includes_endpoints, self.lattice_size, index)

    def same_as(self, other: "SpatialGrid") -> bool:
        return (self.lam == other.lam and len(self) == len(other)
                and np.array_equal(self.points, other.points))


def _validate_points(points: ArrayR, lam: float):
    if points.size == 0:
        raise GridError("grid is empty")
    if not np.all(np.isfinite(points)):
        raise GridError("grid contains non-finite points")
    if points[0] < 0.0 or points[-1] > lam:
        raise GridError(f"grid points must lie within [0, {lam}]")
    if np.any(np.diff(points) <= 0.0):
        raise GridError("grid points must be strictly increasing")


def make_grid(model: WellModel, n_points: int, include_endpoints: bool = True) -> SpatialGrid:
    """
    Uniform lattice grid over [0, lambda] aligned with the structural points

    The lattice size is a multiple of 16 and, for rational lambda = r/s, of 2r,
    so the T/8 cusp abscissae, the integers and lambda/2^k all fall on grid
    points. Those abscissae are written back as exactly computed floats. A
    large numerator would inflate the lattice far beyond the requested size;
    then only the multiple of 16 is kept.

    Args:
        model: Well model
        n_points: Minimum number of points (the lattice may round up)
        include_endpoints: Whether xi = 0 and xi = lambda are included

    Returns:
        SpatialGrid: lattice grid

    Raises:
        GridError: for fewer than 3 points
    """
    if n_points < 3:
        raise GridError(f"a grid needs at least 3 points, got {n_points}")
    base = 16
    if model.fraction is not None:
        aligned = math.lcm(base, 2 * model.fraction.numerator)
        if aligned <= max(n_points - 1, MIN_ALIGNMENT_CAP):
            base = aligned
        else:
            logger.info("Lattice alignment with lambda=%s needs %d points; using %d requested points "
                        "without it", model.fraction, aligned, n_points)
    size = base * max(1, math.ceil((n_points - 1) / base))
    index = np.arange(0 if include_endpoints else 1,
                      size + 1 if include_endpoints else size, dtype=np.int64)
    points = model.lam * index / size
    if include_endpoints:
        points[0] = 0.0
        points[-1] = model.lam

    if model.fraction is not None:
        lam = model.fraction
        for x in eighth_period_cusps(lam):
            if not (0 < x < lam):
                continue
            j = x * size / lam
            if j.denominator == 1:
                points[int(j) - int(index[0])] = float(x)

    logger.debug("Built lattice grid of %d points (M=%d) for %s", len(points), size, model)
    return SpatialGrid(points, model.lam, include_endpoints, size, index)


def grid_from_points(model: WellModel, xs: Iterable[float]) -> SpatialGrid:
    """
    Wrap explicit sample points, detecting a lattice when they allow one

    Args:
        model: Well model
        xs: Strictly increasing points in [0, lambda]

    Returns:
        SpatialGrid: lattice-backed when every point is a small rational multiple of lambda
    """
    points = np.asarray(list(xs), dtype=float)
    _validate_points(points, model.lam)
    includes = bool(points[0] == 0.0 and points[-1] == model.lam)

    if model.fraction is not None:
        ratios = []
        for x in points:
            r = Fraction(float(x)).limit_denominator(10 ** 6) / model.fraction
            if abs(float(model.fraction * r) - x) > 4 * np.finfo(float).eps * max(1.0, model.lam):
                break
            ratios.append(r)
        else:
            size = 1
            for r in ratios:
                size = math.lcm(size, r.denominator)
            if size <= MAX_LATTICE_SIZE:
                index = np.array([int(r * size) for r in ratios], dtype=np.int64)
                return SpatialGrid(points, model.lam, includes, size, index)
    return SpatialGrid(points, model.lam, includes)

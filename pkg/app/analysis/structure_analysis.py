"""
Structure detection on sampled profiles

Plateaux, cusps and fragments of the density, the peak-count scans behind the
fragmentation threshold, and the series-against-closed-form comparison.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import simpson
from scipy.ndimage import label
from scipy.optimize import minimize_scalar
from scipy.signal import find_peaks

from app.errors import GridError, GridMismatchError, UnderResolvedGridError
from app.physics.evolution import (CurrentProfile, DensityProfile, WaveField, density,
                                   evaluate_wavefunction)
from app.physics.model import TimeLike, WellModel, make_grid, make_model, reduce_time
from app.physics.spectral import build_spectral_set
from app.util.parallel import parallel_map

logger = logging.getLogger(__name__)

ArrayR = NDArray[np.float64]

MIN_POINTS_PER_WIDTH = 20
DEFAULT_MIN_WIDTH = 0.05
CLOSED_FORM_TOLERANCE = 1e-10
DEFAULT_KAPPA = 20.0
DEFAULT_ZERO_TOLERANCE = 1e-8
DEFAULT_SHAPE_TOLERANCE = 1e-4
PEAK_PROMINENCE = 0.1


@dataclass(frozen=True)
class Plateau:
    lo: float
    hi: float
    value: float
    max_deviation: float

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class PlateauReport:
    """Maximal intervals on which the density stays within tolerance of a constant"""
    plateaux: Tuple[Plateau, ...]
    tolerance: float
    min_width: float

    def mask(self, points: ArrayR) -> NDArray[np.bool_]:
        """Grid points that belong to a reported plateau"""
        inside = np.zeros(points.shape, dtype=bool)
        for p in self.plateaux:
            inside |= (points >= p.lo) & (points <= p.hi)
        return inside

    def as_dict(self) -> dict:
        return {
            "tolerance": self.tolerance,
            "min_width": self.min_width,
            "plateaux": [{"lo": p.lo, "hi": p.hi, "value": p.value,
                          "max_deviation": p.max_deviation} for p in self.plateaux],
        }


def default_plateau_tolerance(profile: DensityProfile) -> float:
    """10 x error bound for series profiles, 1e-10 for exact ones"""
    if profile.source == "closed" or profile.error_bound <= 0:
        return CLOSED_FORM_TOLERANCE
    return 10.0 * profile.error_bound


def _farthest_flat_end(values: ArrayR, tol: float) -> NDArray[np.int64]:
    """For every start i, the last index j such that max - min of values[i..j] <= tol"""
    n = len(values)
    ends = np.empty(n, dtype=np.int64)
    highs: deque = deque()
    lows: deque = deque()
    j = 0
    for i in range(n):
        if j < i:
            j = i
        while j < n:
            v = values[j]
            top = max(v, values[highs[0]]) if highs else v
            bottom = min(v, values[lows[0]]) if lows else v
            if top - bottom > tol:
                break
            while highs and values[highs[-1]] <= v:
                highs.pop()
            highs.append(j)
            while lows and values[lows[-1]] >= v:
                lows.pop()
            lows.append(j)
            j += 1
        ends[i] = j - 1
        if highs and highs[0] == i:
            highs.popleft()
        if lows and lows[0] == i:
            lows.popleft()
    return ends


def detect_plateaux(profile: DensityProfile, tol: Optional[float] = None,
                    min_width: float = DEFAULT_MIN_WIDTH) -> PlateauReport:
    """
    Find maximal intervals where the sampled density is constant within tol

    Windows are grown greedily from the left: each start is extended as far as
    the max - min spread allows, and windows at least min_width wide are kept.

    Args:
        profile: Sampled density
        tol: Spread tolerance, defaulting to default_plateau_tolerance(profile)
        min_width: Smallest reported width, in units of a

    Raises:
        UnderResolvedGridError: with fewer than 20 grid points per min_width
    """
    xs = profile.grid.points
    if len(xs) < 2:
        raise GridError("plateau detection needs at least two grid points")
    step = float(np.max(np.diff(xs)))
    if min_width / step < MIN_POINTS_PER_WIDTH:
        raise UnderResolvedGridError(
            f"grid step {step:.3g} gives {min_width / step:.1f} points per min_width "
            f"{min_width}; at least {MIN_POINTS_PER_WIDTH} are needed")
    tol = default_plateau_tolerance(profile) if tol is None else tol
    values = profile.values
    ends = _farthest_flat_end(values, tol)

    found: List[Plateau] = []
    i = 0
    while i < len(xs):
        j = int(ends[i])
        if xs[j] - xs[i] >= min_width:
            window = values[i:j + 1]
            value = float(np.median(window))
            found.append(Plateau(float(xs[i]), float(xs[j]), value,
                                 float(np.max(np.abs(window - value)))))
            i = j + 1
        else:
            i += 1
    logger.debug("Found %d plateaux (tol=%.2e, min_width=%s)", len(found), tol, min_width)
    return PlateauReport(tuple(found), tol, min_width)


@dataclass(frozen=True)
class CuspReport:
    """
    Cusp abscissae found on a uniform grid

    Attributes:
        density_cusps: points where d(rho)/dxi jumps
        psi_kinks: points where dPsi/dxi jumps (needs the source wavefunction)
        uncertainty: half a grid step
        kappa: detection threshold relative to the median second difference
    """
    density_cusps: Tuple[float, ...]
    psi_kinks: Tuple[float, ...]
    uncertainty: float
    kappa: float

    @property
    def abscissae(self) -> List[float]:
        """Union of density cusps and wavefunction kinks"""
        merged: List[float] = []
        for x in sorted(self.density_cusps + self.psi_kinks):
            if merged and x - merged[-1] <= 3.0 * self.uncertainty:
                continue
            merged.append(x)
        return merged

    def mask(self, points: ArrayR) -> NDArray[np.bool_]:
        flagged = np.zeros(points.shape, dtype=bool)
        for x in self.abscissae:
            flagged |= np.abs(points - x) <= self.uncertainty
        return flagged

    def as_dict(self) -> dict:
        return {"density_cusps": list(self.density_cusps), "psi_kinks": list(self.psi_kinks),
                "abscissae": self.abscissae, "uncertainty": self.uncertainty,
                "kappa": self.kappa}


def _kinks(values: np.ndarray, xs: ArrayR, noise: float, kappa: float) -> Tuple[float, ...]:
    """Interior points whose |second difference| stands out from the median curvature"""
    d2 = np.abs(values[:-2] - 2.0 * values[1:-1] + values[2:])
    if d2.size == 0:
        return ()
    scale = float(np.max(d2))
    if scale <= 0.0:
        return ()
    active = d2 > max(noise, 1e-9 * scale)
    if not np.any(active):
        return ()
    threshold = kappa * float(np.median(d2[active]))
    hits = np.flatnonzero(active & (d2 > threshold))
    points: List[float] = []
    group: List[int] = []
    for k in hits:
        if group and k != group[-1] + 1:
            points.append(float(xs[1 + max(group, key=lambda g: d2[g])]))
            group = []
        group.append(int(k))
    if group:
        points.append(float(xs[1 + max(group, key=lambda g: d2[g])]))
    return tuple(points)


def detect_cusps(profile: DensityProfile, kappa: float = DEFAULT_KAPPA) -> CuspReport:
    """
    Locate cusps from centered second differences on a uniform grid

    A point is reported when its |second difference| exceeds kappa times the
    median over the points carrying curvature. A kink of Psi only shows in the
    density where Re(Psi* dPsi) jumps, so when the profile keeps its source
    wavefunction the kinks of Psi are reported alongside.

    Raises:
        GridError: if the grid is not uniform
    """
    xs = profile.grid.points
    steps = np.diff(xs)
    if len(xs) < 3 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise GridError("cusp detection needs a uniform grid with at least three points")
    half_step = 0.5 * float(steps[0])

    cusps = _kinks(profile.values, xs, 4.0 * profile.error_bound, kappa)
    kinks: Tuple[float, ...] = ()
    if profile.wave_field is not None:
        wave = profile.wave_field
        kinks = _kinks(wave.values, xs, 4.0 * wave.error_bound, kappa)
    logger.debug("Cusps: density %s, psi %s", cusps, kinks)
    return CuspReport(cusps, kinks, half_step, kappa)


@dataclass(frozen=True)
class Fragment:
    lo: float
    hi: float
    mass: float
    centroid: float
    shape_distance: float


@dataclass(frozen=True)
class FragmentReport:
    """
    Connected components of {a*rho > zero_tol}

    Attributes:
        time: Time of the profile
        fragments: Components ordered along the well
        zero_tol: Threshold defining the support
        weight: Scale of the initial density each component was matched to
        peak_count: Number of prominent density maxima
    """
    time: TimeLike
    fragments: Tuple[Fragment, ...]
    zero_tol: float
    weight: float
    peak_count: int

    @property
    def count(self) -> int:
        return len(self.fragments)

    @property
    def total_mass(self) -> float:
        return float(sum(f.mass for f in self.fragments))

    @property
    def max_shape_distance(self) -> float:
        return max((f.shape_distance for f in self.fragments), default=math.inf)

    def complete(self, shape_tol: float = DEFAULT_SHAPE_TOLERANCE) -> bool:
        """Every peak is its own component and matches the scaled initial density"""
        return (self.count > 0 and self.count == self.peak_count
                and self.max_shape_distance <= shape_tol)

    def mask(self, points: ArrayR) -> NDArray[np.bool_]:
        inside = np.zeros(points.shape, dtype=bool)
        for f in self.fragments:
            inside |= (points >= f.lo) & (points <= f.hi)
        return inside

    def as_dict(self) -> dict:
        return {"zero_tol": self.zero_tol, "weight": self.weight, "peak_count": self.peak_count,
                "total_mass": self.total_mass,
                "fragments": [{"lo": f.lo, "hi": f.hi, "mass": f.mass, "centroid": f.centroid,
                               "shape_distance": f.shape_distance} for f in self.fragments]}


def _scaled_initial(xs: ArrayR, start: float, weight: float) -> ArrayR:
    """weight * 2 sin^2(pi (xi - start)) on [start, start + 1], zero elsewhere"""
    inside = (xs >= start) & (xs <= start + 1.0)
    return np.where(inside, weight * 2.0 * np.sin(np.pi * (xs - start)) ** 2, 0.0)


def _shape_distance(xs: ArrayR, values: ArrayR, weight: float, candidates: Sequence[float],
                    centroid: float) -> float:
    """Smallest L2 distance to the scaled initial density over translations"""
    def squared(start: float) -> float:
        diff = values - _scaled_initial(xs, start, weight)
        return float(simpson(diff * diff, x=xs))

    guess = centroid - 0.5
    result = minimize_scalar(squared, bounds=(guess - 0.05, guess + 0.05), method="bounded",
                             options={"xatol": 1e-12})
    best = min([float(result.fun)] + [squared(s) for s in candidates])
    return math.sqrt(max(best, 0.0))


def count_peaks(values: ArrayR, prominence: float = PEAK_PROMINENCE) -> int:
    """Maxima whose prominence exceeds the given fraction of the global maximum"""
    top = float(np.max(values, initial=0.0))
    if top <= 0:
        return 0
    padded = np.concatenate(([0.0], values, [0.0]))
    peaks, _ = find_peaks(padded, prominence=prominence * top)
    return len(peaks)


def detect_fragments(profile: DensityProfile, zero_tol: float = DEFAULT_ZERO_TOLERANCE,
                     weight: Optional[float] = None) -> FragmentReport:
    """
    Split the density into connected components and compare each to a scaled initial density

    Args:
        profile: Sampled density
        zero_tol: Values at or below it count as zero
        weight: Scale of the reference initial density; 1/(number of components) by default

    Returns:
        FragmentReport with per-component mass, centroid and shape distance
    """
    xs = profile.grid.points
    values = profile.values
    labels, count = label(values > zero_tol)
    weight = (1.0 / count if count else 1.0) if weight is None else weight

    fragments = []
    for k in range(1, count + 1):
        idx = np.flatnonzero(labels == k)
        first, last = max(int(idx[0]) - 1, 0), min(int(idx[-1]) + 1, len(xs) - 1)
        seg_x = xs[first:last + 1]
        seg_v = np.where(labels[first:last + 1] == k, values[first:last + 1], 0.0)
        mass = float(simpson(seg_v, x=seg_x)) if len(seg_x) > 1 else 0.0
        centroid = float(simpson(seg_x * seg_v, x=seg_x) / mass) if mass > 0 else float(seg_x[0])
        window = (xs >= seg_x[0] - 1.0) & (xs <= seg_x[-1] + 1.0)
        win_v = np.where(labels[window] == k, values[window], 0.0)
        distance = _shape_distance(xs[window], win_v, weight,
                                   (float(seg_x[0]), float(seg_x[-1]) - 1.0), centroid)
        fragments.append(Fragment(float(seg_x[0]), float(seg_x[-1]), mass, centroid, distance))

    report = FragmentReport(profile.time, tuple(fragments), zero_tol, weight, count_peaks(values))
    logger.debug("Found %d fragments, %d peaks, total mass %.9f", report.count,
                 report.peak_count, report.total_mass)
    return report


def expected_peak_count(p: int, divisor: int) -> int:
    """Peaks predicted at t = pT/M above threshold: q/2 for even q, q for odd q, q = M/gcd(p, M)"""
    q = divisor // math.gcd(p, divisor)
    return q // 2 if q % 2 == 0 else q


def conjecture_scan(model: WellModel, divisor: int, p: int, epsilon: float = 1e-5,
                    grid_points: int = 4096,
                    zero_tol: float = DEFAULT_ZERO_TOLERANCE) -> FragmentReport:
    """
    Fragment report of the series density at tau = p/M

    Args:
        model: Well model
        divisor: M
        p: Numerator, 1 <= p <= M
        epsilon: Series truncation tolerance
        grid_points: Grid size
        zero_tol: Support threshold
    """
    if not 1 <= p <= divisor:
        raise ValueError(f"scan numerator must satisfy 1 <= p <= M, got p={p}, M={divisor}")
    tau = reduce_time(p, divisor)
    spectral_set = build_spectral_set(model, epsilon)
    profile = density(evaluate_wavefunction(spectral_set, make_grid(model, grid_points), tau))
    report = detect_fragments(profile, zero_tol)
    expected = expected_peak_count(p, divisor)
    if report.peak_count != expected and report.complete():
        logger.warning("lambda=%s tau=%s/%s: %d peaks, expected %d", model.lam, p, divisor,
                       report.peak_count, expected)
    return report


@dataclass(frozen=True)
class ThresholdEstimate:
    divisor: int
    p: int
    threshold: Optional[float]
    entries: Tuple[Tuple[float, FragmentReport], ...] = field(repr=False)


def estimate_threshold(lambdas: Sequence[float], divisor: int, p: int = 1,
                       epsilon: float = 1e-5, grid_points: int = 4096,
                       shape_tol: float = DEFAULT_SHAPE_TOLERANCE) -> ThresholdEstimate:
    """
    Smallest swept lambda from which every larger swept lambda fragments completely

    Returns:
        ThresholdEstimate with threshold None when the largest lambda is not complete
    """
    ordered = sorted(float(lam) for lam in lambdas)
    reports = parallel_map(
        lambda lam: conjecture_scan(make_model(lam), divisor, p, epsilon, grid_points), ordered)
    return threshold_from_reports(zip(ordered, reports), divisor, p, shape_tol)


def threshold_from_reports(entries: Iterable[Tuple[float, FragmentReport]], divisor: int,
                           p: int = 1,
                           shape_tol: float = DEFAULT_SHAPE_TOLERANCE) -> ThresholdEstimate:
    """Threshold estimate from (lambda, report) pairs that were already scanned at tau = p/M"""
    ordered = tuple(sorted(((float(lam), report) for lam, report in entries),
                           key=lambda entry: entry[0]))
    threshold = None
    for lam, report in reversed(ordered):
        if not report.complete(shape_tol):
            break
        threshold = lam
    logger.info("Threshold estimate for tau=%d/%d: %s", p, divisor, threshold)
    return ThresholdEstimate(divisor, p, threshold, ordered)


@dataclass(frozen=True)
class ComparisonReport:
    """Deviation of a series profile from its closed form"""
    sup_norm: float
    l2_norm: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.sup_norm <= self.bound

    def as_dict(self) -> dict:
        return {"sup_norm": self.sup_norm, "l2_norm": self.l2_norm, "bound": self.bound,
                "passed": self.passed}


Sampled = Union[WaveField, DensityProfile, CurrentProfile]

ROUND_OFF_SLACK = 1e-12


def compare(series_profile: Sampled, closed_profile: Sampled,
            bound: Optional[float] = None) -> ComparisonReport:
    """
    Sup-norm and L2 deviation between a series profile and a closed-form one

    Args:
        series_profile: Profile from the truncated series
        closed_profile: Exact profile on the same grid
        bound: Accepted sup-norm; defaults to the series error bound

    Raises:
        GridMismatchError: if the two grids differ
    """
    if not series_profile.grid.same_as(closed_profile.grid):
        raise GridMismatchError("compare needs both profiles on the same grid")
    diff = np.abs(np.asarray(series_profile.values) - np.asarray(closed_profile.values))
    if bound is None:
        bound = getattr(series_profile, "error_bound", 0.0)
    xs = series_profile.grid.points
    l2 = math.sqrt(float(simpson(diff * diff, x=xs))) if len(xs) > 1 else float(diff.max())
    return ComparisonReport(float(diff.max(initial=0.0)), l2, float(bound) + ROUND_OFF_SLACK)

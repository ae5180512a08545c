"""
Truncated Gauss-series evaluation of the wavefunction, density and current

The state after the quench is
    sqrt(a) Psi(xi, tau) = sum_n c_n sqrt(2/lam) sin(n pi xi/lam) exp(-2 pi i n^2 tau),
which is the two-sided series with the +n and -n terms already paired.
Rational times use a table of q-th roots of unity indexed by (n^2 p) mod q.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import simpson

from app.errors import GridError, InvalidTimeError
from app.physics.model import (RationalTime, SpatialGrid, TimeLike, as_time, reflect_time,
                               shift_time, time_value)
from app.physics.spectral import SpectralSet
from app.util.parallel import parallel_map

logger = logging.getLogger(__name__)

ArrayR = NDArray[np.float64]
ArrayC = NDArray[np.complex128]

Smoothing = Literal["none", "sigma"]

# Terms per block when folding onto a lattice
LATTICE_CHUNK = 1 << 20
# Upper bound on (terms x points) per block for direct summation
DIRECT_BLOCK = 1 << 22
# q must keep (n mod q)^2 inside int64
MAX_DENOMINATOR = 1 << 31
# n^2 must stay exactly representable as a float64 on the real-time path
MAX_REAL_TIME_LEVEL = 94_000_000
_SPLIT = float(1 << 26)


@dataclass(frozen=True, eq=False)
class WaveField:
    """
    Samples of sqrt(a) Psi(xi, tau) on a grid

    Attributes:
        grid: Sample points
        values: Complex wavefunction values
        time: Rational or real fraction of the period
        error_bound: Sup-norm truncation bound inherited from the spectral set
        lam: Expansion factor
        n_max: Number of series terms used
    """
    grid: SpatialGrid
    values: ArrayC
    time: TimeLike
    error_bound: float
    lam: float
    n_max: int

    def norm(self) -> float:
        """Simpson quadrature of |Psi|^2 over the grid"""
        return float(simpson(np.abs(self.values) ** 2, x=self.grid.points))


@dataclass(frozen=True, eq=False)
class DensityProfile:
    """
    Samples of a*rho on a grid

    wave_field keeps the source wavefunction when there is one, so that cusp
    analysis can fall back to derivative jumps of Psi.
    """
    grid: SpatialGrid
    values: ArrayR
    time: TimeLike
    lam: float
    error_bound: float = 0.0
    source: str = "series"
    wave_field: Optional[WaveField] = field(default=None, repr=False)
    n_max: int = 0

    def integral(self) -> float:
        return float(simpson(self.values, x=self.grid.points))


@dataclass(frozen=True, eq=False)
class CurrentProfile:
    """
    Samples of the reduced current j*m*a^2/(pi*hbar)

    Truncated derivative series ring near the jumps of a piecewise-constant
    current, so comparisons should go through interval_median.
    """
    grid: SpatialGrid
    values: ArrayR
    time: TimeLike
    lam: float
    smoothing: Smoothing = "none"
    piecewise_constant_expected: bool = True
    n_max: int = 0

    def interval_median(self, lo: float, hi: float) -> float:
        """Median of the samples strictly inside (lo, hi)"""
        mask = (self.grid.points > lo) & (self.grid.points < hi)
        if not np.any(mask):
            raise GridError(f"no grid points inside ({lo}, {hi})")
        return float(np.median(self.values[mask]))


def _split24(x: float) -> Tuple[float, float, float]:
    """Split x into three pieces that each fit a float32 mantissa"""
    first = float(np.float32(x))
    rest = x - first
    second = float(np.float32(rest))
    return first, second, rest - second


def _phase_fraction_real(n: NDArray[np.int64], tau: float) -> ArrayR:
    """
    frac(n^2 tau) for a real tau, with compensated products

    n^2 is split at 2^26 and tau into 24-bit pieces so that every partial
    product is exact in float64; only the final sum is rounded.
    """
    n2 = n * n
    high, low = np.divmod(n2, 1 << 26)
    high = high.astype(np.float64)
    low = low.astype(np.float64)
    frac = np.zeros(n.shape, dtype=np.float64)
    for piece in _split24(tau % 1.0):
        if piece == 0.0:
            continue
        frac += ((high * piece) % 1.0) * _SPLIT % 1.0
        frac += (low * piece) % 1.0
    return frac % 1.0


class SeriesEvaluator:
    """
    Sums the truncated series for Psi and its xi-derivative on a grid
    """

    def __init__(self, spectral_set: SpectralSet):
        """
        Initialize the evaluator

        Args:
            spectral_set: Coefficients and truncation bound to sum
        """
        self.spectral_set = spectral_set
        self.lam = spectral_set.lam
        self._roots_cache: Dict[int, ArrayC] = {}

    def _roots(self, q: int) -> ArrayC:
        table = self._roots_cache.get(q)
        if table is None:
            table = np.exp(-2j * np.pi * np.arange(q, dtype=np.float64) / q)
            self._roots_cache[q] = table
        return table

    def phases(self, n: NDArray[np.int64], tau: TimeLike) -> ArrayC:
        """exp(-2 pi i n^2 tau) for a block of level indices"""
        if isinstance(tau, RationalTime):
            if tau.q >= MAX_DENOMINATOR:
                raise InvalidTimeError(f"time denominator {tau.q} is too large")
            if tau.p == 0:
                return np.ones(n.shape, dtype=np.complex128)
            r = n % tau.q
            index = (r * r % tau.q) * tau.p % tau.q
            return self._roots(tau.q)[index]
        if n.size and n[-1] > MAX_REAL_TIME_LEVEL:
            raise InvalidTimeError(
                f"real-time phases are limited to n <= {MAX_REAL_TIME_LEVEL}; use a rational time")
        return np.exp(-2j * np.pi * _phase_fraction_real(n, float(tau)))

    def _weights(self, start: int, stop: int, tau: TimeLike, gradient: bool,
                 smoothing: Smoothing) -> Tuple[NDArray[np.int64], ArrayC, Optional[ArrayC]]:
        n = np.arange(start, stop, dtype=np.int64)
        amplitude = self.spectral_set.coefficients[start - 1:stop - 1] * self.spectral_set.basis_factor
        w = amplitude * self.phases(n, tau)
        dw = None
        if gradient:
            dw = w * (n * (np.pi / self.lam))
            if smoothing == "sigma":
                dw = dw * np.sinc(n / self.spectral_set.n_max)
        return n, w, dw

    def _chunks(self, size: int) -> List[Tuple[int, int]]:
        n_max = self.spectral_set.n_max
        return [(s, min(s + size, n_max + 1)) for s in range(1, n_max + 1, size)]

    def evaluate(self, grid: SpatialGrid, tau: TimeLike, gradient: bool = False,
                 smoothing: Smoothing = "none") -> Tuple[ArrayC, Optional[ArrayC]]:
        """
        Sum the series on a grid

        Args:
            grid: Sample points in [0, lambda]
            tau: Rational or real fraction of the period
            gradient: Also return d/dxi of sqrt(a) Psi
            smoothing: "sigma" multiplies derivative terms by sinc(n/n_max)

        Returns:
            tuple: (values, derivative or None)
        """
        if grid.lam != self.lam:
            raise GridError(f"grid built for lambda={grid.lam}, series for lambda={self.lam}")
        if grid.points[0] < 0.0 or grid.points[-1] > self.lam:
            raise GridError(f"grid points must lie within [0, {self.lam}]")
        if grid.is_lattice:
            return self._evaluate_lattice(grid, tau, gradient, smoothing)
        return self._evaluate_direct(grid, tau, gradient, smoothing)

    def _evaluate_lattice(self, grid, tau, gradient, smoothing):
        # On xi_j = lam j/M, sin(n pi xi_j/lam) only depends on n mod 2M: fold, then one FFT.
        size = 2 * grid.lattice_size

        def fold(bounds):
            n, w, dw = self._weights(bounds[0], bounds[1], tau, gradient, smoothing)
            k = n % size
            bins = np.bincount(k, weights=w.real, minlength=size) \
                + 1j * np.bincount(k, weights=w.imag, minlength=size)
            dbins = None
            if gradient:
                dbins = np.bincount(k, weights=dw.real, minlength=size) \
                    + 1j * np.bincount(k, weights=dw.imag, minlength=size)
            return bins, dbins

        parts = parallel_map(fold, self._chunks(LATTICE_CHUNK))
        bins = np.zeros(size, dtype=np.complex128)
        dbins = np.zeros(size, dtype=np.complex128) if gradient else None
        for b, db in parts:
            bins += b
            if gradient:
                dbins += db

        j = grid.lattice_index
        mirror = (size - j) % size
        f = size * np.fft.ifft(bins)
        values = (f[j] - f[mirror]) / 2j
        derivative = None
        if gradient:
            g = size * np.fft.ifft(dbins)
            derivative = (g[j] + g[mirror]) / 2.0
        return values, derivative

    def _evaluate_direct(self, grid, tau, gradient, smoothing):
        k = grid.points * (np.pi / self.lam)
        block = max(1024, DIRECT_BLOCK // max(1, len(k)))

        def accumulate(bounds):
            n, w, dw = self._weights(bounds[0], bounds[1], tau, gradient, smoothing)
            angles = np.outer(n.astype(np.float64), k)
            values = w @ np.sin(angles)
            derivative = dw @ np.cos(angles) if gradient else None
            return values, derivative

        parts = parallel_map(accumulate, self._chunks(block))
        values = np.zeros(len(k), dtype=np.complex128)
        derivative = np.zeros(len(k), dtype=np.complex128) if gradient else None
        for v, d in parts:
            values += v
            if gradient:
                derivative += d
        return values, derivative


def evaluate_wavefunction(spectral_set: SpectralSet, grid: SpatialGrid,
                          tau: TimeLike) -> WaveField:
    """
    Evaluate sqrt(a) Psi(xi, tau) from the truncated series

    Args:
        spectral_set: Coefficients with their tail bound
        grid: Points in [0, lambda]
        tau: RationalTime (exact phases) or real fraction of the period

    Returns:
        WaveField: samples with error_bound = spectral_set.tail_bound

    Raises:
        GridError: if a grid point lies outside [0, lambda]
    """
    tau = as_time(tau)
    values, _ = SeriesEvaluator(spectral_set).evaluate(grid, tau)
    return WaveField(grid, values, tau, spectral_set.tail_bound, spectral_set.lam,
                     spectral_set.n_max)


def density(wave_field: WaveField) -> DensityProfile:
    """Pointwise |Psi|^2, with the error bound propagated from the wavefunction"""
    magnitude = np.abs(wave_field.values)
    e = wave_field.error_bound
    bound = 2.0 * float(np.max(magnitude, initial=0.0)) * e + e * e
    return DensityProfile(wave_field.grid, magnitude ** 2, wave_field.time, wave_field.lam,
                          bound, "series", wave_field, wave_field.n_max)


def current(spectral_set: SpectralSet, grid: SpatialGrid, tau: TimeLike,
            smoothing: Smoothing = "none") -> CurrentProfile:
    """
    Reduced current (1/pi) Im[Psi* dPsi/dxi] from the term-wise derivative series

    Args:
        spectral_set: Coefficients
        grid: Sample points
        tau: Time
        smoothing: "none" or "sigma" (Lanczos factors against Gibbs ringing)

    Returns:
        CurrentProfile: flagged piecewise-constant-expected
    """
    if smoothing not in ("none", "sigma"):
        raise ValueError(f"unknown smoothing {smoothing!r}")
    tau = as_time(tau)
    values, derivative = SeriesEvaluator(spectral_set).evaluate(grid, tau, True, smoothing)
    j = np.imag(np.conj(values) * derivative) / np.pi
    return CurrentProfile(grid, j, tau, spectral_set.lam, smoothing, True, spectral_set.n_max)


@dataclass(frozen=True)
class SymmetryReport:
    """Sup-norm deviations of the exact symmetries, with the tolerance they must meet"""
    time: TimeLike
    deviations: Dict[str, float]
    bound: float

    @property
    def passed(self) -> bool:
        return all(value <= self.bound for value in self.deviations.values())


def check_symmetries(spectral_set: SpectralSet, grid: SpatialGrid, tau: TimeLike) -> SymmetryReport:
    """
    Check the time-shift, time-reversal and mirror symmetries of the series

    Identities checked over the grid:
        half_period:        Psi(xi, tau + 1/2) = -Psi(lam - xi, tau)
        conjugation:        Psi(xi, 1 - tau)   = Psi*(xi, tau)
        density_reflection: rho(xi, 1 - tau)   = rho(xi, tau)
        current_reversal:   j(xi, 1 - tau)     = -j(xi, tau)
        quarter_mirror:     Psi(xi, 1/4)       = -Psi*(lam - xi, 1/4)   (only at tau = 1/4)
    """
    tau = as_time(tau)
    evaluator = SeriesEvaluator(spectral_set)
    mirror_grid = grid.reflected()

    psi, dpsi = evaluator.evaluate(grid, tau, gradient=True)
    psi_mirror, _ = evaluator.evaluate(mirror_grid, tau)
    psi_mirror = psi_mirror[::-1]
    psi_shift, _ = evaluator.evaluate(grid, shift_time(tau, Fraction(1, 2)))
    psi_back, dpsi_back = evaluator.evaluate(grid, reflect_time(tau), gradient=True)

    j = np.imag(np.conj(psi) * dpsi) / np.pi
    j_back = np.imag(np.conj(psi_back) * dpsi_back) / np.pi

    deviations = {
        "half_period": float(np.max(np.abs(psi_shift + psi_mirror))),
        "conjugation": float(np.max(np.abs(psi_back - np.conj(psi)))),
        "density_reflection": float(np.max(np.abs(np.abs(psi_back) ** 2 - np.abs(psi) ** 2))),
        "current_reversal": float(np.max(np.abs(j_back + j))),
    }
    if isinstance(tau, RationalTime) and tau == RationalTime(1, 4):
        deviations["quarter_mirror"] = float(np.max(np.abs(psi + np.conj(psi_mirror))))

    report = SymmetryReport(tau, deviations, 2.0 * spectral_set.tail_bound)
    logger.debug("Symmetry deviations at tau=%s: %s", time_value(tau), deviations)
    return report

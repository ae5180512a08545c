"""
Position and momentum expectation values over time

Momenta are in units of pi hbar / a, positions in units of a, and the
uncertainty product is reported in units of hbar. <p^2> is the mean energy in
units of E1 and does not depend on time.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import simpson

from app.errors import InvalidParameterError
from app.physics.evolution import SeriesEvaluator, Smoothing
from app.physics.model import TimeLike, as_time, make_grid, make_model, time_value
from app.physics.spectral import SpectralSet, mean_energy
from app.util.parallel import parallel_map

logger = logging.getLogger(__name__)

ArrayR = NDArray[np.float64]

DEFAULT_GRID_POINTS = 4096
MAX_DOUBLE_SUM_LEVEL = 200


@dataclass(frozen=True, eq=False)
class ExpectationTrace:
    """
    Expectation values sampled over time

    Attributes:
        taus: Sample times
        mean_xi: <xi>
        mean_p: <p>
        delta_xi: Position spread
        delta_p: Momentum spread
        product: pi * delta_xi * delta_p, in units of hbar
        lam: Expansion factor
    """
    taus: Tuple[TimeLike, ...]
    mean_xi: ArrayR
    mean_p: ArrayR
    delta_xi: ArrayR
    delta_p: ArrayR
    product: ArrayR
    lam: float

    @property
    def times(self) -> ArrayR:
        return np.array([time_value(t) for t in self.taus])

    def rows(self) -> List[Tuple[float, float, float, float, float, float]]:
        return [(float(t), float(a), float(b), float(c), float(d), float(e)) for t, a, b, c, d, e
                in zip(self.times, self.mean_xi, self.mean_p, self.delta_xi, self.delta_p,
                       self.product)]


def _assemble(taus: Sequence[TimeLike], moments: Sequence[Tuple[float, float, float]],
              energy: float, lam: float) -> ExpectationTrace:
    x1 = np.array([m[0] for m in moments])
    x2 = np.array([m[1] for m in moments])
    p1 = np.array([m[2] for m in moments])
    dx = np.sqrt(np.maximum(x2 - x1 ** 2, 0.0))
    dp = np.sqrt(np.maximum(energy - p1 ** 2, 0.0))
    return ExpectationTrace(tuple(taus), x1, p1, dx, dp, np.pi * dx * dp, lam)


def expectations(spectral_set: SpectralSet, taus: Sequence[TimeLike],
                 grid_points: int = DEFAULT_GRID_POINTS,
                 smoothing: Smoothing = "sigma") -> ExpectationTrace:
    """
    Expectation values by quadrature of the series over a dense lattice grid

    <xi> and <xi^2> integrate xi^k |Psi|^2; <p> integrates the current,
    using the term-wise derivative series with the requested smoothing.

    Args:
        spectral_set: Coefficients
        taus: Sample times
        grid_points: Quadrature grid size
        smoothing: Smoothing of the derivative series
    """
    taus = [as_time(t) for t in taus]
    grid = make_grid(make_model(spectral_set.lam), grid_points)
    xs = grid.points
    evaluator = SeriesEvaluator(spectral_set)

    def moments(tau: TimeLike) -> Tuple[float, float, float]:
        psi, dpsi = evaluator.evaluate(grid, tau, gradient=True, smoothing=smoothing)
        rho = np.abs(psi) ** 2
        norm = float(simpson(rho, x=xs))
        x1 = float(simpson(xs * rho, x=xs)) / norm
        x2 = float(simpson(xs * xs * rho, x=xs)) / norm
        p1 = float(simpson(np.imag(np.conj(psi) * dpsi), x=xs)) / (np.pi * norm)
        return x1, x2, p1

    trace = _assemble(taus, parallel_map(moments, taus), mean_energy(spectral_set),
                      spectral_set.lam)
    logger.debug("Computed expectations at %d times (n_max=%d)", len(taus), spectral_set.n_max)
    return trace


def _matrix_elements(lam: float, n_max: int) -> Tuple[ArrayR, ArrayR, ArrayR]:
    """<m|xi|n>, <m|xi^2|n> and <m|d/dxi|n> between eigenstates of the wide well"""
    n = np.arange(1, n_max + 1, dtype=float)
    m = n[:, None]
    k = n[None, :]
    odd = ((m + k) % 2) == 1
    off = m != k
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = np.where(off, 4.0 * m * k / (m * m - k * k) ** 2, 0.0)
        ratio = np.where(off, 4.0 * m * k / (m * m - k * k), 0.0)
    sign = np.where(((m + k) % 2) == 0, 1.0, -1.0)

    xi = np.where(odd, -2.0 * lam / np.pi ** 2 * cross, 0.0)
    xi[np.diag_indices(n_max)] = lam / 2.0
    xi2 = 2.0 * lam ** 2 / np.pi ** 2 * sign * cross
    xi2[np.diag_indices(n_max)] = lam ** 2 * (1.0 / 3.0 - 1.0 / (2.0 * np.pi ** 2 * n ** 2))
    grad = np.where(odd, ratio / lam, 0.0)
    return xi, xi2, grad


def expectations_double_sum(spectral_set: SpectralSet, taus: Sequence[TimeLike]) -> ExpectationTrace:
    """
    Expectation values from exact matrix elements between eigenstates

    Cross-validation path for the quadrature; cost grows as n_max^2.

    Raises:
        InvalidParameterError: for n_max above 200
    """
    if spectral_set.n_max > MAX_DOUBLE_SUM_LEVEL:
        raise InvalidParameterError(
            f"double sums are limited to n_max <= {MAX_DOUBLE_SUM_LEVEL}, got {spectral_set.n_max}")
    taus = [as_time(t) for t in taus]
    xi, xi2, grad = _matrix_elements(spectral_set.lam, spectral_set.n_max)
    evaluator = SeriesEvaluator(spectral_set)
    levels = spectral_set.levels()

    moments = []
    for tau in taus:
        a = spectral_set.coefficients * evaluator.phases(levels, tau)
        norm = float(np.vdot(a, a).real)
        x1 = float(np.vdot(a, xi @ a).real) / norm
        x2 = float(np.vdot(a, xi2 @ a).real) / norm
        p1 = float((-1j * np.vdot(a, grad @ a)).real) / (np.pi * norm)
        moments.append((x1, x2, p1))
    return _assemble(taus, moments, mean_energy(spectral_set), spectral_set.lam)


def rest_epochs(trace: ExpectationTrace, tol: float = 1e-3) -> List[Tuple[float, float]]:
    """
    Spans of time where <xi> = lambda/2 and <p> = 0 both hold within tol

    Returns:
        (first, last) sample time of every run of consecutive qualifying samples
    """
    at_rest = (np.abs(trace.mean_xi - trace.lam / 2.0) <= tol) & (np.abs(trace.mean_p) <= tol)
    times = trace.times
    spans: List[Tuple[float, float]] = []
    start = None
    for i, flag in enumerate(at_rest):
        if flag and start is None:
            start = i
        if not flag and start is not None:
            spans.append((float(times[start]), float(times[i - 1])))
            start = None
    if start is not None:
        spans.append((float(times[start]), float(times[-1])))
    return spans


def uncertainty_satisfied(trace: ExpectationTrace, slack: float = 1e-6) -> bool:
    """Delta xi * Delta p >= hbar/2 at every sample"""
    return bool(np.all(trace.product >= 0.5 - slack))


def minimum_product(trace: ExpectationTrace) -> float:
    return float(np.min(trace.product)) if len(trace.product) else math.nan

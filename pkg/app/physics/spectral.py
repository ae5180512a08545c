"""
Expansion coefficients of the initial ground state on the dilated eigenbasis,
measurement statistics, and the G-function sum rules for norm and energy
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from app.errors import InvalidParameterError, SingularParameterError
from app.physics.model import WellModel

logger = logging.getLogger(__name__)

ArrayR = NDArray[np.float64]

# Inside this distance from an integer lambda the analytic limit 1/sqrt(n) is used
INTEGER_SWITCH_RADIUS = 1e-9
# Coefficients are generated in blocks of this many indices
CHUNK_SIZE = 1 << 20


def coefficient(lam: float, n: int) -> float:
    """
    Overlap c_n of the initial ground state with the n-th dilated eigenstate

    c_n = (2 lam^{3/2}/pi) sin(n pi/lam)/(lam^2 - n^2). The expression is
    evaluated as 2 sqrt(lam) sinc((lam - n)/lam)/(lam + n), which is the same
    function without the 0/0 near integer lambda.

    Args:
        lam: Expansion factor, lam > 1
        n: Level index, n >= 1

    Returns:
        float: the real coefficient c_n
    """
    if n < 1:
        raise ValueError(f"level index must be >= 1, got {n}")
    if abs(lam - n) < INTEGER_SWITCH_RADIUS:
        return 1.0 / math.sqrt(n)
    return float(coefficients(lam, np.array([n], dtype=np.int64))[0])


def coefficients(lam: float, n: NDArray[np.int64]) -> ArrayR:
    """Vectorized c_n over an array of level indices"""
    n_float = n.astype(np.float64)
    values = 2.0 * math.sqrt(lam) * np.sinc((lam - n_float) / lam) / (lam + n_float)
    near = np.abs(lam - n_float) < INTEGER_SWITCH_RADIUS
    if np.any(near):
        values[near] = 1.0 / np.sqrt(n_float[near])
    return values


def tail_bound(lam: float, n_max: int) -> float:
    """
    Certified sup-norm bound on the discarded part of the wavefunction series

    Integral bound on sqrt(2/lam) * (2 lam/pi) * sum_{n > N} 1/(n^2 - lam^2),
    equal to (sqrt 2/pi) ln((N + lam)/(N - lam)).
    """
    if n_max <= lam:
        return math.inf
    return math.sqrt(2.0) / math.pi * math.log1p(2.0 * lam / (n_max - lam))


def cutoff_for_epsilon(lam: float, epsilon: float) -> int:
    """Smallest N > lam whose tail bound does not exceed epsilon"""
    u = epsilon * math.pi / math.sqrt(2.0)
    # (N + lam)/(N - lam) <= e^u  <=>  N >= lam (e^u + 1)/(e^u - 1)
    estimate = lam * (math.exp(u) + 1.0) / math.expm1(u)
    n_max = max(math.floor(lam) + 1, math.ceil(estimate))
    while n_max - 1 > lam and tail_bound(lam, n_max - 1) <= epsilon:
        n_max -= 1
    while tail_bound(lam, n_max) > epsilon:
        n_max += 1
    return n_max


@dataclass(frozen=True, eq=False)
class SpectralSet:
    """
    Truncated coefficient list with a certified truncation bound

    Attributes:
        lam: Expansion factor
        n_max: Number of retained levels
        coefficients: c_n for n = 1..n_max
        tail_bound: Sup-norm bound on the discarded series, in units of a^{-1/2}
        epsilon: Requested tolerance, when the set was built from one
    """
    lam: float
    n_max: int
    coefficients: ArrayR
    tail_bound: float
    epsilon: Optional[float] = None

    @property
    def basis_factor(self) -> float:
        """Normalization sqrt(2/lam) of the dilated eigenfunctions"""
        return math.sqrt(2.0 / self.lam)

    def levels(self) -> NDArray[np.int64]:
        return np.arange(1, self.n_max + 1, dtype=np.int64)

    def norm_partial(self) -> float:
        """Sum of c_n^2 over the retained levels"""
        return float(np.dot(self.coefficients, self.coefficients))


def _build(model: WellModel, n_max: int, epsilon: Optional[float]) -> SpectralSet:
    values = np.empty(n_max, dtype=np.float64)
    for start in range(1, n_max + 1, CHUNK_SIZE):
        stop = min(start + CHUNK_SIZE, n_max + 1)
        values[start - 1:stop - 1] = coefficients(model.lam, np.arange(start, stop, dtype=np.int64))
    bound = tail_bound(model.lam, n_max)
    logger.debug("Spectral set for %s: n_max=%d, tail bound %.3e", model, n_max, bound)
    return SpectralSet(model.lam, n_max, values, bound, epsilon)


def build_spectral_set(model: WellModel, epsilon: float) -> SpectralSet:
    """
    Keep just enough levels for the series to be within epsilon in sup-norm

    Args:
        model: Well model
        epsilon: Target sup-norm truncation error

    Returns:
        SpectralSet: the truncated set, with the achieved bound stored

    Raises:
        InvalidParameterError: if epsilon is not a positive finite number
    """
    if not (math.isfinite(epsilon) and epsilon > 0.0):
        raise InvalidParameterError(f"epsilon must be positive, got {epsilon!r}")
    return _build(model, cutoff_for_epsilon(model.lam, epsilon), epsilon)


def spectral_set_for_cutoff(model: WellModel, n_max: int) -> SpectralSet:
    """Spectral set with an explicit number of levels (n_max must exceed lambda)"""
    if n_max <= model.lam:
        raise InvalidParameterError(f"n_max={n_max} must exceed lambda={model.lam}")
    return _build(model, int(n_max), None)


def eigenenergy(model: WellModel, n: int) -> float:
    """Energy of the n-th level of the expanded well, in units of E1"""
    if n < 1:
        raise ValueError(f"level index must be >= 1, got {n}")
    return n * n / (model.lam * model.lam)


@dataclass(frozen=True, eq=False)
class MeasurementDistribution:
    """Probabilities P_n = c_n^2 of measuring the n-th energy, n = 1..n_max"""
    probabilities: ArrayR
    partial_sum: float

    def most_probable_level(self) -> int:
        return int(np.argmax(self.probabilities)) + 1


def measurement_distribution(model: WellModel, n_max: int) -> MeasurementDistribution:
    """
    Energy measurement probabilities, time independent after the quench

    Args:
        model: Well model
        n_max: Number of levels to tabulate

    Returns:
        MeasurementDistribution: P_n for n = 1..n_max and their sum
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    c = coefficients(model.lam, np.arange(1, n_max + 1, dtype=np.int64))
    probabilities = c * c
    return MeasurementDistribution(probabilities, float(np.sum(probabilities)))


def _energy_tail(lam: float, n_max: int) -> float:
    # P_n n^2/lam^2 ~ (4 lam/pi^2) sin^2(n pi/lam) n^2/(n^2 - lam^2)^2; sin^2 averages to 1/2
    # and the sum over n > n_max is replaced by its midpoint integral.
    m = n_max + 0.5
    integral = m / (2.0 * (m * m - lam * lam)) + math.log((m + lam) / (m - lam)) / (4.0 * lam)
    return 2.0 * lam / math.pi ** 2 * integral


def mean_energy(spectral_set: SpectralSet) -> float:
    """
    Mean energy <H> in units of E1, including an analytic estimate of the tail

    The partial sums converge like 1/n_max, so the tail is added explicitly.
    """
    lam = spectral_set.lam
    total = 0.0
    for start in range(0, spectral_set.n_max, CHUNK_SIZE):
        stop = min(start + CHUNK_SIZE, spectral_set.n_max)
        n = np.arange(start + 1, stop + 1, dtype=np.float64)
        c = spectral_set.coefficients[start:stop]
        total += float(np.sum(c * c * (n / lam) ** 2))
    return total + _energy_tail(lam, spectral_set.n_max)


def second_moment_partial(spectral_set: SpectralSet,
                          cutoffs: Optional[Sequence[int]] = None) -> List[Tuple[int, float]]:
    """
    Partial sums of <H^2> = sum P_n (n/lam)^4, which grow linearly and never converge

    Args:
        spectral_set: Coefficients to sum
        cutoffs: Partial-sum limits; defaults to n_max/4, n_max/2 and n_max

    Returns:
        list of (N, S_N) pairs
    """
    lam = spectral_set.lam
    if cutoffs is None:
        cutoffs = [spectral_set.n_max // 4, spectral_set.n_max // 2, spectral_set.n_max]
    cutoffs = sorted(int(c) for c in cutoffs)
    if cutoffs and cutoffs[-1] > spectral_set.n_max:
        raise ValueError(f"cutoff {cutoffs[-1]} exceeds n_max={spectral_set.n_max}")
    n = np.arange(1, cutoffs[-1] + 1, dtype=np.float64)
    c = spectral_set.coefficients[:cutoffs[-1]]
    running = np.cumsum(c * c * (n / lam) ** 4)
    return [(cut, float(running[cut - 1])) for cut in cutoffs if cut >= 1]


def _reduce_phase(phi: float) -> float:
    """Fold phi into [-pi/2, pi/2) using the even, pi-periodic extension"""
    return (phi + math.pi / 2) % math.pi - math.pi / 2


def _check_not_integer(lam: float, what: str):
    if abs(lam - round(lam)) < INTEGER_SWITCH_RADIUS:
        raise SingularParameterError(f"{what} has a pole at integer lambda={lam}")


def g_function(lam: float, phi: float, mode: Literal["closed", "series"] = "closed",
               n_terms: int = 1000) -> float:
    """
    G(lam, phi) = sum over all integers n of exp(2 i n phi)/(lam^2 - n^2)

    Args:
        lam: Real parameter (not an integer)
        phi: Phase
        mode: "closed" for pi cos(lam(2|phi| - pi))/(lam sin(pi lam)),
              "series" for the symmetric partial sum over |n| <= n_terms
        n_terms: Series truncation

    Returns:
        float: G(lam, phi)

    Raises:
        SingularParameterError: at integer lambda
    """
    _check_not_integer(lam, "G(lambda, phi)")
    if mode == "closed":
        u = 2.0 * abs(_reduce_phase(phi)) - math.pi
        return math.pi * math.cos(lam * u) / (lam * math.sin(math.pi * lam))
    if mode == "series":
        n = np.arange(1, n_terms + 1, dtype=np.float64)
        return float(1.0 / lam ** 2 + 2.0 * np.sum(np.cos(2.0 * n * phi) / (lam * lam - n * n)))
    raise ValueError(f"unknown mode {mode!r}")


def _node_phases(lam: float) -> Tuple[float, float]:
    """u = 2|phi| - pi at phi = 0 and at the node phi = pi/lam"""
    return -math.pi, 2.0 * math.pi / lam - math.pi


def _g_dlambda_node_difference(lam: float) -> float:
    """
    d/dlam [G(lam, 0) - G(lam, phi)] at phi = pi/lam, from the hand-differentiated closed form

    Differentiating pi cos(lam u)/(lam sin(pi lam)) at fixed u gives
    pi [-u sin(lam u) lam s - cos(lam u)(s + pi lam c)]/(lam s)^2 with
    s = sin(pi lam), c = cos(pi lam). At the node lam*u differs between the two
    ends by exactly 2 pi, so the cos(lam u) terms are equal and drop out of the
    difference, as does the pole they carry. What is left is
    -pi sin(lam u0) (u0 - u1)/(lam s).
    """
    u0, u1 = _node_phases(lam)
    s = math.sin(math.pi * lam)
    return -math.pi * math.sin(lam * u0) / s * (u0 - u1) / lam


def energy_bracket(lam: float) -> float:
    """
    G(lam, 0) - G(lam, pi/lam); it vanishes because Psi(a, 0) = 0

    The cosine difference is taken in product form,
    -2 sin(lam (u0 + u1)/2) sin(lam (u0 - u1)/2), so no two large values are
    subtracted near an integer lambda.
    """
    _check_not_integer(lam, "G(lambda, phi)")
    u0, u1 = _node_phases(lam)
    s = math.sin(math.pi * lam)
    half_sum = math.sin(0.5 * lam * (u0 + u1)) / s
    return -2.0 * math.pi * half_sum * math.sin(0.5 * lam * (u0 - u1)) / lam


def norm_and_energy_via_g(lam: float) -> Tuple[float, float]:
    """
    Norm and mean energy (units of E1) from the closed form of G

    norm = -(lam^2/(2 pi^2)) d/dlam [G(lam, 0) - G(lam, phi)] at phi = pi/lam
    <H>  = norm - (lam/pi^2) [G(lam, 0) - G(lam, pi/lam)]

    Both terms stay at full precision arbitrarily close to an integer lambda.

    Raises:
        SingularParameterError: at integer lambda
        ValueError: for lambda <= 1
    """
    if lam <= 1.0:
        raise ValueError(f"lambda must exceed 1, got {lam}")
    _check_not_integer(lam, "the G sum rule")
    derivative = _g_dlambda_node_difference(lam)
    norm = -(lam * lam) / (2.0 * math.pi ** 2) * derivative
    bracket = energy_bracket(lam)
    energy = norm - lam / math.pi ** 2 * bracket
    logger.debug("Sum rule at lambda=%s: norm=%.15f bracket=%.3e", lam, norm, bracket)
    return norm, energy

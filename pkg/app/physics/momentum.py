"""
Momentum representation of the initial state and the half-line limit

Momenta are measured in units of p0 = pi hbar / a, so both amplitudes are
functions of u = p/p0 normalized with respect to du. The half-line
wavefunction is the lambda -> infinity limit of the eigenfunction series,
written as an integral over nu = k a / pi with times in units of T1.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import IntegrationWarning, quad, simpson

from app.errors import InvalidParameterError, InvalidTimeError, QuadratureError
from app.physics.evolution import evaluate_wavefunction
from app.physics.model import grid_from_points, make_model
from app.physics.spectral import build_spectral_set

logger = logging.getLogger(__name__)

ArrayR = NDArray[np.float64]
ArrayC = NDArray[np.complex128]

TAYLOR_RADIUS = 1e-4
NORM_RANGE = 40.0
POSITION_RANGE = 200.0
HALFLINE_CUTOFF = 400.0
HALFLINE_TOLERANCE = 1e-4
GAUSS_NODES = 16

KINDS = ("true_initial", "naive_limit")


def _one_minus_exp(delta: ArrayR) -> ArrayC:
    """(1 - exp(-i pi delta)) / delta, with a Taylor branch near delta = 0"""
    out = np.empty(delta.shape, dtype=np.complex128)
    small = np.abs(delta) < TAYLOR_RADIUS
    d = delta[small]
    out[small] = 1j * np.pi + (np.pi ** 2) * d / 2 - 1j * (np.pi ** 3) * d ** 2 / 6
    d = delta[~small]
    out[~small] = (1.0 - np.exp(-1j * np.pi * d)) / d
    return out


def _sin_ratio(delta: ArrayR) -> ArrayR:
    """sin(pi delta) / delta, with a Taylor branch near delta = 0"""
    out = np.empty(delta.shape, dtype=np.float64)
    small = np.abs(delta) < TAYLOR_RADIUS
    d = delta[small]
    out[small] = np.pi - (np.pi ** 3) * d ** 2 / 6 + (np.pi ** 5) * d ** 4 / 120
    d = delta[~small]
    out[~small] = np.sin(np.pi * d) / d
    return out


def _apply_p0(func: Callable[[ArrayR], ArrayC], p, p0: float):
    """Evaluate a du-normalized amplitude at physical momenta p"""
    u = np.atleast_1d(np.asarray(p, dtype=float)) / p0
    values = func(u) / math.sqrt(p0)
    return values if np.ndim(p) else complex(values[0])


def _true_reduced(u: ArrayR) -> ArrayC:
    out = np.empty(u.shape, dtype=np.complex128)
    upper = u >= 0
    # near u = 1: 1 + e^{-i pi u} = 1 - e^{-i pi delta}, 1 - u^2 = -delta(2 + delta)
    d = u[upper] - 1.0
    out[upper] = -_one_minus_exp(d) / (np.pi * (2.0 + d))
    # near u = -1: 1 + e^{-i pi u} = 1 - e^{-i pi delta}, 1 - u^2 = delta(2 - delta)
    d = u[~upper] + 1.0
    out[~upper] = _one_minus_exp(d) / (np.pi * (2.0 - d))
    return out


def _naive_reduced(u: ArrayR) -> ArrayC:
    out = np.empty(u.shape, dtype=np.float64)
    upper = u >= 0
    # sin(pi u) = -sin(pi delta) on both sides
    d = u[upper] - 1.0
    out[upper] = _sin_ratio(d) / (2.0 + d)
    d = u[~upper] + 1.0
    out[~upper] = -_sin_ratio(d) / (2.0 - d)
    return (2.0 / (1j * np.pi)) * out


def momentum_true(p, p0: float = 1.0):
    """
    True momentum amplitude of the initial ground state

    Phi(p, 0) = (1/pi) p0^{3/2} / (p0^2 - p^2) (1 + e^{-i pi p/p0}), with the
    apparent poles at p = +-p0 evaluated by expansion.

    Args:
        p: Momentum (scalar or array), same units as p0
        p0: pi hbar / a

    Returns:
        Complex amplitude, scalar for scalar input
    """
    return _apply_p0(_true_reduced, p, p0)


def momentum_naive(p, p0: float = 1.0):
    """
    Naive amplitude read off the half-line integral

    Phi~(p) = (2 p0^{3/2} / (i pi)) sin(pi p/p0) / (p0^2 - p^2). It is odd in p
    and normalized to 2, which is why it is not the momentum representation
    of the initial state.
    """
    return _apply_p0(_naive_reduced, p, p0)


@dataclass(frozen=True, eq=False)
class MomentumAmplitude:
    """
    Sampled momentum amplitude

    Attributes:
        kind: "true_initial" or "naive_limit"
        momenta: Sample points in units of p0
        values: Complex amplitudes, du-normalized
    """
    kind: str
    momenta: ArrayR
    values: ArrayC

    def norm(self) -> float:
        """Simpson estimate of the norm over the sampled window"""
        return float(simpson(np.abs(self.values) ** 2, x=self.momenta))


def _reduced_for(kind: str) -> Callable[[ArrayR], ArrayC]:
    if kind == "true_initial":
        return _true_reduced
    if kind == "naive_limit":
        return _naive_reduced
    raise InvalidParameterError(f"unknown momentum amplitude kind {kind!r}; expected {KINDS}")


def sample_amplitude(kind: str, momenta: Iterable[float]) -> MomentumAmplitude:
    momenta = np.asarray(list(momenta), dtype=float)
    return MomentumAmplitude(kind, momenta, _reduced_for(kind)(momenta))


def _tail(constant: float, cos_amplitude: float, omega: float, start: float) -> float:
    """Integral over [start, inf) of (constant + cos_amplitude cos(omega u)) / (u^2 - 1)^2"""
    # antiderivative of 1/(u^2-1)^2 is -u/(2(u^2-1)) + log((u+1)/(u-1))/4
    smooth = start / (2.0 * (start ** 2 - 1.0)) - 0.25 * math.log((start + 1.0) / (start - 1.0))
    oscillating, _ = quad(lambda u: 1.0 / (u * u - 1.0) ** 2, start, np.inf,
                          weight="cos", wvar=omega)
    return constant * smooth + cos_amplitude * oscillating


def _panel_integral(func: Callable[[float], float], lo: float, hi: float) -> float:
    total = 0.0
    for left in np.arange(lo, hi, 1.0):
        value, _ = quad(func, left, min(left + 1.0, hi), limit=200)
        total += value
    return total


def momentum_norm(kind: str, window: float = NORM_RANGE) -> float:
    """
    Integral of |amplitude|^2 over the whole momentum axis

    Adaptive quadrature on unit panels over [-window, window] plus the tails
    beyond, done analytically for the smooth part and by a Fourier-weighted
    quadrature for the oscillating part.
    """
    reduced = _reduced_for(kind)

    def density(u: float) -> float:
        return float(np.abs(reduced(np.array([u]))[0]) ** 2)

    inner = _panel_integral(density, -window, window)
    if kind == "true_initial":
        # |f|^2 = (2 + 2 cos(pi u)) / (pi^2 (u^2 - 1)^2)
        tail = _tail(2.0 / np.pi ** 2, 2.0 / np.pi ** 2, np.pi, window)
    else:
        # |f|^2 = (2 - 2 cos(2 pi u)) / (pi^2 (u^2 - 1)^2)
        tail = _tail(2.0 / np.pi ** 2, -2.0 / np.pi ** 2, 2.0 * np.pi, window)
    norm = inner + 2.0 * tail
    logger.debug("momentum norm %s: inner=%.12f tail=%.3e", kind, inner, 2.0 * tail)
    return norm


def position_expectation(kind: str, window: float = POSITION_RANGE, step: float = 1e-6) -> float:
    """
    <xi> computed as (1/pi) Re[i Integral Phi* dPhi/du du]

    The true amplitude yields 1/2. The naive amplitude is i times a real odd
    function, so the integrand is purely imaginary and the result is 0.
    """
    reduced = _reduced_for(kind)

    def integrand(u: float) -> float:
        points = np.array([u - step, u, u + step])
        values = reduced(points)
        derivative = (values[2] - values[0]) / (2.0 * step)
        return float((1j * np.conj(values[1]) * derivative).real)

    return _panel_integral(integrand, -window, window) / np.pi


def _kernel(nu: ArrayR) -> ArrayR:
    """sin(pi nu) / (nu^2 - 1) = -pi sinc(nu - 1) / (nu + 1)"""
    return -np.pi * np.sinc(nu - 1.0) / (nu + 1.0)


def _panel_edges(cutoff: float, t: float, x_max: float) -> ArrayR:
    """Panels holding about one oscillation of the chirped integrand each"""
    edges = [0.0]
    while edges[-1] < cutoff:
        nu = edges[-1]
        cycles = 1.0 + 0.5 * x_max + 2.0 * nu * t
        edges.append(min(cutoff, nu + min(0.5, 1.0 / cycles)))
    return np.array(edges)


def _validate_halfline(x_values: ArrayR, t: float, cutoff: float):
    if t < 0 or not math.isfinite(t):
        raise InvalidTimeError(f"half-line time must be finite and >= 0, got {t}")
    if np.any(x_values < 0):
        raise InvalidParameterError("half-line positions must be >= 0")
    if cutoff <= 2.0:
        raise InvalidParameterError(f"half-line cutoff must exceed 2, got {cutoff}")


def halfline_wavefunction(x: float, t: float, cutoff: float = HALFLINE_CUTOFF,
                          tol: float = HALFLINE_TOLERANCE) -> complex:
    """
    sqrt(a) Psi(x, t) for free propagation on the half-line from the ground state

    Psi = -(2 sqrt 2 / pi) Integral_0^cutoff sin(pi nu) sin(pi nu x) / (nu^2 - 1) e^{-2 pi i nu^2 t} d nu,
    integrated adaptively panel by panel.

    Args:
        x: Position in units of a
        t: Time in units of T1
        cutoff: Upper limit of the nu integral
        tol: Largest accepted truncation and quadrature error estimate

    Raises:
        QuadratureError: when the truncation or quadrature error exceeds tol
    """
    _validate_halfline(np.array([x]), t, cutoff)
    edges = _panel_edges(cutoff, t, x)
    partial = []
    total = 0j
    error = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        def re(nu):
            return _kernel(nu) * math.sin(math.pi * nu * x) * math.cos(2 * math.pi * nu * nu * t)

        def im(nu):
            return -_kernel(nu) * math.sin(math.pi * nu * x) * math.sin(2 * math.pi * nu * nu * t)

        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", IntegrationWarning)
                r, er = quad(re, lo, hi, limit=100)
                i, ei = quad(im, lo, hi, limit=100)
        except IntegrationWarning as exc:
            raise QuadratureError(f"half-line panel [{lo}, {hi}] failed: {exc}") from exc
        total += r + 1j * i
        error += er + ei
        partial.append(total)

    scale = -2.0 * math.sqrt(2.0) / math.pi
    # the spread of partial integrals over the last quarter bounds the truncation error
    tail = partial[int(0.75 * len(partial)):]
    truncation = max(abs(v - tail[-1]) for v in tail) if tail else 0.0
    if abs(scale) * (truncation + error) > tol:
        raise QuadratureError(
            f"half-line integral at x={x}, t={t} did not converge (estimate "
            f"{abs(scale) * (truncation + error):.2e} > {tol:.1e}); raise the cutoff")
    return complex(scale * total)


def halfline_profile(xs: Iterable[float], t: float, cutoff: float = HALFLINE_CUTOFF,
                     nodes: int = GAUSS_NODES) -> ArrayC:
    """
    Half-line wavefunction on many points with composite Gauss-Legendre panels
    """
    xs = np.asarray(list(xs), dtype=float)
    _validate_halfline(xs, t, cutoff)
    edges = _panel_edges(cutoff, t, float(xs.max(initial=0.0)))
    base, weights = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nu = (mid[:, None] + half[:, None] * base[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    spectral = w * _kernel(nu) * np.exp(-2j * np.pi * nu * nu * t)

    out = np.empty(xs.shape, dtype=np.complex128)
    block = max(1, (1 << 22) // max(1, nu.size))
    for start in range(0, xs.size, block):
        chunk = xs[start:start + block]
        out[start:start + block] = np.sin(np.pi * np.outer(chunk, nu)) @ spectral
    return -2.0 * math.sqrt(2.0) / math.pi * out


@dataclass(frozen=True)
class DarbouxCheck:
    """Half-line integral against the eigenfunction series of a wide well"""
    x: float
    t: float
    lam: float
    halfline: complex
    series: complex
    tolerance: float

    @property
    def deviation(self) -> float:
        return abs(self.halfline - self.series)

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance


def darboux_check(x: float, t: float, lam: float = 50.0, epsilon: float = 3e-4,
                  tolerance: float = 1e-3) -> DarbouxCheck:
    """
    Compare the half-line integral with the series for a wide well at the same physical time

    Args:
        x: Position in units of a
        t: Time in units of T1, converted to tau = t / lambda^2 for the series
        lam: Expansion factor standing in for the infinite limit
        epsilon: Series truncation tolerance
        tolerance: Accepted deviation
    """
    model = make_model(lam)
    spectral_set = build_spectral_set(model, epsilon)
    field = evaluate_wavefunction(spectral_set, grid_from_points(model, [x]), t / lam ** 2)
    result = DarbouxCheck(x, t, lam, halfline_wavefunction(x, t), complex(field.values[0]),
                          tolerance)
    logger.debug("darboux check x=%s t=%s: deviation %.3e", x, t, result.deviation)
    return result

"""
Exact piecewise-trigonometric snapshots at t = T/2, T/4 and T/8

Every closed form is assembled from step-function contributions
A sin(f pi xi + phi) restricted to an open interval, then normalized into an
explicit partition of [0, lambda] at construction time. Evaluation,
derivatives and integrals are exact on each interval.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from app.errors import ThresholdError
from app.physics.evolution import CurrentProfile, DensityProfile, WaveField
from app.physics.model import (RationalTime, SpatialGrid, TimeLike, WellModel, as_time,
                               eighth_period_cusps)

logger = logging.getLogger(__name__)

ArrayR = NDArray[np.float64]

KNOT_TOLERANCE = 1e-12
_PRUNE = 1e-15
_EIGHTH = cmath.exp(-1j * math.pi / 4)


@dataclass(frozen=True)
class TrigTerm:
    """A sin(f pi xi + phi), with f = 0 giving the constant A sin(phi)"""
    amplitude: complex
    frequency: int
    phase: float

    def evaluate(self, xi: ArrayR):
        return self.amplitude * np.sin(self.frequency * np.pi * xi + self.phase)

    def derivative(self) -> "TrigTerm":
        return TrigTerm(self.amplitude * self.frequency * math.pi, self.frequency,
                        self.phase + math.pi / 2)

    def antiderivative(self, xi: float) -> complex:
        if self.frequency == 0:
            return self.amplitude * math.sin(self.phase) * xi
        w = self.frequency * math.pi
        return -self.amplitude * math.cos(w * xi + self.phase) / w


@dataclass(frozen=True)
class _Contribution:
    term: TrigTerm
    lo: float
    hi: float


def _canonical(terms: Sequence[TrigTerm]) -> Tuple[TrigTerm, ...]:
    """Collapse terms per frequency into sin/cos (or constant) form"""
    sin_part: Dict[int, complex] = {}
    cos_part: Dict[int, complex] = {}
    for t in terms:
        sin_part[t.frequency] = sin_part.get(t.frequency, 0) + t.amplitude * math.cos(t.phase)
        cos_part[t.frequency] = cos_part.get(t.frequency, 0) + t.amplitude * math.sin(t.phase)
    out: List[TrigTerm] = []
    for f in sorted(sin_part):
        if f == 0:
            if abs(cos_part[f]) > _PRUNE:
                out.append(TrigTerm(complex(cos_part[f]), 0, math.pi / 2))
            continue
        if abs(sin_part[f]) > _PRUNE:
            out.append(TrigTerm(complex(sin_part[f]), f, 0.0))
        if abs(cos_part[f]) > _PRUNE:
            out.append(TrigTerm(complex(cos_part[f]), f, math.pi / 2))
    return tuple(out)


def _same_terms(a: Tuple[TrigTerm, ...], b: Tuple[TrigTerm, ...]) -> bool:
    if len(a) != len(b):
        return False
    return all(x.frequency == y.frequency and x.phase == y.phase
               and abs(x.amplitude - y.amplitude) <= KNOT_TOLERANCE for x, y in zip(a, b))


@dataclass(frozen=True, eq=False)
class PiecewiseTrig:
    """
    Trigonometric polynomial on each interval of a partition of [0, lambda]

    Intervals are (knots[i], knots[i+1]] with the first one closed at 0.

    Attributes:
        knots: Increasing breakpoints, knots[0] = 0 and knots[-1] = lam
        pieces: Terms of each interval
        lam: Expansion factor
        kind: "wavefunction", "density" or "current"
        scale: Stored values equal scale * sqrt(a) Psi for wavefunctions
        metadata: Free-form tags such as {"conjecture": True}
    """
    knots: ArrayR
    pieces: Tuple[Tuple[TrigTerm, ...], ...]
    lam: float
    kind: str = "wavefunction"
    scale: float = 1.0
    metadata: Mapping[str, object] = field(default_factory=dict)

    @property
    def intervals(self) -> List[Tuple[float, float]]:
        return [(float(self.knots[i]), float(self.knots[i + 1])) for i in range(len(self.pieces))]

    def _piece_index(self, xi: ArrayR) -> NDArray[np.int64]:
        index = np.searchsorted(self.knots, xi, side="left") - 1
        return np.clip(index, 0, len(self.pieces) - 1)

    def evaluate(self, xi) -> np.ndarray:
        """Exact values at arbitrary points (complex for wavefunctions, real otherwise)"""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        out = np.zeros(xi.shape, dtype=np.complex128)
        index = self._piece_index(xi)
        for i, terms in enumerate(self.pieces):
            mask = index == i
            if not np.any(mask):
                continue
            for term in terms:
                out[mask] += term.evaluate(xi[mask])
        return out if self.kind == "wavefunction" else out.real

    def wavefunction(self, xi) -> np.ndarray:
        """sqrt(a) Psi, undoing the storage scale"""
        return self.evaluate(xi) / self.scale

    def one_sided(self, xi: float, side: str) -> complex:
        """Limit of the function at xi from the left or the right"""
        nearest = int(np.argmin(np.abs(self.knots - xi)))
        if abs(self.knots[nearest] - xi) <= KNOT_TOLERANCE:
            i = nearest - 1 if side == "left" else nearest
        else:
            i = int(np.searchsorted(self.knots, xi, side="left")) - 1
        i = int(np.clip(i, 0, len(self.pieces) - 1))
        return complex(sum(t.evaluate(np.array([xi]))[0] for t in self.pieces[i]))

    def derivative(self) -> "PiecewiseTrig":
        pieces = tuple(_canonical([t.derivative() for t in terms]) for terms in self.pieces)
        return PiecewiseTrig(self.knots, pieces, self.lam, self.kind, self.scale,
                             dict(self.metadata))

    def integral(self) -> complex:
        """Exact integral over [0, lambda]"""
        total = 0j
        for (lo, hi), terms in zip(self.intervals, self.pieces):
            for t in terms:
                total += t.antiderivative(hi) - t.antiderivative(lo)
        return total

    def continuity_defects(self) -> ArrayR:
        """|left - right| at every interior knot"""
        return np.array([abs(self.one_sided(k, "left") - self.one_sided(k, "right"))
                         for k in self.knots[1:-1]])

    def sin_cos(self, i: int) -> Tuple[complex, complex]:
        """(alpha, beta) such that piece i equals alpha sin(pi xi) + beta cos(pi xi)"""
        alpha = beta = 0j
        for t in self.pieces[i]:
            if t.frequency != 1:
                raise ValueError("sin_cos applies to single-frequency wavefunctions")
            alpha += t.amplitude * math.cos(t.phase)
            beta += t.amplitude * math.sin(t.phase)
        return alpha, beta


def _assemble(lam: float, contributions: Sequence[_Contribution], kind: str,
              scale: float = 1.0, metadata: Optional[Mapping[str, object]] = None) -> PiecewiseTrig:
    """Turn step-restricted contributions into an explicit interval partition"""
    cuts = [0.0, lam]
    for c in contributions:
        for x in (c.lo, c.hi):
            if 0.0 < x < lam:
                cuts.append(x)
    cuts.sort()
    knots = [cuts[0]]
    for x in cuts[1:]:
        if x - knots[-1] > KNOT_TOLERANCE:
            knots.append(x)
    knots[-1] = lam

    pieces: List[Tuple[TrigTerm, ...]] = []
    merged_knots = [knots[0]]
    for lo, hi in zip(knots[:-1], knots[1:]):
        mid = 0.5 * (lo + hi)
        terms = _canonical([c.term for c in contributions if c.lo < mid < c.hi])
        if pieces and _same_terms(pieces[-1], terms):
            merged_knots[-1] = hi
            continue
        pieces.append(terms)
        merged_knots.append(hi)
    return PiecewiseTrig(np.array(merged_knots), tuple(pieces), lam, kind, scale,
                         dict(metadata or {}))


def _wave(amplitude: complex, phase: float, lo: float, hi: float) -> _Contribution:
    return _Contribution(TrigTerm(complex(amplitude), 1, phase), lo, hi)


def _const(value: float, lo: float, hi: float) -> _Contribution:
    return _Contribution(TrigTerm(complex(value), 0, math.pi / 2), lo, hi)


def initial_wavefunction(model: WellModel) -> PiecewiseTrig:
    """sqrt(a) Psi(xi, 0) = sqrt(2) sin(pi xi) on [0, 1], zero on [1, lambda]"""
    return _assemble(model.lam, [_wave(math.sqrt(2.0), 0.0, -math.inf, 1.0)], "wavefunction")


def psi_half(model: WellModel) -> PiecewiseTrig:
    """
    Psi(xi, T/2) = -Psi(lambda - xi, 0): the initial state mirrored onto [lambda - 1, lambda]
    """
    lam = model.lam
    # -sqrt2 sin(pi(lam - xi)) = sqrt2 sin(pi xi - pi lam)
    return _assemble(lam, [_wave(math.sqrt(2.0), -math.pi * lam, lam - 1.0, math.inf)],
                     "wavefunction")


def psi_quarter(model: WellModel) -> PiecewiseTrig:
    """
    sqrt(a) Psi(xi, T/4) = e^{-i pi/4} theta(1-xi) sin(pi xi) - e^{i pi/4} theta(1-lam+xi) sin(pi(lam-xi))

    For lambda < 2 the two supports overlap on [lambda - 1, 1]; above 2 they are disjoint.
    """
    lam = model.lam
    return _assemble(lam, [
        _wave(_EIGHTH, 0.0, -math.inf, 1.0),
        _wave(_EIGHTH.conjugate(), -math.pi * lam, lam - 1.0, math.inf),
    ], "wavefunction")


def psi_eighth(model: WellModel) -> PiecewiseTrig:
    """
    sqrt(2a) Psi(xi, T/8) built from the half-well pieces f_< (xi < lam/2) and f_> (xi > lam/2)
    plus e^{-i pi/4}[theta(1-xi) sin(pi xi) - theta(1-lam+xi) sin(pi(xi-lam))]

    The stored values carry the factor sqrt(2) (scale = sqrt 2).
    """
    lam = model.lam
    half = lam / 2.0
    contributions = [
        # f_<
        _wave(1.0, math.pi * half, -math.inf, min(half, 1.0 - half)),
        _wave(1.0, -math.pi * half, half - 1.0, half),
        # f_>
        _wave(1.0, -math.pi * half, half, 1.0 + half),
        _wave(1.0, -3.0 * math.pi * half, max(half, 3.0 * half - 1.0), math.inf),
        # edge terms
        _wave(_EIGHTH, 0.0, -math.inf, 1.0),
        _wave(-_EIGHTH, -math.pi * lam, lam - 1.0, math.inf),
    ]
    contributions = [c for c in contributions if c.lo < c.hi]
    return _assemble(lam, contributions, "wavefunction", scale=math.sqrt(2.0))


def density_from_psi(psi: PiecewiseTrig) -> PiecewiseTrig:
    """
    Exact a*rho = |Psi|^2 of a closed-form wavefunction

    On each interval |alpha sin + beta cos|^2 expands into a constant plus
    cos(2 pi xi) and sin(2 pi xi) terms.
    """
    norm = psi.scale ** 2
    pieces = []
    for i in range(len(psi.pieces)):
        alpha, beta = psi.sin_cos(i)
        a2, b2 = abs(alpha) ** 2, abs(beta) ** 2
        cross = (alpha * beta.conjugate()).real
        pieces.append(_canonical([
            TrigTerm(complex((a2 + b2) / (2 * norm)), 0, math.pi / 2),
            TrigTerm(complex((b2 - a2) / (2 * norm)), 2, math.pi / 2),
            TrigTerm(complex(cross / norm), 2, 0.0),
        ]))
    return PiecewiseTrig(psi.knots, tuple(pieces), psi.lam, "density", 1.0, dict(psi.metadata))


def current_from_psi(psi: PiecewiseTrig) -> PiecewiseTrig:
    """
    Exact reduced current (1/pi) Im[Psi* dPsi/dxi] of a closed-form wavefunction

    For Psi = alpha sin + beta cos on an interval the current is the constant
    Im(alpha conj(beta)), so the result is piecewise constant.
    """
    norm = psi.scale ** 2
    pieces = []
    for i in range(len(psi.pieces)):
        alpha, beta = psi.sin_cos(i)
        value = (alpha * beta.conjugate()).imag / norm
        pieces.append(_canonical([TrigTerm(complex(value), 0, math.pi / 2)]))
    return PiecewiseTrig(psi.knots, tuple(pieces), psi.lam, "current", 1.0, dict(psi.metadata))


def density_quarter(model: WellModel) -> PiecewiseTrig:
    """a*rho(xi, T/4) = theta(1-xi) sin^2(pi xi) + theta(1-lam+xi) sin^2(pi(lam-xi))"""
    return density_from_psi(psi_quarter(model))


def current_quarter(model: WellModel) -> PiecewiseTrig:
    """j(xi, T/4) = sin(pi lam) on (lam - 1, 1), zero elsewhere"""
    lam = model.lam
    contributions = []
    if lam - 1.0 < 1.0:
        contributions.append(_const(math.sin(math.pi * lam), lam - 1.0, 1.0))
    return _assemble(lam, contributions, "current")


def density_eighth(model: WellModel) -> PiecewiseTrig:
    """a*rho(xi, T/8) from the closed-form wavefunction"""
    return density_from_psi(psi_eighth(model))


def current_eighth(model: WellModel) -> PiecewiseTrig:
    """
    j(xi, T/8) = (1/(2 sqrt 2)) [c1 sin(pi lam/2) + c3 sin(3 pi lam/2)]

    c1 and c3 are sums of step-function products, with separate branches for
    xi < lam/2 and xi > lam/2. All of them vanish identically for lam > 4.
    """
    lam = model.lam
    half = lam / 2.0
    s1 = math.sin(math.pi * half) / (2.0 * math.sqrt(2.0))
    s3 = math.sin(3.0 * math.pi * half) / (2.0 * math.sqrt(2.0))
    inf = math.inf
    # (weight, lo, hi) for the step products, each restricted to its half of the well
    below = [
        (-s1, -inf, min(1.0, 1.0 - half)),
        (s1, half - 1.0, 1.0),
        (s1, max(half - 1.0, lam - 1.0), inf),
        (s3, lam - 1.0, 1.0 - half),
    ]
    above = [
        (s1, -inf, min(1.0 + half, 1.0)),
        (s1, lam - 1.0, 1.0 + half),
        (-s1, max(3.0 * half - 1.0, lam - 1.0), inf),
        (s3, 3.0 * half - 1.0, 1.0),
    ]
    contributions = []
    for weight, lo, hi in below:
        lo, hi = max(lo, -inf), min(hi, half)
        if lo < hi and weight != 0.0:
            contributions.append(_const(weight, lo, hi))
    for weight, lo, hi in above:
        lo, hi = max(lo, half), min(hi, inf)
        if lo < hi and weight != 0.0:
            contributions.append(_const(weight, lo, hi))
    return _assemble(lam, contributions, "current")


@dataclass(frozen=True)
class CuspSet:
    """
    Candidate cusp abscissae of Psi at T/8

    Attributes:
        abscissae: x1..x5 = 1, |lam/2 - 1|, lam/2, x4, lam - 1 (units of a)
        degenerate_pairs: index pairs of coinciding abscissae
        psi_kink: whether dPsi/dxi actually jumps at each abscissa
        density_cusp: whether d(rho)/dxi jumps there (needs a jump of Re(Psi* dPsi))
    """
    abscissae: Tuple[float, ...]
    degenerate_pairs: Tuple[Tuple[int, int], ...]
    psi_kink: Tuple[bool, ...]
    density_cusp: Tuple[bool, ...]

    def active(self) -> List[float]:
        """Distinct abscissae where the density shows a cusp"""
        points = sorted({round(x, 12) for x, flag in zip(self.abscissae, self.density_cusp) if flag})
        return [float(x) for x in points]


def cusp_abscissae_eighth(model: WellModel, tol: float = 1e-9) -> CuspSet:
    """
    Cusp candidates at T/8 with degeneracy and activity flags

    Activity is read off the exact wavefunction: a kink is a jump of dPsi/dxi,
    and it shows in the density only if Re(Psi* dPsi/dxi) jumps as well.
    """
    lam = model.lam
    values = tuple(float(x) for x in eighth_period_cusps(model.fraction or lam))
    pairs = tuple((i, j) for i in range(5) for j in range(i + 1, 5)
                  if abs(values[i] - values[j]) <= tol)

    psi = psi_eighth(model)
    dpsi = psi.derivative()
    kinks, cusps = [], []
    for x in values:
        if not (0.0 < x < lam):
            kinks.append(False)
            cusps.append(False)
            continue
        p = psi.one_sided(x, "left")
        d_left, d_right = dpsi.one_sided(x, "left"), dpsi.one_sided(x, "right")
        kinks.append(abs(d_left - d_right) > tol)
        cusps.append(abs((p.conjugate() * (d_left - d_right)).real) > tol)
    return CuspSet(values, pairs, tuple(kinks), tuple(cusps))


def fragmented_density(model: WellModel, order: int) -> PiecewiseTrig:
    """
    Fully fragmented density at t = T/2^{order+1}

    The density is 2^order translated copies of the initial density, each
    scaled by 2^{-order}: an elementary pattern rho0(xi) + rho0(L - xi) with
    L = lam/2^{order-1}, repeated 2^{order-1} times at steps of L. Orders 1
    and 2 are exact results; order >= 3 is tagged as a conjecture.

    Args:
        model: Well model
        order: Fragmentation order N >= 1

    Raises:
        ThresholdError: when lambda <= 2^order, where the copies still overlap
    """
    if order < 1:
        raise ValueError(f"fragmentation order must be >= 1, got {order}")
    lam = model.lam
    threshold = 2 ** order
    if lam <= threshold:
        raise ThresholdError(
            f"lambda={lam} is not above the fragmentation threshold {threshold} for order "
            f"{order}; evaluate the series at tau=1/{2 ** (order + 1)} instead")
    weight = 1.0 / threshold
    step = lam / 2 ** (order - 1)
    contributions = []
    for j in range(2 ** (order - 1)):
        for shift, lo in ((j * step, j * step), ((j + 1) * step, (j + 1) * step - 1.0)):
            # weight * 2 sin^2(pi(xi - shift)) = weight - weight cos(2 pi xi - 2 pi shift)
            contributions.append(_const(weight, lo, lo + 1.0))
            contributions.append(_Contribution(
                TrigTerm(complex(-weight), 2, -2.0 * math.pi * shift + math.pi / 2), lo, lo + 1.0))
    metadata = {"order": order, "conjecture": order >= 3, "threshold": threshold}
    return _assemble(lam, contributions, "density", metadata=metadata)


def closed_form_for_time(model: WellModel, tau: TimeLike) -> PiecewiseTrig:
    """
    Closed-form wavefunction at one of the supported times 0, 1/2, 1/4, 1/8

    Raises:
        ValueError: for any other time
    """
    tau = as_time(tau)
    builders = {
        RationalTime(0, 1): initial_wavefunction,
        RationalTime(1, 2): psi_half,
        RationalTime(1, 4): psi_quarter,
        RationalTime(1, 8): psi_eighth,
    }
    if tau not in builders:
        raise ValueError(f"no closed form at tau={tau}; supported: 0, 1/2, 1/4, 1/8")
    return builders[tau](model)


def sample_wave(psi: PiecewiseTrig, grid: SpatialGrid, tau: TimeLike) -> WaveField:
    """Exact sqrt(a) Psi on a grid, packaged like a series field with zero error"""
    return WaveField(grid, psi.wavefunction(grid.points), as_time(tau), 0.0, psi.lam, 0)


def sample_density(profile: PiecewiseTrig, grid: SpatialGrid, tau: TimeLike) -> DensityProfile:
    """Exact a*rho on a grid; accepts a density or a wavefunction closed form"""
    if profile.kind == "wavefunction":
        wave = sample_wave(profile, grid, tau)
        return DensityProfile(grid, np.abs(wave.values) ** 2, wave.time, profile.lam, 0.0,
                              "closed", wave)
    return DensityProfile(grid, profile.evaluate(grid.points), as_time(tau), profile.lam, 0.0,
                          "closed")


def sample_current(profile: PiecewiseTrig, grid: SpatialGrid, tau: TimeLike) -> CurrentProfile:
    """Exact reduced current on a grid"""
    if profile.kind == "wavefunction":
        profile = current_from_psi(profile)
    return CurrentProfile(grid, profile.evaluate(grid.points), as_time(tau), profile.lam,
                          "none", True)

"""Passive source output distribution, post-selection regions and region averages.

The source emits a coherent state whose polarisation (theta, phi) on the RL
sphere and intensity I are random.  phi is uniform; (theta, I) follow

    f(theta, I) = 1 / (2 nu_t pi^2 sqrt(1 - I c / 2nu_t) sqrt(1 - I s / 2nu_t))

with c = cos^2(theta/2), s = sin^2(theta/2), supported on I < I*_theta.
Averages over a region Omega use the weight f / 2pi on (phi, theta, I).

Numerics
--------
phi is integrated analytically for integrands carrying cos(m phi).  For fixed
theta the substitution ``I = A - (B - A) sinh(tau)^2`` (A = I*_theta, B the
other branch of the minimum) turns ``dI / sqrt((A - I)(B - I))`` into
``2 dtau``, which removes the inverse square root at I*_theta and the
near-coalescing pair of roots at theta = pi/2.  The remaining theta integral
has kinks where I*_theta crosses an interval endpoint and a logarithmic
singularity at pi/2; these are all placed at panel endpoints and handled with
tanh-sinh rules.  Refinement doubles the resolution until a set of positive
probe integrals stops moving by more than ``tol`` (relative).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln

from .errors import DomainError, EmptyRegionError, ToleranceNotMetError

DEFAULT_TOL = 1e-9
DEFAULT_N_MAX = 40

KEY, TEST, FULL = "key", "test", "full"
_POLES = {KEY: ("R", "L"), TEST: ("H", "V"), FULL: ("all",)}


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class IntensityInterval:
    """Half-open intensity interval [lo, hi) as fractions of I_max = 4 nu_t."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi <= 1.0):
            raise DomainError(f"need 0 <= lo < hi <= 1, got [{self.lo}, {self.hi})")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def overlaps(self, other: "IntensityInterval") -> bool:
        return self.lo < other.hi and other.lo < self.hi


FULL_RANGE = IntensityInterval(0.0, 1.0)


@dataclass(frozen=True)
class RegionSpec:
    """One post-selection region.

    ``dtheta`` is the polar half-width (Delta theta' for key caps, Delta theta
    for test stripes); ``dphi`` is the azimuthal half-width of test stripes.
    """

    basis: str
    pole: str
    interval: IntensityInterval = FULL_RANGE
    dtheta: float = math.pi / 2
    dphi: float | None = None

    def __post_init__(self):
        if self.basis not in _POLES:
            raise DomainError(f"unknown basis {self.basis!r}")
        if self.pole not in _POLES[self.basis]:
            raise DomainError(f"pole {self.pole!r} invalid for basis {self.basis!r}")
        if self.basis != FULL and not (0.0 < self.dtheta < math.pi / 2):
            raise DomainError(f"dtheta must lie in (0, pi/2), got {self.dtheta}")
        if self.basis == TEST:
            if self.dphi is None or not (0.0 < self.dphi < math.pi / 2):
                raise DomainError(f"dphi must lie in (0, pi/2), got {self.dphi}")

    @classmethod
    def full(cls, interval: IntensityInterval = FULL_RANGE) -> "RegionSpec":
        """The whole (phi, theta) sphere restricted to an intensity interval."""
        return cls(FULL, "all", interval)

    @property
    def theta_range(self) -> tuple[float, float]:
        if self.basis == KEY:
            return (0.0, self.dtheta) if self.pole == "R" else (math.pi - self.dtheta, math.pi)
        if self.basis == TEST:
            return (math.pi / 2 - self.dtheta, math.pi / 2 + self.dtheta)
        return (0.0, math.pi)

    @property
    def phi_window(self) -> tuple[float, float] | None:
        """(centre, half-width) of the azimuthal window, or None for a full circle.

        The V window (pi - dphi, pi + dphi) is read modulo 2 pi.
        """
        if self.basis != TEST:
            return None
        return (0.0 if self.pole == "H" else math.pi, self.dphi)

    @property
    def orientation(self) -> float:
        """+1 for R/H poles, -1 for L/V; turns alignment integrals into lambda."""
        return -1.0 if self.pole in ("L", "V") else 1.0

    def with_interval(self, interval: IntensityInterval) -> "RegionSpec":
        return RegionSpec(self.basis, self.pole, interval, self.dtheta, self.dphi)

    def mirror(self) -> "RegionSpec":
        """The opposite pole of the same setting."""
        other = {"R": "L", "L": "R", "H": "V", "V": "H", "all": "all"}[self.pole]
        return RegionSpec(self.basis, other, self.interval, self.dtheta, self.dphi)


@dataclass(frozen=True)
class SourceConfig:
    """Geometry of all post-selection regions plus the intensity scale nu*t."""

    nu_t: float
    dtheta_key: float
    dtheta_test: float
    dphi_test: float
    key_intervals: tuple[IntensityInterval, ...]
    test_intervals: tuple[IntensityInterval, ...]

    def __post_init__(self):
        object.__setattr__(self, "key_intervals", tuple(self.key_intervals))
        object.__setattr__(self, "test_intervals", tuple(self.test_intervals))
        if not self.nu_t > 0:
            raise DomainError(f"nu_t must be positive, got {self.nu_t}")
        for name in ("dtheta_key", "dtheta_test", "dphi_test"):
            value = getattr(self, name)
            if not (0.0 < value < math.pi / 2):
                raise DomainError(f"{name} must lie in (0, pi/2), got {value}")
        if not self.key_intervals or not self.test_intervals:
            raise DomainError("need at least one key and one test interval")
        for i, a in enumerate(self.key_intervals):
            for b in self.key_intervals[i + 1:]:
                if a.overlaps(b):
                    raise DomainError(f"key intervals overlap: {a} and {b}")

    @classmethod
    def consecutive(cls, w: float, nu_t: float, dtheta_key: float, dtheta_test: float,
                    dphi_test: float, settings: int = 4) -> "SourceConfig":
        """Key intervals [0,w), [w,2w), ..., [(d-1)w, 1); nested test intervals [0,w), ..., [0,1).

        Settings are returned highest intensity first.
        """
        if not (0.0 < w and (settings - 1) * w < 1.0):
            raise DomainError(f"width {w} incompatible with {settings} consecutive intervals")
        edges = [k * w for k in range(settings)] + [1.0]
        key = [IntensityInterval(edges[k], edges[k + 1]) for k in range(settings)]
        test = [IntensityInterval(0.0, edges[k + 1]) for k in range(settings)]
        return cls(nu_t, dtheta_key, dtheta_test, dphi_test, key[::-1], test[::-1])

    @property
    def d_key(self) -> int:
        return len(self.key_intervals)

    @property
    def d_test(self) -> int:
        return len(self.test_intervals)

    def key_region(self, j: int, pole: str = "R") -> RegionSpec:
        return RegionSpec(KEY, pole, self.key_intervals[j], self.dtheta_key)

    def test_region(self, j: int, pole: str = "H") -> RegionSpec:
        return RegionSpec(TEST, pole, self.test_intervals[j], self.dtheta_test, self.dphi_test)

    def key_regions(self, pole: str = "R") -> list[RegionSpec]:
        return [self.key_region(j, pole) for j in range(self.d_key)]

    def test_regions(self, pole: str = "H") -> list[RegionSpec]:
        return [self.test_region(j, pole) for j in range(self.d_test)]


@dataclass(frozen=True)
class RegionMoments:
    """Weighted integrals over one region (or a union of regions).

    ``p_select`` = <1>, ``pn[n]`` = <e^-I I^n / n!> / <1>, ``w1`` = <e^-I I>
    (not normalised), ``lam`` the alignment parameter of the single-photon
    component.
    """

    p_select: float
    pn: tuple[float, ...]
    w1: float
    lam: float

    def scaled(self, factor: float) -> "RegionMoments":
        """Moments of ``factor`` disjoint mirror copies of this region."""
        return RegionMoments(self.p_select * factor, self.pn, self.w1 * factor, self.lam)


# ---------------------------------------------------------------------------
# Source density


def max_intensity(theta: float, nu_t: float) -> float:
    """I*_theta = min{2 nu_t / cos^2(theta/2), 2 nu_t / sin^2(theta/2)}."""
    if not (0.0 <= theta <= math.pi):
        raise DomainError(f"theta must lie in [0, pi], got {theta}")
    return 2.0 * nu_t / max(math.cos(theta / 2) ** 2, math.sin(theta / 2) ** 2)


def intensity_density(theta: float, I: float, nu_t: float) -> float:
    """f(theta, I) of the passive source on 0 <= I < I*_theta."""
    if not (0.0 <= I < max_intensity(theta, nu_t)):
        raise DomainError(f"I={I} outside [0, I*_theta) at theta={theta}")
    u = I / (2.0 * nu_t)
    c, s = math.cos(theta / 2) ** 2, math.sin(theta / 2) ** 2
    return 1.0 / (2.0 * nu_t * math.pi ** 2 * math.sqrt(1.0 - u * c) * math.sqrt(1.0 - u * s))


# ---------------------------------------------------------------------------
# Integrands


@dataclass(frozen=True)
class Integrand:
    """g(theta, I) * cos(harmonic * phi), or a general g(theta, I, phi).

    With ``phi_numeric`` the function takes (theta, I, phi) and the azimuth is
    integrated by Gauss-Legendre instead of analytically.
    """

    name: str
    func: Callable = field(compare=False)
    harmonic: int = 0
    phi_numeric: bool = False


def unit() -> Integrand:
    return Integrand("unit", lambda th, I: np.ones_like(I))


def poisson(n: int) -> Integrand:
    return Integrand(f"poisson({n})", lambda th, I: _poisson_terms(I, n))


def intensity_weight() -> Integrand:
    return Integrand("intensity_weight", lambda th, I: np.exp(-I) * I)


def polar_alignment() -> Integrand:
    return Integrand("polar_alignment", lambda th, I: np.exp(-I) * I * np.cos(th))


def equatorial_alignment() -> Integrand:
    return Integrand("equatorial_alignment", lambda th, I: np.exp(-I) * I * np.sin(th), harmonic=1)


def fock_element(n: int, k: int, kp: int) -> Integrand:
    """Unnormalised (k, k') entry of <e^-I I^n/n! |n><n|_{theta,phi}> in the basis |n-k, k>."""
    if not (0 <= k <= n and 0 <= kp <= n):
        raise DomainError(f"fock indices ({k}, {kp}) out of range for n={n}")
    coeff = math.sqrt(math.comb(n, k) * math.comb(n, kp))
    p_cos, p_sin = 2 * n - k - kp, k + kp

    def g(th, I):
        return coeff * np.cos(th / 2) ** p_cos * np.sin(th / 2) ** p_sin * _poisson_terms(I, n)

    return Integrand(f"fock_element({n},{k},{kp})", g, harmonic=abs(k - kp))


def custom(name: str, func: Callable, harmonic: int = 0) -> Integrand:
    return Integrand(name, func, harmonic)


def phi_dependent(name: str, func: Callable) -> Integrand:
    return Integrand(name, func, phi_numeric=True)


def _poisson_terms(I, n):
    I = np.asarray(I, dtype=float)
    with np.errstate(divide="ignore"):
        return np.exp(-I + n * np.log(I) - gammaln(n + 1)) if n else np.exp(-I)


def poisson_table(I: np.ndarray, n_max: int) -> np.ndarray:
    """Rows n = 0..n_max of e^-I I^n / n! evaluated at the nodes ``I``."""
    n = np.arange(n_max + 1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = -I[None, :] + n * np.log(I[None, :]) - gammaln(n + 1)
    table = np.exp(logs)
    table[0] = np.exp(-I)
    return table


# ---------------------------------------------------------------------------
# Quadrature rules

# (tanh-sinh step in theta, Gauss-Legendre order per tau panel)
_LEVELS = ((0.5, 6), (0.25, 8), (0.125, 12), (0.0625, 16), (0.03125, 24), (0.015625, 32))
_TANH_SINH_TMAX = 3.5
_TAU_PANEL = 1.5
_PHI_NODES = 24


def _tanh_sinh(a: float, b: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    t = np.arange(-_TANH_SINH_TMAX, _TANH_SINH_TMAX + 0.5 * h, h)
    u = 0.5 * math.pi * np.sinh(t)
    half = 0.5 * (b - a)
    w = h * 0.5 * math.pi * np.cosh(t) / np.cosh(u) ** 2 * half
    # distance to the nearer endpoint, computed without cancellation
    d = (b - a) / (np.exp(2.0 * np.abs(u)) + 1.0)
    x = np.where(t < 0, a + d, b - d)
    keep = (d > 0) & (w > 0)
    return x[keep], w[keep]


def _theta_breakpoints(th_lo, th_hi, L0, L1, nu_t):
    points = {th_lo, th_hi}
    if th_lo < math.pi / 2 < th_hi:
        points.add(math.pi / 2)
    for L in (L0, L1):
        if 2.0 * nu_t < L < 4.0 * nu_t:
            t = 2.0 * math.acos(math.sqrt(2.0 * nu_t / L))
            for cross in (t, math.pi - t):
                if th_lo < cross < th_hi:
                    points.add(cross)
    return sorted(points)


def _build_rule(th_lo, th_hi, lo, hi, nu_t, level):
    h, m = _LEVELS[level]
    gx, gw = leggauss(m)
    L0, L1 = 4.0 * nu_t * lo, 4.0 * nu_t * hi
    bps = _theta_breakpoints(th_lo, th_hi, L0, L1, nu_t)
    thetas, intensities, weights = [], [], []
    for a, b in zip(bps[:-1], bps[1:]):
        th, wth = _tanh_sinh(a, b, h)
        sin_th = np.sin(th)
        A = 2.0 * nu_t / np.maximum(np.cos(th / 2) ** 2, np.sin(th / 2) ** 2)
        gap = 8.0 * nu_t * np.abs(np.cos(th)) / sin_th ** 2  # B - A
        ok = (A > L0) & (gap > 0) & (sin_th > 0)
        for k in np.nonzero(ok)[0]:
            tau_a = math.asinh(math.sqrt(max(A[k] - L1, 0.0) / gap[k]))
            tau_b = math.asinh(math.sqrt((A[k] - L0) / gap[k]))
            if tau_b <= tau_a:
                continue
            panels = max(1, math.ceil((tau_b - tau_a) / _TAU_PANEL))
            edges = np.linspace(tau_a, tau_b, panels + 1)
            half = 0.5 * np.diff(edges)
            mid = 0.5 * (edges[1:] + edges[:-1])
            tau = (mid[:, None] + half[:, None] * gx).ravel()
            wt = (half[:, None] * gw).ravel()
            thetas.append(np.full(tau.size, th[k]))
            intensities.append(A[k] - gap[k] * np.sinh(tau) ** 2)
            weights.append(wt * (wth[k] * 4.0 / (math.pi ** 2 * sin_th[k])))
    if not thetas:
        raise EmptyRegionError(
            f"region theta in ({th_lo:.6g}, {th_hi:.6g}), I/4nu_t in [{lo}, {hi}) is empty")
    theta = np.concatenate(thetas)
    intensity = np.clip(np.concatenate(intensities), 0.0, None)
    return theta, intensity, np.concatenate(weights)


def _probe_values(theta, I, w):
    e = np.exp(-I)
    probes = (np.ones_like(I), e, e * I, e * I ** 3, np.cos(theta / 2) ** 2 * e * I, np.sin(theta))
    return np.array([np.dot(w, p) for p in probes])


@dataclass(frozen=True)
class _Rule:
    theta: np.ndarray
    intensity: np.ndarray
    weight: np.ndarray
    level: int


@lru_cache(maxsize=512)
def _adaptive_rule(th_lo, th_hi, lo, hi, nu_t, tol):
    prev = _build_rule(th_lo, th_hi, lo, hi, nu_t, 0)
    prev_vals = _probe_values(*prev)
    for level in range(1, len(_LEVELS)):
        cur = _build_rule(th_lo, th_hi, lo, hi, nu_t, level)
        vals = _probe_values(*cur)
        if np.all(np.abs(vals - prev_vals) <= tol * np.abs(vals)):
            if vals[0] <= 0.0:
                raise EmptyRegionError("region has zero probability")
            return _Rule(*cur, level)
        prev, prev_vals = cur, vals
    raise ToleranceNotMetError(
        f"quadrature did not reach rel. tol {tol} within {len(_LEVELS)} levels "
        f"(theta in ({th_lo:.6g}, {th_hi:.6g}), I/4nu_t in [{lo}, {hi}), nu_t={nu_t})")


class RegionQuadrature:
    """Node set for averaging any integrand over one region.

    Build once per (region, nu_t, tol) and reuse for many integrands.
    """

    def __init__(self, region: RegionSpec, nu_t: float, tol: float = DEFAULT_TOL):
        if not nu_t > 0:
            raise DomainError(f"nu_t must be positive, got {nu_t}")
        if not tol > 0:
            raise DomainError(f"tol must be positive, got {tol}")
        self.region = region
        self.nu_t = nu_t
        th_lo, th_hi = region.theta_range
        rule = _adaptive_rule(th_lo, th_hi, region.interval.lo, region.interval.hi,
                              float(nu_t), float(tol))
        self.theta, self.intensity, self.weight = rule.theta, rule.intensity, rule.weight
        self.level = rule.level

    def phi_factor(self, harmonic: int) -> float:
        """(1/2pi) * integral of cos(m phi) over the region's azimuthal window."""
        window = self.region.phi_window
        m = abs(harmonic)
        if window is None:
            return 1.0 if m == 0 else 0.0
        centre, half = window
        if m == 0:
            return half / math.pi
        return math.cos(m * centre) * math.sin(m * half) / (math.pi * m)

    def integrate(self, values: np.ndarray, harmonic: int = 0) -> float:
        """Average of precomputed node values times cos(harmonic * phi)."""
        return self.phi_factor(harmonic) * float(np.dot(self.weight, values))

    def average(self, integrand: Integrand) -> float:
        if integrand.phi_numeric:
            return self.average_phi(integrand.func)
        return self.integrate(integrand.func(self.theta, self.intensity), integrand.harmonic)

    def average_phi(self, func):
        window = self.region.phi_window
        if window is None:
            phis = np.linspace(-math.pi, math.pi, 2 * _PHI_NODES, endpoint=False)
            wphi = np.full(phis.size, 2 * math.pi / phis.size)
        else:
            centre, half = window
            x, wx = leggauss(_PHI_NODES)
            phis, wphi = centre + half * x, half * wx
        total = 0.0
        for phi, wp in zip(phis, wphi):
            total += wp * float(np.dot(self.weight, func(self.theta, self.intensity, phi)))
        return total / (2 * math.pi)

    def poisson_averages(self, n_max: int) -> np.ndarray:
        """<e^-I I^n / n!> for n = 0..n_max."""
        return self.phi_factor(0) * (poisson_table(self.intensity, n_max) @ self.weight)


def quadrature(region: RegionSpec, nu_t: float, tol: float = DEFAULT_TOL) -> RegionQuadrature:
    return RegionQuadrature(region, nu_t, tol)


# ---------------------------------------------------------------------------
# Public averaging operations


def region_average(region: RegionSpec, integrand: Integrand, nu_t: float,
                   tol: float = DEFAULT_TOL) -> float:
    """<g>_Omega with weight f/2pi over the region clipped to I < I*_theta."""
    return RegionQuadrature(region, nu_t, tol).average(integrand)


def _alignment(quad: RegionQuadrature) -> float:
    if quad.region.basis == TEST:
        return quad.average(equatorial_alignment())
    return quad.average(polar_alignment())


def region_moments(region: RegionSpec, nu_t: float, n_max: int = DEFAULT_N_MAX,
                   tol: float = DEFAULT_TOL) -> RegionMoments:
    """Selection probability, photon-number distribution, <e^-I I> and lambda."""
    quad = RegionQuadrature(region, nu_t, tol)
    p_select = quad.average(unit())
    pn = quad.poisson_averages(n_max) / p_select
    w1 = quad.average(intensity_weight())
    lam = region.orientation * _alignment(quad) / w1
    return RegionMoments(p_select, tuple(float(x) for x in pn), w1, lam)


def merge_intervals(intervals: Sequence[IntensityInterval]) -> list[IntensityInterval]:
    """Disjoint cover of the set union (touching intervals are joined)."""
    merged: list[list[float]] = []
    for iv in sorted(intervals, key=lambda iv: (iv.lo, iv.hi)):
        if merged and iv.lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], iv.hi)
        else:
            merged.append([iv.lo, iv.hi])
    return [IntensityInterval(lo, hi) for lo, hi in merged]


def union_moments(regions: Sequence[RegionSpec], nu_t: float, n_max: int = DEFAULT_N_MAX,
                  tol: float = DEFAULT_TOL) -> RegionMoments:
    """Moments over the set union of regions from one basis.

    Overlapping intervals of the same pole are merged before integrating, so
    nothing is counted twice.  Regions of both poles may be mixed.
    """
    if not regions:
        raise DomainError("union of no regions")
    bases = {r.basis for r in regions}
    if len(bases) != 1:
        raise DomainError(f"cannot take the union of mixed bases {sorted(bases)}")
    geometry = {(r.dtheta, r.dphi) for r in regions}
    if len(geometry) != 1:
        raise DomainError("regions in a union must share their angular widths")
    by_pole: dict[str, list[RegionSpec]] = {}
    for r in regions:
        by_pole.setdefault(r.pole, []).append(r)

    p_select = w1 = align = 0.0
    pn = np.zeros(n_max + 1)
    for pole, group in sorted(by_pole.items()):
        for iv in merge_intervals([r.interval for r in group]):
            quad = RegionQuadrature(group[0].with_interval(iv), nu_t, tol)
            p_select += quad.average(unit())
            pn += quad.poisson_averages(n_max)
            w1 += quad.average(intensity_weight())
            align += quad.region.orientation * _alignment(quad)
    return RegionMoments(p_select, tuple(float(x) for x in pn / p_select), w1, align / w1)

"""Independent reference computations used by the tests.

Nothing here reuses the package's quadrature or closed forms.

Source averages use the phase picture of the source: two interfering pulses
give mode intensities I_R = nu_t (1 + cos a) and I_L = nu_t (1 + cos b) with
a, b uniform on [0, pi].  Then I = I_R + I_L, cos(theta) = (I_R - I_L) / I
and every region condition becomes an interval in cos(b) for fixed a, so
nested adaptive quadrature over (a, b) is smooth.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, optimize


def _window_candidates(region, nu_t, ca):
    """Lower and upper candidate bounds on cos(b); the window is max(lower)..min(upper)."""
    L0, L1 = 4 * nu_t * region.interval.lo, 4 * nu_t * region.interval.hi
    lower, upper = [-1.0, L0 / nu_t - 2 - ca], [1.0, L1 / nu_t - 2 - ca]
    r = 1 + ca  # I_R / nu_t
    if region.basis == "key":
        c = math.cos(region.dtheta)
        k = (1 - c) / (1 + c)
        if region.pole == "R":     # I_L < k I_R
            upper.append(k * r - 1)
        else:                      # I_R < k I_L
            lower.append(r / k - 1)
    elif region.basis == "test":
        s = math.sin(region.dtheta)
        lower.append(r * (1 - s) / (1 + s) - 1)
        upper.append(r * (1 + s) / (1 - s) - 1)
    return lower, upper


def _cos_b_window(region, nu_t, ca):
    """Interval of cos(b) satisfying the region's theta and intensity conditions."""
    lower, upper = _window_candidates(region, nu_t, ca)
    return max(lower), min(upper)


def _breakpoints(region, nu_t, grid=4001):
    """Values of a where the active window constraint switches or the window opens.

    The b-length has square-root edges there, which adaptive quadrature does
    not find on its own.
    """
    def signature(a):
        lower, upper = _window_candidates(region, nu_t, math.cos(a))
        lo, hi = max(lower), min(upper)
        return (int(np.argmax(lower)), int(np.argmin(upper)), lo < hi)

    def switch(a_lo, a_hi):
        s0 = signature(a_lo)
        for _ in range(200):
            mid = 0.5 * (a_lo + a_hi)
            if signature(mid) == s0:
                a_lo = mid
            else:
                a_hi = mid
            if a_hi - a_lo < 1e-15:
                break
        return 0.5 * (a_lo + a_hi)

    grid_a = np.linspace(0.0, math.pi, grid)
    sigs = [signature(a) for a in grid_a]
    return [switch(grid_a[i], grid_a[i + 1])
            for i in range(grid - 1) if sigs[i] != sigs[i + 1]]


def phi_factor(region, m):
    """(1/2pi) integral of cos(m phi) over the azimuthal window, by quadrature."""
    if region.basis != "test":
        lo, hi = -math.pi, math.pi
    else:
        centre = 0.0 if region.pole == "H" else math.pi
        lo, hi = centre - region.dphi, centre + region.dphi
    val, _ = integrate.quad(lambda p: math.cos(m * p), lo, hi, epsabs=1e-14, epsrel=1e-13)
    return val / (2 * math.pi)


def source_average(region, g, nu_t, harmonic=0, rel=1e-11):
    """<g(theta, I) cos(harmonic phi)> over ``region`` via the phase picture."""

    def inner(a):
        ca = math.cos(a)
        lo, hi = _cos_b_window(region, nu_t, ca)
        if lo >= hi:
            return 0.0
        b_lo, b_hi = math.acos(min(1.0, hi)), math.acos(max(-1.0, lo))

        def h(b):
            IR, IL = nu_t * (1 + ca), nu_t * (1 + math.cos(b))
            I = IR + IL
            cth = (IR - IL) / I if I > 0 else 0.0
            return g(math.acos(max(-1.0, min(1.0, cth))), I)

        val, _ = integrate.quad(h, b_lo, b_hi, epsabs=1e-15, epsrel=rel, limit=200)
        return val

    edges = [0.0, *_breakpoints(region, nu_t), math.pi]
    val = sum(integrate.quad(inner, a, b, epsabs=1e-15, epsrel=rel, limit=200)[0]
              for a, b in zip(edges, edges[1:]) if b > a)
    return val / math.pi ** 2 * phi_factor(region, harmonic)


def full_sphere_exp(eta, nu_t):
    """<e^{-eta I}> over the whole source: (e^{-eta nu_t} I0(eta nu_t))^2."""
    from scipy.special import i0e
    return float(i0e(eta * nu_t) ** 2)


# ---------------------------------------------------------------------------
# Kato coefficients by direct constrained optimisation


def _b_for(a, N, eps, sign):
    # exp(-2(b^2 - a^2)/(1 + sign 4a/3sqrtN)^2) = eps
    return math.sqrt(a * a - math.log(eps) * (1 + sign * 4 * a / (3 * math.sqrt(N))) ** 2 / 2)


def kato_numeric(kind, N, x, guess, eps):
    """Bound value at ``x`` with (a, b) optimised numerically at ``guess``."""
    r = math.sqrt(N)
    sign = {"dl": -1, "du": +1, "rl": +1, "ru": -1}[kind]

    def objective(a, at):
        b = _b_for(a, N, eps, sign)
        if kind in ("dl", "du"):
            return (b + a * (2 * at / N - 1)) * r
        if kind == "rl":
            return -(r * at + N * (a - b)) / (2 * a + r)
        return (r * at - N * (a - b)) / (r - 2 * a)

    if kind in ("dl", "du"):
        span = (-5 * r, 5 * r)
    elif kind == "rl":
        span = (-r / 2 * (1 - 1e-12), 10 * r)
    else:
        span = (-10 * r, r / 2 * (1 - 1e-12))
    res = optimize.minimize_scalar(lambda a: objective(a, guess), bounds=span, method="bounded",
                                   options={"xatol": 1e-10 * r})
    a = res.x
    if kind == "dl":
        return x - objective(a, x)
    if kind == "du":
        return x + objective(a, x)
    if kind == "rl":
        return -objective(a, x)
    return objective(a, x)


# ---------------------------------------------------------------------------
# Channel model per photon number


def yield_n(n, eta, p_d):
    return 1.0 - (1.0 - p_d) ** 2 * (1.0 - eta) ** n


def error_n(n, eta, p_d, p_right):
    """Bit-error probability of n photons, each reaching the right detector w.p. eta p_right.

    Error when only the wrong detector fires, plus half of the double clicks.
    """
    q = 1.0 - p_d
    p_wrong = 1.0 - p_right
    none_right = q * (1 - eta * p_right) ** n      # right detector silent
    none_wrong = q * (1 - eta * p_wrong) ** n      # wrong detector silent
    both_silent = q * q * (1 - eta) ** n
    only_wrong = none_right - both_silent
    both = 1 - none_right - none_wrong + both_silent
    return only_wrong + both / 2


def binary_entropy(x):
    if x <= 0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)

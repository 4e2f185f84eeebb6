"""Kato's martingale inequality (direct and reverse forms) and Serfling's bound.

Direct bounds turn an observed count Lambda into an interval on the sum of
conditional click probabilities S; reverse bounds do the opposite.  Each
uses coefficients (a, b) optimised in closed form for a preliminary guess of
the quantity being bounded, and each holds with failure probability eps
whatever the guess.  Counts are real numbers so expectations can be used.

Natural logs throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class KatoCoeffs:
    a: float
    b: float

    def __post_init__(self):
        if not self.b > abs(self.a):
            raise DomainError(f"Kato coefficients need b > |a|, got a={self.a}, b={self.b}")


def _check(N, x, guess, eps, name="count"):
    if not N >= 1:
        raise DomainError(f"N must be at least 1, got {N}")
    if not (0.0 <= x <= N):
        raise DomainError(f"{name} {x} outside [0, N={N}]")
    if not (0.0 <= guess <= N):
        raise DomainError(f"guess {guess} outside [0, N={N}]")
    if not (0.0 < eps < 1.0):
        raise DomainError(f"eps must lie in (0, 1), got {eps}")


def _b_minus(N, a, ln_eps):
    # b solving exp(-2(b^2 - a^2) / (1 - 4a/3sqrtN)^2) = eps
    return math.sqrt(18 * N * a * a - (16 * a * a - 24 * math.sqrt(N) * a + 9 * N) * ln_eps) \
        / (3 * math.sqrt(2 * N))


def _b_plus(N, a, ln_eps):
    # b solving exp(-2(b^2 - a^2) / (1 + 4a/3sqrtN)^2) = eps
    return math.sqrt(18 * N * a * a - (16 * a * a + 24 * math.sqrt(N) * a + 9 * N) * ln_eps) \
        / (3 * math.sqrt(2 * N))


def _strict(N, a, ln_eps, b_of):
    """KatoCoeffs(a, b(a)), nudging a towards 0 where rounding gives b == |a|.

    That happens at a = +-3 sqrt(N)/4 (guess 0 or N); any a with its own b is
    valid, so this only costs a negligible amount of tightness.
    """
    for _ in range(8):
        b = b_of(N, a, ln_eps)
        if b > abs(a):
            return KatoCoeffs(a, b)
        a *= 1.0 - 1e-6
    return KatoCoeffs(0.0, b_of(N, 0.0, ln_eps))


def direct_lower_coeffs(N: float, guess: float, eps: float) -> KatoCoeffs:
    """(a, b) minimising the lower deviation at Lambda = guess."""
    L, g = math.log(eps), guess
    q = 9 * g * (N - g) - 2 * N * L
    num = 3 * (9 * math.sqrt(2) * N * (N - 2 * g) * math.sqrt(-L * q)
               + 16 * N ** 1.5 * L * L - 72 * g * math.sqrt(N) * (N - g) * L)
    a = num / (4 * (9 * N - 8 * L) * q)
    return _strict(N, a, L, _b_minus)


def direct_upper_coeffs(N: float, guess: float, eps: float) -> KatoCoeffs:
    """(a, b) minimising the upper deviation at Lambda = guess."""
    L, g = math.log(eps), guess
    q = 9 * g * (N - g) - 2 * N * L
    num = 3 * (9 * math.sqrt(2) * N * (N - 2 * g) * math.sqrt(-L * q)
               - 16 * N ** 1.5 * L * L + 72 * g * math.sqrt(N) * (N - g) * L)
    a = num / (4 * (9 * N - 8 * L) * q)
    return _strict(N, a, L, _b_plus)


def _reverse_denominator(N, s, L):
    return 4 * (4 * N * L * L + 36 * (2 * s * s - 2 * N * s + N * N) * L + 81 * N * s * (N - s))


def reverse_lower_coeffs(N: float, guess: float, eps: float) -> KatoCoeffs:
    """(a', b) maximising the reverse lower bound at S = guess, with a' >= -sqrt(N)/2."""
    L, s = math.log(eps), guess
    root = math.sqrt(N * L * (N * L - 18 * s * (N - s)))
    num = 3 * math.sqrt(N) * (9 * (N - 2 * s) * root - 4 * N * L * L
                              - 9 * (8 * s * s - 8 * N * s + 3 * N * N) * L)
    a = max(num / _reverse_denominator(N, s, L), -math.sqrt(N) / 2)
    return _strict(N, a, L, _b_plus)


def reverse_upper_coeffs(N: float, guess: float, eps: float) -> KatoCoeffs:
    """(a', b) minimising the reverse upper bound at S = guess, with a' <= sqrt(N)/2."""
    L, s = math.log(eps), guess
    root = math.sqrt(N * L * (N * L + 18 * s * (s - N)))
    num = 3 * math.sqrt(N) * (9 * (N - 2 * s) * root + 4 * N * L * L
                              + 9 * (8 * s * s - 8 * N * s + 3 * N * N) * L)
    a = min(num / _reverse_denominator(N, s, L), math.sqrt(N) / 2)
    return _strict(N, a, L, _b_minus)


def zero_slope_coeffs(eps: float) -> KatoCoeffs:
    """a = 0, b = sqrt(ln(1/eps)/2): the Hoeffding-like diagnostic choice."""
    if not (0.0 < eps < 1.0):
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    return KatoCoeffs(0.0, math.sqrt(-math.log(eps) / 2))


def _deviation(N, lam, c):
    return (c.b + c.a * (2 * lam / N - 1)) * math.sqrt(N)


def kato_direct_lower(N: float, lam: float, guess: float, eps: float,
                      coeffs: KatoCoeffs | None = None) -> float:
    """Lower bound K^L on S given the observed count ``lam``."""
    _check(N, lam, guess, eps)
    c = coeffs or direct_lower_coeffs(N, guess, eps)
    return lam - _deviation(N, lam, c)


def kato_direct_upper(N: float, lam: float, guess: float, eps: float,
                      coeffs: KatoCoeffs | None = None) -> float:
    """Upper bound K^U on S given the observed count ``lam``."""
    _check(N, lam, guess, eps)
    c = coeffs or direct_upper_coeffs(N, guess, eps)
    return lam + _deviation(N, lam, c)


def kato_reverse_lower(N: float, s: float, guess: float, eps: float,
                       coeffs: KatoCoeffs | None = None) -> float:
    """Lower bound on the count given S (or a lower bound on S); non-decreasing in s."""
    _check(N, s, guess, eps, "s")
    c = coeffs or reverse_lower_coeffs(N, guess, eps)
    den = 2 * c.a + math.sqrt(N)
    if den <= 0:
        return -math.inf
    return (math.sqrt(N) * s + N * (c.a - c.b)) / den


def kato_reverse_upper(N: float, s: float, guess: float, eps: float,
                       coeffs: KatoCoeffs | None = None) -> float:
    """Upper bound on the count given S (or an upper bound on S); non-decreasing in s."""
    _check(N, s, guess, eps, "s")
    c = coeffs or reverse_upper_coeffs(N, guess, eps)
    den = math.sqrt(N) - 2 * c.a
    if den <= 0:
        return math.inf
    return (math.sqrt(N) * s - N * (c.a - c.b)) / den


def serfling_upsilon(x: float, y: float, z: float) -> float:
    """Sampling correction sqrt((x + y) x (y + 1) ln(1/z) / (2 y^2))."""
    if not y >= 1:
        raise DomainError(f"test sample size must be at least 1, got {y}")
    if not x >= 0:
        raise DomainError(f"x must be non-negative, got {x}")
    if not (0.0 < z < 1.0):
        raise DomainError(f"z must lie in (0, 1), got {z}")
    return math.sqrt((x + y) * x * (y + 1) * math.log(1 / z) / (2 * y * y))

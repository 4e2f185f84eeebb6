import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from oracles import kato_numeric
from passive_qkd.concentration import (KatoCoeffs, direct_lower_coeffs, direct_upper_coeffs,
                                       kato_direct_lower, kato_direct_upper, kato_reverse_lower,
                                       kato_reverse_upper, reverse_lower_coeffs,
                                       reverse_upper_coeffs, serfling_upsilon, zero_slope_coeffs)
from passive_qkd.errors import DomainError

BOUNDS = {"dl": kato_direct_lower, "du": kato_direct_upper,
          "rl": kato_reverse_lower, "ru": kato_reverse_upper}


@pytest.mark.parametrize("kind", list(BOUNDS))
@pytest.mark.parametrize("N", [1e4, 1e6, 1e10])
@pytest.mark.parametrize("eps", [1e-20, 1e-5, 0.05])
def test_closed_form_matches_numeric_optimum(kind, N, eps):
    for frac in (1e-4, 0.01, 0.3, 0.5, 0.9):
        g = frac * N
        for x in (g, 0.8 * g, min(1.2 * g, N)):
            got = BOUNDS[kind](N, x, g, eps)
            want = kato_numeric(kind, N, x, g, eps)
            assert got == pytest.approx(want, abs=1e-5 * abs(got - x) + 1e-9)


def test_zero_slope_deviation():
    N, eps, lam = 1e6, 1e-20, 3e4
    dev = math.sqrt(N * math.log(1 / eps) / 2)
    c = zero_slope_coeffs(eps)
    assert lam - kato_direct_lower(N, lam, lam, eps, c) == pytest.approx(dev, rel=1e-14)
    assert kato_direct_upper(N, lam, lam, eps, c) - lam == pytest.approx(dev, rel=1e-14)


def test_direct_lower_example():
    v = kato_direct_lower(1e6, 1e4, 1e4, 1e-20)
    assert 1e4 - 1e3 < v < 1e4


def test_reverse_lower_example():
    v = kato_reverse_lower(1e6, 1e4, 1e4, 1e-20)
    assert 9e3 < v < 1e4


def test_optimised_coefficients_beat_zero_slope():
    N, g, eps = 1e8, 1e5, 1e-20
    c0 = zero_slope_coeffs(eps)
    assert kato_direct_lower(N, g, g, eps) > kato_direct_lower(N, g, g, eps, c0)
    assert kato_direct_upper(N, g, g, eps) < kato_direct_upper(N, g, g, eps, c0)


def test_width_shrinks_as_eps_grows():
    N, g = 1e6, 1e4
    widths = [kato_direct_upper(N, g, g, e) - kato_direct_lower(N, g, g, e)
              for e in (1e-20, 1e-10, 1e-2)]
    assert widths[0] > widths[1] > widths[2] > 0


@pytest.mark.parametrize("kind", list(BOUNDS))
def test_collapse_as_eps_tends_to_one(kind):
    N, x = 1e6, 2e4
    gaps = [abs(BOUNDS[kind](N, x, x, 1 - d) - x) for d in (1e-2, 1e-4, 1e-8)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-2 * gaps[0]


def test_coefficient_domain():
    with pytest.raises(DomainError):
        KatoCoeffs(1.0, 1.0)
    for fn in (direct_lower_coeffs, direct_upper_coeffs, reverse_lower_coeffs,
               reverse_upper_coeffs):
        c = fn(1e6, 3e5, 1e-10)
        assert c.b > abs(c.a)


def test_reverse_clamping_keeps_regime():
    # extreme guesses push the unclamped slope past +-sqrt(N)/2
    N = 100.0
    for g in (0.0, 1e-3, 50.0, 99.0, 100.0):
        assert reverse_lower_coeffs(N, g, 1e-20).a >= -math.sqrt(N) / 2
        assert reverse_upper_coeffs(N, g, 1e-20).a <= math.sqrt(N) / 2


@pytest.mark.parametrize("args", [(0.5, 1, 1, 0.1), (10, -1, 1, 0.1), (10, 11, 1, 0.1),
                                  (10, 1, 11, 0.1), (10, 1, 1, 0.0), (10, 1, 1, 1.0)])
@pytest.mark.parametrize("kind", list(BOUNDS))
def test_domain_errors(kind, args):
    with pytest.raises(DomainError):
        BOUNDS[kind](*args)


counts = st.tuples(st.floats(10, 1e12), st.floats(1e-6, 1 - 1e-6), st.floats(1e-6, 1 - 1e-6),
                   st.sampled_from([1e-20, 1e-10, 1e-3, 0.2]))


@given(counts)
def test_direct_bounds_bracket_observation(c):
    N, fx, fg, eps = c
    x, g = fx * N, fg * N
    assert kato_direct_lower(N, x, g, eps) < x < kato_direct_upper(N, x, g, eps)


@given(counts)
def test_reverse_bounds_bracket_at_guess(c):
    N, fx, _, eps = c
    s = fx * N
    assert kato_reverse_lower(N, s, s, eps) < s < kato_reverse_upper(N, s, s, eps)


@given(counts, st.floats(1e-6, 1 - 1e-6))
def test_reverse_bounds_monotone_in_s(c, f2):
    N, f1, fg, eps = c
    s1, s2 = sorted((f1 * N, f2 * N))
    g = fg * N
    assert kato_reverse_lower(N, s1, g, eps) <= kato_reverse_lower(N, s2, g, eps)
    assert kato_reverse_upper(N, s1, g, eps) <= kato_reverse_upper(N, s2, g, eps)


# ---------------------------------------------------------------------------
# Serfling


def test_upsilon_examples():
    assert serfling_upsilon(0, 50, 1e-10) == 0.0
    assert serfling_upsilon(100, 100, 1e-20) == pytest.approx(68.1999, abs=1e-4)
    with pytest.raises(DomainError):
        serfling_upsilon(10, 0, 0.1)


@given(st.floats(0, 1e9), st.floats(1, 1e9), st.floats(1e-30, 0.5), st.floats(1.01, 10))
def test_upsilon_monotone(x, y, z, k):
    assume(x > 0)
    base = serfling_upsilon(x, y, z)
    assert serfling_upsilon(x * k, y, z) > base
    assert serfling_upsilon(x, y * k, z) < base * (1 + 1e-12)


# ---------------------------------------------------------------------------
# statistical coverage


def _violations(N, p, eps, trials, guess_factor, seed):
    rng = np.random.default_rng(seed)
    S = N * p
    guess = min(N, S * guess_factor)
    lam = rng.binomial(int(N), p, size=trials).astype(float)
    bad = dict.fromkeys(BOUNDS, 0)
    for x in lam:
        bad["dl"] += kato_direct_lower(N, x, guess, eps) > S
        bad["du"] += kato_direct_upper(N, x, guess, eps) < S
    bad["rl"] = int(np.sum(lam < kato_reverse_lower(N, S, guess, eps)))
    bad["ru"] = int(np.sum(lam > kato_reverse_upper(N, S, guess, eps)))
    return {k: v / trials for k, v in bad.items()}


@pytest.mark.parametrize("guess_factor", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("p", [0.01, 0.1, 0.5])
def test_coverage_iid(p, guess_factor):
    eps, trials = 0.05, 1000
    freq = _violations(1e4, p, eps, trials, guess_factor, seed=int(1000 * p + 10 * guess_factor))
    limit = eps + 3 * math.sqrt(eps / trials)
    for kind, f in freq.items():
        assert f <= limit, (kind, f)


def test_coverage_adaptive_sequence():
    # click probability chosen from the past: p_i = 0.3 if the last round clicked else 0.05
    rng = np.random.default_rng(7)
    N, eps, trials = 2000, 0.05, 600
    bad = dict.fromkeys(BOUNDS, 0)
    for _ in range(trials):
        S = lam = 0.0
        last = 0
        u = rng.random(N)
        for i in range(N):
            p = 0.3 if last else 0.05
            S += p
            last = int(u[i] < p)
            lam += last
        g = 0.066 * N
        bad["dl"] += kato_direct_lower(N, lam, g, eps) > S
        bad["du"] += kato_direct_upper(N, lam, g, eps) < S
        bad["rl"] += lam < kato_reverse_lower(N, S, g, eps)
        bad["ru"] += lam > kato_reverse_upper(N, S, g, eps)
    limit = eps + 3 * math.sqrt(eps / trials)
    for kind, v in bad.items():
        assert v / trials <= limit, kind


@pytest.mark.parametrize("N", [1.0, 1e4, 1e12, 1e15])
@pytest.mark.parametrize("eps", [1e-20, 0.05])
def test_guess_on_the_boundary(N, eps):
    # the optimum sits on b = |a| at guess 0 or N; coefficients must stay admissible
    for g in (0.0, N):
        for fn in (direct_lower_coeffs, direct_upper_coeffs, reverse_lower_coeffs,
                   reverse_upper_coeffs):
            c = fn(N, g, eps)
            assert c.b > abs(c.a)
        assert kato_direct_lower(N, 0.0, g, eps) <= 0.0
        assert kato_direct_upper(N, N, g, eps) >= N

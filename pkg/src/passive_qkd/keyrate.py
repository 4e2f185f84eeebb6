"""Single-photon count bounds, phase-error bound, error budget and key length.

Three evaluation modes share one report type:

finite       concentration intervals -> LPs -> reverse bounds -> Serfling -> l
asymptotic   gains known exactly; reverse bounds are the identity, the
             sampling term vanishes, the floor and the log penalty are dropped
perfect_pe   the LPs are replaced by the channel's true y1 and e1

Every abort maps to K = 0 with a reason code rather than an exception.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channel import (ChannelParams, ChannelRates, binary_entropy, channel_eta,
                      counts_from_rates, ec_leakage, expected_rates, perfect_pe_targets)
from .characterization import SourceCharacterization
from .concentration import kato_reverse_lower, kato_reverse_upper, serfling_upsilon
from .data import ObservedData, ProtocolParams
from .decoy import DecoyBounds, estimate_bounds, exact_bounds
from .errors import (DegenerateStateError, DomainError, EmptyRegionError, InfeasibleLPError,
                     LPNumericalError, ToleranceNotMetError)

FINITE, ASYMPTOTIC, PERFECT_PE = "finite", "asymptotic", "perfect_pe"
MODES = (FINITE, ASYMPTOTIC, PERFECT_PE)

# abort reason codes
LP_INFEASIBLE = "lp_infeasible"
LP_NUMERICAL = "lp_numerical"
EMPTY_REGION = "empty_region"
QUADRATURE_FAILURE = "quadrature_failure"
TEST_SAMPLE_TOO_SMALL = "test_sample_too_small"
NO_SINGLE_PHOTON_COUNTS = "no_single_photon_counts"
KEY_LENGTH_NONPOSITIVE = "key_length_nonpositive"


@dataclass(frozen=True)
class KeyRateReport:
    mode: str
    decoy: DecoyBounds | None = None
    M_key1_L: float = 0.0
    M_key1_U: float = 0.0
    M_test1_ideal_L: float = 0.0
    m_test1_ideal_U: float = 0.0
    m_ph_U: float = 0.0
    e_ph_U: float = 0.5
    eps_PE: float = 0.0
    eps_sec: float = 0.0
    lambda_EC: float = 0.0
    l: int | None = 0
    K: float = 0.0
    abort_reason: str | None = None


class _Abort(Exception):
    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


def error_budget(d_key: int, d_test: int, eps: float, eps_PA: float,
                 delta: float) -> tuple[float, float]:
    """(eps_PE, eps_sec): 2(d_key + d_test) direct, 4 reverse and 1 sampling use."""
    if min(d_key, d_test) < 0 or min(eps, eps_PA, delta) <= 0:
        raise DomainError("error budget needs non-negative setting counts and positive eps")
    eps_PE = eps * (2 * (d_key + d_test) + 5)
    return eps_PE, math.sqrt(eps_PE) + eps_PA + delta


def key_length(M_key1_L: float, e_ph_U: float, lambda_EC: float, eps_cor: float,
               eps_PA: float, delta: float) -> int:
    """floor(M (1 - h(e)) - lambda_EC - log2(1 / (2 eps_cor eps_PA^2 delta))), at least 0."""
    for name, v in (("eps_cor", eps_cor), ("eps_PA", eps_PA), ("delta", delta)):
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v}")
    if M_key1_L <= 0:
        return 0
    penalty = -(1.0 + math.log2(eps_cor) + 2 * math.log2(eps_PA) + math.log2(delta))
    value = M_key1_L * (1.0 - binary_entropy(e_ph_U)) - lambda_EC - penalty
    return max(0, math.floor(value))


def single_photon_count_bounds(decoy: DecoyBounds, params: ProtocolParams,
                               source: SourceCharacterization,
                               guesses: tuple[float, float] | None = None):
    """(M_key1_L, M_key1_U, M_test1_ideal_L) from the reverse concentration bounds.

    ``guesses`` are the expected single-photon yield and ideal error used to
    tune the coefficients; by default the LP bounds themselves.
    """
    N, eps = params.N, params.eps
    w_key = N * params.q_K * source.key_union.w1
    w_test = N * params.q_T * source.test_union.w1 * source.lambda_test
    y_guess = guesses[0] if guesses else None

    def rev(fn, s, g):
        s = min(max(s, 0.0), N)
        g = s if g is None else min(max(g, 0.0), N)
        return fn(N, s, g, eps)

    M_L = max(0.0, rev(kato_reverse_lower, w_key * decoy.y1_L,
                       None if y_guess is None else w_key * y_guess))
    M_U = rev(kato_reverse_upper, w_key * decoy.y1_U,
              None if y_guess is None else w_key * y_guess)
    T_L = max(0.0, rev(kato_reverse_lower, w_test * decoy.y1_L,
                       None if y_guess is None else w_test * y_guess))
    return M_L, M_U, T_L


def phase_error_bound(M_key1_L: float, M_key1_U: float, M_test1_ideal_L: float,
                      e1_ideal_U: float, params: ProtocolParams,
                      source: SourceCharacterization, e1_guess: float | None = None):
    """(m_test1_ideal_U, m_ph_U, e_ph_U); raises _Abort on empty samples."""
    if M_test1_ideal_L < 1:
        raise _Abort(TEST_SAMPLE_TOO_SMALL)
    if M_key1_L <= 0:
        raise _Abort(NO_SINGLE_PHOTON_COUNTS)
    N = params.N
    w_test = N * params.q_T * source.test_union.w1 * source.lambda_test
    s = min(max(w_test * e1_ideal_U, 0.0), N)
    g = s if e1_guess is None else min(max(w_test * e1_guess, 0.0), N)
    m_U = kato_reverse_upper(N, s, g, params.eps)
    m_ph = m_U * M_key1_U / M_test1_ideal_L + serfling_upsilon(M_key1_U, M_test1_ideal_L,
                                                               params.eps)
    return m_U, m_ph, min(m_ph / M_key1_L, 0.5)


def _finite(source, channel, params, observed, rates):
    eta = channel_eta(channel)
    y_true, e_true = perfect_pe_targets(eta, channel.p_d)
    expected = counts_from_rates(rates, params)
    observed = observed or expected
    d_key, d_test = len(source.key), len(source.test)
    eps_PE, eps_sec = error_budget(d_key, d_test, params.eps, params.eps_PA, params.delta)
    if params.lambda_EC is not None:
        lam_EC = params.lambda_EC
    else:
        lam_EC = ec_leakage(expected.M_key, expected.m_key, channel.f_EC)
    decoy = estimate_bounds(observed, params, source, guesses=expected)
    M_L, M_U, T_L = single_photon_count_bounds(decoy, params, source, (y_true, e_true))
    partial = dict(mode=FINITE, decoy=decoy, M_key1_L=M_L, M_key1_U=M_U, M_test1_ideal_L=T_L,
                   eps_PE=eps_PE, eps_sec=eps_sec, lambda_EC=lam_EC)
    try:
        m_U, m_ph, e_ph = phase_error_bound(M_L, M_U, T_L, decoy.e1_ideal_U, params, source,
                                            e_true)
    except _Abort as abort:
        return KeyRateReport(**partial, abort_reason=abort.reason)
    l = key_length(M_L, e_ph, lam_EC, params.eps_cor, params.eps_PA, params.delta)
    return KeyRateReport(**partial, m_test1_ideal_U=m_U, m_ph_U=m_ph, e_ph_U=e_ph, l=l,
                         K=l / params.N,
                         abort_reason=None if l > 0 else KEY_LENGTH_NONPOSITIVE)


def _limit(mode, source, channel, params, rates):
    """Asymptotic and perfect-PE rates per round, with the key basis always chosen."""
    eta = channel_eta(channel)
    if mode == ASYMPTOTIC:
        decoy = exact_bounds(source, rates.key_gain, rates.test_error, params.n_cut)
    else:
        y1, e1 = perfect_pe_targets(eta, channel.p_d)
        decoy = DecoyBounds(y1, y1, e1)
    if params.lambda_EC is not None:
        lam = params.lambda_EC / params.N
    else:
        lam = ec_leakage(rates.sifted, rates.sifted_errors, channel.f_EC)
    w_key = source.key_union.w1
    M_L, M_U = w_key * decoy.y1_L, w_key * decoy.y1_U
    partial = dict(mode=mode, decoy=decoy, M_key1_L=M_L, M_key1_U=M_U, lambda_EC=lam, l=None)
    if decoy.y1_L <= 0:
        return KeyRateReport(**partial, abort_reason=NO_SINGLE_PHOTON_COUNTS)
    # m_ph / M_L with every concentration term collapsed
    e_ph = min(decoy.e1_ideal_U * decoy.y1_U / decoy.y1_L ** 2, 0.5)
    value = M_L * (1.0 - binary_entropy(e_ph)) - lam
    return KeyRateReport(**partial, e_ph_U=e_ph, m_ph_U=e_ph * M_L, K=max(0.0, value),
                         abort_reason=None if value > 0 else KEY_LENGTH_NONPOSITIVE)


def evaluate(mode: str, source: SourceCharacterization, channel: ChannelParams,
             params: ProtocolParams, observed: ObservedData | None = None,
             rates: ChannelRates | None = None) -> KeyRateReport:
    """Key rate of one source configuration over one channel in the given mode.

    ``observed`` overrides the channel expectations in finite mode (e.g. with
    sampled counts); concentration guesses always come from the expectations.
    ``rates`` may carry precomputed ``expected_rates(source, channel)``.
    """
    if mode not in MODES:
        raise DomainError(f"unknown mode {mode!r}; expected one of {MODES}")
    try:
        rates = rates or expected_rates(source, channel)
        if mode == FINITE:
            return _finite(source, channel, params, observed, rates)
        return _limit(mode, source, channel, params, rates)
    except InfeasibleLPError:
        return KeyRateReport(mode, abort_reason=LP_INFEASIBLE)
    except LPNumericalError:
        return KeyRateReport(mode, abort_reason=LP_NUMERICAL)
    except EmptyRegionError:
        return KeyRateReport(mode, abort_reason=EMPTY_REGION)
    except (ToleranceNotMetError, DegenerateStateError):
        return KeyRateReport(mode, abort_reason=QUADRATURE_FAILURE)

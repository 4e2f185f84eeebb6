"""Loss plus dark-count channel: expected and sampled protocol observables.

A coherent pulse of intensity I reaches Bob's two detectors with overall
transmittance eta.  A setting's gain is <1 - (1-p_d)^2 e^{-I eta}>.  Bit
errors follow from splitting the transmitted light between the right and
wrong detector, with double clicks assigned at random.  No misalignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .characterization import SourceCharacterization
from .data import ObservedData, ProtocolParams
from .errors import DomainError
from .source import RegionQuadrature


@dataclass(frozen=True)
class ChannelParams:
    eta_bob: float = 0.65
    alpha_att: float = 0.2
    L: float = 0.0
    p_d: float = 1e-6
    f_EC: float = 1.16

    def __post_init__(self):
        if not (0.0 <= self.eta_bob <= 1.0):
            raise DomainError(f"eta_bob must lie in [0, 1], got {self.eta_bob}")
        if not (0.0 <= self.p_d <= 1.0):
            raise DomainError(f"p_d must lie in [0, 1], got {self.p_d}")
        if not self.alpha_att >= 0:
            raise DomainError(f"alpha_att must be non-negative, got {self.alpha_att}")
        if not self.L >= 0:
            raise DomainError(f"L must be non-negative, got {self.L}")
        if not self.f_EC >= 1:
            raise DomainError(f"f_EC must be at least 1, got {self.f_EC}")

    def at_distance(self, L: float) -> "ChannelParams":
        return ChannelParams(self.eta_bob, self.alpha_att, L, self.p_d, self.f_EC)


def channel_eta(params: ChannelParams) -> float:
    return params.eta_bob * 10.0 ** (-params.alpha_att * params.L / 10.0)


def binary_entropy(x: float) -> float:
    """h(x) in bits; h(0) = 0 and arguments beyond 1/2 saturate at 1."""
    if x <= 0.0:
        return 0.0
    if x >= 0.5:
        return 1.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


# Integrands evaluated on quadrature nodes


def _gain(I, eta, q):
    return 1.0 - q * q * np.exp(-I * eta)


def _test_error(theta, I, phi, eta, q):
    sc = np.sin(theta) * np.cos(phi)
    return 0.5 * _gain(I, eta, q) - 0.5 * q * (np.exp(-I * eta * (1 - sc) / 2)
                                               - np.exp(-I * eta * (1 + sc) / 2))


def _key_error(theta, I, eta, q):
    return 0.5 * _gain(I, eta, q) - 0.5 * q * (np.exp(-I * eta * np.sin(theta / 2) ** 2)
                                               - np.exp(-I * eta * np.cos(theta / 2) ** 2))


@dataclass(frozen=True)
class ChannelRates:
    """Per-round probabilities, before the basis-choice factor.

    ``key_gain[j]`` = <gain> over the key setting j (both poles);
    ``test_gain[j]``, ``test_error[j]`` likewise for test settings;
    ``sifted`` and ``sifted_errors`` are over the whole key basis.
    """

    key_gain: tuple[float, ...]
    test_gain: tuple[float, ...]
    test_error: tuple[float, ...]
    sifted: float
    sifted_errors: float


def _average(quad: RegionQuadrature, values: np.ndarray) -> float:
    return quad.integrate(values, 0)


def expected_rates(source: SourceCharacterization, params: ChannelParams) -> ChannelRates:
    eta, q = channel_eta(params), 1.0 - params.p_d
    key_gain, key_err = [], []
    for quad in source.key_quads:
        key_gain.append(2.0 * _average(quad, _gain(quad.intensity, eta, q)))
        key_err.append(2.0 * _average(quad, _key_error(quad.theta, quad.intensity, eta, q)))
    test_gain, test_err = [], []
    for quad in source.test_quads:
        test_gain.append(2.0 * _average(quad, _gain(quad.intensity, eta, q)))
        test_err.append(2.0 * quad.average_phi(
            lambda th, I, phi: _test_error(th, I, phi, eta, q)))
    return ChannelRates(tuple(key_gain), tuple(test_gain), tuple(test_err),
                        float(sum(key_gain)), float(sum(key_err)))


def expected_counts(source: SourceCharacterization, params: ChannelParams,
                    proto: ProtocolParams) -> ObservedData:
    """Expected counts of every announced quantity over N rounds."""
    return counts_from_rates(expected_rates(source, params), proto)


def counts_from_rates(r: ChannelRates, proto: ProtocolParams) -> ObservedData:
    nk, nt = proto.N * proto.q_K, proto.N * proto.q_T
    return ObservedData(
        M_key_j=tuple(nk * g for g in r.key_gain),
        M_test_j=tuple(nt * g for g in r.test_gain),
        m_test_j=tuple(nt * e for e in r.test_error),
        M_key=nk * r.sifted,
        m_key=nk * r.sifted_errors,
    )


def sample_counts(expected: ObservedData, N: int, seed: int) -> ObservedData:
    """Binomial draws around the expectations; error counts thin their click counts."""
    rng = np.random.default_rng(seed)
    N = int(N)

    def draw(mean):
        return int(rng.binomial(N, min(max(mean / N, 0.0), 1.0)))

    def thin(count, num, den):
        return int(rng.binomial(count, min(num / den, 1.0))) if den > 0 else 0

    M_key_j = [draw(m) for m in expected.M_key_j]
    M_test_j = [draw(m) for m in expected.M_test_j]
    m_test_j = [thin(M, e, E) for M, e, E in zip(M_test_j, expected.m_test_j, expected.M_test_j)]
    M_key = sum(M_key_j)
    m_key = thin(M_key, expected.m_key, expected.M_key)
    return ObservedData(tuple(M_key_j), tuple(M_test_j), tuple(m_test_j), M_key, m_key)


def ec_leakage(E_M_key: float, E_m_key: float, f_EC: float) -> float:
    """lambda_EC = f_EC E[M_key] h(E[m_key] / E[M_key]) bits."""
    if E_M_key <= 0:
        return 0.0
    if not (0.0 <= E_m_key <= E_M_key * (1 + 1e-12)):
        raise DomainError(f"need 0 <= E_m_key <= E_M_key, got {E_m_key}, {E_M_key}")
    return f_EC * E_M_key * binary_entropy(E_m_key / E_M_key)


def perfect_pe_targets(eta: float, p_d: float) -> tuple[float, float]:
    """True single-photon yield and ideal-state bit-error probability of the model."""
    if not (0.0 <= eta <= 1.0 and 0.0 <= p_d <= 1.0):
        raise DomainError(f"eta and p_d must be probabilities, got {eta}, {p_d}")
    y1 = 1.0 - (1.0 - p_d) ** 2 * (1.0 - eta)
    e1 = p_d ** 2 / 2 + p_d * (1 - p_d) * (1 - eta) + p_d * (1 - p_d) * eta / 2
    return y1, e1

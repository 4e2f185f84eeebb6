"""Density matrices of post-selected n-photon states and their trace distances.

An n-photon state with polarisation (theta, phi) is expanded in the basis
|n-k, k>, k = 0..n, of the two polarisation modes (R, L).  Averaging the
projector over a region gives entries

    <sqrt(C(n,k) C(n,k')) cos^{2n-k-k'}(theta/2) sin^{k+k'}(theta/2)
     e^{i(k-k')phi} e^{-I} I^n / n!>

normalised by <e^{-I} I^n / n!>.  Every region used here is symmetric in phi
about 0 or pi, so the imaginary parts cancel and matrices are real symmetric.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStateError, DomainError, ToleranceNotMetError
from .source import (DEFAULT_TOL, RegionQuadrature, RegionSpec, SourceConfig,
                     fock_element, poisson)

_UNDERFLOW = 1e-300
_TRACE_TOL = 1e-8
_PSD_TOL = 1e-10


@dataclass(frozen=True)
class FockMatrix:
    n: int
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.shape != (self.n + 1, self.n + 1):
            raise DomainError(f"expected {(self.n + 1,) * 2} matrix, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def check(self) -> None:
        """Raise if the matrix is not a unit-trace PSD state within tolerance."""
        if abs(self.trace - 1.0) > _TRACE_TOL:
            raise ToleranceNotMetError(f"trace {self.trace!r} deviates from 1")
        lo = float(self.eigenvalues().min())
        if lo < -_PSD_TOL:
            raise ToleranceNotMetError(f"minimum eigenvalue {lo!r} is negative")


def _fock_from_quadrature(quad: RegionQuadrature, n: int) -> FockMatrix:
    if n < 0:
        raise DomainError(f"photon number must be non-negative, got {n}")
    window = quad.region.phi_window
    if window is not None and window[0] not in (0.0, np.pi):
        raise DomainError("azimuthal window must be centred on 0 or pi for a real matrix")
    norm = quad.average(poisson(n))
    if not norm > _UNDERFLOW:
        raise DegenerateStateError(
            f"<e^-I I^{n}/{n}!> = {norm!r} underflows over region {quad.region}")
    m = np.empty((n + 1, n + 1))
    for k in range(n + 1):
        for kp in range(k, n + 1):
            m[k, kp] = m[kp, k] = quad.average(fock_element(n, k, kp)) / norm
    return FockMatrix(n, m)


def fock_matrix(region: RegionSpec, n: int, nu_t: float, tol: float = DEFAULT_TOL) -> FockMatrix:
    """Normalised n-photon component of the state post-selected by ``region``."""
    return _fock_from_quadrature(RegionQuadrature(region, nu_t, tol), n)


def mixed_basis_matrix(region_a: RegionSpec, region_b: RegionSpec, n: int, nu_t: float,
                       tol: float = DEFAULT_TOL) -> FockMatrix:
    """Equal mixture of the n-photon states of the two poles of one setting."""
    if (region_a.basis, region_a.interval) != (region_b.basis, region_b.interval) \
            or region_a.pole == region_b.pole:
        raise DomainError("regions must be the two poles of one setting")
    a = fock_matrix(region_a, n, nu_t, tol)
    b = fock_matrix(region_b, n, nu_t, tol)
    return FockMatrix(n, 0.5 * (a.entries + b.entries))


def trace_distance(a: FockMatrix, b: FockMatrix) -> float:
    """D = (1/2) sum |eigenvalues(a - b)|."""
    if a.n != b.n:
        raise DomainError(f"dimension mismatch: n={a.n} vs n={b.n}")
    diff = a.entries - b.entries
    eig = np.linalg.eigvalsh(0.5 * (diff + diff.T))
    return float(min(1.0, 0.5 * np.abs(eig).sum()))


@dataclass(frozen=True)
class TDTables:
    """Pairwise trace distances indexed [n, j, k].

    ``key`` uses the pole-mixed key states; ``test`` uses the H states.
    Entries for photon numbers whose states coincide across settings (key
    n = 0, 1 and test n = 0) are exactly zero.
    """

    key: np.ndarray
    test: np.ndarray

    @property
    def n_cut(self) -> int:
        return self.key.shape[0] - 1


def _pairwise(states: list[FockMatrix]) -> np.ndarray:
    d = len(states)
    out = np.zeros((d, d))
    for j, k in itertools.combinations(range(d), 2):
        out[j, k] = out[k, j] = trace_distance(states[j], states[k])
    return out


def td_tables(config: SourceConfig, n_cut: int, tol: float = DEFAULT_TOL) -> TDTables:
    if n_cut < 1:
        raise DomainError(f"n_cut must be at least 1, got {n_cut}")
    nu_t = config.nu_t
    key = np.zeros((n_cut + 1, config.d_key, config.d_key))
    test = np.zeros((n_cut + 1, config.d_test, config.d_test))
    key_quads = [(RegionQuadrature(config.key_region(j, "R"), nu_t, tol),
                  RegionQuadrature(config.key_region(j, "L"), nu_t, tol))
                 for j in range(config.d_key)]
    test_quads = [RegionQuadrature(config.test_region(j, "H"), nu_t, tol)
                  for j in range(config.d_test)]
    for n in range(2, n_cut + 1):
        mixed = []
        for qr, ql in key_quads:
            r, l = _fock_from_quadrature(qr, n), _fock_from_quadrature(ql, n)
            mixed.append(FockMatrix(n, 0.5 * (r.entries + l.entries)))
        key[n] = _pairwise(mixed)
    for n in range(1, n_cut + 1):
        test[n] = _pairwise([_fock_from_quadrature(q, n) for q in test_quads])
    key.setflags(write=False)
    test.setflags(write=False)
    return TDTables(key, test)

"""Protocol parameters and observed data shared by the estimation modules."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class ProtocolParams:
    """Finite-key protocol parameters.

    ``lambda_EC`` is the error-correction leakage in bits; None means it is
    taken from the channel model.
    """

    N: float
    q_K: float
    eps: float = 1e-20
    eps_cor: float = 1e-20
    eps_PA: float = 1e-20
    delta: float = 1e-20
    n_cut: int = 4
    lambda_EC: float | None = None
    n_max: int = 40

    def __post_init__(self):
        if not self.N >= 1:
            raise DomainError(f"N must be at least 1, got {self.N}")
        if not (0.0 < self.q_K < 1.0):
            raise DomainError(f"q_K must lie in (0, 1), got {self.q_K}")
        for name in ("eps", "eps_cor", "eps_PA", "delta"):
            value = getattr(self, name)
            if not (0.0 < value < 1.0):
                raise DomainError(f"{name} must lie in (0, 1), got {value}")
        if self.n_cut < 1:
            raise DomainError(f"n_cut must be at least 1, got {self.n_cut}")
        if self.n_max < self.n_cut:
            raise DomainError(f"n_max ({self.n_max}) must be >= n_cut ({self.n_cut})")
        if self.lambda_EC is not None and self.lambda_EC < 0:
            raise DomainError(f"lambda_EC must be non-negative, got {self.lambda_EC}")

    @property
    def q_T(self) -> float:
        return 1.0 - self.q_K


@dataclass(frozen=True)
class ObservedData:
    """Counts announced in the protocol (real-valued when they are expectations).

    M_key_j: key-basis clicks per key setting.  M_test_j, m_test_j: test-basis
    clicks and bit errors per test setting.  M_key, m_key: sifted key size
    and its bit errors.
    """

    M_key_j: tuple[float, ...]
    M_test_j: tuple[float, ...]
    m_test_j: tuple[float, ...]
    M_key: float
    m_key: float

    def __post_init__(self):
        for name in ("M_key_j", "M_test_j", "m_test_j"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        if len(self.M_test_j) != len(self.m_test_j):
            raise DomainError("test counts and test error counts differ in length")
        values = self.M_key_j + self.M_test_j + self.m_test_j + (self.M_key, self.m_key)
        if any(v < 0 for v in values):
            raise DomainError("counts must be non-negative")
        tol = 1e-9
        for M, m in zip(self.M_test_j, self.m_test_j):
            if m > M * (1 + tol) + tol:
                raise DomainError(f"error count {m} exceeds count {M}")
        if self.m_key > self.M_key * (1 + tol) + tol:
            raise DomainError(f"key errors {self.m_key} exceed key size {self.M_key}")

    def check_against(self, N: float) -> None:
        values = self.M_key_j + self.M_test_j + self.m_test_j + (self.M_key, self.m_key)
        if any(v > N for v in values):
            raise DomainError(f"a count exceeds the number of rounds N={N}")

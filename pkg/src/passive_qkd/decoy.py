"""Decoy-state linear programs for the single-photon yield and ideal-state error.

Yield LP: variables y0, y1 (shared by all key settings, since the vacuum and
single-photon key states are setting independent), y_{j,n} for n = 2..n_cut,
and the gains Q_j.  Error LP: e0 (shared), e_{j,n} for n = 1..n_cut, the
error gains E_j and the ideal-state error e1.  Gains are confined to the
concentration intervals of the observed counts; an exact variant collapses
those intervals onto known gains.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .characterization import SourceCharacterization
from .concentration import kato_direct_lower, kato_direct_upper
from .data import ObservedData, ProtocolParams
from .errors import DomainError, InfeasibleLPError, LPNumericalError
from .source import RegionMoments

LP_TOL = 1e-9
_SOLVER_TOL = 1e-10
_CERT_TOL = 1e-8


@dataclass
class LPInstance:
    """Linear program in natural variable names.

    Constraints are stored as (coefficients, rhs, label) with ``<=`` or ``==``
    semantics.  Build with ``add_var`` / ``add_le`` / ``add_eq``.
    """

    objective: str = ""
    sense: str = "min"
    names: list[str] = field(default_factory=list)
    bounds: list[tuple[float, float]] = field(default_factory=list)
    le: list[tuple[dict[str, float], float, str]] = field(default_factory=list)
    eq: list[tuple[dict[str, float], float, str]] = field(default_factory=list)

    def add_var(self, name: str, lo: float = 0.0, hi: float = 1.0) -> str:
        if name in self.names:
            raise DomainError(f"duplicate variable {name!r}")
        self.names.append(name)
        self.bounds.append((lo, hi))
        return name

    def _check_refs(self, coeffs):
        missing = [v for v in coeffs if v not in self.names]
        if missing:
            raise DomainError(f"constraint references undeclared variables {missing}")

    def add_le(self, coeffs: dict[str, float], rhs: float, label: str) -> None:
        self._check_refs(coeffs)
        self.le.append((dict(coeffs), float(rhs), label))

    def add_eq(self, coeffs: dict[str, float], rhs: float, label: str) -> None:
        self._check_refs(coeffs)
        self.eq.append((dict(coeffs), float(rhs), label))

    def _matrix(self, rows):
        index = {n: i for i, n in enumerate(self.names)}
        A = np.zeros((len(rows), len(self.names)))
        for r, (coeffs, _, _) in enumerate(rows):
            for name, value in coeffs.items():
                A[r, index[name]] += value
        return A, np.array([rhs for _, rhs, _ in rows])

    def dump(self) -> str:
        """Plain-text listing: objective, one variable per line, one constraint per line."""
        out = io.StringIO()
        out.write(f"objective {self.sense} {self.objective}\n")
        out.write("variables\n")
        for name, (lo, hi) in zip(self.names, self.bounds):
            out.write(f"  {name} in [{lo!r}, {hi!r}]\n")
        out.write("constraints\n")
        for op, rows in (("<=", self.le), ("==", self.eq)):
            for coeffs, rhs, label in rows:
                terms = " ".join(f"{'+' if c >= 0 else '-'} {abs(c)!r}*{v}"
                                 for v, c in coeffs.items())
                out.write(f"  [{label}] {terms} {op} {rhs!r}\n")
        return out.getvalue()


@dataclass(frozen=True)
class LPSolution:
    value: float
    assignment: dict[str, float]


def solve_lp(lp: LPInstance) -> LPSolution:
    """Solve with HiGHS and certify feasibility of the returned point."""
    if lp.objective not in lp.names:
        raise DomainError(f"objective variable {lp.objective!r} not declared")
    if lp.sense not in ("min", "max"):
        raise DomainError(f"unknown sense {lp.sense!r}")
    for name, (lo, hi) in zip(lp.names, lp.bounds):
        if lo > hi:
            raise InfeasibleLPError(f"empty range for {name}: [{lo}, {hi}]", lp.dump())
    c = np.zeros(len(lp.names))
    c[lp.names.index(lp.objective)] = 1.0 if lp.sense == "min" else -1.0
    A_ub, b_ub = lp._matrix(lp.le) if lp.le else (None, None)
    A_eq, b_eq = lp._matrix(lp.eq) if lp.eq else (None, None)
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=lp.bounds,
                  method="highs",
                  options={"primal_feasibility_tolerance": _SOLVER_TOL,
                           "dual_feasibility_tolerance": _SOLVER_TOL})
    if res.status == 2:
        raise InfeasibleLPError(f"LP infeasible: {res.message}", lp.dump())
    if res.status != 0:
        raise LPNumericalError(f"LP solver failed: {res.message}", lp.dump())
    x = res.x
    lo = np.array([b[0] for b in lp.bounds])
    hi = np.array([b[1] for b in lp.bounds])
    worst = max(0.0, float(np.max(lo - x)), float(np.max(x - hi)))
    if A_ub is not None:
        worst = max(worst, float(np.max(A_ub @ x - b_ub)))
    if A_eq is not None:
        worst = max(worst, float(np.max(np.abs(A_eq @ x - b_eq))))
    if worst > _CERT_TOL:
        raise LPNumericalError(f"returned point violates constraints by {worst:.3g}", lp.dump())
    assignment = dict(zip(lp.names, (float(v) for v in x)))
    return LPSolution(assignment[lp.objective], assignment)


# ---------------------------------------------------------------------------
# Program construction


def _truncated_decoy(lp, moments, var_of, gain, n_cut, label):
    """sum_n p_n v_n <= G <= sum_n p_n v_n + 1 - sum_n p_n."""
    coeffs: dict[str, float] = {}
    for n in range(n_cut + 1):
        coeffs[var_of(n)] = coeffs.get(var_of(n), 0.0) + moments.pn[n]
    tail = 1.0 - sum(moments.pn[: n_cut + 1])
    lp.add_le({**coeffs, gain: -1.0}, 0.0, f"{label}.lower")
    lp.add_le({**{v: -c for v, c in coeffs.items()}, gain: 1.0}, max(tail, 0.0), f"{label}.upper")


def _trace_distance_pairs(lp, var_of, table, settings, n, label):
    for j in range(settings):
        for k in range(j + 1, settings):
            d = float(table[j, k])
            lp.add_le({var_of(j): 1.0, var_of(k): -1.0}, d, f"{label}.{j}-{k}")
            lp.add_le({var_of(k): 1.0, var_of(j): -1.0}, d, f"{label}.{k}-{j}")


def _gain_interval(lo, hi):
    return max(0.0, lo), min(1.0, hi)


def _check_inputs(moments, bounds, table, n_cut):
    if n_cut < 1:
        raise DomainError(f"n_cut must be at least 1, got {n_cut}")
    if len(moments) != len(bounds):
        raise DomainError(f"{len(moments)} settings but {len(bounds)} gain intervals")
    if table.shape[0] <= n_cut or table.shape[1:] != (len(moments), len(moments)):
        raise DomainError(f"trace-distance table of shape {table.shape} does not cover "
                          f"n_cut={n_cut} for {len(moments)} settings")
    if any(len(m.pn) <= n_cut for m in moments):
        raise DomainError("photon-number distribution shorter than n_cut")


def build_yield_lp(moments: Sequence[RegionMoments], count_bounds: Sequence[tuple[float, float]],
                   td_key: np.ndarray, n_cut: int, sense: str = "min") -> LPInstance:
    """Decoy LP over the key settings; objective is the shared single-photon yield.

    ``count_bounds[j]`` is the interval on Q_j, already divided by
    N q_K <1>_j.  Setting 0 is the reference (highest-intensity) setting.
    """
    _check_inputs(moments, count_bounds, np.asarray(td_key), n_cut)
    lp = LPInstance(objective="y1", sense=sense)
    lp.add_var("y0")
    lp.add_var("y1")
    d = len(moments)
    for j in range(d):
        for n in range(2, n_cut + 1):
            lp.add_var(f"y[{j},{n}]")
        lp.add_var(f"Q[{j}]", *_gain_interval(*count_bounds[j]))

    def y(j, n):
        return "y0" if n == 0 else "y1" if n == 1 else f"y[{j},{n}]"

    for j, m in enumerate(moments):
        _truncated_decoy(lp, m, lambda n, j=j: y(j, n), f"Q[{j}]", n_cut, f"decoy[{j}]")
    for n in range(2, n_cut + 1):
        _trace_distance_pairs(lp, lambda j, n=n: y(j, n), td_key[n], d, n, f"td[n={n}]")
    return lp


def build_error_lp(moments: Sequence[RegionMoments], error_bounds: Sequence[tuple[float, float]],
                   td_test: np.ndarray, y1_L: float, n_cut: int) -> LPInstance:
    """Decoy LP over the test settings maximising the ideal-state error e1.

    Each setting's single-photon error mixes the ideal-state error with white
    noise: lambda_j e1 <= e_{j,1} - (1 - lambda_j) y1_L / 2.
    """
    _check_inputs(moments, error_bounds, np.asarray(td_test), n_cut)
    if not (0.0 <= y1_L <= 1.0):
        raise DomainError(f"y1_L must be a probability, got {y1_L}")
    lp = LPInstance(objective="e1", sense="max")
    lp.add_var("e0")
    lp.add_var("e1")
    d = len(moments)
    for j in range(d):
        for n in range(1, n_cut + 1):
            lp.add_var(f"e[{j},{n}]")
        lp.add_var(f"E[{j}]", *_gain_interval(*error_bounds[j]))

    def e(j, n):
        return "e0" if n == 0 else f"e[{j},{n}]"

    for j, m in enumerate(moments):
        _truncated_decoy(lp, m, lambda n, j=j: e(j, n), f"E[{j}]", n_cut, f"decoy[{j}]")
        lp.add_le({"e1": m.lam, e(j, 1): -1.0}, -(1.0 - m.lam) * y1_L / 2, f"noise[{j}]")
    for n in range(1, n_cut + 1):
        _trace_distance_pairs(lp, lambda j, n=n: e(j, n), td_test[n], d, n, f"td[n={n}]")
    return lp


# ---------------------------------------------------------------------------
# Orchestration


@dataclass(frozen=True)
class DecoyBounds:
    """LP outputs with the failure probability each one carries."""

    y1_L: float
    y1_U: float
    e1_ideal_U: float
    eps_yield: float = 0.0
    eps_error: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.y1_L <= self.y1_U <= 1.0):
            raise DomainError(f"need 0 <= y1_L <= y1_U <= 1, got {self.y1_L}, {self.y1_U}")
        if not (0.0 <= self.e1_ideal_U <= 1.0):
            raise DomainError(f"e1_ideal_U must be a probability, got {self.e1_ideal_U}")


def _clamp(x):
    return min(1.0, max(0.0, x))


def solve_bounds(source: SourceCharacterization, gain_bounds, error_bounds, n_cut: int,
                 eps_yield: float = 0.0, eps_error: float = 0.0,
                 dump: list | None = None) -> DecoyBounds:
    """Run the yield LP both ways and the error LP on given gain intervals."""
    lps = []
    values = []
    for sense in ("min", "max"):
        lp = build_yield_lp(source.key, gain_bounds, source.td.key, n_cut, sense)
        lps.append(lp)
        values.append(_clamp(solve_lp(lp).value))
    y1_L, y1_U = values
    y1_U = max(y1_U, y1_L)
    lp = build_error_lp(source.test, error_bounds, source.td.test, y1_L, n_cut)
    lps.append(lp)
    e1 = _clamp(solve_lp(lp).value)
    if dump is not None:
        dump.extend(lps)
    return DecoyBounds(y1_L, y1_U, e1, eps_yield, eps_error)


def kato_gain_intervals(observed: ObservedData, params: ProtocolParams,
                        source: SourceCharacterization,
                        guesses: ObservedData | None = None):
    """Concentration intervals on Q_j and E_j, scaled to per-round probabilities."""
    guesses = guesses or observed
    if len(observed.M_key_j) != len(source.key) or len(observed.m_test_j) != len(source.test):
        raise DomainError("observed data does not match the number of settings")
    N, eps = params.N, params.eps
    gains = []
    for M, g, m in zip(observed.M_key_j, guesses.M_key_j, source.key):
        scale = N * params.q_K * m.p_select
        gains.append((kato_direct_lower(N, M, g, eps) / scale,
                      kato_direct_upper(N, M, g, eps) / scale))
    errors = []
    for M, g, m in zip(observed.m_test_j, guesses.m_test_j, source.test):
        scale = N * params.q_T * m.p_select
        errors.append((kato_direct_lower(N, M, g, eps) / scale,
                       kato_direct_upper(N, M, g, eps) / scale))
    return gains, errors


def estimate_bounds(observed: ObservedData, params: ProtocolParams,
                    source: SourceCharacterization, guesses: ObservedData | None = None,
                    dump: list | None = None) -> DecoyBounds:
    """Concentration intervals, then both yield LPs and the error LP."""
    observed.check_against(params.N)
    gains, errors = kato_gain_intervals(observed, params, source, guesses)
    d_key, d_test = len(source.key), len(source.test)
    return solve_bounds(source, gains, errors, params.n_cut,
                        eps_yield=2 * params.eps * d_key,
                        eps_error=2 * params.eps * (d_key + d_test), dump=dump)


def exact_bounds(source: SourceCharacterization, key_gains: Sequence[float],
                 test_errors: Sequence[float], n_cut: int,
                 dump: list | None = None) -> DecoyBounds:
    """LP bounds when every gain is known exactly (intervals collapsed to points).

    ``key_gains[j]`` and ``test_errors[j]`` are unnormalised averages over the
    setting regions, i.e. <1>_j Q_j and <1>_j E_j.
    """
    gains = [(g / m.p_select,) * 2 for g, m in zip(key_gains, source.key)]
    errors = [(e / m.p_select,) * 2 for e, m in zip(test_errors, source.test)]
    return solve_bounds(source, gains, errors, n_cut, dump=dump)

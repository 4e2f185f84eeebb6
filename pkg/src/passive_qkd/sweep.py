"""Rate-distance sweeps: config schema, candidate pools and tabular output.

One candidate pool is shared by every distance.  Each candidate is
characterised once and evaluated at all distances, modes and block sizes, and
each output row reports the best candidate for its cell.  The asymptotic
pool holds the finite candidates plus copies with the minimum region sizes
pinned; the perfect-PE pool is the asymptotic one.  Because every mode
dominates the previous one candidate by candidate, nested pools keep the
optimised rates ordered as finite <= asymptotic <= perfect-PE.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .channel import ChannelParams, expected_rates
from .characterization import characterize
from .data import ProtocolParams
from .errors import (ConfigError, DegenerateStateError, DomainError, EmptyRegionError,
                     ToleranceNotMetError)
from .keyrate import ASYMPTOTIC, FINITE, MODES, PERFECT_PE, evaluate
from .optimizer import (ASYMPTOTIC_PINS, DEFAULT_RANGES, PARAM_NAMES, SearchSpace,
                        source_config)

log = logging.getLogger(__name__)

COLUMNS = ("L_km", "mode", "N", "K", "l", "y1_L", "y1_U", "e1_ideal_U", "e_ph_U", "eps_sec",
           "abort_reason") + ("nu_t", "dtheta_key", "dtheta_test", "dphi_test", "w", "q_T")
ALL_ABORTED = "all_aborted"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ChannelSection(_Strict):
    eta_bob: float = Field(0.65, ge=0, le=1)
    alpha_att: float = Field(0.2, ge=0)
    p_d: float = Field(1e-6, ge=0, le=1)
    f_EC: float = Field(1.16, ge=1)


class ProtocolSection(_Strict):
    eps: float = Field(1e-20, gt=0, lt=1)
    eps_cor: float = Field(1e-20, gt=0, lt=1)
    eps_PA: float = Field(1e-20, gt=0, lt=1)
    delta: float = Field(1e-20, gt=0, lt=1)
    n_cut: int = Field(4, ge=1)
    n_max: int = Field(40, ge=1)
    lambda_EC: float | None = Field(None, ge=0)


class SearchSection(_Strict):
    budget: int = Field(200, ge=1)
    seed: int = 0
    ranges: dict[str, tuple[float, float]] = Field(default_factory=lambda: dict(DEFAULT_RANGES))
    asymptotic_pins: dict[str, float] = Field(default_factory=lambda: dict(ASYMPTOTIC_PINS))

    @field_validator("ranges", "asymptotic_pins")
    @classmethod
    def _known(cls, value):
        unknown = sorted(set(value) - set(PARAM_NAMES))
        if unknown:
            raise ValueError(f"unknown parameter(s) {unknown}; expected {list(PARAM_NAMES)}")
        return value


class SweepConfig(_Strict):
    distances: list[float]
    modes: list[Literal["finite", "asymptotic", "perfect_pe"]] = list(MODES)
    N_values: list[float] = [1e9, 1e10, 1e11, 1e12]
    channel: ChannelSection = ChannelSection()
    protocol: ProtocolSection = ProtocolSection()
    search: SearchSection = SearchSection()
    tol: float = Field(1e-9, gt=0)
    output: str | None = None
    format: Literal["csv", "json"] = "csv"

    @field_validator("distances")
    @classmethod
    def _distances(cls, value):
        if not value:
            raise ValueError("at least one distance is required")
        if any(not (math.isfinite(x) and x >= 0) for x in value):
            raise ValueError("distances must be finite and non-negative")
        return sorted(set(value))

    @field_validator("N_values")
    @classmethod
    def _n_values(cls, value):
        if any(not x >= 1 for x in value):
            raise ValueError("every N must be at least 1")
        return sorted(set(value))

    @field_validator("modes")
    @classmethod
    def _modes(cls, value):
        if not value:
            raise ValueError("at least one mode is required")
        return [m for m in MODES if m in value]

    @model_validator(mode="after")
    def _finite_needs_n(self):
        if FINITE in self.modes and not self.N_values:
            raise ValueError("N_values: finite mode needs at least one block size")
        return self


def _describe(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        key = ".".join(str(p) for p in e["loc"]) or "<root>"
        parts.append(f"{key}: {e['msg']}")
    return "; ".join(parts)


def parse_config(data: dict | None) -> SweepConfig:
    """Validate a mapping into a SweepConfig; ConfigError names the offending keys."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at the top level")
    try:
        return SweepConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_describe(err)) from None


def load_config(path: str) -> SweepConfig:
    import yaml

    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path!r}: {err.strerror}") from None
    except yaml.YAMLError as err:
        raise ConfigError(f"config {path!r} is not valid YAML/JSON: {err}") from None
    return parse_config(data)


# ---------------------------------------------------------------------------
# Validation


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def text(self) -> str:
        lines = [f"error: {e}" for e in self.errors] + [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines + ["config OK" if self.ok else "config rejected"])


def _spaces(config: SweepConfig) -> tuple[SearchSpace, SearchSpace]:
    s = config.search
    finite = SearchSpace(s.ranges, s.budget, s.seed)
    pinned = SearchSpace(s.ranges, s.budget, s.seed, s.asymptotic_pins)
    return finite, pinned


def validate(config: SweepConfig) -> ValidationReport:
    """Dry-run checks that need no sweep: ranges, interval layout, region non-emptiness."""
    report = ValidationReport()
    try:
        finite, pinned = _spaces(config)
    except DomainError as err:
        report.errors.append(f"search: {err}")
        return report
    p = config.protocol
    if p.n_max < p.n_cut:
        report.errors.append(f"protocol.n_max: must be >= n_cut ({p.n_cut})")
    w_hi = finite.ranges["w"][1]
    if 3 * w_hi >= 1:
        report.errors.append(f"search.ranges.w: upper end {w_hi} leaves no room for four "
                             "consecutive intervals")
    # the highest-intensity key interval starts at 3w and must meet the polar caps
    theta_lo = finite.ranges["dtheta_key"][0]
    reach = 1.0 / (2.0 * math.cos(theta_lo / 2) ** 2)
    if 3 * w_hi >= reach:
        report.warnings.append(
            f"search: w up to {w_hi} with dtheta_key down to {theta_lo} gives empty key regions "
            "for some samples; those samples abort with empty_region")
    corners = [finite.samples()[0], pinned.samples()[0]]
    for params in corners:
        try:
            cfg = source_config(params)
            characterize(cfg, p.n_cut, p.n_max, config.tol)
        except (DomainError, EmptyRegionError, ToleranceNotMetError, DegenerateStateError) as err:
            report.warnings.append(f"first sample {params} cannot be characterised: {err}")
    if config.search.budget < 20:
        report.warnings.append(f"search.budget={config.search.budget} is small for six parameters")
    return report


# ---------------------------------------------------------------------------
# Sweep


@dataclass(frozen=True)
class _Cell:
    K: float
    l: int | None
    y1_L: float | None
    y1_U: float | None
    e1_ideal_U: float | None
    e_ph_U: float | None
    eps_sec: float | None
    abort_reason: str | None


def _cell_from_report(report) -> _Cell:
    d = report.decoy
    finite = report.mode == FINITE
    return _Cell(report.K, report.l if finite else None,
                 d.y1_L if d else None, d.y1_U if d else None, d.e1_ideal_U if d else None,
                 report.e_ph_U if d else None, report.eps_sec if finite else None,
                 report.abort_reason)


def _keys(config: SweepConfig, mode: str):
    Ns = config.N_values if mode == FINITE else [None]
    return [(L, mode, N) for L in config.distances for N in Ns]


def _evaluate_candidate(job):
    """All cells of one candidate; job = (config, params, modes)."""
    config, params, modes = job
    p = config.protocol
    keys = [k for mode in modes for k in _keys(config, mode)]
    try:
        source = characterize(source_config(params), p.n_cut, p.n_max, config.tol)
    except (EmptyRegionError, DomainError):
        return {k: _Cell(0.0, 0 if k[1] == FINITE else None, None, None, None, None, None,
                         "empty_region") for k in keys}
    except (ToleranceNotMetError, DegenerateStateError):
        return {k: _Cell(0.0, 0 if k[1] == FINITE else None, None, None, None, None, None,
                         "quadrature_failure") for k in keys}
    base = ChannelParams(config.channel.eta_bob, config.channel.alpha_att, 0.0,
                         config.channel.p_d, config.channel.f_EC)
    out = {}
    rates = {}
    for L, mode, N in keys:
        channel = base.at_distance(L)
        if L not in rates:
            rates[L] = expected_rates(source, channel)
        proto = ProtocolParams(N=N or 1.0, q_K=1.0 - params["q_T"], eps=p.eps,
                               eps_cor=p.eps_cor, eps_PA=p.eps_PA, delta=p.delta,
                               n_cut=p.n_cut, lambda_EC=p.lambda_EC, n_max=p.n_max)
        out[(L, mode, N)] = _cell_from_report(evaluate(mode, source, channel, proto,
                                                             rates=rates[L]))
    return out


def candidate_pools(config: SweepConfig) -> dict[str, list[dict[str, float]]]:
    finite, pinned = _spaces(config)
    base = finite.samples()
    limit = pinned.samples() + base
    return {FINITE: base, ASYMPTOTIC: limit, PERFECT_PE: limit}


@dataclass(frozen=True)
class Row:
    L_km: float
    mode: str
    N: float | None
    cell: _Cell
    params: dict[str, float]

    def values(self) -> dict:
        c = self.cell
        out = {"L_km": self.L_km, "mode": self.mode, "N": self.N, "K": c.K, "l": c.l,
               "y1_L": c.y1_L, "y1_U": c.y1_U, "e1_ideal_U": c.e1_ideal_U, "e_ph_U": c.e_ph_U,
               "eps_sec": c.eps_sec, "abort_reason": c.abort_reason}
        out.update({k: self.params.get(k) for k in COLUMNS[11:]})
        return out


def _pick(candidates, cells):
    best = 0
    for i, cell in enumerate(cells):
        if cell.K > cells[best].K:
            best = i
    cell = cells[best]
    if cell.K <= 0:
        counts = Counter(c.abort_reason or ALL_ABORTED for c in cells)
        reason = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
        cell = _Cell(0.0, cell.l, cell.y1_L, cell.y1_U, cell.e1_ideal_U, cell.e_ph_U,
                     cell.eps_sec, reason)
    return candidates[best], cell


def run_sweep(config: SweepConfig, jobs: int = 1) -> list[Row]:
    """Evaluate every pool candidate at every cell and keep the best per cell."""
    pools = candidate_pools(config)
    # distinct candidates with the modes each one is needed for
    needed: dict[tuple, set[str]] = {}
    order: list[tuple] = []
    for mode in config.modes:
        for c in pools[mode]:
            key = tuple(c[n] for n in PARAM_NAMES)
            if key not in needed:
                needed[key] = set()
                order.append(key)
            needed[key].add(mode)
    work = [(config, dict(zip(PARAM_NAMES, key)), sorted(needed[key], key=MODES.index))
            for key in order]
    log.info("evaluating %d candidates over %d distances", len(work), len(config.distances))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_evaluate_candidate, work, chunksize=1))
    else:
        results = []
        for i, job in enumerate(work):
            results.append(_evaluate_candidate(job))
            log.debug("candidate %d/%d done", i + 1, len(work))
    by_key = dict(zip(order, results))

    rows = []
    for mode in config.modes:
        pool = pools[mode]
        cells_of = [by_key[tuple(c[n] for n in PARAM_NAMES)] for c in pool]
        for cell_key in _keys(config, mode):
            params, cell = _pick(pool, [cells[cell_key] for cells in cells_of])
            rows.append(Row(cell_key[0], mode, cell_key[2], cell, params))
    rows.sort(key=lambda r: (r.L_km, MODES.index(r.mode), r.N or 0.0))
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render(rows: list[Row], fmt: str = "csv") -> str:
    if fmt == "json":
        return json.dumps([r.values() for r in rows], indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in rows:
        v = r.values()
        writer.writerow([_fmt(v[c]) for c in COLUMNS])
    return buf.getvalue()

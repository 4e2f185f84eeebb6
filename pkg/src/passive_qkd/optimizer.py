"""Uniform random search over the free source and protocol parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DomainError
from .source import SourceConfig

PARAM_NAMES = ("w", "q_T", "nu_t", "dtheta_key", "dtheta_test", "dphi_test")

DEFAULT_RANGES = MappingProxyType({
    "w": (0.005, 0.16),
    "q_T": (0.01, 0.5),
    "nu_t": (0.05, 1.5),
    "dtheta_key": (0.05, 1.5),
    "dtheta_test": (0.1, 0.8),
    "dphi_test": (0.1, 0.8),
})

# finite minimum region sizes assumed when the finite-size penalty is absent
ASYMPTOTIC_PINS = MappingProxyType({"w": 5e-3, "dtheta_test": 0.1, "dphi_test": 0.1})

_UPPER = {"w": 0.25, "q_T": 1.0, "nu_t": math.inf,
          "dtheta_key": math.pi / 2, "dtheta_test": math.pi / 2, "dphi_test": math.pi / 2}


def _check_value(name, value):
    hi = _UPPER[name]
    ok = 0.0 < value <= hi if name == "w" else 0.0 < value < hi
    if not ok:
        raise DomainError(f"{name}={value} outside its physical range")


@dataclass(frozen=True)
class SearchSpace:
    """Box of parameter ranges, sample budget and seed.

    Samples are drawn one parameter vector at a time from a single generator,
    so the first k samples do not depend on the budget.
    """

    ranges: Mapping[str, tuple[float, float]] = DEFAULT_RANGES
    budget: int = 200
    seed: int = 0
    pinned: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        ranges = dict(DEFAULT_RANGES)
        unknown = set(self.ranges) - set(PARAM_NAMES)
        if unknown:
            raise DomainError(f"unknown search parameters {sorted(unknown)}")
        ranges.update({k: tuple(v) for k, v in self.ranges.items()})
        for name, (lo, hi) in ranges.items():
            if not lo <= hi:
                raise DomainError(f"range for {name} is empty: [{lo}, {hi}]")
            _check_value(name, lo)
            _check_value(name, hi)
        for name, value in self.pinned.items():
            if name not in PARAM_NAMES:
                raise DomainError(f"cannot pin unknown parameter {name!r}")
            _check_value(name, value)
        if self.budget < 1:
            raise DomainError(f"budget must be at least 1, got {self.budget}")
        object.__setattr__(self, "ranges", MappingProxyType(ranges))
        object.__setattr__(self, "pinned", MappingProxyType(dict(self.pinned)))

    def samples(self) -> list[dict[str, float]]:
        rng = np.random.default_rng(self.seed)
        out = []
        for _ in range(self.budget):
            draw = {name: float(rng.uniform(*self.ranges[name])) for name in PARAM_NAMES}
            draw.update(self.pinned)
            out.append(draw)
        return out


def source_config(params: Mapping[str, float]) -> SourceConfig:
    """Four consecutive key intervals and four nested test intervals of width w."""
    return SourceConfig.consecutive(params["w"], params["nu_t"], params["dtheta_key"],
                                    params["dtheta_test"], params["dphi_test"])


@dataclass(frozen=True)
class SearchResult:
    best_params: dict[str, float]
    best_rate: float
    trace: tuple[tuple[dict[str, float], float], ...]
    reason: str | None = None


def select_best(candidates: Sequence[Mapping[str, float]], rates: Sequence[float]) -> SearchResult:
    """Maximiser of precomputed rates; the earliest candidate wins ties."""
    if not candidates or len(candidates) != len(rates):
        raise DomainError("need one rate per candidate and at least one candidate")
    best = 0
    for i, r in enumerate(rates):
        if r > rates[best]:
            best = i
    trace = tuple((dict(c), float(r)) for c, r in zip(candidates, rates))
    reason = "all_aborted" if rates[best] <= 0 else None
    return SearchResult(dict(candidates[best]), float(rates[best]), trace, reason)


def random_search(space: SearchSpace,
                  objective: Callable[[dict[str, float]], float]) -> SearchResult:
    candidates = space.samples()
    return select_best(candidates, [float(objective(c)) for c in candidates])

import math

import pytest
from hypothesis import given, settings, strategies as st

from passive_qkd.errors import DomainError
from passive_qkd.optimizer import (ASYMPTOTIC_PINS, DEFAULT_RANGES, PARAM_NAMES, SearchSpace,
                                   random_search, select_best, source_config)


def test_budget_one_returns_the_sample():
    space = SearchSpace(budget=1, seed=5)
    (only,) = space.samples()
    result = random_search(space, lambda p: p["nu_t"])
    assert result.best_params == only
    assert result.best_rate == only["nu_t"]
    assert len(result.trace) == 1


def test_constant_objective_keeps_first():
    space = SearchSpace(budget=10, seed=1)
    result = random_search(space, lambda p: 0.25)
    assert result.best_rate == 0.25
    assert result.best_params == space.samples()[0]


def test_samples_inside_ranges():
    for p in SearchSpace(budget=200, seed=3).samples():
        assert set(p) == set(PARAM_NAMES)
        for name, (lo, hi) in DEFAULT_RANGES.items():
            assert lo <= p[name] <= hi


def test_pins_override_draws():
    samples = SearchSpace(budget=20, seed=3, pinned=ASYMPTOTIC_PINS).samples()
    free = SearchSpace(budget=20, seed=3).samples()
    for p, q in zip(samples, free):
        for name, value in ASYMPTOTIC_PINS.items():
            assert p[name] == value
        assert p["nu_t"] == q["nu_t"] and p["dtheta_key"] == q["dtheta_key"]


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(0, 40))
def test_prefix_property_and_monotone_best(seed, budget, extra):
    small = SearchSpace(budget=budget, seed=seed)
    big = SearchSpace(budget=budget + extra, seed=seed)
    assert big.samples()[:budget] == small.samples()

    def objective(p):
        return math.sin(7 * p["nu_t"]) + p["q_T"]

    assert random_search(big, objective).best_rate >= random_search(small, objective).best_rate


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_returned_parameters_reproduce_rate(seed):
    def objective(p):
        return -(p["w"] - 0.07) ** 2 - (p["nu_t"] - 0.4) ** 2

    result = random_search(SearchSpace(budget=25, seed=seed), objective)
    assert objective(result.best_params) == result.best_rate
    assert result.best_rate == max(r for _, r in result.trace)


def test_all_aborted_reason():
    result = select_best([{"a": 1.0}, {"a": 2.0}], [0.0, 0.0])
    assert result.reason == "all_aborted" and result.best_rate == 0.0
    assert select_best([{"a": 1.0}, {"a": 2.0}], [0.0, 0.3]).reason is None


def test_ties_go_to_first():
    result = select_best([{"a": 1.0}, {"a": 2.0}, {"a": 3.0}], [0.1, 0.2, 0.2])
    assert result.best_params == {"a": 2.0}


@pytest.mark.parametrize("kwargs", [
    dict(ranges={"w": (0.1, 0.3)}),
    dict(ranges={"dtheta_key": (0.1, math.pi / 2)}),
    dict(ranges={"q_T": (0.0, 0.5)}),
    dict(ranges={"nu_t": (0.5, 0.1)}),
    dict(ranges={"colour": (0.1, 0.2)}),
    dict(pinned={"w": 0.3}),
    dict(budget=0),
])
def test_space_validation(kwargs):
    with pytest.raises(DomainError):
        SearchSpace(**kwargs)


def test_source_config_layout():
    cfg = source_config(dict(w=0.1, q_T=0.2, nu_t=0.5, dtheta_key=0.4, dtheta_test=0.3,
                             dphi_test=0.2))
    assert cfg.d_key == cfg.d_test == 4
    assert cfg.key_intervals[0].hi == 1.0 and cfg.key_intervals[-1].lo == 0.0
    assert cfg.test_intervals[0].hi == 1.0 and all(i.lo == 0 for i in cfg.test_intervals)
    assert (cfg.nu_t, cfg.dtheta_key, cfg.dtheta_test, cfg.dphi_test) == (0.5, 0.4, 0.3, 0.2)

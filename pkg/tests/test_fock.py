import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from passive_qkd.errors import DegenerateStateError, DomainError
from passive_qkd.fock import (FockMatrix, fock_matrix, mixed_basis_matrix, td_tables,
                              trace_distance)
from passive_qkd.source import IntensityInterval, RegionSpec, region_moments


def test_vacuum_component(ref_config):
    for region in (ref_config.key_region(1), ref_config.test_region(2, "V")):
        m = fock_matrix(region, 0, ref_config.nu_t)
        assert m.entries.shape == (1, 1)
        assert m.entries[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_key_single_photon_structure(ref_config):
    for j in range(ref_config.d_key):
        for pole, sign in (("R", 1), ("L", -1)):
            region = ref_config.key_region(j, pole)
            lam = region_moments(region, ref_config.nu_t).lam
            m = fock_matrix(region, 1, ref_config.nu_t).entries
            want = np.diag([(1 + sign * lam) / 2, (1 - sign * lam) / 2])
            assert np.abs(m - want).max() < 1e-8


def test_test_single_photon_structure(ref_config):
    for j in range(ref_config.d_test):
        for pole, sign in (("H", 1), ("V", -1)):
            region = ref_config.test_region(j, pole)
            lam = region_moments(region, ref_config.nu_t).lam
            m = fock_matrix(region, 1, ref_config.nu_t).entries
            want = np.array([[0.5, sign * lam / 2], [sign * lam / 2, 0.5]])
            assert np.abs(m - want).max() < 1e-8


def test_mixed_key_single_photon_is_maximally_mixed(ref_config):
    for j in range(ref_config.d_key):
        m = mixed_basis_matrix(ref_config.key_region(j, "R"), ref_config.key_region(j, "L"), 1,
                               ref_config.nu_t)
        assert np.abs(m.entries - np.eye(2) / 2).max() < 1e-8


def test_mixed_key_two_photon(ref_config):
    m = mixed_basis_matrix(ref_config.key_region(0, "R"), ref_config.key_region(0, "L"), 2,
                           ref_config.nu_t)
    m.check()
    assert np.allclose(m.entries, np.diag(np.diag(m.entries)), atol=1e-14)
    assert m.entries[0, 0] == pytest.approx(m.entries[2, 2], rel=1e-10)


def test_mixed_requires_two_poles(ref_config):
    with pytest.raises(DomainError):
        mixed_basis_matrix(ref_config.key_region(0), ref_config.key_region(0), 1, ref_config.nu_t)


def test_key_matrices_diagonal_and_valid(ref_config):
    for j in range(ref_config.d_key):
        for n in range(5):
            m = fock_matrix(ref_config.key_region(j), n, ref_config.nu_t)
            m.check()
            assert np.abs(m.entries - np.diag(np.diag(m.entries))).max() < 1e-14


def test_test_matrices_valid(ref_config):
    for j in range(ref_config.d_test):
        for n in range(5):
            m = fock_matrix(ref_config.test_region(j), n, ref_config.nu_t)
            m.check()
            assert np.allclose(m.entries, m.entries.T)


def test_underflow_is_reported():
    region = RegionSpec("key", "R", IntensityInterval(0.0, 0.005), 0.5)
    with pytest.raises(DegenerateStateError):
        fock_matrix(region, 400, 0.05)


# ---------------------------------------------------------------------------
# trace distance

R = FockMatrix(1, np.array([[1.0, 0.0], [0.0, 0.0]]))
L = FockMatrix(1, np.array([[0.0, 0.0], [0.0, 1.0]]))
H = FockMatrix(1, np.full((2, 2), 0.5))
MIXED = FockMatrix(1, np.eye(2) / 2)


def test_trace_distance_examples():
    assert trace_distance(H, H) == 0.0
    assert trace_distance(R, L) == pytest.approx(1.0)
    assert trace_distance(MIXED, H) == pytest.approx(0.5)
    assert trace_distance(R, H) == pytest.approx(np.sqrt(0.5))


def test_trace_distance_dimension_mismatch():
    with pytest.raises(DomainError):
        trace_distance(R, FockMatrix(0, np.ones((1, 1))))


def test_fock_matrix_shape_checked():
    with pytest.raises(DomainError):
        FockMatrix(2, np.eye(2))


def test_matrix_is_read_only():
    with pytest.raises(ValueError):
        H.entries[0, 0] = 2.0


def test_td_tables_structure(ref_config, ref_source):
    td = ref_source.td
    assert td.n_cut == 4
    assert np.all(td.key[0] == 0) and np.all(td.key[1] == 0) and np.all(td.test[0] == 0)
    for table in (td.key, td.test):
        for n in range(td.n_cut + 1):
            assert np.allclose(table[n], table[n].T)
            assert np.all(np.diag(table[n]) == 0)
            assert np.all((table[n] >= 0) & (table[n] <= 1))
    lams = [region_moments(r, ref_config.nu_t).lam for r in ref_config.test_regions()]
    for j, k in itertools.combinations(range(len(lams)), 2):
        assert td.test[1, j, k] == pytest.approx(abs(lams[j] - lams[k]) / 2, abs=1e-9)


def test_td_tables_need_positive_cut(ref_config):
    with pytest.raises(DomainError):
        td_tables(ref_config, 0)


def test_h_and_v_distances_agree(ref_config):
    nu = ref_config.nu_t
    for n in range(1, 5):
        h = [fock_matrix(r, n, nu) for r in ref_config.test_regions("H")]
        v = [fock_matrix(r, n, nu) for r in ref_config.test_regions("V")]
        for j, k in itertools.combinations(range(len(h)), 2):
            assert trace_distance(h[j], h[k]) == pytest.approx(trace_distance(v[j], v[k]),
                                                               abs=1e-9)


@pytest.fixture(scope="module")
def produced(ref_config):
    nu = ref_config.nu_t
    by_n = {}
    for n in range(1, 5):
        states = [fock_matrix(r, n, nu) for r in
                  ref_config.key_regions("R") + ref_config.key_regions("L")
                  + ref_config.test_regions("H") + ref_config.test_regions("V")]
        by_n[n] = states
    return by_n


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4), st.integers(0, 15), st.integers(0, 15), st.integers(0, 15))
def test_triangle_inequality(produced, n, a, b, c):
    s = produced[n]
    assert trace_distance(s[a], s[c]) <= trace_distance(s[a], s[b]) + trace_distance(s[b], s[c]) \
        + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(0, 15), st.integers(0, 15))
def test_trace_distance_symmetric_and_bounded(produced, n, a, b):
    s = produced[n]
    d = trace_distance(s[a], s[b])
    assert d == pytest.approx(trace_distance(s[b], s[a]), abs=1e-15)
    assert 0.0 <= d <= 1.0

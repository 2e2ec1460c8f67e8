"""Sector enumeration and bilinear operator algebra."""

import numpy as np
import pytest

import mixsolver as mx
from mixsolver.fock import InfeasibleSectorError, ShapeError, bilinear_map


def test_dimensions():
    assert mx.enumerate_sector(mx.Statistics.FERMI, 2, 4).dim == 6
    assert mx.enumerate_sector(mx.Statistics.BOSE, 2, 3).dim == 6
    assert mx.enumerate_sector(mx.Statistics.FERMI, 2, 2).dim == 1
    for sec in (mx.enumerate_sector(mx.Statistics.BOSE, 3, 5),
                mx.enumerate_sector(mx.Statistics.FERMI, 3, 6)):
        assert sec.dim == sec.expected_dim()


def test_infeasible_fermi_sector():
    with pytest.raises(InfeasibleSectorError):
        mx.enumerate_sector(mx.Statistics.FERMI, 3, 2)


def test_index_round_trip():
    for sec in (mx.enumerate_sector(mx.Statistics.BOSE, 2, 4),
                mx.enumerate_sector(mx.Statistics.FERMI, 3, 5)):
        for k in range(sec.dim):
            assert sec.index_of(sec.configs[k]) == k


def test_configs_lexicographic():
    sec = mx.enumerate_sector(mx.Statistics.BOSE, 2, 3)
    as_tuples = [tuple(c) for c in sec.configs]
    assert as_tuples == sorted(as_tuples)


def test_bose_number_operator():
    sec = mx.enumerate_sector(mx.Statistics.BOSE, 2, 3)
    state = np.zeros(sec.dim)
    state[sec.index_of([2, 0, 0])] = 1.0
    out = mx.apply_bilinear(sec, 0, 0, state)
    assert np.abs(out - 2.0 * state).max() < 1e-15


def test_fermi_single_hop_no_crossing():
    sec = mx.enumerate_sector(mx.Statistics.FERMI, 1, 2)
    state = np.zeros(sec.dim)
    state[sec.index_of([1, 0])] = 1.0
    out = mx.apply_bilinear(sec, 1, 0, state)
    expected = np.zeros(sec.dim)
    expected[sec.index_of([0, 1])] = 1.0
    assert np.abs(out - expected).max() == 0.0


def test_fermi_sign_crossing():
    # hop across an occupied orbital picks up the parity sign
    sec = mx.enumerate_sector(mx.Statistics.FERMI, 2, 3)
    state = np.zeros(sec.dim)
    state[sec.index_of([1, 1, 0])] = 1.0
    out = mx.apply_bilinear(sec, 2, 0, state)   # move 0 -> 2 across occupied 1
    assert abs(out[sec.index_of([0, 1, 1])] + 1.0) < 1e-15


def test_number_operator_sums_to_n():
    # brute force over random states in several sectors
    rng = np.random.default_rng(11)
    for stat, N, M in ((mx.Statistics.BOSE, 3, 4), (mx.Statistics.FERMI, 2, 5)):
        sec = mx.enumerate_sector(stat, N, M)
        state = rng.standard_normal(sec.dim)
        total = np.zeros_like(state)
        for m in range(M):
            total += mx.apply_bilinear(sec, m, m, state)
        assert np.abs(total - N * state).max() < 1e-12


def test_bilinear_transpose_pair():
    # full basis sweep: matrix of (m, n) is the transpose of (n, m)
    for stat in (mx.Statistics.BOSE, mx.Statistics.FERMI):
        sec = mx.enumerate_sector(stat, 2, 4)
        eye = np.eye(sec.dim)
        for m in range(4):
            for n in range(4):
                A = np.column_stack([mx.apply_bilinear(sec, m, n, eye[:, i])
                                     for i in range(sec.dim)])
                B = np.column_stack([mx.apply_bilinear(sec, n, m, eye[:, i])
                                     for i in range(sec.dim)])
                assert np.abs(A - B.T).max() < 1e-12


def test_fermi_sign_consistency_round_trip():
    sec = mx.enumerate_sector(mx.Statistics.FERMI, 2, 4)
    state = np.zeros(sec.dim)
    state[sec.index_of([0, 1, 1, 0])] = 1.0    # orbital 1, 2 occupied, 0 empty
    hop = mx.apply_bilinear(sec, 0, 2, state)  # 2 -> 0
    back = mx.apply_bilinear(sec, 2, 0, hop)   # 0 -> 2
    assert np.abs(back - state).max() < 1e-15


def test_bilinear_shape_error():
    sec = mx.enumerate_sector(mx.Statistics.BOSE, 2, 3)
    with pytest.raises(ShapeError):
        mx.apply_bilinear(sec, 0, 0, np.ones(sec.dim + 1))
    with pytest.raises(IndexError):
        mx.apply_bilinear(sec, 3, 0, np.ones(sec.dim))


def test_one_body_transition_single_config():
    sec = mx.enumerate_sector(mx.Statistics.FERMI, 2, 4)
    state = np.zeros(sec.dim)
    state[sec.index_of([1, 1, 0, 0])] = 1.0
    D = mx.one_body_transition(sec, state, state)
    assert np.abs(D - np.diag([1.0, 1.0, 0.0, 0.0])).max() < 1e-15


def test_one_body_transition_trace_and_symmetry():
    rng = np.random.default_rng(5)
    sec = mx.enumerate_sector(mx.Statistics.BOSE, 3, 4)
    state = rng.standard_normal(sec.dim)
    state /= np.linalg.norm(state)
    D = mx.one_body_transition(sec, state, state)
    assert abs(np.trace(D) - 3.0) < 1e-12
    assert np.abs(D - D.T).max() < 1e-12


def test_one_body_transition_orthogonal_states():
    # trace of the transition matrix between orthogonal states vanishes:
    # trace(D) = N <bra|ket>, verified brute force
    rng = np.random.default_rng(9)
    sec = mx.enumerate_sector(mx.Statistics.FERMI, 2, 5)
    a = rng.standard_normal(sec.dim)
    b = rng.standard_normal(sec.dim)
    b -= (a @ b) / (a @ a) * a
    D = mx.one_body_transition(sec, a, b)
    brute = sum((a @ mx.apply_bilinear(sec, m, m, b)) for m in range(5))
    assert abs(np.trace(D)) < 1e-12
    assert abs(np.trace(D) - brute) < 1e-12


def test_one_body_operator_matches_bilinears():
    rng = np.random.default_rng(2)
    sec = mx.enumerate_sector(mx.Statistics.FERMI, 2, 4)
    h = rng.standard_normal((4, 4))
    h = (h + h.T) / 2
    op = mx.one_body_operator(sec, h)
    state = rng.standard_normal(sec.dim)
    expected = np.zeros_like(state)
    for m in range(4):
        for n in range(4):
            expected += h[m, n] * mx.apply_bilinear(sec, m, n, state)
    assert np.abs(op @ state - expected).max() < 1e-12


def test_bilinear_map_consistency():
    rng = np.random.default_rng(4)
    sec = mx.enumerate_sector(mx.Statistics.BOSE, 2, 3)
    state = rng.standard_normal(sec.dim)
    phi = bilinear_map(sec, state)
    for m in range(3):
        for n in range(3):
            direct = mx.apply_bilinear(sec, m, n, state)
            assert np.abs(phi[m * 3 + n, :, 0] - direct).max() < 1e-13

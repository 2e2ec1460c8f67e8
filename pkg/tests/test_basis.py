"""Orbital basis, quadrature rules, single-particle matrices, contact tensor."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

import mixsolver as mx
from mixsolver.basis import hermite_rule


def test_rule_moments_exact():
    # integral x^(2k) exp(-a x^2) = Gamma(k + 1/2) / a^(k + 1/2); the rule
    # is applied to the full integrand including its Gaussian factor
    for decay in (1.0, 2.0, 3.0):
        x, w = hermite_rule(20, decay)
        for k in range(6):
            got = np.dot(w, x ** (2 * k) * np.exp(-decay * x * x))
            exact = math.gamma(k + 0.5) / decay ** (k + 0.5)
            assert abs(got - exact) < 1e-12 * max(1.0, exact)


def test_rule_rejects_bad_order():
    with pytest.raises(ValueError):
        hermite_rule(0)
    with pytest.raises(ValueError):
        hermite_rule(mx.basis.MAX_QUAD_ORDER + 1)


def test_orbital_at_origin():
    basis = mx.OrbitalBasis(6)
    assert abs(basis.eval_orbital(0, 0.0) - math.pi ** -0.25) < 1e-14
    assert basis.eval_orbital(1, 0.0) == 0.0


def test_orbital_index_range():
    basis = mx.OrbitalBasis(4)
    with pytest.raises(IndexError):
        basis.eval_orbital(4, 0.0)
    with pytest.raises(IndexError):
        basis.eval_orbital(-1, 0.0)


def test_orbital_parity():
    basis = mx.OrbitalBasis(12)
    x = np.linspace(0.1, 5.0, 23)
    for n in range(12):
        left = basis.eval_orbital(n, -x)
        right = basis.eval_orbital(n, x)
        sign = 1.0 if n % 2 == 0 else -1.0
        assert np.abs(left - sign * right).max() < 1e-14


def test_orbital_against_quad_normalization():
    # independent oracle: direct adaptive quadrature of phi_n^2
    basis = mx.OrbitalBasis(10)
    for n in (0, 3, 7, 9):
        val, _ = quad(lambda x: basis.eval_orbital(n, x) ** 2, -12, 12, limit=200)
        assert abs(val - 1.0) < 1e-9


def test_orthonormality_invariant():
    for M in (4, 10, 14):
        assert mx.OrbitalBasis(M).orthonormality_error() < 1e-10


def test_completeness_monotone_at_origin():
    totals = []
    for M in range(12, 20, 2):
        basis = mx.OrbitalBasis(M)
        phi0 = basis.orbital_values(np.array([0.0]))[:, 0]
        totals.append(np.sum(phi0 ** 2))
    assert all(b >= a for a, b in zip(totals, totals[1:]))


def test_quad_order_minimum_enforced():
    with pytest.raises(ValueError):
        mx.OrbitalBasis(10, quad_order=21)   # 2M+2 = 22
    mx.OrbitalBasis(10, quad_order=22)


def test_grid_validation():
    with pytest.raises(ValueError):
        mx.OrbitalBasis(4, grid=np.linspace(-3, 4, 51))
    with pytest.raises(ValueError):
        mx.OrbitalBasis(4, grid=np.array([-1.0, -0.5, 0.5, 1.0]) ** 3)


def test_kinetic_matrix_entries():
    basis = mx.OrbitalBasis(8)
    T = mx.kinetic_matrix(basis)
    assert T[0, 0] == 0.25
    assert abs(T[0, 2] + math.sqrt(2) / 4) < 1e-15
    assert T[0, 1] == 0.0
    n = np.arange(8)
    assert np.abs(np.diag(T) - (2 * n + 1) / 4).max() < 1e-15
    assert np.abs(T - T.T).max() == 0.0


def test_single_particle_h_diagonal():
    basis = mx.OrbitalBasis(9)
    ops = mx.single_particle_operators(basis)
    n = np.arange(9)
    assert np.abs(ops.h - np.diag(n + 0.5)).max() < 1e-12
    assert np.abs(ops.h - (ops.kinetic + ops.trap)).max() < 1e-12
    assert np.abs(ops.trap - ops.trap.T).max() == 0.0


def test_six_orbital_rule_exact_at_minimum_order():
    # six-orbital products need the decay-3 rule; even at the minimum
    # configured order the rule must be bumped to stay exact
    M = 10
    basis = mx.OrbitalBasis(M, quad_order=2 * M + 2)
    nodes, w = basis.rule(3)
    idx = (1, 4, 5, 7, 8, 9)
    vals = np.prod([basis.eval_orbital(n, nodes) for n in idx], axis=0)
    got = np.dot(w, vals)
    oracle, _ = quad(lambda x: np.prod([basis.eval_orbital(n, x) for n in idx]),
                     -10, 10, limit=300)
    assert abs(got - oracle) < 1e-12


def test_contact_tensor_values():
    basis = mx.OrbitalBasis(6)
    U = mx.contact_tensor(basis, 1.0)
    assert abs(U[0, 0, 0, 0] - 1 / math.sqrt(2 * math.pi)) < 1e-13
    assert abs(U[0, 0, 0, 1]) < 1e-14     # odd total parity
    # independent oracle: adaptive quadrature of a few orbital products
    for idx in ((0, 1, 1, 2), (2, 3, 3, 4), (0, 2, 4, 4)):
        i, j, k, l = idx
        val, _ = quad(lambda x: (basis.eval_orbital(i, x) * basis.eval_orbital(j, x)
                                 * basis.eval_orbital(k, x) * basis.eval_orbital(l, x)),
                      -10, 10, limit=200)
        assert abs(U[idx] - val) < 1e-10


def test_contact_tensor_permutation_symmetry():
    basis = mx.OrbitalBasis(5)
    U = mx.contact_tensor(basis, 0.7)
    rng = np.random.default_rng(3)
    for _ in range(20):
        i, j, k, l = rng.integers(0, 5, size=4)
        base = U[i, j, k, l]
        assert U[j, i, l, k] == base
        assert U[k, l, i, j] == base
        assert U[l, k, j, i] == base


def test_contact_tensor_linear_in_g():
    basis = mx.OrbitalBasis(5)
    U1 = mx.contact_tensor(basis, 1.0).dense()
    U3 = mx.contact_tensor(basis, 3.5).dense()
    assert np.array_equal(U3, 3.5 * U1)


def test_contact_tensor_dense_matches_packed():
    basis = mx.OrbitalBasis(4)
    U = mx.contact_tensor(basis, 1.3)
    dense = U.dense()
    for i in range(4):
        for j in range(4):
            for k in range(4):
                for l in range(4):
                    assert dense[i, j, k, l] == U[i, j, k, l]

"""Harmonic-oscillator orbital basis in harmonic units (hbar = m = omega = 1).

Provides orbital evaluation through a numerically stable normalized
recurrence, Gauss-Hermite quadrature rules for the Gaussian-decay classes
that orbital products fall into, the single-particle matrices, and the
four-orbital contact-interaction tensor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# hermgauss weights underflow beyond roughly this order; the scaled rules
# would silently lose nodes, so refuse instead.
MAX_QUAD_ORDER = 300


def hermite_rule(order: int, decay: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature rule exact for integrands p(x)*exp(-decay*x^2).

    Returns nodes ``x`` and weights ``w`` such that ``sum(w * f(x))``
    equals ``integral f`` exactly whenever ``f(x) = p(x) exp(-decay x^2)``
    with ``deg p <= 2*order - 1``.  A product of 2k orbitals lies in the
    class ``decay = k``.
    """
    if order < 1:
        raise ValueError("quadrature order must be positive")
    if order > MAX_QUAD_ORDER:
        raise ValueError(f"quadrature order {order} exceeds supported maximum {MAX_QUAD_ORDER}")
    if decay <= 0:
        raise ValueError("decay must be positive")
    y, v = np.polynomial.hermite.hermgauss(order)
    s = math.sqrt(decay)
    # w = v * exp(y^2) / s, computed in log form to dodge over/underflow
    w = np.exp(np.log(v) + y * y - math.log(s))
    return y / s, w


def eval_orbitals(num_orbitals: int, x) -> np.ndarray:
    """Evaluate phi_n(x) for all n < num_orbitals; shape (num_orbitals, len(x)).

    Uses the normalized three-term recurrence
    phi_{n+1} = sqrt(2/(n+1)) x phi_n - sqrt(n/(n+1)) phi_{n-1},
    which keeps every intermediate bounded (no Hermite polynomials or
    factorials appear explicitly).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    M = int(num_orbitals)
    out = np.empty((M, x.size))
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if M > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, M - 1):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


class OrbitalBasis:
    """Orbital set, quadrature rules and real-space sampling grid.

    Parameters
    ----------
    num_orbitals : int
        Number of harmonic-oscillator orbitals per species.
    quad_order : int, optional
        Order of the underlying Gauss-Hermite rules.  Defaults to
        4*num_orbitals; must be at least 2*num_orbitals + 2 so that all
        four-orbital products are integrated exactly.
    grid : array, optional
        Uniform, symmetric real-space sample points.  Defaults to 401
        points on [-8, 8].
    """

    def __init__(self, num_orbitals: int, quad_order: int | None = None,
                 grid: np.ndarray | None = None):
        if num_orbitals < 1:
            raise ValueError("num_orbitals must be positive")
        self.num_orbitals = int(num_orbitals)
        self.quad_order = int(quad_order) if quad_order is not None else 4 * self.num_orbitals
        if self.quad_order < 2 * self.num_orbitals + 2:
            raise ValueError(
                f"quad_order {self.quad_order} < 2M+2 = {2 * self.num_orbitals + 2}: "
                "four-orbital products would not be integrated exactly")
        if grid is None:
            grid = np.linspace(-8.0, 8.0, 401)
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or grid.size < 3:
            raise ValueError("grid must be a 1D array with at least 3 points")
        if np.abs(grid + grid[::-1]).max() > 1e-12:
            raise ValueError("grid must be symmetric about x = 0")
        steps = np.diff(grid)
        if np.abs(steps - steps[0]).max() > 1e-12:
            raise ValueError("grid must be uniform")
        self.grid = grid
        self._rules: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._node_orbitals: dict[int, np.ndarray] = {}
        self._grid_orbitals: np.ndarray | None = None

    def eval_orbital(self, n: int, x):
        """phi_n at position(s) x."""
        if not 0 <= n < self.num_orbitals:
            raise IndexError(f"orbital index {n} out of range [0, {self.num_orbitals})")
        vals = eval_orbitals(n + 1, x)[n]
        if np.isscalar(x) or np.ndim(x) == 0:
            return float(vals[0])
        return vals

    def orbital_values(self, x=None) -> np.ndarray:
        """All orbitals sampled at x (default: the real-space grid); shape (M, nx)."""
        if x is None:
            if self._grid_orbitals is None:
                self._grid_orbitals = eval_orbitals(self.num_orbitals, self.grid)
            return self._grid_orbitals
        return eval_orbitals(self.num_orbitals, x)

    def rule(self, decay: int) -> tuple[np.ndarray, np.ndarray]:
        """Cached quadrature rule exact for products of 2*decay orbitals.

        The order is bumped to decay*M when the configured order would not
        integrate that product class exactly (only relevant for decay 3
        with orders below 3M; the 4M default always suffices).
        """
        if decay not in self._rules:
            order = max(self.quad_order, decay * self.num_orbitals)
            self._rules[decay] = hermite_rule(order, float(decay))
        return self._rules[decay]

    def node_orbitals(self, decay: int) -> np.ndarray:
        """Orbitals sampled at the nodes of ``rule(decay)``; shape (M, order)."""
        if decay not in self._node_orbitals:
            x, _ = self.rule(decay)
            self._node_orbitals[decay] = eval_orbitals(self.num_orbitals, x)
        return self._node_orbitals[decay]

    def integrate(self, values: np.ndarray, decay: int) -> float:
        """Integrate node-sampled values against the decay-class rule."""
        _, w = self.rule(decay)
        return float(np.dot(w, values))

    def orthonormality_error(self) -> float:
        """max |quadrature(phi_m phi_n) - delta_mn| over m, n < M."""
        phi = self.node_orbitals(1)
        _, w = self.rule(1)
        overlap = (phi * w) @ phi.T
        return float(np.abs(overlap - np.eye(self.num_orbitals)).max())


@dataclass(frozen=True)
class SingleParticleOperators:
    """h = T + X2 for the harmonic trap, in the orbital basis."""

    h: np.ndarray
    kinetic: np.ndarray
    trap: np.ndarray


def kinetic_matrix(basis: OrbitalBasis) -> np.ndarray:
    """Matrix of -1/2 d^2/dx^2: diagonal (2n+1)/4, skip-one band -sqrt((n+1)(n+2))/4."""
    M = basis.num_orbitals
    n = np.arange(M)
    T = np.zeros((M, M))
    T[n, n] = (2 * n + 1) / 4.0
    for i in range(M - 2):
        T[i, i + 2] = T[i + 2, i] = -math.sqrt((i + 1) * (i + 2)) / 4.0
    return T


def trap_matrix(basis: OrbitalBasis) -> np.ndarray:
    """Matrix of x^2/2: diagonal (2n+1)/4, skip-one band +sqrt((n+1)(n+2))/4."""
    M = basis.num_orbitals
    n = np.arange(M)
    X2 = np.zeros((M, M))
    X2[n, n] = (2 * n + 1) / 4.0
    for i in range(M - 2):
        X2[i, i + 2] = X2[i + 2, i] = math.sqrt((i + 1) * (i + 2)) / 4.0
    return X2


def single_particle_operators(basis: OrbitalBasis) -> SingleParticleOperators:
    T = kinetic_matrix(basis)
    X2 = trap_matrix(basis)
    return SingleParticleOperators(h=T + X2, kinetic=T, trap=X2)


class ContactTensor:
    """Four-orbital contact integrals U_ijkl = g * integral(phi_i phi_j phi_k phi_l).

    Real orbitals make the integral fully symmetric under any index
    permutation, so only the sorted combinations i <= j <= k <= l are
    stored.  Values are kept at unit coupling and scaled by ``g`` on
    access, which makes U(g) = g * U(1) hold entrywise exactly.
    """

    def __init__(self, basis: OrbitalBasis, g: float):
        if not math.isfinite(g):
            raise ValueError("coupling must be finite")
        self.g = float(g)
        self.num_orbitals = basis.num_orbitals
        M = self.num_orbitals
        phi = basis.node_orbitals(2)
        _, w = basis.rule(2)
        # packed index: combination (i<=j<=k<=l) -> slot, filled in lex order
        self._slot: dict[tuple[int, int, int, int], int] = {}
        vals = []
        for i in range(M):
            pi = phi[i]
            for j in range(i, M):
                pij = pi * phi[j]
                for k in range(j, M):
                    pijk = pij * phi[k]
                    for l in range(k, M):
                        self._slot[(i, j, k, l)] = len(vals)
                        vals.append(np.dot(w, pijk * phi[l]))
        self._base = np.array(vals)
        self._dense_base: np.ndarray | None = None

    def __getitem__(self, idx: tuple[int, int, int, int]) -> float:
        key = tuple(sorted(idx))
        return self.g * self._base[self._slot[key]]

    def dense(self) -> np.ndarray:
        """Full (M, M, M, M) array, materialized on first use."""
        if self._dense_base is None:
            M = self.num_orbitals
            U = np.empty((M, M, M, M))
            for (i, j, k, l), slot in self._slot.items():
                v = self._base[slot]
                for perm in _permutations4(i, j, k, l):
                    U[perm] = v
            self._dense_base = U
        return self.g * self._dense_base


def _permutations4(i, j, k, l):
    import itertools
    return set(itertools.permutations((i, j, k, l)))


def contact_tensor(basis: OrbitalBasis, g: float) -> ContactTensor:
    """Contact-interaction tensor at coupling g (Gauss-Hermite quadrature, exact)."""
    return ContactTensor(basis, g)

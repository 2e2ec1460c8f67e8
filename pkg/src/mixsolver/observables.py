"""Reduced densities and pair correlations for sector or mixture states.

One- and two-body reduced density matrices are contracted from the sector
move tables; grid kernels only sample the orbital-space result.  States
may be single sector vectors or (dim, B) batches; batch columns are
summed, which realizes the partial trace over the other species when the
batch is a mixture tensor (or its transpose).

The two-body matrix is projected onto its exact permutation symmetries
before any grid contraction.  That projection is what lets the fermionic
diagonal cancel to full precision even where the one-body density (the g2
denominator) is many orders of magnitude below its peak.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import OrbitalBasis
from .fock import SpeciesSector, Statistics, bilinear_map, transition_rdm1


class UndefinedObservableError(ValueError):
    """Observable undefined for this particle number."""


DENSITY_FLOOR_REL = 1e-6


def _as_batch(state) -> np.ndarray:
    state = np.asarray(state, dtype=float)
    return state[:, None] if state.ndim == 1 else state


def species_slice(coeffs: np.ndarray, species: str) -> np.ndarray:
    """Mixture tensor viewed as a batch of sector vectors for one species."""
    return coeffs if species == "b" else coeffs.T


def rdm1(sector: SpeciesSector, state) -> np.ndarray:
    """One-body reduced density matrix <a+_m a_n> (batch columns summed)."""
    st = _as_batch(state)
    return transition_rdm1(sector, st, st)


def rdm2(sector: SpeciesSector, state) -> np.ndarray:
    """Two-body reduced density matrix P[i,j,k,l] = <a+_i a+_j a_l a_k>.

    Assembled from bilinear-excited states via
    a+_i a+_j a_l a_k = (a+_i a_k)(a+_j a_l) - delta_jk a+_i a_l,
    then projected onto the exact permutation symmetries
    (i<->j and k<->l with the statistics sign, bra-ket swap).
    """
    if sector.num_particles < 2:
        raise UndefinedObservableError(
            f"two-body density needs at least 2 particles, sector has {sector.num_particles}")
    st = _as_batch(state)
    M = sector.num_orbitals
    phi = bilinear_map(sector, st)                   # (M*M, dim, B)
    flat = phi.reshape(M * M, -1)
    G = (flat @ flat.T).reshape(M, M, M, M)          # G[(m,n),(p,q)]
    D = rdm1(sector, st)
    P = np.einsum("kijl->ijkl", G) - np.einsum("jk,il->ijkl", np.eye(M), D)
    sign = -1.0 if sector.statistics is Statistics.FERMI else 1.0
    P = 0.5 * (P + sign * P.transpose(1, 0, 2, 3))
    P = 0.5 * (P + sign * P.transpose(0, 1, 3, 2))
    P = 0.5 * (P + P.transpose(2, 3, 0, 1))
    return P


def rho1_grid(sector: SpeciesSector, state, basis: OrbitalBasis,
              x: np.ndarray | None = None) -> np.ndarray:
    """One-body density normalized to 1 (per particle)."""
    if sector.num_particles < 1:
        raise UndefinedObservableError("density of an empty sector")
    D = rdm1(sector, state)
    phi = basis.orbital_values(x)
    return np.einsum("mn,mx,nx->x", D, phi, phi) / sector.num_particles


def rho2_kernel(sector: SpeciesSector, state, basis: OrbitalBasis,
                x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Pair density on an (x1, x2) product mesh, normalized per pair."""
    P = rdm2(sector, state)
    M = sector.num_orbitals
    phi1 = basis.orbital_values(x1)
    phi2 = basis.orbital_values(x2)
    F1 = np.einsum("ix,kx->ikx", phi1, phi1).reshape(M * M, -1)
    F2 = np.einsum("jx,lx->jlx", phi2, phi2).reshape(M * M, -1)
    Pmat = P.transpose(0, 2, 1, 3).reshape(M * M, M * M)
    N = sector.num_particles
    return (F1.T @ Pmat @ F2) / (N * (N - 1))


def rho2_grid(sector: SpeciesSector, state, basis: OrbitalBasis,
              x: np.ndarray | None = None) -> np.ndarray:
    """Pair density on the square grid; exchange symmetry enforced exactly."""
    xg = basis.grid if x is None else np.asarray(x, dtype=float)
    r2 = rho2_kernel(sector, state, basis, xg, xg)
    return 0.5 * (r2 + r2.T)


def g2_grid(rho1_vals: np.ndarray, rho2_vals: np.ndarray,
            density_floor_rel: float = DENSITY_FLOOR_REL) -> np.ndarray:
    """Pair correlation rho2 / (rho1 x rho1), NaN where the density floor cuts.

    The floor is relative to max(rho1); masked cells are reported as NaN
    and serialized as empty CSV fields.
    """
    floor = density_floor_rel * rho1_vals.max()
    ok = (rho1_vals[:, None] > floor) & (rho1_vals[None, :] > floor)
    out = np.full_like(rho2_vals, np.nan)
    out[ok] = rho2_vals[ok] / (rho1_vals[:, None] * rho1_vals[None, :])[ok]
    return out


@dataclass
class CorrelationSet:
    """Densities and pair correlation of one state, tagged by provenance."""

    x: np.ndarray
    rho1: np.ndarray
    rho2: np.ndarray
    g2: np.ndarray
    provenance: str

    def diagonal(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.x.size
        return self.x, self.g2[np.arange(n), np.arange(n)]

    def antidiagonal(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.x.size
        return 2.0 * self.x, self.g2[np.arange(n), n - 1 - np.arange(n)]


def correlation_set(sector: SpeciesSector, state, basis: OrbitalBasis,
                    provenance: str, x: np.ndarray | None = None,
                    density_floor_rel: float = DENSITY_FLOOR_REL) -> CorrelationSet:
    """Bundle rho1, rho2 and g2 for a state (sector vector or mixture batch)."""
    xg = basis.grid if x is None else np.asarray(x, dtype=float)
    r1 = rho1_grid(sector, state, basis, xg)
    r2 = rho2_grid(sector, state, basis, xg)
    g2 = g2_grid(r1, r2, density_floor_rel)
    return CorrelationSet(x=xg, rho1=r1, rho2=r2, g2=g2, provenance=provenance)


def marginal_consistency_error(sector: SpeciesSector, state,
                               basis: OrbitalBasis) -> float:
    """max |integral rho2(x1, x2) dx2 - rho1(x1)| on the grid.

    The x2 integral runs over the pair-class quadrature nodes so the
    orbital-pair overlaps integrate exactly.
    """
    xg = basis.grid
    nodes, w = basis.rule(1)
    r2 = rho2_kernel(sector, state, basis, xg, nodes)
    marg = r2 @ w
    r1 = rho1_grid(sector, state, basis, xg)
    return float(np.abs(marg - r1).max())

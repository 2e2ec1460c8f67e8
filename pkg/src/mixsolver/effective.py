"""Effective single-species Hamiltonians and the species mean-field baseline.

The beyond-mean-field effective operator for species sigma is

    H_eff = H_sigma + O(V1 + Vno) + 1/2 sum_i c_i [O(A_i)^2 - O(A_i A_i)],

where O(.) is a one-body Fock operator, A_i projects the induced-kernel
factor gamma_bar_1i onto orbital pairs, and the bracket is the
normal-ordered two-body operator of the separable kernel term.  Only
one-dimensional quadratures enter the assembly.

The SMF baseline solves each species by full diagonalization inside its
sector under the bare trap plus the other species' mean density, iterating
with damped potential mixing to self-consistency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .fock import SpeciesSector, one_body_operator, transition_rdm1
from .hamiltonian import MixtureModel, MixtureOperator, assemble
from .induced import InducedQuantities, _sector
from .lanczos import ConvergenceError
from .schmidt import SchmidtDecomposition

SELECTION_TIE_TOL = 1e-10


class DependencyError(RuntimeError):
    """Induced quantities for the requested species are missing."""


@dataclass
class EffectiveModel:
    """Single-species effective Hamiltonian in separable form."""

    species: str
    sector: SpeciesSector
    one_body: np.ndarray                          # h + V1 + Vno projections
    pair_factors: list[tuple[float, np.ndarray]]  # (c_i, A_i)
    intra_coupling: float                         # species' own contact coupling
    psi_ref: np.ndarray                           # dominant Schmidt vector
    e1: float                                     # <psi_ref|H_eff|psi_ref>
    matrix: np.ndarray = field(default=None, repr=False)


def effective_matrix(sector: SpeciesSector, one_body: np.ndarray,
                     pair_factors, intra=None) -> np.ndarray:
    """Dense Fock-space matrix of the effective operator."""
    H = one_body_operator(sector, one_body).toarray()
    if intra is not None:
        H += intra.toarray()
    for c, A in pair_factors:
        OA = one_body_operator(sector, A).toarray()
        H += 0.5 * c * (OA @ OA - one_body_operator(sector, A @ A).toarray())
    return H


def build_effective(induced: InducedQuantities, decomp: SchmidtDecomposition,
                    model: MixtureModel, species: str,
                    operator: MixtureOperator | None = None) -> EffectiveModel:
    """Assemble the effective model for one species from induced data."""
    if species not in induced.species:
        raise DependencyError(f"induced quantities missing for species {species!r}")
    sp = induced.species[species]
    op = operator if operator is not None else assemble(model)
    sector = _sector(model, species)
    ops = op.h_single
    one_body = ops + sp.one_body_v1 + sp.one_body_vno
    intra = op.intra_b if species == "b" else op.intra_f
    coupling = model.g_bb if species == "b" else model.g_ff
    psi_ref = (decomp.vecs_b if species == "b" else decomp.vecs_f)[:, 0].copy()
    H = effective_matrix(sector, one_body, sp.pair_factors, intra)
    e1 = float(psi_ref @ (H @ psi_ref))
    return EffectiveModel(species=species, sector=sector, one_body=one_body,
                          pair_factors=sp.pair_factors, intra_coupling=coupling,
                          psi_ref=psi_ref, e1=e1, matrix=H)


@dataclass
class EffectiveSolution:
    species: str
    energies: np.ndarray         # full ascending spectrum
    selected_index: int
    selected_energy: float
    state: np.ndarray
    e1: float
    fidelity: float              # |<psi_eff|psi_1>|
    ambiguous: bool
    ambiguous_indices: list[int]
    low_states: np.ndarray       # first k eigenvectors, columns


def select_closest(energies: np.ndarray, e1: float,
                   tie_tol: float = SELECTION_TIE_TOL) -> tuple[int, list[int]]:
    """Index of the eigenvalue closest to e1; ties within tie_tol flagged."""
    dist = np.abs(energies - e1)
    best = int(np.argmin(dist))
    ties = [i for i in range(energies.size)
            if i != best and abs(dist[i] - dist[best]) < tie_tol]
    return best, ties


def solve_effective(model: EffectiveModel, k: int = 10) -> EffectiveSolution:
    """Diagonalize the effective operator and select the state nearest E1."""
    H = model.matrix
    if H is None:
        H = effective_matrix(model.sector, model.one_body, model.pair_factors)
    vals, vecs = scipy.linalg.eigh(H)
    best, ties = select_closest(vals, model.e1)
    state = vecs[:, best].copy()
    lead = np.argmax(np.abs(state))
    if state[lead] < 0:
        state = -state
    fid = float(abs(state @ model.psi_ref))
    k = min(k, vals.size)
    return EffectiveSolution(
        species=model.species,
        energies=vals,
        selected_index=best,
        selected_energy=float(vals[best]),
        state=state,
        e1=model.e1,
        fidelity=fid,
        ambiguous=bool(ties),
        ambiguous_indices=[best] + ties if ties else [],
        low_states=vecs[:, :k].copy(),
    )


@dataclass
class SMFResult:
    psi_b: np.ndarray
    psi_f: np.ndarray
    v_smf: dict[str, np.ndarray]          # damped converged potential on the grid
    v_smf_matrix: dict[str, np.ndarray]   # orbital-pair projections (exact)
    energies: dict[str, float]
    residuals: list[float]
    energy_history: list[float]           # product-state energy per iteration
    iterations: int
    converged: bool


def _mean_field_matrix(model: MixtureModel, density_rdm: np.ndarray,
                       phi_q2: np.ndarray, w2: np.ndarray) -> np.ndarray:
    gam = np.einsum("mn,mq,nq->q", density_rdm, phi_q2, phi_q2)
    return model.g_bf * np.einsum("q,q,mq,nq->mn", w2, gam, phi_q2, phi_q2)


def _mean_field_grid(model: MixtureModel, density_rdm: np.ndarray,
                     phi_x: np.ndarray) -> np.ndarray:
    return model.g_bf * np.einsum("mn,mx,nx->x", density_rdm, phi_x, phi_x)


def smf_solve(model: MixtureModel, mixing: float = 0.5, tol: float = 1e-10,
              max_iter: int = 500, x: np.ndarray | None = None,
              operator: MixtureOperator | None = None) -> SMFResult:
    """Self-consistent species mean field with damped potential mixing.

    Alternates full sector diagonalizations: bosons feel the bare trap plus
    g_bf times the fermion density (normalized to N_f), then fermions feel
    the updated boson density; candidate potentials are damped with weight
    ``mixing``.  Converged when the successive max-norm potential change on
    the grid drops below ``tol``.
    """
    if not 0.0 < mixing <= 1.0:
        raise ValueError("mixing must lie in (0, 1]")
    op = operator if operator is not None else assemble(model)
    basis = model.basis
    xg = basis.grid if x is None else np.asarray(x, dtype=float)
    phi_x = basis.orbital_values(xg)
    phi_q2 = basis.node_orbitals(2)
    _, w2 = basis.rule(2)
    A_b = op._species_matrix("b").toarray()
    A_f = op._species_matrix("f").toarray()

    # the potential of each species is a linear image of the other species'
    # one-body density, so damping the orbital-pair matrix (entering the
    # solves) and the grid samples (the reported potential and the
    # convergence metric) with the same weights keeps them consistent
    Vmat_b = np.zeros((basis.num_orbitals,) * 2)
    Vmat_f = np.zeros((basis.num_orbitals,) * 2)
    grid_b = np.zeros_like(xg)
    grid_f = np.zeros_like(xg)
    psi_b = psi_f = None
    residuals: list[float] = []
    energy_history: list[float] = []
    converged = False
    for _ in range(max_iter):
        _, vb = scipy.linalg.eigh(A_b + one_body_operator(model.sector_b, Vmat_b).toarray())
        psi_b = vb[:, 0]
        D_b = transition_rdm1(model.sector_b, psi_b, psi_b)
        Vmat_f_new = mixing * _mean_field_matrix(model, D_b, phi_q2, w2) \
            + (1.0 - mixing) * Vmat_f
        grid_f_new = mixing * _mean_field_grid(model, D_b, phi_x) \
            + (1.0 - mixing) * grid_f

        _, vf = scipy.linalg.eigh(A_f + one_body_operator(model.sector_f, Vmat_f_new).toarray())
        psi_f = vf[:, 0]
        D_f = transition_rdm1(model.sector_f, psi_f, psi_f)
        Vmat_b_new = mixing * _mean_field_matrix(model, D_f, phi_q2, w2) \
            + (1.0 - mixing) * Vmat_b
        grid_b_new = mixing * _mean_field_grid(model, D_f, phi_x) \
            + (1.0 - mixing) * grid_b

        change = max(np.abs(grid_b_new - grid_b).max(), np.abs(grid_f_new - grid_f).max())
        Vmat_b, Vmat_f = Vmat_b_new, Vmat_f_new
        grid_b, grid_f = grid_b_new, grid_f_new
        residuals.append(float(change))
        # product-state energy of the current pair, logged per iteration
        gam_b_it = np.einsum("mn,mq,nq->q", D_b, phi_q2, phi_q2)
        gam_f_it = np.einsum("mn,mq,nq->q", D_f, phi_q2, phi_q2)
        energy_history.append(float(psi_b @ (A_b @ psi_b) + psi_f @ (A_f @ psi_f)
                                    + model.g_bf * np.dot(w2, gam_b_it * gam_f_it)))
        if change < tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"SMF did not converge within {max_iter} iterations "
            f"(last change {residuals[-1]:.3e})", residuals=residuals)

    # gauge: leading components positive, as for eigenstates
    for psi in (psi_b, psi_f):
        lead = np.argmax(np.abs(psi))
        if psi[lead] < 0:
            psi *= -1.0

    D_b = transition_rdm1(model.sector_b, psi_b, psi_b)
    D_f = transition_rdm1(model.sector_f, psi_f, psi_f)
    gam_b = np.einsum("mn,mq,nq->q", D_b, phi_q2, phi_q2)
    gam_f = np.einsum("mn,mq,nq->q", D_f, phi_q2, phi_q2)
    e_b = float(psi_b @ (A_b @ psi_b))
    e_f = float(psi_f @ (A_f @ psi_f))
    e_int = float(model.g_bf * np.dot(w2, gam_b * gam_f))
    energies = {"E_b": e_b, "E_f": e_f, "E_int": e_int, "E_total": e_b + e_f + e_int}
    return SMFResult(
        psi_b=psi_b, psi_f=psi_f,
        v_smf={"b": grid_b, "f": grid_f},
        v_smf_matrix={"b": Vmat_b, "f": Vmat_f},
        energies=energies,
        residuals=residuals,
        energy_history=energy_history,
        iterations=len(residuals),
        converged=converged,
    )


def smf_fixed_point_change(model: MixtureModel, result: SMFResult,
                           mixing: float = 0.5,
                           operator: MixtureOperator | None = None) -> float:
    """Max-norm potential change of one further damped iteration."""
    op = operator if operator is not None else assemble(model)
    basis = model.basis
    phi_x = basis.orbital_values()
    phi_q2 = basis.node_orbitals(2)
    _, w2 = basis.rule(2)
    A_b = op._species_matrix("b").toarray()
    A_f = op._species_matrix("f").toarray()
    Vmat_b = result.v_smf_matrix["b"]
    Vmat_f = result.v_smf_matrix["f"]

    _, vb = scipy.linalg.eigh(A_b + one_body_operator(model.sector_b, Vmat_b).toarray())
    D_b = transition_rdm1(model.sector_b, vb[:, 0], vb[:, 0])
    Vmat_f_new = mixing * _mean_field_matrix(model, D_b, phi_q2, w2) + (1 - mixing) * Vmat_f
    grid_f_new = mixing * _mean_field_grid(model, D_b, phi_x) \
        + (1 - mixing) * result.v_smf["f"]
    _, vf = scipy.linalg.eigh(A_f + one_body_operator(model.sector_f, Vmat_f_new).toarray())
    D_f = transition_rdm1(model.sector_f, vf[:, 0], vf[:, 0])
    grid_b_new = mixing * _mean_field_grid(model, D_f, phi_x) \
        + (1 - mixing) * result.v_smf["b"]
    gb = grid_b_new - result.v_smf["b"]
    gf = grid_f_new - result.v_smf["f"]
    return float(max(np.abs(gb).max(), np.abs(gf).max()))

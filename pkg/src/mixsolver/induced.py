"""Entanglement-induced potentials and interactions on the real-space grid.

All quantities are built from the one-body transition densities between
Schmidt vectors,

    gamma_ij(x) = sum_mn <psi_i| a+_m a_n |psi_j> phi_m(x) phi_n(x),

which are exact in orbital space; the grid only samples them.  Integrals
of gamma products are evaluated with the Gaussian-decay quadrature rules
matching their orbital content (two-orbital pairs per gamma), so the
overlap scalars and all orbital-space projections are quadrature-exact.

The potential and kernel acting on species sigma are assembled from the
transition densities of the *other* species (sigma-bar); the denominators
are the interspecies overlap scalars ttilde_1i.  Pairs whose ttilde falls
under a relative floor are dropped with a warning by default (they would
amplify numerical noise), or raise in strict mode.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import OrbitalBasis
from .fock import SpeciesSector, one_body_transition
from .hamiltonian import MixtureModel, MixtureOperator, assemble
from .schmidt import SchmidtDecomposition

log = logging.getLogger(__name__)

TTILDE_FLOOR_REL = 1e-12


class SmallDenominatorError(RuntimeError):
    """A kept Schmidt pair has |ttilde| below the stability floor."""

    def __init__(self, indices, floor):
        self.indices = list(indices)
        self.floor = floor
        super().__init__(
            f"ttilde below stability floor {floor:.3e} for Schmidt pairs {self.indices}")


def _other(species: str) -> str:
    return "f" if species == "b" else "b"


def _sector(model: MixtureModel, species: str) -> SpeciesSector:
    return model.sector_b if species == "b" else model.sector_f


def _schmidt_vectors(decomp: SchmidtDecomposition, species: str) -> np.ndarray:
    return decomp.vecs_b if species == "b" else decomp.vecs_f


def gamma_grid(decomp: SchmidtDecomposition, model: MixtureModel, species: str,
               i: int, j: int, basis: OrbitalBasis | None = None,
               x: np.ndarray | None = None) -> np.ndarray:
    """Transition density gamma_ij(x) of one species between Schmidt vectors."""
    if not (0 <= i < decomp.rank and 0 <= j < decomp.rank):
        raise IndexError(f"Schmidt indices ({i}, {j}) outside kept rank {decomp.rank}")
    basis = basis if basis is not None else model.basis
    vecs = _schmidt_vectors(decomp, species)
    D = one_body_transition(_sector(model, species), vecs[:, i], vecs[:, j])
    phi = basis.orbital_values(x)
    return np.einsum("mn,mx,nx->x", D, phi, phi)


class _InducedContext:
    """Shared per-decomposition data: D matrices, gamma samples, scalars."""

    def __init__(self, decomp: SchmidtDecomposition, model: MixtureModel,
                 operator: MixtureOperator | None = None,
                 x: np.ndarray | None = None):
        self.decomp = decomp
        self.model = model
        self.op = operator if operator is not None else assemble(model)
        self.basis = model.basis
        self.x = self.basis.grid if x is None else np.asarray(x, dtype=float)
        r = decomp.rank
        self.D: dict[str, list[np.ndarray]] = {}
        self.gamma_x: dict[str, np.ndarray] = {}
        self.gamma_q2: dict[str, np.ndarray] = {}
        self.gamma_q3: dict[str, np.ndarray] = {}
        phi_x = self.basis.orbital_values(self.x)
        phi_q2 = self.basis.node_orbitals(2)
        phi_q3 = self.basis.node_orbitals(3)
        for species in ("b", "f"):
            sector = _sector(model, species)
            vecs = _schmidt_vectors(decomp, species)
            mats = [one_body_transition(sector, vecs[:, 0], vecs[:, i]) for i in range(r)]
            self.D[species] = mats
            stack = np.stack(mats)
            self.gamma_x[species] = np.einsum("imn,mx,nx->ix", stack, phi_x, phi_x)
            self.gamma_q2[species] = np.einsum("imn,mx,nx->ix", stack, phi_q2, phi_q2)
            self.gamma_q3[species] = np.einsum("imn,mx,nx->ix", stack, phi_q3, phi_q3)
        _, w2 = self.basis.rule(2)
        self.ttilde = np.einsum("q,iq,iq->i", w2, self.gamma_q2["b"], self.gamma_q2["f"])
        # beta_i = <psi_1 | H_species | psi_i> with the full intraspecies part
        self.beta: dict[str, np.ndarray] = {}
        for species in ("b", "f"):
            vecs = _schmidt_vectors(decomp, species)
            mat = self.op._species_matrix(species)
            self.beta[species] = np.array([vecs[:, 0] @ (mat @ vecs[:, i]) for i in range(r)])

    def usable_terms(self, floor_rel: float, mode: str) -> tuple[list[int], list[int]]:
        """Split pair indices i >= 1 into used and dropped by the ttilde floor."""
        r = self.decomp.rank
        if r < 2:
            return [], []
        scale = np.abs(self.ttilde[1:]).max()
        floor = floor_rel * scale
        used = [i for i in range(1, r) if abs(self.ttilde[i]) >= floor]
        dropped = [i for i in range(1, r) if abs(self.ttilde[i]) < floor]
        if dropped:
            if mode == "raise":
                raise SmallDenominatorError(dropped, floor)
            log.warning("dropping Schmidt pairs %s: |ttilde| below floor %.3e",
                        dropped, floor)
        return used, dropped


@dataclass
class SpeciesInduced:
    """Everything induced on one species by entanglement with the other."""

    species: str
    x: np.ndarray
    v1: np.ndarray
    v_no: np.ndarray
    v_eff: np.ndarray
    half_x2: np.ndarray
    h_ind: np.ndarray                       # grid kernel, (nx, nx)
    kernel_terms: list[int]                 # Schmidt pair indices used
    kernel_coeffs: np.ndarray               # 2 g sqrt(lambda_i) / ttilde_i
    kernel_factors: np.ndarray              # gamma_bar_i on the grid, (nterms, nx)
    one_body_v1: np.ndarray                 # exact orbital projection of V1
    one_body_vno: np.ndarray                # exact orbital projection of Vno
    pair_factors: list[tuple[float, np.ndarray]]  # (c_i, A_i) with A_i = int phi phi gamma_bar_i
    contributions: list[dict] = field(default_factory=list)


@dataclass
class InducedQuantities:
    x: np.ndarray
    lambdas: np.ndarray
    ttilde: np.ndarray
    beta_b: np.ndarray
    beta_f: np.ndarray
    gamma_b: np.ndarray          # gamma_1i^b on the grid, (rank, nx)
    gamma_f: np.ndarray
    species: dict[str, SpeciesInduced]
    dropped: list[int]

    def for_species(self, species: str) -> SpeciesInduced:
        return self.species[species]


def compute_induced(decomp: SchmidtDecomposition, model: MixtureModel,
                    operator: MixtureOperator | None = None,
                    x: np.ndarray | None = None,
                    ttilde_floor_rel: float = TTILDE_FLOOR_REL,
                    on_small_ttilde: str = "drop") -> InducedQuantities:
    """Assemble all induced quantities for both species.

    on_small_ttilde: "drop" discards below-floor pairs with a logged
    warning (default); "raise" raises SmallDenominatorError naming them.
    """
    if on_small_ttilde not in ("drop", "raise"):
        raise ValueError("on_small_ttilde must be 'drop' or 'raise'")
    ctx = _InducedContext(decomp, model, operator, x)
    used, dropped = ctx.usable_terms(ttilde_floor_rel, on_small_ttilde)
    g = model.g_bf
    lam = decomp.lambdas
    xg = ctx.x
    half_x2 = 0.5 * xg * xg
    _, w2 = ctx.basis.rule(2)
    _, w3 = ctx.basis.rule(3)
    phi_q2 = ctx.basis.node_orbitals(2)
    phi_q3 = ctx.basis.node_orbitals(3)

    species_data = {}
    for species in ("b", "f"):
        bar = _other(species)
        gam_bar_x = ctx.gamma_x[bar]
        gam_bar_q2 = ctx.gamma_q2[bar]
        gam_bar_q3 = ctx.gamma_q3[bar]
        beta_bar = ctx.beta[bar]

        v1 = g * gam_bar_x[0]
        one_body_v1 = g * np.einsum("q,q,mq,nq->mn", w2, gam_bar_q2[0], phi_q2, phi_q2)

        v_no = np.zeros_like(xg)
        one_body_vno = np.zeros((ctx.basis.num_orbitals,) * 2)
        h_ind = np.zeros((xg.size, xg.size))
        coeffs = []
        factors = []
        pair_factors = []
        contributions = []
        for i in used:
            pref = g * math.sqrt(lam[i]) / ctx.ttilde[i]
            term = pref * (gam_bar_x[i] * gam_bar_x[i] + 2.0 * beta_bar[i] * gam_bar_x[i])
            v_no += term
            one_body_vno += pref * (
                np.einsum("q,q,mq,nq->mn", w3, gam_bar_q3[i] ** 2, phi_q3, phi_q3)
                + 2.0 * beta_bar[i] * np.einsum("q,q,mq,nq->mn", w2, gam_bar_q2[i],
                                                phi_q2, phi_q2))
            c = 2.0 * pref
            kernel_term = c * np.outer(gam_bar_x[i], gam_bar_x[i])
            h_ind += kernel_term
            coeffs.append(c)
            factors.append(gam_bar_x[i])
            A = np.einsum("q,q,mq,nq->mn", w2, gam_bar_q2[i], phi_q2, phi_q2)
            pair_factors.append((c, A))
            contributions.append({
                "i": i,
                "lambda": float(lam[i]),
                "ttilde": float(ctx.ttilde[i]),
                "max_vno_term": float(np.abs(term).max()),
                "max_hind_term": float(np.abs(kernel_term).max()),
            })

        species_data[species] = SpeciesInduced(
            species=species,
            x=xg,
            v1=v1,
            v_no=v_no,
            v_eff=half_x2 + v1 + v_no,
            half_x2=half_x2,
            h_ind=h_ind,
            kernel_terms=list(used),
            kernel_coeffs=np.array(coeffs),
            kernel_factors=(np.array(factors) if factors
                            else np.zeros((0, xg.size))),
            one_body_v1=one_body_v1,
            one_body_vno=one_body_vno,
            pair_factors=pair_factors,
            contributions=contributions,
        )

    return InducedQuantities(
        x=xg,
        lambdas=lam.copy(),
        ttilde=ctx.ttilde,
        beta_b=ctx.beta["b"],
        beta_f=ctx.beta["f"],
        gamma_b=ctx.gamma_x["b"],
        gamma_f=ctx.gamma_x["f"],
        species=species_data,
        dropped=dropped,
    )


def v1(decomp: SchmidtDecomposition, model: MixtureModel, species: str,
       x: np.ndarray | None = None) -> np.ndarray:
    """Dominant-pair induced potential g * gamma_11 of the other species."""
    bar = _other(species)
    basis = model.basis
    xg = basis.grid if x is None else x
    return model.g_bf * gamma_grid(decomp, model, bar, 0, 0, basis, xg)


def v_no(decomp: SchmidtDecomposition, model: MixtureModel, species: str,
         x: np.ndarray | None = None, ttilde_floor_rel: float = TTILDE_FLOOR_REL,
         on_small_ttilde: str = "drop") -> np.ndarray:
    """Beyond-dominant induced potential (normal-ordering and cross terms)."""
    out = compute_induced(decomp, model, x=x, ttilde_floor_rel=ttilde_floor_rel,
                          on_small_ttilde=on_small_ttilde)
    return out.species[species].v_no


def h_ind(decomp: SchmidtDecomposition, model: MixtureModel, species: str,
          x: np.ndarray | None = None, ttilde_floor_rel: float = TTILDE_FLOOR_REL,
          on_small_ttilde: str = "drop") -> tuple[np.ndarray, list[tuple[float, np.ndarray]]]:
    """Induced two-body kernel (grid sample) and its separable factors."""
    out = compute_induced(decomp, model, x=x, ttilde_floor_rel=ttilde_floor_rel,
                          on_small_ttilde=on_small_ttilde)
    sp = out.species[species]
    return sp.h_ind, sp.pair_factors


def v_eff(induced: InducedQuantities, species: str) -> np.ndarray:
    """Net confinement half x^2 + V1 + Vno for one species."""
    return induced.species[species].v_eff


def antidiagonal_cut(kernel: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Kernel along the relative coordinate at mean position zero.

    Returns (r, values) with r = x1 - x2 sampled at (x, -x); requires the
    symmetric grid the basis guarantees.
    """
    n = x.size
    vals = kernel[np.arange(n), n - 1 - np.arange(n)]
    return 2.0 * x, vals


def diagonal_cut(kernel: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Kernel along the mean position at zero relative distance."""
    n = x.size
    return x, kernel[np.arange(n), np.arange(n)]

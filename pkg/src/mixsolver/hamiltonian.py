"""Mixture Hamiltonian on the product Fock space.

The interspecies contact term is applied in factorized form through the
quadrature nodes: H_bf = g_bf * sum_t w_t n_b(x_t) (x) n_f(x_t), where
n_sigma(x_t) is the species density operator at node t.  With the rule
exact for four-orbital products this equals the exact contact-tensor
contraction while keeping the matvec cost at O(dim * Q) sparse products
instead of an O(M^4) tensor sweep.  Intraspecies contact terms use the
same node factorization after normal-ordering:
sum W_ijkl a+_i a+_j a_k a_l = sum_t w_t [n_t^2 - O(c_t)], with the
one-body correction c_t from the single contraction.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .basis import OrbitalBasis, single_particle_operators
from .fock import (SpeciesSector, Statistics, one_body_operator, transition_rdm1)
from .lanczos import ConvergenceError, lanczos_lowest

DEGENERACY_GAP = 1e-10
RESIDUAL_TOL = 1e-9


class CapacityError(RuntimeError):
    """Product dimension exceeds the configured cap."""


@dataclass(frozen=True)
class MixtureModel:
    """Trapped Bose-Fermi mixture with contact couplings (harmonic units)."""

    sector_b: SpeciesSector
    sector_f: SpeciesSector
    basis: OrbitalBasis
    g_bf: float
    g_bb: float = 0.0
    g_ff: float = 0.0
    dense_cutoff: int = 4000
    capacity: int = 2_000_000

    def __post_init__(self):
        if self.sector_b.statistics is not Statistics.BOSE:
            raise ValueError("sector_b must be bosonic")
        if self.sector_f.statistics is not Statistics.FERMI:
            raise ValueError("sector_f must be fermionic")
        M = self.basis.num_orbitals
        if self.sector_b.num_orbitals != M or self.sector_f.num_orbitals != M:
            raise ValueError("sector orbital counts must match the basis")

    @property
    def product_dim(self) -> int:
        return self.sector_b.dim * self.sector_f.dim


@dataclass
class MixtureEigenstate:
    """Eigenstate coefficients C[b-config, f-config] with energy bookkeeping."""

    coeffs: np.ndarray
    energy: float
    decomposition: dict[str, float]
    residual: float
    index: int
    degenerate: bool = False

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


def _intra_contact_matrix(sector: SpeciesSector, basis: OrbitalBasis, g: float) -> sp.csr_matrix:
    """Sparse (g/2) * integral psi+ psi+ psi psi on one species sector."""
    _, w = basis.rule(2)
    phi = basis.node_orbitals(2)
    dim = sector.dim
    M = basis.num_orbitals
    out = sp.csr_matrix((dim, dim))
    correction = np.zeros((M, M))
    for t in range(w.size):
        u = phi[:, t]
        density_t = one_body_operator(sector, np.outer(u, u))
        out = out + (0.5 * g * w[t]) * (density_t @ density_t)
        correction += w[t] * float(u @ u) * np.outer(u, u)
    out = out - one_body_operator(sector, 0.5 * g * correction)
    return out.tocsr()


class MixtureOperator:
    """Matvec-capable symmetric operator H = H_b + H_f + H_bf."""

    def __init__(self, model: MixtureModel):
        if model.product_dim > model.capacity:
            raise CapacityError(
                f"product dimension {model.product_dim} exceeds capacity {model.capacity}")
        self.model = model
        basis = model.basis
        ops = single_particle_operators(basis)
        self.h_single = ops.h
        self.kin_single = ops.kinetic
        self.trap_single = ops.trap
        self.one_body_b = one_body_operator(model.sector_b, ops.h)
        self.one_body_f = one_body_operator(model.sector_f, ops.h)
        self.intra_b = (_intra_contact_matrix(model.sector_b, basis, model.g_bb)
                        if model.g_bb != 0.0 else None)
        self.intra_f = (_intra_contact_matrix(model.sector_f, basis, model.g_ff)
                        if model.g_ff != 0.0 else None)
        _, w = basis.rule(2)
        phi = basis.node_orbitals(2)
        self.node_weights = model.g_bf * w
        self.node_b = [one_body_operator(model.sector_b, np.outer(phi[:, t], phi[:, t]))
                       for t in range(w.size)]
        self.node_f = [one_body_operator(model.sector_f, np.outer(phi[:, t], phi[:, t]))
                       for t in range(w.size)]
        self.dims = (model.sector_b.dim, model.sector_f.dim)

    @property
    def shape(self):
        d = self.dims[0] * self.dims[1]
        return (d, d)

    def species_apply(self, C: np.ndarray) -> np.ndarray:
        """H_b + H_f part (one-body plus intraspecies contact)."""
        out = self.one_body_b @ C + C @ self.one_body_f.T
        if self.intra_b is not None:
            out += self.intra_b @ C
        if self.intra_f is not None:
            out += C @ self.intra_f.T
        return out

    def interspecies_apply(self, C: np.ndarray) -> np.ndarray:
        out = np.zeros_like(C)
        if self.model.g_bf == 0.0:
            return out
        for t, wt in enumerate(self.node_weights):
            out += wt * (self.node_b[t] @ (C @ self.node_f[t].T))
        return out

    def apply(self, C: np.ndarray) -> np.ndarray:
        return self.species_apply(C) + self.interspecies_apply(C)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        db, df = self.dims
        return self.apply(v.reshape(db, df)).ravel()

    def dense(self) -> np.ndarray:
        db, df = self.dims
        d = db * df
        H = np.kron(self._species_matrix("b").toarray(), np.eye(df))
        H += np.kron(np.eye(db), self._species_matrix("f").toarray())
        if self.model.g_bf != 0.0:
            nb = np.stack([m.toarray().reshape(-1) for m in self.node_b])
            nf = np.stack([m.toarray().reshape(-1) for m in self.node_f])
            Hbf = (self.node_weights[:, None] * nb).T @ nf
            Hbf = Hbf.reshape(db, db, df, df).transpose(0, 2, 1, 3).reshape(d, d)
            H += Hbf
        return H

    def _species_matrix(self, species: str) -> sp.csr_matrix:
        if species == "b":
            out = self.one_body_b
            if self.intra_b is not None:
                out = out + self.intra_b
        else:
            out = self.one_body_f
            if self.intra_f is not None:
                out = out + self.intra_f
        return out

    def parity_signs(self) -> tuple[np.ndarray, np.ndarray]:
        return (self.model.sector_b.parity_signs(), self.model.sector_f.parity_signs())


def assemble(model: MixtureModel) -> MixtureOperator:
    """Assemble the symmetric mixture operator (matvec-capable)."""
    return MixtureOperator(model)


def energy_decomposition(model: MixtureModel, coeffs: np.ndarray,
                         operator: MixtureOperator | None = None) -> dict[str, float]:
    """Split <H> into kinetic, trap and interaction expectation values."""
    op = operator if operator is not None else assemble(model)
    C = coeffs
    D_b = transition_rdm1(model.sector_b, C, C)
    D_f = transition_rdm1(model.sector_f, C.T, C.T)
    T = op.kin_single
    X2 = op.trap_single
    parts = {
        "E_kin": float(np.sum(T * D_b) + np.sum(T * D_f)),
        "E_trap": float(np.sum(X2 * D_b) + np.sum(X2 * D_f)),
        "E_int_bf": float(np.sum(C * op.interspecies_apply(C))),
        "E_int_bb": (float(np.sum(C * (op.intra_b @ C))) if op.intra_b is not None else 0.0),
        "E_int_ff": (float(np.sum(C * (C @ op.intra_f.T))) if op.intra_f is not None else 0.0),
    }
    return parts


def _fix_sign(C: np.ndarray) -> np.ndarray:
    flat = np.argmax(np.abs(C))
    if C.flat[flat] < 0:
        return -C
    return C


def eigensolve(operator: MixtureOperator, k: int = 1, target="lowest",
               tol: float = 1e-10) -> list[MixtureEigenstate]:
    """Lowest eigenpairs of the mixture operator, ascending.

    ``target`` is "lowest" or an integer base index (0 = ground state); in
    the indexed form the returned list starts at that eigenstate.  If the
    last requested state sits inside a near-degenerate cluster
    (gap < 1e-10), the whole cluster is returned and flagged.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    base = 0 if target == "lowest" else int(target)
    if base < 0:
        raise ValueError("eigenstate index must be >= 0")
    model = operator.model
    dim = model.product_dim
    want = min(base + k + 3, dim)
    if base + k > dim:
        raise ValueError(f"requested states up to {base + k} of a dimension-{dim} space")

    if dim <= model.dense_cutoff:
        H = operator.dense()
        vals, vecs = scipy.linalg.eigh(H)
        vals, vecs = vals[:want], vecs[:, :want]
    else:
        vals, vecs, _ = lanczos_lowest(operator.matvec, dim, want, tol=tol)

    db, df = operator.dims
    # extend through any cluster that straddles the selection edge
    end = base + k
    while end < len(vals) and vals[end] - vals[end - 1] < DEGENERACY_GAP:
        end += 1
    states = []
    for idx in range(base, end):
        C = _fix_sign(vecs[:, idx].reshape(db, df).copy())
        C /= np.linalg.norm(C)
        resid = float(np.linalg.norm(operator.apply(C) - vals[idx] * C))
        if resid > RESIDUAL_TOL:
            raise ConvergenceError(
                f"eigenstate {idx} residual {resid:.2e} exceeds {RESIDUAL_TOL}",
                residuals=[resid])
        degenerate = False
        if idx > 0 and idx < len(vals) and vals[idx] - vals[idx - 1] < DEGENERACY_GAP:
            degenerate = True
        if idx + 1 < len(vals) and vals[idx + 1] - vals[idx] < DEGENERACY_GAP:
            degenerate = True
        decomp = energy_decomposition(model, C, operator)
        states.append(MixtureEigenstate(coeffs=C, energy=float(vals[idx]),
                                        decomposition=decomp, residual=resid,
                                        index=idx, degenerate=degenerate))
    return states


_CHECKPOINT_MAGIC = b"MIXSOLV1"


def save_eigenstates(path, model: MixtureModel, states: list[MixtureEigenstate]) -> None:
    """Binary checkpoint: versioned header plus little-endian float64 payload."""
    with open(path, "wb") as fh:
        fh.write(_CHECKPOINT_MAGIC)
        header = struct.pack(
            "<6i3d", model.sector_b.num_particles, model.sector_f.num_particles,
            model.basis.num_orbitals, model.sector_b.dim, model.sector_f.dim,
            len(states), model.g_bf, model.g_bb, model.g_ff)
        fh.write(header)
        for st in states:
            fh.write(struct.pack("<di?", st.energy, st.index, st.degenerate))
            fh.write(np.ascontiguousarray(st.coeffs, dtype="<f8").tobytes())


def load_eigenstates(path, model: MixtureModel) -> list[MixtureEigenstate]:
    """Read a checkpoint written by save_eigenstates, verifying the header."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_CHECKPOINT_MAGIC))
        if magic != _CHECKPOINT_MAGIC:
            raise ValueError(f"not a mixsolver checkpoint: {path}")
        nb, nf, M, db, df, count, g_bf, g_bb, g_ff = struct.unpack(
            "<6i3d", fh.read(struct.calcsize("<6i3d")))
        if (nb, nf, M) != (model.sector_b.num_particles, model.sector_f.num_particles,
                           model.basis.num_orbitals):
            raise ValueError("checkpoint particle/orbital numbers do not match the model")
        if (g_bf, g_bb, g_ff) != (model.g_bf, model.g_bb, model.g_ff):
            raise ValueError("checkpoint couplings do not match the model")
        if (db, df) != (model.sector_b.dim, model.sector_f.dim):
            raise ValueError("checkpoint sector dimensions do not match the model")
        states = []
        rec = struct.calcsize("<di?")
        for _ in range(count):
            energy, index, degenerate = struct.unpack("<di?", fh.read(rec))
            C = np.frombuffer(fh.read(8 * db * df), dtype="<f8").reshape(db, df).copy()
            decomp = energy_decomposition(model, C)
            states.append(MixtureEigenstate(coeffs=C, energy=energy, decomposition=decomp,
                                            residual=float("nan"), index=index,
                                            degenerate=degenerate))
    return states

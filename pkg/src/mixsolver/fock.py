"""Number-conserving Fock spaces for one species and bilinear operators.

A sector enumerates all occupation vectors for N particles in M orbitals
(bosonic or fermionic) in ascending lexicographic order and precomputes a
"move table": every nonzero matrix element of every bilinear a^dag_m a_n,
stored as flat arrays.  All one-body maps, transition matrices and
density-operator builders reduce to index arithmetic over that table.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np
import scipy.sparse as sp


class Statistics(Enum):
    BOSE = "bose"
    FERMI = "fermi"


class InfeasibleSectorError(ValueError):
    """Requested sector cannot exist (fermions with N > M)."""


class ShapeError(ValueError):
    """State dimension does not match the sector."""


def _bose_configs(N: int, M: int) -> np.ndarray:
    # weak compositions of N into M slots, ascending lexicographic order
    configs = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            configs.append(prefix + [remaining])
            return
        for head in range(remaining + 1):
            rec(prefix + [head], remaining - head, slots - 1)

    rec([], N, M)
    return np.array(configs, dtype=np.int8)


def _fermi_configs(N: int, M: int) -> np.ndarray:
    import itertools
    rows = []
    for occ in itertools.combinations(range(M), N):
        c = [0] * M
        for o in occ:
            c[o] = 1
        rows.append(c)
    rows.sort()
    return np.array(rows, dtype=np.int8)


class SpeciesSector:
    """Fock space of one species at fixed particle number.

    Attributes
    ----------
    statistics : Statistics
    num_particles, num_orbitals : int
    configs : (dim, M) int8 array of occupation vectors, lexicographic.
    """

    def __init__(self, statistics: Statistics, num_particles: int, num_orbitals: int):
        if num_particles < 0 or num_orbitals < 1:
            raise ValueError("need num_particles >= 0 and num_orbitals >= 1")
        if statistics is Statistics.FERMI and num_particles > num_orbitals:
            raise InfeasibleSectorError(
                f"{num_particles} fermions do not fit in {num_orbitals} orbitals")
        self.statistics = statistics
        self.num_particles = int(num_particles)
        self.num_orbitals = int(num_orbitals)
        if statistics is Statistics.BOSE:
            self.configs = _bose_configs(num_particles, num_orbitals)
        else:
            self.configs = _fermi_configs(num_particles, num_orbitals)
        self._index = {c.tobytes(): i for i, c in enumerate(self.configs)}
        self._moves: tuple[np.ndarray, ...] | None = None

    @property
    def dim(self) -> int:
        return self.configs.shape[0]

    def index_of(self, config) -> int:
        key = np.asarray(config, dtype=np.int8).tobytes()
        return self._index[key]

    def expected_dim(self) -> int:
        N, M = self.num_particles, self.num_orbitals
        if self.statistics is Statistics.FERMI:
            return math.comb(M, N)
        return math.comb(N + M - 1, N)

    def moves(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(src, dst, m, n, amp) arrays covering a^dag_m a_n for all m, n.

        amp carries the bosonic sqrt factors or the fermionic sign from the
        orbital-ordering convention (parity of occupied orbitals strictly
        between m and n).
        """
        if self._moves is None:
            self._moves = self._build_moves()
        return self._moves

    def _build_moves(self):
        fermi = self.statistics is Statistics.FERMI
        M = self.num_orbitals
        src, dst, ms, ns, amp = [], [], [], [], []
        for i, c in enumerate(self.configs):
            occupied = np.flatnonzero(c)
            for n in occupied:
                cn = int(c[n])
                for m in range(M):
                    if m == n:
                        src.append(i); dst.append(i); ms.append(m); ns.append(n)
                        amp.append(float(cn))
                        continue
                    if fermi and c[m]:
                        continue
                    moved = c.copy()
                    moved[n] -= 1
                    moved[m] += 1
                    j = self._index[moved.tobytes()]
                    if fermi:
                        lo, hi = (m, n) if m < n else (n, m)
                        a = -1.0 if int(c[lo + 1:hi].sum()) % 2 else 1.0
                    else:
                        a = math.sqrt(cn * (int(c[m]) + 1))
                    src.append(i); dst.append(j); ms.append(m); ns.append(n)
                    amp.append(a)
        return (np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64),
                np.asarray(ms, dtype=np.int64), np.asarray(ns, dtype=np.int64),
                np.asarray(amp))

    def parity_signs(self) -> np.ndarray:
        """Per-config parity eigenvalue: (-1)^(sum of n * occ_n)."""
        n = np.arange(self.num_orbitals)
        odd = (self.configs.astype(np.int64) * n).sum(axis=1) % 2
        return np.where(odd == 1, -1.0, 1.0)


def enumerate_sector(statistics: Statistics, num_particles: int,
                     num_orbitals: int) -> SpeciesSector:
    """Build the sector with canonical ordering and working reverse map."""
    return SpeciesSector(statistics, num_particles, num_orbitals)


def _check_state(sector: SpeciesSector, state: np.ndarray, name: str = "state") -> np.ndarray:
    state = np.asarray(state, dtype=float)
    if state.shape[0] != sector.dim:
        raise ShapeError(f"{name} has dimension {state.shape[0]}, sector has {sector.dim}")
    return state


def apply_bilinear(sector: SpeciesSector, m: int, n: int, state) -> np.ndarray:
    """(a^dag_m a_n) |state>."""
    M = sector.num_orbitals
    if not (0 <= m < M and 0 <= n < M):
        raise IndexError(f"orbital indices ({m}, {n}) out of range [0, {M})")
    state = _check_state(sector, state)
    src, dst, ms, ns, amp = sector.moves()
    pick = (ms == m) & (ns == n)
    out = np.zeros_like(state)
    np.add.at(out, dst[pick], amp[pick] * state[src[pick]])
    return out


def one_body_transition(sector: SpeciesSector, bra, ket) -> np.ndarray:
    """D_mn = <bra| a^dag_m a_n |ket> for 1D states."""
    bra = _check_state(sector, bra, "bra")
    ket = _check_state(sector, ket, "ket")
    return transition_rdm1(sector, bra, ket)


def transition_rdm1(sector: SpeciesSector, bra, ket) -> np.ndarray:
    """One-body transition matrix, batch-summed over trailing columns.

    ``bra`` and ``ket`` may be (dim,) vectors or (dim, B) matrices; the
    batched form sums over columns, which is exactly the partial trace
    needed for species-reduced densities of a mixture tensor.
    """
    bra = np.asarray(bra, dtype=float)
    ket = np.asarray(ket, dtype=float)
    if bra.shape != ket.shape or bra.shape[0] != sector.dim:
        raise ShapeError("bra/ket shape mismatch with sector")
    M = sector.num_orbitals
    src, dst, ms, ns, amp = sector.moves()
    if bra.ndim == 1:
        w = amp * bra[dst] * ket[src]
    else:
        w = amp * np.einsum("ib,ib->i", bra[dst, :], ket[src, :])
    D = np.bincount(ms * M + ns, weights=w, minlength=M * M)
    return D.reshape(M, M)


def one_body_operator(sector: SpeciesSector, coeff: np.ndarray) -> sp.csr_matrix:
    """Sparse matrix of sum_mn coeff[m, n] a^dag_m a_n on the sector."""
    coeff = np.asarray(coeff, dtype=float)
    M = sector.num_orbitals
    if coeff.shape != (M, M):
        raise ShapeError(f"coefficient matrix must be ({M}, {M})")
    src, dst, ms, ns, amp = sector.moves()
    vals = amp * coeff[ms, ns]
    return sp.coo_matrix((vals, (dst, src)), shape=(sector.dim, sector.dim)).tocsr()


def bilinear_map(sector: SpeciesSector, states) -> np.ndarray:
    """Phi[m*M + n] = (a^dag_m a_n) |states>, for all pairs at once.

    ``states`` may be (dim,) or (dim, B); the result has shape
    (M*M, dim, B).  Used to assemble two-body densities as inner products
    of bilinear-excited states.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    if states.shape[0] != sector.dim:
        raise ShapeError("states dimension mismatch with sector")
    M = sector.num_orbitals
    src, dst, ms, ns, amp = sector.moves()
    out = np.zeros((M * M, sector.dim, states.shape[1]))
    np.add.at(out, (ms * M + ns, dst), amp[:, None] * states[src, :])
    return out

"""Thick-restart Lanczos with full reorthogonalization.

Targets the lowest eigenpairs of a real symmetric operator given only its
matrix-vector product.  Every new Krylov vector is reorthogonalized against
the whole retained basis (twice), so no ghost eigenvalues appear; when the
basis hits its size cap the iteration restarts from the best current Ritz
vectors.  The start vector is fixed (normalized all-ones) so repeated runs
are bit-identical.
"""

from __future__ import annotations

import numpy as np


class ConvergenceError(RuntimeError):
    """Eigensolver failed to converge; carries the residuals seen last."""

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


def _deterministic_start(dim: int) -> np.ndarray:
    return np.full(dim, 1.0 / np.sqrt(dim))


def lanczos_lowest(matvec, dim: int, k: int, *, tol: float = 1e-10,
                   max_krylov: int | None = None, max_restarts: int = 60,
                   start: np.ndarray | None = None):
    """Lowest k eigenpairs of a symmetric operator.

    Returns (values, vectors, residuals) with values ascending, vectors in
    columns, and residuals the exactly computed ||H v - theta v||.

    Raises ConvergenceError if the residual target is not met within the
    restart budget.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > dim:
        raise ValueError(f"cannot request {k} eigenpairs of a dimension-{dim} operator")
    if max_krylov is None:
        max_krylov = min(dim, max(6 * k + 60, 200))
    max_krylov = min(max(max_krylov, k + 2), dim)
    keep = min(max(2 * k + 8, 24), max_krylov - 1) if max_krylov > k + 1 else k

    V = np.empty((dim, max_krylov))
    W = np.empty((dim, max_krylov))          # W[:, j] = H V[:, j]
    S = np.zeros((max_krylov, max_krylov))   # S = V^T H V

    v = _deterministic_start(dim) if start is None else np.asarray(start, dtype=float)
    v = v / np.linalg.norm(v)
    V[:, 0] = v
    nbasis = 0          # filled columns
    inject_ptr = 0      # next unit vector to try on breakdown

    def ritz(m):
        theta, Y = np.linalg.eigh(0.5 * (S[:m, :m] + S[:m, :m].T))
        return theta, Y

    def residual_norms(m, theta, Y, count):
        X = V[:, :m] @ Y[:, :count]
        R = W[:, :m] @ Y[:, :count] - X * theta[:count]
        return np.linalg.norm(R, axis=0), X

    last_resid = None
    for _restart in range(max_restarts):
        while nbasis < max_krylov:
            j = nbasis
            w = matvec(V[:, j])
            W[:, j] = w
            coeffs = V[:, :j + 1].T @ w
            S[:j + 1, j] = coeffs
            S[j, :j + 1] = coeffs
            w = w - V[:, :j + 1] @ coeffs
            w = w - V[:, :j + 1] @ (V[:, :j + 1].T @ w)   # second pass
            nbasis = j + 1
            beta = np.linalg.norm(w)
            if beta < 1e-13:
                # invariant subspace: inject a fresh deterministic direction
                w = None
                while inject_ptr < dim:
                    cand = np.zeros(dim)
                    cand[inject_ptr] = 1.0
                    inject_ptr += 1
                    cand -= V[:, :nbasis] @ (V[:, :nbasis].T @ cand)
                    cand -= V[:, :nbasis] @ (V[:, :nbasis].T @ cand)
                    norm = np.linalg.norm(cand)
                    if norm > 1e-8:
                        w = cand / norm
                        break
                if w is None or nbasis >= dim:
                    theta, Y = ritz(nbasis)
                    count = min(k, nbasis)
                    resid, X = residual_norms(nbasis, theta, Y, count)
                    if count == k and np.all(resid < tol):
                        return theta[:k], X, resid
                    raise ConvergenceError(
                        "Krylov space exhausted before convergence", residuals=resid)
                if nbasis < max_krylov:
                    V[:, nbasis] = w
                continue
            if nbasis < max_krylov:
                V[:, nbasis] = w / beta
            if nbasis >= k + 1 and (nbasis % 10 == 0 or nbasis == max_krylov):
                theta, Y = ritz(nbasis)
                resid, X = residual_norms(nbasis, theta, Y, k)
                last_resid = resid
                if np.all(resid < tol):
                    return theta[:k], X, resid
        # thick restart: compress onto the lowest `keep` Ritz vectors and
        # expand next along the residual of the lowest pair; the projected
        # matrix stays exact because every new column is recomputed as
        # V^T (H v), so any direction orthogonal to the kept block is valid.
        theta, Y = ritz(nbasis)
        l = min(keep, nbasis - 1)
        Vk = V[:, :nbasis] @ Y[:, :l]
        Wk = W[:, :nbasis] @ Y[:, :l]
        w = Wk[:, 0] - theta[0] * Vk[:, 0]
        w -= Vk @ (Vk.T @ w)
        norm = np.linalg.norm(w)
        if norm < 1e-13:
            # lowest Ritz converged to machine level; use the next residual
            for col in range(1, l):
                w = Wk[:, col] - theta[col] * Vk[:, col]
                w -= Vk @ (Vk.T @ w)
                norm = np.linalg.norm(w)
                if norm > 1e-13:
                    break
        if norm < 1e-13:
            cand = None
            while inject_ptr < dim:
                trial = np.zeros(dim)
                trial[inject_ptr] = 1.0
                inject_ptr += 1
                trial -= Vk @ (Vk.T @ trial)
                norm = np.linalg.norm(trial)
                if norm > 1e-8:
                    cand = trial
                    break
            if cand is None:
                resid, X = residual_norms(nbasis, theta, Y, k)
                if np.all(resid < tol):
                    return theta[:k], X, resid
                raise ConvergenceError("restart stagnated", residuals=resid)
            w = cand
        V[:, :l] = Vk
        W[:, :l] = Wk
        S[:, :] = 0.0
        S[:l, :l] = np.diag(theta[:l])
        V[:, l] = w / norm
        # border couplings between the compressed block and the new vector
        border = W[:, :l].T @ V[:, l]
        S[:l, l] = border
        S[l, :l] = border
        nbasis = l

    raise ConvergenceError(
        f"no convergence after {max_restarts} restarts "
        f"(last residuals: {last_resid})", residuals=last_resid)

"""Convolution, involution and reduced-norm estimates for sampled kernels."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .quantize import KernelElement, QuantizationError

RAYLEIGH_TOL = 1e-10
MAX_ITER = 10_000
DENSE_LIMIT = 2048


@dataclass(frozen=True)
class OperatorMatrix:
    """Left regular representation on the t-fiber over ``unit``.

    ``matrix = W^{1/2} K W^{1/2}`` with ``K`` the raw kernel; the raw kernel is
    recovered as ``W^{-1/2} matrix W^{-1/2}``.
    """

    unit: float
    matrix: sparse.csr_matrix
    weights: np.ndarray
    core: np.ndarray

    def raw(self) -> sparse.csr_matrix:
        r = sparse.diags(1.0 / np.sqrt(self.weights))
        return (r @ self.matrix @ r).tocsr()

    @property
    def shape(self):
        return self.matrix.shape


def _quantum(a: KernelElement):
    if a.classical:
        raise QuantizationError("operation needs hbar > 0")


def convolve(a: KernelElement, b: KernelElement) -> KernelElement:
    """(a * b)(gamma) = int a(gamma gamma_1) b(gamma_1^{-1}) dmu, as K_a W K_b per unit.

    Products are exact for arrows whose intermediate points stay inside the
    sampled window; the affine group's core window is chosen so this holds
    on the rows and columns that enter norms.
    """
    _quantum(a)
    a._check(b)
    if a.sign != b.sign:
        raise QuantizationError("kernels use different sign conventions")
    mats = []
    for K, L, w in zip(a.matrices, b.matrices, a.disc.weights):
        mats.append((K @ sparse.diags(w) @ L).tocsr())
    return replace(a, matrices=tuple(mats), label=f"{a.label}*{b.label}",
                   trunc_mass=a.trunc_mass + b.trunc_mass, selfadjoint=False)


def involute(a: KernelElement) -> KernelElement:
    """a*(gamma) = conj a(gamma^{-1}); on each fiber the conjugate transpose."""
    _quantum(a)
    mats = tuple(K.conj().T.tocsr() for K in a.matrices)
    return replace(a, matrices=mats, label=f"{a.label}^*")


def commutator(a: KernelElement, b: KernelElement) -> KernelElement:
    """a*b - b*a, both products formed independently."""
    return convolve(a, b) - convolve(b, a)


def represent(a: KernelElement, u: int = 0) -> OperatorMatrix:
    _quantum(a)
    w = a.disc.weights[u]
    r = sparse.diags(np.sqrt(w))
    return OperatorMatrix(float(a.disc.units[u]), (r @ a.matrices[u] @ r).tocsr(), w, a.disc.core[u])


def _compress(op: OperatorMatrix) -> sparse.csr_matrix:
    """Restrict to core samples, then drop rows/columns that are identically zero."""
    M = op.matrix
    if not np.all(op.core):
        idx = np.flatnonzero(op.core)
        M = M[idx][:, idx]
    M = M.tocsr()
    M.eliminate_zeros()
    rows = np.flatnonzero(np.diff(M.indptr))
    cols = np.unique(M.indices)
    if len(rows) == 0:
        return sparse.csr_matrix((0, 0))
    return M[rows][:, cols].tocsr()


def dense_norm(M) -> float:
    M = M.toarray() if sparse.issparse(M) else np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def power_norm(M, seed: int = 0, tol: float = RAYLEIGH_TOL, max_iter: int = MAX_ITER):
    """Largest singular value by power iteration on M^H M.

    Stops once the Rayleigh quotient changes by less than ``tol`` (relative).
    Returns (sigma, iterations, converged).
    """
    m, n = M.shape
    if m == 0 or n == 0 or (sparse.issparse(M) and M.nnz == 0):
        return 0.0, 0, True
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    MH = M.conj().T.tocsr() if sparse.issparse(M) else M.conj().T
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = MH @ (M @ v)
        new = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0, it, True
        v = w / nw
        if it > 1 and abs(new - lam) <= tol * abs(new):
            return float(np.sqrt(max(new, 0.0))), it, True
        lam = new
    return float(np.sqrt(max(lam, 0.0))), max_iter, False


def operator_norm(M, seed: int = 0, method: str = "power") -> float:
    """Spectral norm of a sampled representation.

    ``power``: power iteration, falling back to a dense SVD (dimension up to
    2048) or ARPACK when it fails to settle within the iteration cap.
    ``dense``: always a dense SVD.
    """
    if method == "dense":
        return dense_norm(M)
    if method != "power":
        raise ValueError(f"unknown norm method {method!r}")
    sigma, _, ok = power_norm(M, seed)
    if ok:
        return sigma
    if max(M.shape) <= DENSE_LIMIT:
        return dense_norm(M)
    s = splinalg.svds(sparse.csr_matrix(M), k=1, return_singular_vectors=False, tol=1e-12,
                      random_state=seed)
    return float(s[0])


def reduced_norm(a: KernelElement, seed: int = 0, method: str = "power",
                 units: Optional[list] = None) -> float:
    """max over sampled units of the largest singular value; sup |f| at hbar = 0."""
    if a.classical:
        return float(np.max(np.abs(a.values), initial=0.0))
    idx = range(len(a.matrices)) if units is None else units
    return max(operator_norm(_compress(represent(a, u)), seed, method) for u in idx)

"""Direct solution of the bordered saddle-point system.

The global unknown ordering is [U_R; U_L; P; lambda].  The momentum rows
read ``A U - G P = F`` with G storing b(v, q), so P is the physical pressure;
the continuity rows carry ``-G^T U`` to keep the matrix symmetric, and the
last row/column enforces sum_T |T| P_T = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .assembly import BlockSystem

RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


@dataclass
class Solution:
    U_L: np.ndarray
    U_R: np.ndarray
    P: np.ndarray
    multiplier: float
    scheme: str
    residual: float

    @property
    def velocity(self) -> np.ndarray:
        return np.concatenate([self.U_R, self.U_L])


def bordered_matrix(diag_blocks, upper_blocks, c) -> sp.csr_matrix:
    """Symmetric matrix from diagonal blocks, strictly upper blocks and a border.

    ``upper_blocks`` maps (i, j), i < j, to the block in row i, column j.
    The border vector ``c`` couples the last diagonal block to one extra
    unknown.  Symmetry is exact: the lower part is the transpose of the upper.
    """
    sizes = [b.shape[0] for b in diag_blocks] + [1]
    offs = np.concatenate([[0], np.cumsum(sizes)])
    n = int(offs[-1])
    border = sp.coo_matrix((np.asarray(c, dtype=float),
                            (np.arange(len(c)), np.zeros(len(c), dtype=int))),
                           shape=(len(c), 1))
    upper = dict(upper_blocks)
    upper[(len(diag_blocks) - 1, len(diag_blocks))] = border

    def place(block, i, j):
        b = sp.coo_matrix(block)
        return sp.coo_matrix((b.data, (b.row + offs[i], b.col + offs[j])), shape=(n, n))

    U = sp.csr_matrix((n, n))
    for (i, j), block in upper.items():
        if i >= j:
            raise ValueError("upper blocks must satisfy i < j")
        U = U + place(block, i, j)
    D = sp.csr_matrix((n, n))
    for i, block in enumerate(diag_blocks):
        if block.shape[0] != block.shape[1]:
            raise ValueError(f"diagonal block {i} is not square: {block.shape}")
        if block.nnz:
            b = sp.csr_matrix(block)
            D = D + place(0.5 * (b + b.T), i, i)
    K = (D + U + U.T).tocsr()
    K.sum_duplicates()
    K.sort_indices()
    return K


def to_global(system: BlockSystem):
    """Global symmetric matrix and right-hand side in the order [U_R; U_L; P; lambda]."""
    nR, n1, nP = system.sizes
    checks = {
        "A_RL": (system.A_RL.shape, (nR, n1)),
        "G_L": (system.G_L.shape, (n1, nP)),
        "G_R": (system.G_R.shape, (nR, nP)),
        "F_L": (system.F_L.shape, (n1,)),
        "F_R": (system.F_R.shape, (nR,)),
        "c": (np.shape(system.c), (nP,)),
    }
    for name, (got, want) in checks.items():
        if got != want:
            raise ValueError(f"block {name} has shape {got}, expected {want}")
    K = bordered_matrix(
        [system.A_RR, system.A_LL, sp.csr_matrix((nP, nP))],
        {(0, 1): system.A_RL, (0, 2): -system.G_R, (1, 2): -system.G_L},
        system.c)
    rhs = np.concatenate([system.F_R, system.F_L, np.zeros(nP + 1)])
    return K, rhs


def _equilibrate(K: sp.csr_matrix) -> np.ndarray:
    """Symmetric diagonal scaling from row maxima, a few Ruiz sweeps."""
    s = np.ones(K.shape[0])
    A = K.tocsr(copy=True)
    for _ in range(3):
        r = abs(A).max(axis=1).toarray().ravel()
        r[r == 0] = 1.0
        d = 1 / np.sqrt(r)
        A = sp.diags(d) @ A @ sp.diags(d)
        s *= d
    return s


class Factorization:
    """Sparse LU of a symmetrically equilibrated matrix; reusable for many solves."""

    def __init__(self, K):
        self.K = sp.csc_matrix(K)
        self.scale = _equilibrate(self.K)
        S = sp.diags(self.scale)
        try:
            self._lu = splu((S @ self.K @ S).tocsc())
        except RuntimeError as exc:
            raise SolverError(f"factorization failed: {exc}", float("inf")) from None

    def solve(self, rhs) -> np.ndarray:
        return self.scale * self._lu.solve(self.scale * np.asarray(rhs, dtype=float))


def solve_linear(K, rhs, refine: bool = True):
    """Solve K x = rhs by sparse LU on the equilibrated matrix.

    Returns (x, relative residual).  Raises SolverError if the factorization
    breaks down or the residual exceeds RESIDUAL_TOL.
    """
    rhs = np.asarray(rhs, dtype=float)
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0:
        return np.zeros_like(rhs), 0.0
    fact = Factorization(K)
    x = fact.solve(rhs)
    if refine:
        x = x + fact.solve(rhs - fact.K @ x)
    res = float(np.linalg.norm(rhs - fact.K @ x) / bnorm)
    if not np.isfinite(res) or res > RESIDUAL_TOL:
        raise SolverError("direct solve did not reach the residual tolerance", res)
    return x, res


def split(x, sizes, scheme: str, residual: float) -> Solution:
    nR, n1, nP = sizes
    return Solution(U_L=x[nR:nR + n1], U_R=x[:nR], P=x[nR + n1:nR + n1 + nP],
                    multiplier=float(x[-1]), scheme=scheme, residual=residual)


def solve(K, rhs, sizes, scheme: str = "full") -> Solution:
    x, res = solve_linear(K, rhs)
    return split(x, sizes, scheme, res)


def solve_system(system: BlockSystem) -> Solution:
    K, rhs = to_global(system)
    return solve(K, rhs, system.sizes, system.scheme)


def export_coo(K, path) -> None:
    """Write a sparse matrix as 0-based ``row col value`` lines."""
    A = sp.coo_matrix(K)
    order = np.lexsort((A.col, A.row))
    with open(path, "w") as fh:
        for i, j, v in zip(A.row[order], A.col[order], A.data[order]):
            fh.write(f"{i} {j} {float(v)!r}\n")

"""Static condensation of the RT0 unknowns in the diagonally perturbed scheme.

With D_RR diagonal, the RT0 rows ``D_RR U_R + A_RL U_L - G_R P = F_R`` give
U_R edge by edge, and substituting leaves a stabilized P1c-P0 system

    [ A_hat    -G_hat ] [U_L]   [ F_L - A_RL^T D^-1 F_R ]
    [ -G_hat^T  C     ] [ P ] = [ G_R^T D^-1 F_R        ]

with A_hat = A_LL - A_RL^T D^-1 A_RL, G_hat = G_L - A_RL^T D^-1 G_R and the
negative semidefinite pressure block C = -G_R^T D^-1 G_R.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .assembly import BlockSystem
from .solver import (RESIDUAL_TOL, Factorization, Solution, SolverError, bordered_matrix,
                     split, to_global)


@dataclass
class CondensedSystem:
    A_hat: sp.csr_matrix
    G_hat: sp.csr_matrix
    C: sp.csr_matrix
    rhs_L: np.ndarray
    rhs_P: np.ndarray   # -G_R^T D^-1 F_R
    c: np.ndarray
    D_RR: np.ndarray    # diagonal entries
    A_RL: sp.csr_matrix
    G_R: sp.csr_matrix
    F_R: np.ndarray

    @property
    def size(self) -> int:
        return self.A_hat.shape[0] + self.C.shape[0] + 1


def diagonal_entries(D) -> np.ndarray:
    """Diagonal of D, insisting that D has no off-diagonal entries."""
    D = sp.coo_matrix(D)
    off = D.row != D.col
    if np.any(D.data[off] != 0):
        raise ValueError("D_RR has off-diagonal entries; condensation needs a diagonal block")
    return D.diagonal()


def condense(system: BlockSystem) -> CondensedSystem:
    d = diagonal_entries(system.A_RR)
    if np.any(d == 0):
        raise ValueError(f"D_RR has {np.count_nonzero(d == 0)} zero diagonal entries")
    Dinv = sp.diags(1.0 / d)
    ARL, GR = system.A_RL, system.G_R
    A_hat = (system.A_LL - ARL.T @ Dinv @ ARL).tocsr()
    A_hat = 0.5 * (A_hat + A_hat.T)
    G_hat = (system.G_L - ARL.T @ Dinv @ GR).tocsr()
    C = (-(GR.T @ Dinv @ GR)).tocsr()
    C = 0.5 * (C + C.T)
    DF = system.F_R / d
    return CondensedSystem(A_hat.tocsr(), G_hat, C.tocsr(),
                           system.F_L - ARL.T @ DF, -(GR.T @ DF),
                           np.asarray(system.c, dtype=float), d, ARL, GR,
                           np.asarray(system.F_R, dtype=float))


def condensed_global(cs: CondensedSystem):
    """Bordered condensed matrix in the order [U_L; P; lambda] and its right-hand side."""
    K = bordered_matrix([cs.A_hat, cs.C], {(0, 1): -cs.G_hat}, cs.c)
    rhs = np.concatenate([cs.rhs_L, -cs.rhs_P, [0.0]])
    return K, rhs


def recover_rt0(cs: CondensedSystem, U_L, P) -> np.ndarray:
    """Edge-local recovery U_R = D_RR^-1 (F_R - A_RL U_L + G_R P)."""
    return (cs.F_R - cs.A_RL @ np.asarray(U_L) + cs.G_R @ np.asarray(P)) / cs.D_RR


def _condensed_step(cs: CondensedSystem, fact: Factorization, r_R, r_L, r_P, r_lam):
    """Solve the perturbed system with right-hand side (r_R, r_L, r_P, r_lam) by condensation."""
    DR = r_R / cs.D_RR
    rhs = np.concatenate([r_L - cs.A_RL.T @ DR, r_P + cs.G_R.T @ DR, [r_lam]])
    x = fact.solve(rhs)
    n1, nP = cs.A_hat.shape[0], cs.C.shape[0]
    U_L, P = x[:n1], x[n1:n1 + nP]
    U_R = (r_R - cs.A_RL @ U_L + cs.G_R @ P) / cs.D_RR
    return np.concatenate([U_R, U_L, P, x[-1:]])


def solve_condensed(system: BlockSystem) -> Solution:
    """Solve the perturbed scheme through the condensed P1c-P0 system.

    One refinement step on the full perturbed system follows, reusing the
    condensed factorization; it removes the cancellation error that the
    1/nu-scaled pressure block leaves in the discrete divergence.
    """
    if system.scheme != "perturbed":
        raise ValueError(f"condensation applies to the perturbed scheme, got {system.scheme!r}")
    nR, n1, nP = system.sizes
    Kf, bf = to_global(system)
    bnorm = np.linalg.norm(bf)
    if bnorm == 0:
        return Solution(np.zeros(n1), np.zeros(nR), np.zeros(nP), 0.0, "condensed", 0.0)
    cs = condense(system)
    K, _ = condensed_global(cs)
    fact = Factorization(K)

    def step(r):
        return _condensed_step(cs, fact, r[:nR], r[nR:nR + n1],
                               r[nR + n1:nR + n1 + nP], r[-1])

    x = step(bf)
    x = x + step(bf - Kf @ x)
    res = float(np.linalg.norm(bf - Kf @ x) / bnorm)
    if not np.isfinite(res) or res > RESIDUAL_TOL:
        raise SolverError("condensed solve does not satisfy the perturbed system", res)
    return split(x, (nR, n1, nP), "condensed", res)

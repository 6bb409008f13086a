"""Quantum spin-S chain with the classically matched coupling.

    H = -sum_i (J Sx_i Sx_{i+1} + 2J Sy_i Sy_{i+1}) + h sum_i (Sx_i + Sy_i),

with J = Jt / sqrt(S(S+1)). Rescaling the operators to unit length shows that
Jt is the coupling seen by the classical unit-spin chain, so quantum and
classical runs at equal Jt are directly comparable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .operators import SpinOperators, spin_operators
from .sector import MAX_SECTOR_DIM, MomentumSectorBasis, momentum_sector


def internal_coupling(Jt: float, S) -> float:
    S = float(S)
    return Jt / np.sqrt(S * (S + 1))


def site_operator(op: np.ndarray, i: int, L: int) -> sp.csr_matrix:
    """op acting on site i (0-based), identity elsewhere."""
    d = op.shape[0]
    return sp.kron(sp.kron(sp.identity(d ** i), sp.csr_matrix(op)), sp.identity(d ** (L - i - 1)), format="csr")


def full_hamiltonian(S, L: int, Jt: float, h: float = 1.0) -> sp.csr_matrix:
    """Sparse Hamiltonian in the product basis (periodic chain)."""
    ops = spin_operators(S)
    J = internal_coupling(Jt, ops.S)
    Sx = [site_operator(ops.Sx, i, L) for i in range(L)]
    Sy = [site_operator(ops.Sy, i, L) for i in range(L)]
    H = sp.csr_matrix((ops.dim ** L,) * 2, dtype=complex)
    bonds = [(i, (i + 1) % L) for i in range(L)]  # L = 2 counts its bond twice, as the classical sum does
    for i, j in bonds:
        H = H - J * (Sx[i] @ Sx[j]) - 2 * J * (Sy[i] @ Sy[j])
    for i in range(L):
        H = H + h * (Sx[i] + Sy[i])
    return H.tocsr()


def total_operator(op: np.ndarray, L: int) -> sp.csr_matrix:
    return sum(site_operator(op, i, L) for i in range(L)).tocsr()


@dataclass
class SectorHamiltonian:
    S: float
    L: int
    Jt: float
    h: float
    basis: MomentumSectorBasis
    matrix: np.ndarray  # dense Hermitian, k = 0 basis

    @property
    def J(self) -> float:
        return internal_coupling(self.Jt, self.S)

    @property
    def ops(self) -> SpinOperators:
        return spin_operators(self.S)

    def parity_block(self, parity: int) -> np.ndarray:
        W = self.basis.parity_blocks()[parity]
        return np.asarray(W.T @ (W.T @ self.matrix.T).T)

    def project(self, op_full: sp.spmatrix) -> np.ndarray:
        """Dense k = 0 block V^T O V of a translation-invariant operator."""
        V = self.basis.embedding()
        return np.asarray((V.T @ (op_full @ V)).todense())


def build_hamiltonian(S, L: int, Jt: float, h: float = 1.0, max_dim: int = MAX_SECTOR_DIM,
                      basis: MomentumSectorBasis | None = None) -> SectorHamiltonian:
    if basis is None:
        basis = momentum_sector(S, L, max_dim=max_dim)
    Hf = full_hamiltonian(S, L, Jt, h)
    V = basis.embedding()
    Hk = np.asarray((V.T @ (Hf @ V)).todense())
    Hk = 0.5 * (Hk + Hk.conj().T)
    return SectorHamiltonian(basis.S, L, Jt, h, basis, Hk)


@dataclass
class EigenDecomposition:
    energies: np.ndarray   # ascending
    vectors: np.ndarray    # columns, k = 0 basis
    parity: np.ndarray     # +1 / -1 per eigenstate
    hamiltonian: SectorHamiltonian

    @property
    def basis(self) -> MomentumSectorBasis:
        return self.hamiltonian.basis

    def __len__(self) -> int:
        return len(self.energies)

    def sector(self, parity: int) -> np.ndarray:
        return self.energies[self.parity == parity]

    def coefficients(self, psi: np.ndarray) -> np.ndarray:
        """Expansion coefficients <E_n|psi> of a k = 0 sector vector."""
        return self.vectors.conj().T @ psi

    def residual(self) -> float:
        Hm = self.hamiltonian.matrix
        R = Hm @ self.vectors - self.vectors * self.energies
        return float(np.abs(R).max() / max(np.abs(Hm).max(), 1e-300))


def diagonalize(H: SectorHamiltonian, parities=(+1, -1)) -> EigenDecomposition:
    """Dense diagonalisation, block by block in reflection parity."""
    W = H.basis.parity_blocks()
    E, V, P = [], [], []
    for p in parities:
        if W[p].shape[1] == 0:
            continue
        Hp = H.parity_block(p)
        e, u = np.linalg.eigh(0.5 * (Hp + Hp.conj().T))
        E.append(e)
        V.append(np.asarray(W[p] @ u))
        P.append(np.full(len(e), p))
    E, V, P = np.concatenate(E), np.hstack(V), np.concatenate(P)
    order = np.argsort(E, kind="stable")
    return EigenDecomposition(E[order], V[:, order], P[order], H)

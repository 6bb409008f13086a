"""Zero-momentum sector of a periodic chain of L spins S.

Product states are labelled by integers in base d = 2S+1 with site 1 as the
most significant digit; digit a on a site means m = S - a. A k = 0 basis state
is the normalised uniform superposition over a translation orbit,

    |r> = R_r^(-1/2) sum_{j < R_r} T^j |r>,

where the representative r is the smallest integer (lexicographically smallest
digit string) of its orbit. Site reflection maps k = 0 orbits onto k = 0 orbits,
so the sector splits further into even and odd reflection parity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .operators import check_spin


class SectorTooLarge(MemoryError):
    pass


MAX_SECTOR_DIM = 20000
MAX_FULL_DIM = 400_000


def _digits(states: np.ndarray, d: int, L: int) -> np.ndarray:
    powers = d ** np.arange(L - 1, -1, -1, dtype=np.int64)
    return (states[:, None] // powers[None, :]) % d


def _encode(digits: np.ndarray, d: int) -> np.ndarray:
    L = digits.shape[1]
    powers = d ** np.arange(L - 1, -1, -1, dtype=np.int64)
    return digits @ powers


@dataclass
class MomentumSectorBasis:
    S: float
    L: int
    reps: np.ndarray          # representative integers, ascending
    orbit_size: np.ndarray    # R_r
    rep_of: np.ndarray        # full state -> its representative's sector index
    mirror: np.ndarray        # sector index of the reflected orbit
    k: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def d(self) -> int:
        return int(round(2 * self.S)) + 1

    @property
    def dim(self) -> int:
        return len(self.reps)

    @property
    def full_dim(self) -> int:
        return self.d ** self.L

    @property
    def norm(self) -> np.ndarray:
        """Amplitude of each orbit member in its k = 0 state."""
        return 1.0 / np.sqrt(self.orbit_size)

    def rep_digits(self) -> np.ndarray:
        return _digits(self.reps, self.d, self.L)

    def embedding(self) -> sp.csr_matrix:
        """Sparse isometry V (full_dim x dim) with columns the k = 0 states."""
        if "V" not in self._cache:
            rows = np.arange(self.full_dim)
            vals = self.norm[self.rep_of]
            self._cache["V"] = sp.csr_matrix((vals, (rows, self.rep_of)), shape=(self.full_dim, self.dim))
        return self._cache["V"]

    def parity_blocks(self) -> dict[int, sp.csr_matrix]:
        """Isometries W_+, W_- (dim x dim_pm) onto reflection-even and -odd states."""
        if "W" in self._cache:
            return self._cache["W"]
        i = np.arange(self.dim)
        p = self.mirror
        fixed = i[p == i]
        lo = i[p > i]
        hi = p[lo]
        c = 1 / np.sqrt(2)
        ne, no = len(fixed) + len(lo), len(lo)
        even_rows = np.r_[fixed, lo, hi]
        even_cols = np.r_[np.arange(len(fixed)), len(fixed) + np.arange(no), len(fixed) + np.arange(no)]
        even_vals = np.r_[np.ones(len(fixed)), np.full(no, c), np.full(no, c)]
        odd_rows = np.r_[lo, hi]
        odd_cols = np.r_[np.arange(no), np.arange(no)]
        odd_vals = np.r_[np.full(no, c), np.full(no, -c)]
        W = {
            +1: sp.csr_matrix((even_vals, (even_rows, even_cols)), shape=(self.dim, ne)),
            -1: sp.csr_matrix((odd_vals, (odd_rows, odd_cols)), shape=(self.dim, no)),
        }
        self._cache["W"] = W
        return W

    def to_full(self, v: np.ndarray) -> np.ndarray:
        """Lift sector vector(s) to the product basis."""
        return self.embedding() @ v

    def from_full(self, psi: np.ndarray) -> np.ndarray:
        """Projection coefficients <r|psi> (exact only for translation-invariant psi)."""
        return self.embedding().T @ psi


def translate(states: np.ndarray, d: int, L: int, shift: int = 1) -> np.ndarray:
    """Integer labels after moving every site i -> i + shift (periodically)."""
    return _encode(np.roll(_digits(states, d, L), shift, axis=1), d)


def reflect(states: np.ndarray, d: int, L: int) -> np.ndarray:
    return _encode(_digits(states, d, L)[:, ::-1], d)


def momentum_sector(S, L: int, max_dim: int = MAX_SECTOR_DIM) -> MomentumSectorBasis:
    s = float(check_spin(S))
    d = int(round(2 * s)) + 1
    if L < 2:
        raise ValueError("need L >= 2")
    N = d ** L
    if N > MAX_FULL_DIM:
        raise SectorTooLarge(f"product space of dimension {N} exceeds {MAX_FULL_DIM}")
    states = np.arange(N, dtype=np.int64)
    dig = _digits(states, d, L)
    powers = d ** np.arange(L - 1, -1, -1, dtype=np.int64)
    rep = states.copy()
    size = np.full(N, L, dtype=np.int64)
    for j in range(1, L):
        rot = np.roll(dig, j, axis=1) @ powers
        rep = np.minimum(rep, rot)
        size = np.where((rot == states) & (size == L), j, size)
    reps, rep_of = np.unique(rep, return_inverse=True)
    if len(reps) > max_dim:
        raise SectorTooLarge(f"k=0 sector dimension {len(reps)} exceeds {max_dim}")
    mirror = rep_of[reflect(reps, d, L)]
    return MomentumSectorBasis(s, L, reps, size[reps], rep_of.astype(np.int64), mirror)


def burnside_count(d: int, L: int) -> int:
    """Number of translation orbits of d-colourings of a ring of L sites."""
    from math import gcd

    return sum(d ** gcd(j, L) for j in range(L)) // L

"""Spin-S matrices in the |m> basis ordered m = S, S-1, ..., -S."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class InvalidSpin(ValueError):
    pass


def check_spin(S) -> Fraction:
    """Return S as an exact fraction; 2S must be an integer in 1..4."""
    s = Fraction(S).limit_denominator(2)
    if abs(float(s) - float(S)) > 1e-12 or (2 * s).denominator != 1 or not 1 <= 2 * s <= 4:
        raise InvalidSpin(f"S must be one of 1/2, 1, 3/2, 2; got {S}")
    return s


@dataclass(frozen=True)
class SpinOperators:
    S: float
    Sx: np.ndarray
    Sy: np.ndarray
    Sz: np.ndarray

    @property
    def dim(self) -> int:
        return self.Sz.shape[0]

    @property
    def m(self) -> np.ndarray:
        return np.diag(self.Sz).real

    def rotation(self, theta: float, phi: float) -> np.ndarray:
        """exp(-i phi Sz) exp(-i theta Sy): maps |m=S> onto the state polarised along n(theta, phi)."""
        w, U = np.linalg.eigh(self.Sy)
        Ry = (U * np.exp(-1j * theta * w)) @ U.conj().T
        return np.exp(-1j * phi * self.m)[:, None] * Ry


def spin_operators(S) -> SpinOperators:
    s = float(check_spin(S))
    m = s - np.arange(int(round(2 * s)) + 1)
    # <m+1|S+|m> = sqrt(S(S+1) - m(m+1)); S+ raises m, i.e. moves one index up
    sp = np.diag(np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    sm = sp.conj().T
    Sx = 0.5 * (sp + sm)
    Sy = -0.5j * (sp - sm)
    Sz = np.diag(m).astype(complex)
    return SpinOperators(s, Sx, Sy, Sz)

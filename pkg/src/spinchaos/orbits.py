"""Translationally invariant periodic orbits and the separatrix.

When all spins point the same way they stay parallel, and the common
direction follows the one-spin Hamiltonian

    Hp(S) = -J Sx^2 - 2J Sy^2 + h Sx + h Sy

with dS/dt = grad Hp x S. On the E = 0 shell the orbit through the north
pole is a libration for J < J*, a rotation for J > J*; the separatrix is
pinned to a saddle of Hp on the sphere.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .chain import DEFAULT_DT

SEPARATRIX_TOL = 1e-10


class OrbitClass(str, enum.Enum):
    LIBRATION = "Libration"
    ROTATION = "Rotation"
    SEPARATRIX = "Separatrix"


class NoClosure(RuntimeError):
    """The one-spin orbit did not return within t_max (separatrix is close)."""


class BracketError(ValueError):
    pass


@dataclass
class PeriodicOrbit:
    samples: np.ndarray
    period: float
    energy: float
    kind: OrbitClass
    J: float
    h: float
    dt: float

    def times(self) -> np.ndarray:
        return 10 * self.dt * np.arange(1, len(self.samples) + 1)


@dataclass
class FixedPoint:
    orientation: np.ndarray
    J: float
    h: float
    energy: float
    rate: float  # +-rate are the exponents of the one-spin flow at the saddle


def one_spin_energy(S, J: float, h: float = 1.0):
    S = np.asarray(S, dtype=float)
    return -J * S[..., 0] ** 2 - 2 * J * S[..., 1] ** 2 + h * S[..., 0] + h * S[..., 1]


def one_spin_gradient(S, J: float, h: float = 1.0) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    return np.array([-2 * J * S[0] + h, -4 * J * S[1] + h, 0.0])


def _tangent_basis(S: np.ndarray) -> np.ndarray:
    a = np.array([1.0, 0.0, 0.0]) if abs(S[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = a - (a @ S) * S
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(S, e1)
    return np.stack([e1, e2])


def sphere_gradient(S, J: float, h: float = 1.0) -> np.ndarray:
    g = one_spin_gradient(S, J, h)
    return g - (g @ S) * S


def tangent_hessian(S, J: float, h: float = 1.0) -> np.ndarray:
    """Hessian of Hp restricted to the sphere, in a tangent orthonormal basis."""
    S = np.asarray(S, dtype=float)
    mu = one_spin_gradient(S, J, h) @ S
    B = _tangent_basis(S)
    Hs = np.diag([-2 * J, -4 * J, 0.0]) - mu * np.eye(3)
    return B @ Hs @ B.T


def _newton_on_sphere(S, J, h, iters=60):
    # Lagrange system: grad Hp - mu S = 0, |S|^2 = 1
    x = np.r_[S, one_spin_gradient(S, J, h) @ S]
    D = np.diag([-2 * J, -4 * J, 0.0])
    for _ in range(iters):
        s, mu = x[:3], x[3]
        F = np.r_[one_spin_gradient(s, J, h) - mu * s, s @ s - 1.0]
        Jac = np.zeros((4, 4))
        Jac[:3, :3] = D - mu * np.eye(3)
        Jac[:3, 3] = -s
        Jac[3, :3] = 2 * s
        try:
            dx = np.linalg.solve(Jac, -F)
        except np.linalg.LinAlgError:
            return None
        x = x + dx
        if np.linalg.norm(dx) < 1e-15:
            break
    s = x[:3] / np.linalg.norm(x[:3])
    if np.linalg.norm(sphere_gradient(s, J, h)) > 1e-10:
        return None
    return s


def find_saddles(J: float, h: float = 1.0, n_phi: int = 32, n_theta: int = 16) -> list[FixedPoint]:
    """All saddle points of Hp on the unit sphere (Newton from a grid)."""
    found: list[np.ndarray] = []
    for th in (np.arange(n_theta) + 0.5) * np.pi / n_theta:
        for ph in np.arange(n_phi) * 2 * np.pi / n_phi:
            s0 = np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
            s = _newton_on_sphere(s0, J, h)
            if s is None:
                continue
            if any(np.linalg.norm(s - f) < 1e-8 for f in found):
                continue
            found.append(s)
    saddles = []
    for s in found:
        ev = np.linalg.eigvalsh(tangent_hessian(s, J, h))
        if ev[0] < 0 < ev[1]:
            saddles.append(FixedPoint(s, J, h, float(one_spin_energy(s, J, h)), float(np.sqrt(-ev[0] * ev[1]))))
    return saddles


def separatrix_saddle(J: float, h: float = 1.0, energy: float = 0.0) -> FixedPoint:
    """The saddle whose energy is closest to ``energy`` (E = 0 shell by default).

    Saddles come in Sz -> -Sz mirror pairs; the one with Sz >= 0 is returned.
    """
    saddles = find_saddles(J, h)
    if not saddles:
        raise BracketError(f"Hp has no saddle at J={J}, h={h}")
    best = min(saddles, key=lambda f: (abs(f.energy - energy), -f.orientation[2]))
    if best.orientation[2] < 0:
        best.orientation = best.orientation * np.array([1, 1, -1])
    return best


def saddle_energy(J: float, h: float = 1.0) -> float:
    """Energy of the separatrix saddle; +inf when Hp has no saddle (weak J),
    in which case every shell is a single libration curve."""
    try:
        return separatrix_saddle(J, h).energy
    except BracketError:
        return np.inf


def _tracked_saddle_energy(J, h, guess):
    s = _newton_on_sphere(guess, J, h)
    if s is None:
        return saddle_energy(J, h), guess
    ev = np.linalg.eigvalsh(tangent_hessian(s, J, h))
    if not ev[0] < 0 < ev[1]:
        return saddle_energy(J, h), guess
    return float(one_spin_energy(s, J, h)), s


def find_separatrix_J(h: float = 1.0, bracket=(0.5, 2.0), tol: float = 1e-10) -> tuple[float, FixedPoint]:
    """Coupling J* at which the saddle of Hp sits on the E = 0 shell.

    Bisection on the saddle energy; after the first full grid search the
    saddle is followed by warm-started Newton.
    """
    a, b = bracket
    fa, fb = saddle_energy(a, h), saddle_energy(b, h)
    if not fa * fb < 0:
        raise BracketError(f"saddle energy has no sign change on [{a}, {b}] for h={h}")
    guess = separatrix_saddle(b, h).orientation
    while b - a > tol:
        m = 0.5 * (a + b)
        fm, guess = _tracked_saddle_energy(m, h, guess)
        if fm == 0:
            a = b = m
            break
        if fa * fm < 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    Jstar = 0.5 * (a + b)
    return Jstar, separatrix_saddle(Jstar, h)


def classify_orbit(J: float, energy: float = 0.0, h: float = 1.0) -> OrbitClass:
    """Libration vs rotation for the orbit of energy ``energy`` through the pole.

    Shells below the saddle energy form a single curve through both
    hemispheres (libration); shells above it split into two curves around
    the poles (rotation).
    """
    Es = saddle_energy(J, h)
    if abs(energy - Es) < SEPARATRIX_TOL:
        return OrbitClass.SEPARATRIX
    return OrbitClass.LIBRATION if energy < Es else OrbitClass.ROTATION


def periodic_orbit(
    J: float,
    S0=(0.0, 0.0, 1.0),
    h: float = 1.0,
    dt: float = DEFAULT_DT,
    t_max: float = 1e4,
    r_close: float = 1e-7,
) -> PeriodicOrbit:
    s0 = np.asarray(S0, dtype=float)
    if abs(np.linalg.norm(s0) - 1.0) > 1e-9:
        raise ValueError("S0 must be a unit vector")
    period, samples, ok = K.one_spin_first_return(s0.copy(), J, h, dt, t_max, r_close, 10 * dt)
    if not ok:
        raise NoClosure(f"no return within t_max={t_max} at J={J}; separatrix nearby?")
    E = float(one_spin_energy(s0, J, h))
    return PeriodicOrbit(samples, float(period), E, classify_orbit(J, E, h), J, h, dt)


def one_spin_trajectory(J: float, S0, duration: float, h: float = 1.0, dt: float = DEFAULT_DT, stride: int = 1):
    """Sampled one-spin trajectory, returns (times, samples)."""
    s = np.asarray(S0, dtype=float).copy()
    n = int(round(duration / dt)) // stride + 1
    out = K.one_spin_record(s, J, h, dt, stride, n)
    return np.arange(n) * stride * dt, out

"""Wave-number-resolved linear stability of uniform reference motions.

For a reference in which every spin follows the same S(t), a deviation
dS_m = a(t) exp(i q m) evolves independently for each q with

    da/dt = (D(q) a) x S + H x a,    D(q) = diag(-2J cos q, -4J cos q, 0),

H being the one-spin local field. Over one period the monodromy matrix gives
the growth rate lambda(q) = log max|mu| / T. This is the linearised
counterpart of the two-trajectory Benettin estimate and serves as an
independent check on it.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .chain import DEFAULT_DT
from .orbits import FixedPoint, periodic_orbit


@njit(cache=True)
def _tangent_matrix(s, J, h, c, A):
    hx = -2.0 * J * s[0] + h
    hy = -4.0 * J * s[1] + h
    dx = -2.0 * J * c
    dy = -4.0 * J * c
    # column k: (D e_k) x s + H x e_k
    A[0, 0] = 0.0
    A[1, 0] = -dx * s[2]
    A[2, 0] = dx * s[1] - hy
    A[0, 1] = dy * s[2]
    A[1, 1] = 0.0
    A[2, 1] = hx - dy * s[0]
    A[0, 2] = hy
    A[1, 2] = -hx
    A[2, 2] = 0.0


@njit(cache=True)
def _rhs(s, Mt, J, h, c, ds, dM, A):
    hx = -2.0 * J * s[0] + h
    hy = -4.0 * J * s[1] + h
    ds[0] = hy * s[2]
    ds[1] = -hx * s[2]
    ds[2] = hx * s[1] - hy * s[0]
    _tangent_matrix(s, J, h, c, A)
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc += A[i, k] * Mt[k, j]
            dM[i, j] = acc


@njit(cache=True)
def _monodromy(s0, J, h, c, T, nsteps):
    dt = T / nsteps
    s = s0.copy()
    Mt = np.eye(3)
    A = np.empty((3, 3))
    k1s = np.empty(3)
    k2s = np.empty(3)
    k3s = np.empty(3)
    k4s = np.empty(3)
    k1M = np.empty((3, 3))
    k2M = np.empty((3, 3))
    k3M = np.empty((3, 3))
    k4M = np.empty((3, 3))
    ts = np.empty(3)
    tM = np.empty((3, 3))
    for _ in range(nsteps):
        _rhs(s, Mt, J, h, c, k1s, k1M, A)
        ts[:] = s + 0.5 * dt * k1s
        tM[:, :] = Mt + 0.5 * dt * k1M
        _rhs(ts, tM, J, h, c, k2s, k2M, A)
        ts[:] = s + 0.5 * dt * k2s
        tM[:, :] = Mt + 0.5 * dt * k2M
        _rhs(ts, tM, J, h, c, k3s, k3M, A)
        ts[:] = s + dt * k3s
        tM[:, :] = Mt + dt * k3M
        _rhs(ts, tM, J, h, c, k4s, k4M, A)
        s += dt / 6.0 * (k1s + 2 * k2s + 2 * k3s + k4s)
        Mt += dt / 6.0 * (k1M + 2 * k2M + 2 * k3M + k4M)
        s /= np.sqrt(s[0] ** 2 + s[1] ** 2 + s[2] ** 2)
    return Mt


def tangent_matrix(S, J: float, q: float, h: float = 1.0) -> np.ndarray:
    A = np.empty((3, 3))
    _tangent_matrix(np.asarray(S, dtype=float), J, h, np.cos(q), A)
    return A


def orbit_growth_rates(J: float, qs, h: float = 1.0, S0=(0.0, 0.0, 1.0), dt: float = DEFAULT_DT,
                       period: float | None = None) -> np.ndarray:
    """Floquet growth rate lambda(q) of the uniform periodic orbit through S0."""
    if period is None:
        period = periodic_orbit(J, S0, h=h, dt=dt).period
    nsteps = max(int(np.ceil(period / dt)), 1)
    s0 = np.asarray(S0, dtype=float)
    out = np.empty(len(np.atleast_1d(qs)))
    for k, q in enumerate(np.atleast_1d(qs)):
        M = _monodromy(s0, J, h, np.cos(q), period, nsteps)
        out[k] = np.log(np.max(np.abs(np.linalg.eigvals(M)))) / period
    return out


def allowed_wavenumbers(L: int) -> np.ndarray:
    """q = 2 pi n / L for n = 0..floor(L/2) (negative q mirror these)."""
    return 2 * np.pi * np.arange(L // 2 + 1) / L


def chain_growth_rate(J: float, L: int, h: float = 1.0, dt: float = DEFAULT_DT) -> tuple[float, float]:
    """Largest Floquet rate over the wave numbers allowed in a chain of L sites.

    Returns (lambda_p, q_p). Rates below 1e-6 are reported as 0 (stable).
    """
    qs = allowed_wavenumbers(L)
    lam = orbit_growth_rates(J, qs, h=h, dt=dt)
    k = int(np.argmax(lam))
    lp = float(lam[k])
    return (lp if lp > 1e-6 else 0.0), float(qs[k])


def fixed_point_rates(fp: FixedPoint, qs) -> np.ndarray:
    """Largest real part of the linearisation eigenvalues at a uniform fixed point."""
    return np.array([
        np.max(np.linalg.eigvals(tangent_matrix(fp.orientation, fp.J, q, fp.h)).real)
        for q in np.atleast_1d(qs)
    ])

"""Classical anisotropic XY chain in a tilted field.

    H = -sum_i (J Sx_i Sx_{i+1} + 2J Sy_i Sy_{i+1}) + h sum_i (Sx_i + Sy_i)

with unit-length classical spins and periodic boundaries. Equations of motion
are dS_i/dt = H_i x S_i where H_i is the local field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels as K

DEFAULT_DT = 0.001


class NumericBlowup(FloatingPointError):
    """Integration produced non-finite spin components."""


@dataclass(frozen=True)
class HamiltonianParams:
    J: float
    h: float = 1.0
    L: int = 2
    periodic: bool = True

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise ValueError(f"chain length must be an integer >= 2, got {self.L}")
        if not self.h > 0:
            raise ValueError(f"field h must be positive, got {self.h}")
        if not np.isfinite(self.J):
            raise ValueError("coupling J must be finite")
        if not self.periodic:
            raise ValueError("only periodic chains are supported")


@dataclass
class SpinChainState:
    spins: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.spins = np.ascontiguousarray(self.spins, dtype=np.float64)
        if self.spins.ndim != 2 or self.spins.shape[1] != 3:
            raise ValueError("spins must have shape (L, 3)")
        norms = np.linalg.norm(self.spins, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-9:
            raise ValueError("every spin must have unit length (tolerance 1e-9)")

    @property
    def L(self) -> int:
        return self.spins.shape[0]

    def flat(self) -> np.ndarray:
        """3L-vector [S1x, S1y, S1z, ..., SLx, SLy, SLz]."""
        return self.spins.reshape(-1).copy()

    def copy(self) -> "SpinChainState":
        return SpinChainState(self.spins.copy(), self.time)

    @classmethod
    def uniform(cls, L: int, direction=(0.0, 0.0, 1.0)) -> "SpinChainState":
        v = np.asarray(direction, dtype=float)
        v = v / np.linalg.norm(v)
        return cls(np.tile(v, (L, 1)))

    @classmethod
    def all_up(cls, L: int) -> "SpinChainState":
        return cls.uniform(L)


def random_state(L: int, rng: np.random.Generator) -> SpinChainState:
    v = rng.normal(size=(L, 3))
    return SpinChainState(v / np.linalg.norm(v, axis=1, keepdims=True))


def local_field(state: SpinChainState, i: int, params: HamiltonianParams) -> np.ndarray:
    """Local field on site ``i`` (1-based, wraps periodically)."""
    S = state.spins
    L = S.shape[0]
    a = S[(i - 2) % L]
    b = S[i % L]
    J, h = params.J, params.h
    return np.array([-J * (a[0] + b[0]) + h, -2 * J * (a[1] + b[1]) + h, 0.0])


def local_fields(state: SpinChainState, params: HamiltonianParams) -> np.ndarray:
    out = np.empty_like(state.spins)
    K.field(state.spins, params.J, params.h, out)
    return out


def energy(state: SpinChainState, params: HamiltonianParams) -> float:
    return float(K.energy(state.spins, params.J, params.h))


def derivative(state: SpinChainState, params: HamiltonianParams) -> np.ndarray:
    """dS/dt as a 3L-vector."""
    out = np.empty_like(state.spins)
    K.deriv(state.spins, params.J, params.h, out)
    return out.reshape(-1)


@dataclass
class Trajectory:
    final: SpinChainState
    times: np.ndarray
    observables: dict = field(default_factory=dict)


Observer = Callable[[float, np.ndarray], float]


def integrate(
    state: SpinChainState,
    duration: float,
    params: HamiltonianParams,
    dt: float = DEFAULT_DT,
    observers: dict[str, Observer] | None = None,
    stride: int = 1,
) -> Trajectory:
    """RK4 integration with per-step spin renormalisation.

    ``observers`` maps names to callables ``f(t, spins) -> float`` evaluated
    at t = 0 and after every ``stride`` steps.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if duration < 0:
        raise ValueError("duration must be non-negative")
    if state.L != params.L:
        raise ValueError(f"state has {state.L} sites, params say {params.L}")
    nsteps = int(round(duration / dt))
    S = state.spins.copy()
    observers = observers or {}
    if not observers:
        if not K.advance(S, params.J, params.h, dt, nsteps):
            raise NumericBlowup("non-finite spin components during integration")
        return Trajectory(SpinChainState(S, state.time + nsteps * dt), np.array([state.time]))
    times = [state.time]
    values = {k: [f(state.time, S)] for k, f in observers.items()}
    done = 0
    while done < nsteps:
        n = min(stride, nsteps - done)
        if not K.advance(S, params.J, params.h, dt, n):
            raise NumericBlowup("non-finite spin components during integration")
        done += n
        t = state.time + done * dt
        times.append(t)
        for k, f in observers.items():
            values[k].append(f(t, S))
    return Trajectory(
        SpinChainState(S, state.time + nsteps * dt),
        np.asarray(times),
        {k: np.asarray(v) for k, v in values.items()},
    )


def sample_trajectory(
    state: SpinChainState, duration: float, params: HamiltonianParams,
    dt: float = DEFAULT_DT, stride: int = 50,
) -> tuple[np.ndarray, np.ndarray]:
    """Return (times, spins[n, L, 3]) sampled every ``stride`` steps."""
    nsteps = int(round(duration / dt))
    nsamples = nsteps // stride + 1
    S = state.spins.copy()
    out = K.record(S, params.J, params.h, dt, stride, nsamples)
    if not np.all(np.isfinite(out)):
        raise NumericBlowup("non-finite spin components during integration")
    return state.time + np.arange(nsamples) * stride * dt, out


def site_series(
    state: SpinChainState, duration: float, params: HamiltonianParams,
    dt: float = DEFAULT_DT, stride: int = 50, site: int = 0, component: int = 0,
) -> tuple[np.ndarray, np.ndarray, SpinChainState]:
    """One spin component sampled every ``stride`` steps (site is 0-based).

    Returns (times, values, final_state).
    """
    nsteps = int(round(duration / dt))
    nsamples = nsteps // stride + 1
    S = state.spins.copy()
    vals = K.record_site(S, params.J, params.h, dt, stride, nsamples, site, component)
    if not np.all(np.isfinite(vals)):
        raise NumericBlowup("non-finite spin components during integration")
    t = state.time + np.arange(nsamples) * stride * dt
    return t, vals, SpinChainState(S, state.time + (nsamples - 1) * stride * dt)


def trajectory_csv_rows(times: Sequence[float], spins: np.ndarray, params: HamiltonianParams):
    """Rows (t, S1x, S1y, S1z, ..., energy) for the CSV trajectory format."""
    L = spins.shape[1]
    header = ["t"] + [f"S{i + 1}{c}" for i in range(L) for c in "xyz"] + ["energy"]
    rows = []
    for t, S in zip(times, spins):
        rows.append([float(t), *S.reshape(-1).tolist(), float(K.energy(S, params.J, params.h))])
    return header, rows

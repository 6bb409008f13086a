"""Largest Lyapunov exponents by the two-trajectory reset method.

A twin trajectory S + dS is integrated next to the reference S. Every T_R
time units the separation is measured, its logarithmic stretch recorded and
the twin pulled back to distance d0 along the same direction. The exponent
is the mean log-stretch divided by T_R.

Also here: a Lyapunov-stability certificate built on the T_R dependence of
that estimate, the growth rate at the separatrix fixed point, and the cusp
of lambda_p(J) around the separatrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from . import _kernels as K
from .chain import DEFAULT_DT, HamiltonianParams, SpinChainState
from .orbits import (
    FixedPoint,
    _newton_on_sphere,
    find_separatrix_J,
    periodic_orbit,
    separatrix_saddle,
)


class ReferenceKind(str, enum.Enum):
    PERIODIC = "Periodic"
    ERGODIC = "Ergodic"
    FIXED_POINT = "FixedPoint"


class LyapunovBlowup(FloatingPointError):
    """The twin separated beyond the linear regime within one reset interval."""


class FitFailure(RuntimeError):
    pass


@dataclass
class TangentDeviation:
    delta: np.ndarray
    norm: float

    @classmethod
    def from_vector(cls, delta) -> "TangentDeviation":
        delta = np.asarray(delta, dtype=float).reshape(-1)
        return cls(delta, float(np.linalg.norm(delta)))

    def rescaled(self, d0: float) -> "TangentDeviation":
        return TangentDeviation(self.delta * (d0 / self.norm), float(d0))


@dataclass
class LyapunovRun:
    kind: ReferenceKind
    params: HamiltonianParams
    d0: float
    T_R: float
    log_stretch: np.ndarray
    vector: np.ndarray
    seed: int | None = None
    dt: float = DEFAULT_DT

    @property
    def M(self) -> int:
        return len(self.log_stretch)

    @property
    def exponent(self) -> float:
        return float(np.mean(self.log_stretch) / self.T_R)

    @property
    def running_mean(self) -> np.ndarray:
        return np.cumsum(self.log_stretch) / (self.T_R * np.arange(1, self.M + 1))

    @property
    def stderr(self) -> float:
        return batch_means_stderr(self.log_stretch / self.T_R)

    def to_record(self, verdict: str | None = None) -> dict:
        p = self.params
        return {
            "params": {"J": p.J, "h": p.h, "L": p.L},
            "kind": self.kind.value,
            "d0": self.d0,
            "T_R": self.T_R,
            "M": self.M,
            "dt": self.dt,
            "seed": self.seed,
            "lambda": self.exponent,
            "stderr": self.stderr,
            "verdict": verdict,
        }


def batch_means_stderr(x, nblocks: int = 10) -> float:
    x = np.asarray(x, dtype=float)
    n = len(x) // nblocks
    if n < 1:
        return float("nan")
    means = x[: n * nblocks].reshape(nblocks, n).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(nblocks))


def random_tangent(state: SpinChainState, rng: np.random.Generator) -> np.ndarray:
    """Unit 3L-vector with Gaussian components projected onto each spin's tangent plane."""
    S = state.spins
    v = rng.normal(size=S.shape)
    v -= np.sum(v * S, axis=1, keepdims=True) * S
    return (v / np.linalg.norm(v)).reshape(-1)


def ergodic_state(params: HamiltonianParams, rng: np.random.Generator, target: float = 0.0,
                  max_draws: int = 1000) -> SpinChainState:
    """Random configuration on the energy shell E = target.

    Two independent uniform configurations with energies on either side of
    the target are blended site by site, and the blend weight is solved for.
    """
    L = params.L

    def draw():
        v = rng.normal(size=(L, 3))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def E(S):
        return float(K.energy(S, params.J, params.h)) - target

    lo = hi = None
    for _ in range(max_draws):
        S = draw()
        e = E(S)
        if e < 0 and lo is None:
            lo = S
        elif e > 0 and hi is None:
            hi = S
        if lo is not None and hi is not None:
            break
    else:
        raise ValueError(f"could not bracket energy {target} by random sampling")

    def blend(w):
        v = (1 - w) * lo + w * hi
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    w = optimize.brentq(lambda w: E(blend(w)), 0.0, 1.0, xtol=1e-14)
    return SpinChainState(blend(w))


def periodic_reference(L: int) -> SpinChainState:
    return SpinChainState.all_up(L)


def fixed_point_reference(fp: FixedPoint, L: int) -> SpinChainState:
    return SpinChainState.uniform(L, fp.orientation)


def benettin(
    state: SpinChainState,
    params: HamiltonianParams,
    T_R: float = 5.0,
    M: int | None = None,
    d0: float | None = None,
    seed: int | None = 0,
    kind: ReferenceKind = ReferenceKind.PERIODIC,
    dt: float = DEFAULT_DT,
    M_min: int = 100,
    M_max: int = 5000,
    rtol: float = 0.005,
    delta=None,
) -> LyapunovRun:
    """Largest Lyapunov exponent along the trajectory starting at ``state``.

    With ``M=None`` ergodic runs use 1000 resets; periodic and fixed-point
    runs add resets in chunks until the running mean changes by less than
    ``rtol`` (relative) over the last 20% of resets, capped at ``M_max``.
    ``delta`` overrides the random initial direction.
    """
    L = params.L
    if state.L != L:
        raise ValueError("state and params disagree on L")
    if T_R <= 0:
        raise ValueError("T_R must be positive")
    d0 = 1e-8 * np.sqrt(L) if d0 is None else float(d0)
    limit = 1e-2 * np.sqrt(L)
    nsteps = int(round(T_R / dt))
    T_R = nsteps * dt
    if delta is None:
        delta = random_tangent(state, np.random.default_rng(seed))
    delta = np.asarray(delta, dtype=float).reshape(L, 3)
    delta = delta * (d0 / np.linalg.norm(delta))
    ref = state.spins.copy()
    twin = ref + delta
    static = kind is ReferenceKind.FIXED_POINT

    def run(m):
        logs, ok = K.benettin_intervals(ref, twin, params.J, params.h, dt, nsteps, m, d0, limit, static)
        if not ok:
            raise LyapunovBlowup(
                f"separation exceeded {limit:.3g} within T_R={T_R} (J={params.J}, L={L}); shorten T_R"
            )
        return logs

    if M is not None or kind is ReferenceKind.ERGODIC:
        logs = run(1000 if M is None else int(M))
    else:
        chunk = max(M_min // 5, 10)
        logs = run(M_min)
        while len(logs) < M_max:
            rm = np.cumsum(logs) / np.arange(1, len(logs) + 1)
            a, b = rm[int(0.8 * len(logs)) - 1], rm[-1]
            if abs(b - a) <= rtol * abs(b) + 1e-6 * T_R:
                break
            logs = np.concatenate([logs, run(chunk)])
    vec = (twin - ref).reshape(-1)
    return LyapunovRun(kind, params, d0, T_R, logs, vec / np.linalg.norm(vec), seed, dt)


# --- Lyapunov stability of periodic orbits --------------------------------

@dataclass
class StabilityCertificate:
    verdict: str  # "Stable", "Unstable" or "Inconclusive"
    T_R: np.ndarray
    lam: np.ndarray
    stderr: np.ndarray
    c: float = float("nan")
    b: float = float("nan")
    r2: float = float("nan")
    runs: list = field(default_factory=list, repr=False)

    def rows(self):
        return [(float(t), float(l), float(s)) for t, l, s in zip(self.T_R, self.lam, self.stderr)]


def _log_decay_fit(T, lam):
    # lambda(T_R) = (c log T_R + b) / T_R, linear in (c, b)
    A = np.stack([np.log(T) / T, 1.0 / T], axis=1)
    (c, b), *_ = np.linalg.lstsq(A, lam, rcond=None)
    pred = A @ [c, b]
    ss_res = np.sum((lam - pred) ** 2)
    ss_tot = np.sum((lam - lam.mean()) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(c), float(b), float(r2)


def stability_certificate(
    params: HamiltonianParams,
    T_R_grid=(2.0, 5.0, 10.0, 20.0, 50.0),
    M: int = 1000,
    d0: float | None = None,
    seed: int = 0,
    dt: float = DEFAULT_DT,
    state: SpinChainState | None = None,
) -> StabilityCertificate:
    """Classify the uniform periodic orbit from lambda(T_R).

    Unstable: lambda is positive and flat in T_R within 2 sigma (sigma from
    batch means, floored at 1% of the mean). Stable: the separation stays
    within a factor 10 of d0 at every T_R, or lambda(T_R) follows
    (c log T_R + b)/T_R with R^2 > 0.95.
    """
    T = np.asarray(sorted(T_R_grid), dtype=float)
    if T[-1] / T[0] < 10 - 1e-12:
        raise ValueError("T_R grid must span at least one decade")
    state = periodic_reference(params.L) if state is None else state
    runs = [benettin(state, params, T_R=t, M=M, d0=d0, seed=seed, dt=dt) for t in T]
    lam = np.array([r.exponent for r in runs])
    err = np.array([r.stderr for r in runs])
    c, b, r2 = _log_decay_fit(T, lam)
    mean = float(np.average(lam))
    sig = np.maximum(np.maximum(err, 0.01 * abs(mean)), 1e-12)
    flat = bool(np.all(np.abs(lam - mean) <= 2 * np.hypot(sig, sig.mean() / np.sqrt(len(T)))))
    bounded = bool(np.all(lam * T < np.log(10.0)))
    if not bounded and flat and mean > 3 * sig.mean():
        verdict = "Unstable"
    elif bounded or (r2 > 0.95 and c > 0):
        verdict = "Stable"
    else:
        verdict = "Inconclusive"
    return StabilityCertificate(verdict, T, lam, err, c, b, r2, runs)


# --- separatrix fixed point -------------------------------------------------

@dataclass
class FixedPointExponent:
    lam_S: float
    per_d0: dict
    curves: dict = field(repr=False, default_factory=dict)
    fixed_point: FixedPoint | None = None

    @property
    def spread(self) -> float:
        v = np.array(list(self.per_d0.values()))
        return float((v.max() - v.min()) / abs(v.mean()))


def fixed_point_exponent(
    h: float = 1.0,
    L: int = 10,
    d0_list=(1e-6, 1e-5, 1e-4),
    seed: int = 0,
    dt: float = DEFAULT_DT,
    fp: FixedPoint | None = None,
    upper: float = 1e-1,
    t_max: float = 60.0,
) -> FixedPointExponent:
    """Growth rate of |S(t) - S*| away from the uniform separatrix fixed point.

    ``d0_list`` entries are per-sqrt(L) deviations. Each curve is fitted
    log-linearly on the last two decades below ``upper * sqrt(L)``.
    """
    if fp is None:
        _, fp = find_separatrix_J(h)
    params = HamiltonianParams(fp.J, h, L)
    ref_state = fixed_point_reference(fp, L)
    rng = np.random.default_rng(seed)
    direction = random_tangent(ref_state, rng).reshape(L, 3)
    stride = 10
    rates, curves = {}, {}
    hi = upper * np.sqrt(L)
    lo = hi / 100
    for d0 in d0_list:
        d = d0 * np.sqrt(L)
        if d >= lo:
            raise FitFailure(f"d0={d0} leaves less than two decades of growth below {upper}")
        S = ref_state.spins + d * direction
        n = int(t_max / (stride * dt)) + 1
        dist = K.distance_growth(S, ref_state.spins, params.J, h, dt, stride, n)
        t = np.arange(n) * stride * dt
        curves[d0] = (t, dist)
        if dist.max() < hi:
            raise FitFailure(f"deviation did not reach {hi:.3g} within t_max={t_max}")
        end = int(np.argmax(dist >= hi))
        start = int(np.nonzero(dist[:end] < lo)[0][-1])
        fit = stats.linregress(t[start:end + 1], np.log(dist[start:end + 1]))
        rates[d0] = float(fit.slope)
    lam = float(np.mean(list(rates.values())))
    return FixedPointExponent(lam, rates, curves, fp)


# --- cusp of lambda_p(J) at the separatrix ------------------------------------

def default_cusp_grid(decades=(1, 6), per_decade: int = 2) -> np.ndarray:
    k = np.linspace(decades[0], decades[1], (decades[1] - decades[0]) * per_decade + 1)
    mags = 10.0 ** (-k)
    return np.concatenate([-mags, mags])


@dataclass
class CuspFit:
    lam_A: float
    C: float
    Jstar: float
    dJ: np.ndarray
    lam: np.ndarray
    stderr: np.ndarray
    cutoff: float
    residuals: np.ndarray
    symmetry_residual: float

    @property
    def used(self) -> np.ndarray:
        return np.abs(self.dJ) <= self.cutoff

    def model(self, dJ):
        return self.lam_A + self.C / np.log(np.abs(dJ))

    def rows(self):
        return [(float(d), self.Jstar + float(d), float(l), float(s))
                for d, l, s in zip(self.dJ, self.lam, self.stderr)]


def fit_cusp(dJ, lam, cutoff: float = 1e-3, Jstar: float = float("nan"), stderr=None) -> CuspFit:
    """Least-squares fit of lambda = lambda_A + C / log|dJ| for |dJ| <= cutoff."""
    dJ = np.asarray(dJ, dtype=float)
    lam = np.asarray(lam, dtype=float)
    use = (np.abs(dJ) <= cutoff) & np.isfinite(lam)
    if use.sum() < 3:
        raise FitFailure("need at least three points below the cutoff")
    x = 1.0 / np.log(np.abs(dJ[use]))
    fit = stats.linregress(x, lam[use])
    res = lam - (fit.intercept + fit.slope / np.log(np.abs(dJ)))
    # side symmetry: compare +dJ and -dJ at equal magnitude below the cutoff
    diffs = []
    for d, l in zip(dJ, lam):
        if 0 < d <= cutoff:
            m = np.isclose(dJ, -d, rtol=1e-9)
            if m.any():
                diffs.append(l - lam[m][0])
    sym = float(np.sqrt(np.mean(np.square(diffs)))) if diffs else float("nan")
    err = np.full_like(lam, np.nan) if stderr is None else np.asarray(stderr, dtype=float)
    return CuspFit(float(fit.intercept), float(fit.slope), Jstar, dJ, lam, err, cutoff, res, sym)


def cusp_scan(
    h: float = 1.0,
    dJ_grid=None,
    L: int = 10,
    T_R: float = 2.0,
    cutoff: float = 1e-3,
    seed: int = 0,
    dt: float = DEFAULT_DT,
    M_min: int = 200,
    runner=map,
) -> CuspFit:
    """Periodic-orbit exponents at J* + dJ and the fit of their cusp.

    ``runner`` maps the per-point job over the grid (``map`` or a pool map).
    """
    Jstar, _ = find_separatrix_J(h)
    dJ = default_cusp_grid() if dJ_grid is None else np.asarray(dJ_grid, dtype=float)
    jobs = [(Jstar + d, h, L, T_R, seed, dt, M_min) for d in dJ]
    out = list(runner(_cusp_point, jobs))
    lam = np.array([o[0] for o in out])
    err = np.array([o[1] for o in out])
    return fit_cusp(dJ, lam, cutoff, Jstar, err)


def _cusp_point(job):
    J, h, L, T_R, seed, dt, M_min = job
    # the orbit must close; raises NoClosure when too near the separatrix
    periodic_orbit(J, h=h, dt=dt)
    run = benettin(periodic_reference(L), HamiltonianParams(J, h, L), T_R=T_R, seed=seed, dt=dt, M_min=M_min)
    return run.exponent, run.stderr


# --- geometric scalings near the separatrix ------------------------------------

@dataclass
class SeparatrixScalings:
    lam_S: float
    dJ: np.ndarray
    dS_min: np.ndarray
    period: np.ndarray
    kind: list
    exponent: dict  # side -> p in |dS|_min = a |dJ|^p
    prefactor: dict
    period_slope: dict  # side -> dT/d(-log|dJ|)

    def slope_in_units(self, side: str) -> float:
        """Period slope times lambda_S (1 for rotations, 2 for librations)."""
        return self.period_slope[side] * self.lam_S

    def rows(self):
        return [(float(d), float(s), float(T), k) for d, s, T, k in zip(self.dJ, self.dS_min, self.period, self.kind)]


def separatrix_scalings(h: float = 1.0, dJ_grid=None, dt: float = DEFAULT_DT) -> SeparatrixScalings:
    """Closest approach to the saddle and period divergence near J*.

    Positive dJ gives rotations, negative dJ librations.
    """
    Jstar, fp = find_separatrix_J(h)
    dJ = default_cusp_grid((2, 6)) if dJ_grid is None else np.asarray(dJ_grid, dtype=float)
    flip = np.array([1.0, 1.0, -1.0])
    dmin, per, kinds = [], [], []
    for d in dJ:
        J = Jstar + d
        s = _newton_on_sphere(fp.orientation, J, h)
        if s is None:
            s = separatrix_saddle(J, h).orientation
        po = periodic_orbit(J, h=h, dt=dt)
        dist = np.minimum(np.linalg.norm(po.samples - s, axis=1), np.linalg.norm(po.samples - s * flip, axis=1))
        dmin.append(float(dist.min()))
        per.append(po.period)
        kinds.append(po.kind.value)
    dmin, per = np.array(dmin), np.array(per)
    expo, pref, slope = {}, {}, {}
    for side, mask in (("rotation", dJ > 0), ("libration", dJ < 0)):
        if mask.sum() < 2:
            continue
        x = np.log(np.abs(dJ[mask]))
        f = stats.linregress(x, np.log(dmin[mask]))
        expo[side], pref[side] = float(f.slope), float(np.exp(f.intercept))
        slope[side] = float(-stats.linregress(x, per[mask]).slope)
    return SeparatrixScalings(fp.rate, dJ, dmin, per, kinds, expo, pref, slope)


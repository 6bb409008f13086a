"""Classical ensembles: imitation of quantum |m=S> states and the
single-observable Lyapunov protocol.

For a cloud of initial conditions around the spins-up periodic orbit, the
ensemble average of S1z at its successive maxima t_m obeys

    1 - mean S1z(t_m) ~ exp(2 lambda_p t_m)

while the cloud is still small, so the slope of log(1 - S1z) against t_m
gives twice the periodic exponent.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .chain import DEFAULT_DT, HamiltonianParams, NumericBlowup, SpinChainState


class EnsembleKind(str, enum.Enum):
    QUANTUM_IMITATION = "QuantumImitation"
    PERTURBED_PERIODIC = "PerturbedPeriodic"


@dataclass(frozen=True)
class EnsembleSpec:
    kind: EnsembleKind
    N: int
    seed: int
    S: float | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("ensemble needs N >= 1")
        if self.kind is EnsembleKind.PERTURBED_PERIODIC and not (self.radius and self.radius > 0):
            raise ValueError("PerturbedPeriodic needs radius > 0")
        if self.kind is EnsembleKind.QUANTUM_IMITATION and self.S is None:
            raise ValueError("QuantumImitation needs S")

    def member(self, L: int, rng: np.random.Generator) -> SpinChainState:
        if self.kind is EnsembleKind.QUANTUM_IMITATION:
            return sample_quantum_imitation(self.S, L, rng)
        return sample_perturbed_periodic(L, self.radius, rng)

    def draw(self, L: int) -> np.ndarray:
        """All members, shape (N, L, 3); member k uses the k-th spawned stream."""
        seqs = np.random.SeedSequence(self.seed).spawn(self.N)
        return np.stack([self.member(L, np.random.default_rng(s)).spins for s in seqs])


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_quantum_imitation(S, L: int, seed=None) -> SpinChainState:
    """Sz uniform on the top 1/(2S+1) share of [-1, 1], random azimuth."""
    rng = _rng(seed)
    S = float(S)
    if not S > 0:
        raise ValueError("S must be positive")
    width = 2.0 / (2 * S + 1)
    sz = 1.0 - width * rng.random(L)
    phi = 2 * np.pi * rng.random(L)
    rho = np.sqrt(np.clip(1.0 - sz ** 2, 0.0, None))
    return SpinChainState(np.c_[rho * np.cos(phi), rho * np.sin(phi), sz])


def sample_perturbed_periodic(L: int, radius: float = 1e-4, seed=None) -> SpinChainState:
    """(dx, dy) uniform over the disk of the given radius, Sz fixing unit length."""
    if not 0 < radius < 1:
        raise ValueError("radius must lie in (0, 1)")
    rng = _rng(seed)
    r = radius * np.sqrt(rng.random(L))
    a = 2 * np.pi * rng.random(L)
    dx, dy = r * np.cos(a), r * np.sin(a)
    return SpinChainState(np.c_[dx, dy, np.sqrt(1.0 - dx ** 2 - dy ** 2)])


@dataclass
class AveragedSeries:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    N: int
    meta: dict = field(default_factory=dict)

    def rows(self):
        return [("t", "mean", "stderr")] + [
            (float(t), float(m), float(s)) for t, m, s in zip(self.times, self.mean, self.stderr)
        ]


def ensemble_average(states: np.ndarray, params: HamiltonianParams, duration: float,
                     sample_dt: float = 0.01, dt: float = DEFAULT_DT, site: int = 0,
                     component: int = 2) -> AveragedSeries:
    """Mean (and standard error) of one spin component over integrated members."""
    stride = max(int(round(sample_dt / dt)), 1)
    nsamples = int(round(duration / dt)) // stride + 1
    states = np.ascontiguousarray(states, dtype=np.float64)
    vals = K.ensemble_site_series(states, params.J, params.h, dt, stride, nsamples, site, component)
    if not np.all(np.isfinite(vals)):
        raise NumericBlowup("non-finite spin components in the ensemble")
    # members along the contiguous axis: numpy reduces it pairwise and in a fixed order
    vt = np.ascontiguousarray(vals.T)
    N = vt.shape[1]
    mean = vt.sum(axis=1) / N
    var = ((vt - mean[:, None]) ** 2).sum(axis=1) / max(N - 1, 1)
    return AveragedSeries(np.arange(nsamples) * stride * dt, mean, np.sqrt(var / N), N)


def imitation_average(S, params: HamiltonianParams, N: int = 10_000, duration: float = 10.0,
                      seed: int = 0, sample_dt: float = 0.05, dt: float = DEFAULT_DT) -> AveragedSeries:
    spec = EnsembleSpec(EnsembleKind.QUANTUM_IMITATION, N, seed, S=S)
    out = ensemble_average(spec.draw(params.L), params, duration, sample_dt, dt)
    out.meta = {"kind": spec.kind.value, "S": float(S), "N": N, "seed": seed}
    return out


# ---------------------------------------------------------------- maxima / fit


def refined_maxima(t: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Interior local maxima refined by the parabola through three samples."""
    k = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])) + 1
    ym, y0, yp = y[k - 1], y[k], y[k + 1]
    den = ym - 2 * y0 + yp
    off = np.where(den < 0, 0.5 * (ym - yp) / np.where(den < 0, den, -1.0), 0.0)
    off = np.clip(off, -0.5, 0.5)
    step = t[1] - t[0]
    return t[k] + off * step, y0 - 0.25 * (ym - yp) * off


@dataclass
class OtocEstimate:
    lam: float
    verdict: str            # "Growth" or "NoGrowth"
    slope: float
    slope_stderr: float
    window: tuple[float, float]     # bounds on 1 - S1z
    t_fit: np.ndarray
    y_fit: np.ndarray               # log(1 - S1z) at the fitted maxima
    t_max: np.ndarray
    deficit_max: np.ndarray         # 1 - S1z at every maximum
    series: AveragedSeries

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.t_fit)

    def rows(self):
        return [("t_m", "one_minus_S1z", "in_fit")] + [
            (float(t), float(d), int(np.any(np.isclose(t, self.t_fit))))
            for t, d in zip(self.t_max, self.deficit_max)
        ]


def fit_maxima_growth(t_m, deficit, lo: float, hi: float = 1e-2, min_run: int = 4):
    """Longest run of consecutive maxima inside [lo, hi] with strictly growing
    deficit; returns (indices, slope, stderr) or None."""
    inside = (deficit >= lo) & (deficit <= hi)
    best: list[int] = []
    run: list[int] = []
    for i in range(len(t_m)):
        if inside[i] and (not run or deficit[i] > deficit[run[-1]]):
            run.append(i)
        else:
            run = [i] if inside[i] else []
        if len(run) > len(best):
            best = list(run)
    if len(best) < min_run:
        return None
    idx = np.array(best)
    x, y = t_m[idx], np.log(deficit[idx])
    A = np.c_[x, np.ones_like(x)]
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    dof = len(x) - 2
    s2 = float(np.sum((y - A @ coef) ** 2) / dof) if dof > 0 else 0.0
    se = np.sqrt(s2 / np.sum((x - x.mean()) ** 2))
    return idx, float(coef[0]), float(se)


def otoc_style_exponent(J: float, h: float = 1.0, L: int = 100, N: int = 1000, radius: float = 1e-4,
                        duration: float = 60.0, seed: int = 0, sample_dt: float = 0.005,
                        dt: float = DEFAULT_DT, hi: float = 1e-2, min_run: int = 4) -> OtocEstimate:
    """Exponent from the ensemble-averaged return of S1z towards +1."""
    params = HamiltonianParams(J, h, L)
    spec = EnsembleSpec(EnsembleKind.PERTURBED_PERIODIC, N, seed, radius=radius)
    series = ensemble_average(spec.draw(L), params, duration, sample_dt, dt)
    series.meta = {"kind": spec.kind.value, "N": N, "radius": radius, "seed": seed, "disk": "uniform-area"}
    t_m, s_m = refined_maxima(series.times, series.mean)
    deficit = 1.0 - s_m
    lo = 10 * radius ** 2
    fit = fit_maxima_growth(t_m, deficit, lo, hi, min_run)
    if fit is None:
        return OtocEstimate(0.0, "NoGrowth", 0.0, float("nan"), (lo, hi), np.array([]), np.array([]),
                            t_m, deficit, series)
    idx, slope, se = fit
    verdict = "Growth" if slope > 0 and slope > 3 * se else "NoGrowth"
    lam = slope / 2 if verdict == "Growth" else 0.0
    return OtocEstimate(lam, verdict, slope, se, (lo, hi), t_m[idx], np.log(deficit[idx]), t_m, deficit, series)

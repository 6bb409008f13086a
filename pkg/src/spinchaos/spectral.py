"""Wave-number and frequency resolved diagnostics.

Spatial side: Fourier intensities of spin configurations and Lyapunov
vectors, the lambda_p(L) fit with rounding to the allowed wave numbers,
unstable q-windows and the two-mode criterion, Brillouin-zone backfolding.
Temporal side: tapered power spectra of one spin component, peak picking and
frequency drift. Plus the split of the Hamiltonian into the mean-field part
H0 (a function of the total polarisation only) and the remainder H1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np
from scipy import optimize, signal, stats

from . import _kernels as K
from .chain import DEFAULT_DT, HamiltonianParams, NumericBlowup, SpinChainState
from .floquet import orbit_growth_rates


class PeakNotFound(LookupError):
    pass


class WindowTooShort(ValueError):
    pass


# --- spatial Fourier intensities -------------------------------------------

def wave_numbers(L: int) -> np.ndarray:
    """The L distinct q = 2 pi k / L with k in [-(L-1)//2, L//2]."""
    k = np.arange(-((L - 1) // 2), L // 2 + 1)
    return 2 * np.pi * k / L


def _intensity(x: np.ndarray, L: int) -> np.ndarray:
    # x: (..., L, 3) -> (..., L) ordered as wave_numbers(L)
    k = np.arange(-((L - 1) // 2), L // 2 + 1)
    X = np.fft.fft(x, axis=-2)
    P = np.sum(np.abs(X) ** 2, axis=-1) / L
    return P[..., k % L]


@dataclass
class ModeIntensitySeries:
    q: np.ndarray
    times: np.ndarray
    F: np.ndarray  # (len(times), len(q))

    @property
    def L(self) -> int:
        return len(self.q)

    def index(self, q: float) -> int:
        d = np.abs(np.angle(np.exp(1j * (self.q - q))))
        i = int(np.argmin(d))
        if d[i] > 1e-9:
            raise KeyError(f"q={q} is not an allowed wave number for L={self.L}")
        return i

    def mode(self, q: float) -> np.ndarray:
        return self.F[:, self.index(q)]

    def total(self) -> np.ndarray:
        return self.F.sum(axis=1)

    def rows(self):
        for t, Ft in zip(self.times, self.F):
            for q, f in zip(self.q, Ft):
                yield float(t), float(q), float(f)


def mode_intensities(spins, times=None) -> ModeIntensitySeries:
    """F_q = (1/L) |sum_m S_m exp(-i q m)|^2 summed over the three components.

    ``spins`` is a SpinChainState, an (L, 3) array or an (n, L, 3) series.
    """
    if isinstance(spins, SpinChainState):
        spins = spins.spins
    x = np.asarray(spins, dtype=float)
    single = x.ndim == 2
    if single:
        x = x[None]
    L = x.shape[1]
    F = _intensity(x, L)
    t = np.zeros(1) if times is None else np.asarray(times, dtype=float)
    return ModeIntensitySeries(wave_numbers(L), t, F)


def mode_series(state: SpinChainState, params: HamiltonianParams, duration: float,
                dt: float = DEFAULT_DT, stride: int = 100) -> ModeIntensitySeries:
    """Integrate and record F_q(t) for all q >= 0 every ``stride`` steps."""
    L = params.L
    q = 2 * np.pi * np.arange(L // 2 + 1) / L
    m = np.arange(L)
    n = int(round(duration / dt)) // stride + 1
    S = state.spins.copy()
    F = K.mode_record(S, params.J, params.h, dt, stride, n, np.cos(np.outer(q, m)), np.sin(np.outer(q, m)))
    if not np.all(np.isfinite(F)):
        raise NumericBlowup("non-finite spin components during integration")
    return ModeIntensitySeries(q, state.time + np.arange(n) * stride * dt, F)


def perturbed_uniform(L: int, amplitude: float, rng: np.random.Generator, direction=(0.0, 0.0, 1.0)) -> SpinChainState:
    """Uniform state with independent Gaussian tangent kicks of the given scale per site."""
    base = SpinChainState.uniform(L, direction).spins
    v = rng.normal(size=base.shape)
    v -= np.sum(v * base, axis=1, keepdims=True) * base
    S = base + amplitude * v
    return SpinChainState(S / np.linalg.norm(S, axis=1, keepdims=True))


# --- Lyapunov vectors -----------------------------------------------------

@dataclass
class VectorSpectrum:
    q: np.ndarray
    f: np.ndarray
    q_p: float

    def peak_share(self) -> float:
        """Fraction of the total weight carried by the +-q_p pair."""
        sel = np.isclose(np.abs(self.q), self.q_p, atol=1e-12)
        return float(self.f[sel].sum() / self.f.sum())

    def top_two(self) -> np.ndarray:
        return self.q[np.argsort(self.f)[::-1][:2]]


def lyapunov_vector_spectrum(vector, L: int | None = None) -> VectorSpectrum:
    """f(q) of a 3L deviation vector; q_p is |q| at the global maximum."""
    v = np.asarray(vector, dtype=float)
    if v.ndim == 1:
        v = v.reshape(-1, 3)
    L = v.shape[0] if L is None else L
    f = _intensity(v, L)
    q = wave_numbers(L)
    return VectorSpectrum(q, f, float(abs(q[int(np.argmax(f))])))


# --- lambda_p(L) and unstable windows -------------------------------------------

@dataclass(frozen=True)
class UnstableWindow:
    q0: float
    lam_max: float
    alpha: float

    def __post_init__(self):
        if not (self.lam_max > 0 and self.alpha > 0):
            raise ValueError("an unstable window needs lam_max > 0 and alpha > 0")

    def rate(self, q):
        return self.lam_max - self.alpha * (self.q0 - np.asarray(q)) ** 2

    @property
    def half_width(self) -> float:
        return float(np.sqrt(self.lam_max / self.alpha))

    @property
    def edges(self) -> tuple[float, float]:
        return self.q0 - self.half_width, self.q0 + self.half_width

    def contains(self, q, margin: float = 0.0):
        a, b = self.edges
        q = np.asarray(q)
        return (q > a - margin) & (q < b + margin)


# narrow second window at J = 1.76 as published; can be re-fitted with fit_window
PUBLISHED_NARROW_WINDOW = UnstableWindow(1.51, 0.104, 1.23e2)


def nearest_allowed(q0: float, L) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    return 2 * np.pi / L * np.round(q0 * L / (2 * np.pi))


def lambda_of_L(L, lam_max: float, q0: float, alpha: float) -> np.ndarray:
    """Parabolic law for lambda_p(L) with q rounded to the nearest allowed value."""
    return lam_max - alpha * (q0 - nearest_allowed(q0, L)) ** 2


@dataclass
class LambdaLFit:
    lam_max: float
    q0: float
    alpha: float
    rms: float
    L: np.ndarray
    lam: np.ndarray

    @property
    def window(self) -> UnstableWindow:
        return UnstableWindow(self.q0, self.lam_max, self.alpha)

    def predict(self, L) -> np.ndarray:
        """Predicted lambda_p; zero means Lyapunov stable."""
        return np.maximum(0.0, lambda_of_L(L, self.lam_max, self.q0, self.alpha))

    def predicted_stable(self, Ls) -> list[int]:
        return [int(L) for L in Ls if self.predict(L) == 0.0]


def _lin_fit_given_q0(q0, L, lam):
    x = (q0 - nearest_allowed(q0, L)) ** 2
    A = np.stack([np.ones_like(x), -x], axis=1)
    coef, *_ = np.linalg.lstsq(A, lam, rcond=None)
    r = lam - A @ coef
    return coef, float(np.sqrt(np.mean(r ** 2)))


def fit_lambda_of_L(L, lam, q_range=(0.05, np.pi), ngrid: int = 4000) -> LambdaLFit:
    """Least-squares fit of lambda_p(L) for samples with lambda_p > 0.

    The model is piecewise smooth in q0, so q0 is scanned on a grid (with
    the other two parameters solved linearly) and then polished locally.
    """
    L = np.asarray(L, dtype=float)
    lam = np.asarray(lam, dtype=float)
    keep = lam > 0
    L, lam = L[keep], lam[keep]
    if len(L) < 6:
        raise ValueError("need at least 6 samples with positive lambda_p")
    grid = np.linspace(*q_range, ngrid)
    scores = []
    for q0 in grid:
        coef, rms = _lin_fit_given_q0(q0, L, lam)
        scores.append(rms if coef[1] > 0 else np.inf)
    i = int(np.argmin(scores))
    step = grid[1] - grid[0]
    res = optimize.minimize_scalar(lambda q: _lin_fit_given_q0(q, L, lam)[1],
                                   bounds=(grid[i] - step, grid[i] + step), method="bounded")
    q0 = float(res.x) if res.fun <= scores[i] else float(grid[i])
    (lam_max, alpha), rms = _lin_fit_given_q0(q0, L, lam)
    if not alpha > 0:
        raise optimize.OptimizeWarning("fit did not produce a positive curvature")
    if rms > 0.2 * lam_max:
        raise RuntimeError(f"lambda(L) fit failed: rms {rms:.3g} exceeds 20% of lam_max {lam_max:.3g}")
    return LambdaLFit(float(lam_max), q0, float(alpha), rms, L, lam)


def fit_window(q, lam, level: float = 0.5) -> UnstableWindow:
    """Parabola lam_max - alpha (q0 - q)^2 through the growth-rate samples
    above ``level`` times the peak.

    The true lambda(q) falls off like a square root at the window edges, so
    only the top of the peak is used for the quadratic approximation.
    """
    q = np.asarray(q, dtype=float)
    lam = np.asarray(lam, dtype=float)
    m = lam > level * lam.max()
    if m.sum() < 3:
        raise ValueError("need at least three samples near the peak")
    c2, c1, c0 = np.polyfit(q[m], lam[m], 2)
    if c2 >= 0:
        raise ValueError("samples do not form a window (non-negative curvature)")
    alpha = -c2
    q0 = c1 / (2 * alpha)
    return UnstableWindow(float(q0), float(c0 + alpha * q0 ** 2), float(alpha))


def scan_window(J: float, q_lo: float, q_hi: float, n: int = 161, h: float = 1.0, level: float = 0.5):
    """Floquet growth rates on [q_lo, q_hi] and the fitted window."""
    q = np.linspace(q_lo, q_hi, n)
    lam = orbit_growth_rates(J, q, h=h)
    return q, lam, fit_window(q, lam, level)


@dataclass
class MechanismAResult:
    L: int
    operational: bool
    unstable: list  # (n, q, window index)


def mechanism_A_criterion(L: int, windows, margin: float = 0.0) -> MechanismAResult:
    """Count allowed q = 2 pi n / L (0 <= n <= L/2) inside any unstable window."""
    hits = []
    for n in range(L // 2 + 1):
        q = 2 * np.pi * n / L
        for w, win in enumerate(windows):
            if win.contains(q, margin):
                hits.append((n, q, w))
                break
    return MechanismAResult(L, len(hits) >= 2, hits)


@dataclass
class ReducedZone:
    u: int
    Q_u: float
    groups: list  # u lists of mode indices n, one per backfolded class
    all_coupled: bool

    @property
    def Q_u_turns(self) -> Fraction:
        """Q_u in units of 2 pi, exact."""
        return Fraction(self.u, len(sum(self.groups, [])))


def reduced_brillouin(L: int, n: int) -> ReducedZone:
    """Backfolding once a mode q_p = 2 pi n / L modulates the chain.

    Modes n' and n' + u with u = gcd(L, n) become coupled; the allowed q split
    into u classes of L/u members.
    """
    if not 0 < n < L:
        raise ValueError("need 0 < n < L")
    u = gcd(L, n)
    groups = [list(range(r, L, u)) for r in range(u)]
    return ReducedZone(u, 2 * np.pi * u / L, groups, u == 1)


# --- growth of harmonics ----------------------------------------------------------

@dataclass
class LadderFit:
    harmonic: int
    q: float
    rate: float
    ratio: float  # rate / (2 lambda_p)
    window: tuple
    decades: float


def growth_rate_ladder(series: ModeIntensitySeries, lam_p: float, q_p: float,
                       n_max: int = 3, floor_factor: float = 1e3, ceiling: float = 1e-3,
                       min_decades: float = 3.0) -> list[LadderFit]:
    """Log-linear growth rates of F at n q_p, n = 1..n_max.

    Each harmonic is fitted between the time it first exceeds
    ``floor_factor`` times its initial level and the time the leading mode
    reaches ``ceiling`` times L (end of linear growth).
    """
    t = series.times
    lead = series.mode(q_p)
    if lead.max() < ceiling * series.L:
        raise WindowTooShort("leading mode never left the linear regime: no growth detected")
    t_end = t[int(np.argmax(lead >= ceiling * series.L))]
    out = []
    for n in range(1, n_max + 1):
        q = np.angle(np.exp(1j * n * q_p))
        Fq = series.mode(abs(q))
        floor = Fq[: max(5, len(Fq) // 1000)].max()
        mask = t <= t_end
        above = np.nonzero(mask & (Fq > floor_factor * floor))[0]
        if len(above) < 10:
            raise WindowTooShort(f"harmonic {n} does not rise above its noise floor before saturation")
        i0, i1 = above[0], np.nonzero(mask)[0][-1]
        y = np.log(Fq[i0:i1 + 1])
        dec = float((y.max() - y.min()) / np.log(10))
        if dec < min_decades:
            raise WindowTooShort(f"harmonic {n} grows over only {dec:.1f} decades")
        fit = stats.linregress(t[i0:i1 + 1], y)
        out.append(LadderFit(n, float(abs(q)), float(fit.slope), float(fit.slope / (2 * lam_p)),
                             (float(t[i0]), float(t[i1])), dec))
    return out


# --- temporal spectra ----------------------------------------------------------------

@dataclass
class FrequencySpectrum:
    omega: np.ndarray
    power: np.ndarray
    t_start: float
    duration: float
    taper: float = 0.10

    @property
    def resolution(self) -> float:
        return float(self.omega[1] - self.omega[0])

    def rows(self):
        return [(float(w), float(p)) for w, p in zip(self.omega, self.power)]


def temporal_spectrum(values, sample_dt: float, t_start: float = 0.0, duration: float = 6000.0,
                      taper: float = 0.10, t0: float = 0.0) -> FrequencySpectrum:
    """One-sided power |F(omega)|^2 of a Tukey-tapered interval of a uniformly sampled signal.

    ``t0`` is the time of values[0]; the interval is [t_start, t_start + duration).
    """
    x = np.asarray(values, dtype=float)
    i0 = int(round((t_start - t0) / sample_dt))
    n = int(round(duration / sample_dt))
    if i0 < 0 or i0 + n > len(x):
        raise ValueError(f"interval [{t_start}, {t_start + duration}] exceeds the available data")
    seg = x[i0:i0 + n]
    seg = (seg - seg.mean()) * signal.windows.tukey(n, taper)
    X = np.fft.rfft(seg) * sample_dt
    omega = 2 * np.pi * np.fft.rfftfreq(n, sample_dt)
    return FrequencySpectrum(omega, np.abs(X) ** 2, t_start, duration, taper)


def find_peaks(spec: FrequencySpectrum, factor: float = 5.0, omega_max: float | None = None,
               dynamic_range: float = 1e-10):
    """Local maxima above ``factor`` x median power, with quadratic sub-bin refinement.

    Maxima weaker than ``dynamic_range`` x the strongest bin are window
    leakage, not spectral lines, and are dropped. Returns (omega, power)
    arrays sorted by decreasing power.
    """
    p = spec.power
    med = np.median(p[1:])
    idx, _ = signal.find_peaks(p, height=max(factor * med, dynamic_range * p.max()))
    idx = idx[(idx > 0) & (idx < len(p) - 1)]
    if omega_max is not None:
        idx = idx[spec.omega[idx] <= omega_max]
    w = spec.resolution
    om, pw = [], []
    for i in idx:
        a, b, c = np.log(p[i - 1:i + 2])
        den = a - 2 * b + c
        d = 0.5 * (a - c) / den if den != 0 else 0.0
        om.append(spec.omega[i] + d * w)
        pw.append(np.exp(b - 0.25 * (a - c) * d))
    order = np.argsort(pw)[::-1]
    return np.asarray(om)[order], np.asarray(pw)[order]


def peak_frequencies(spec: FrequencySpectrum, omega_p: float, rel: float = 0.25,
                     factor: float = 5.0) -> tuple[float, float]:
    """(omega0, omega1): strongest peak within rel*omega_p of omega_p, strongest below omega0/4."""
    om, pw = find_peaks(spec, factor)
    near = np.abs(om - omega_p) <= rel * omega_p
    if not near.any():
        raise PeakNotFound("no peak near the periodic-orbit frequency")
    w0 = float(om[near][0])
    low = (om < w0 / 4) & (om > 2 * spec.resolution)
    if not low.any():
        raise PeakNotFound("no low-frequency peak below omega0/4")
    return w0, float(om[low][0])


@dataclass
class FrequencyDrift:
    starts: np.ndarray
    omega0: np.ndarray
    omega1: np.ndarray
    resolution: float

    def rows(self):
        return [(float(t), float(a), float(b)) for t, a, b in zip(self.starts, self.omega0, self.omega1)]


def frequency_drift(values, sample_dt: float, omega_p: float, width: float = 6000.0,
                    starts=None, t0: float = 0.0) -> FrequencyDrift:
    """(omega0, omega1) in sliding windows; NaN where a peak is not found."""
    x = np.asarray(values)
    total = len(x) * sample_dt
    if starts is None:
        starts = np.arange(t0, t0 + total - width + 1e-9, width)
    w0, w1 = [], []
    res = np.nan
    for s in starts:
        spec = temporal_spectrum(x, sample_dt, s, width, t0=t0)
        res = spec.resolution
        try:
            a, b = peak_frequencies(spec, omega_p)
        except PeakNotFound:
            a = b = np.nan
        w0.append(a)
        w1.append(b)
    return FrequencyDrift(np.asarray(starts, dtype=float), np.array(w0), np.array(w1), float(res))


@dataclass
class GridFit:
    omega0: float
    omega1: float
    labels: list  # (omega, m, n) with omega ~ m omega0/2 + n omega1
    explained: float  # fraction of listed peaks on the grid
    tol: float


def fit_quasiperiodic_grid(peaks, omega0: float, omega1: float, m_max: int = 8, n_max: int = 30,
                           tol: float | None = None) -> GridFit:
    """Refine (omega0, omega1) by least squares over peaks labelled with the
    nearest grid point m omega0/2 + n omega1."""
    peaks = np.asarray(peaks, dtype=float)
    tol = 0.1 * omega1 if tol is None else tol
    for _ in range(3):
        labels = []
        for w in peaks:
            best = None
            for m in range(0, 2 * m_max + 1):
                n = int(round((w - m * omega0 / 2) / omega1))
                if abs(n) > n_max:
                    continue
                err = abs(w - m * omega0 / 2 - n * omega1)
                if best is None or err < best[0]:
                    best = (err, m, n)
            if best is not None and best[0] < tol:
                labels.append((w, best[1], best[2]))
        if len(labels) < 2:
            break
        A = np.array([[m / 2, n] for _, m, n in labels], dtype=float)
        y = np.array([w for w, _, _ in labels])
        sol, *_ = np.linalg.lstsq(A, y, rcond=None)
        if np.linalg.matrix_rank(A) == 2:
            omega0, omega1 = float(sol[0]), float(sol[1])
    return GridFit(omega0, omega1, labels, len(labels) / max(len(peaks), 1), tol)


# --- mean-field split ---------------------------------------------------------------

def h0_h1_split(state: SpinChainState, params: HamiltonianParams) -> tuple[float, float]:
    """H0 from the total polarisation M with J0 = 2J/L, and H1 evaluated
    term by term (nearest-neighbour part plus the all-to-all counter-term)."""
    S = state.spins if isinstance(state, SpinChainState) else np.asarray(state, dtype=float)
    L = S.shape[0]
    J, h = params.J, params.h
    J0 = 2 * J / L
    M = S.sum(axis=0)
    H0 = -0.5 * (J0 * M[0] ** 2 + 2 * J0 * M[1] ** 2) + h * M[0] + h * M[1]
    Sn = np.roll(S, -1, axis=0)
    nn = -np.sum(J * S[:, 0] * Sn[:, 0] + 2 * J * S[:, 1] * Sn[:, 1])
    xx = np.sum(np.outer(S[:, 0], S[:, 0]))
    yy = np.sum(np.outer(S[:, 1], S[:, 1]))
    H1 = nn + 0.5 * (J0 * xx + 2 * J0 * yy)
    return float(H0), float(H1)


def outside_weight(series: ModeIntensitySeries, q_p: float) -> np.ndarray:
    """Intensity outside the {0, +-q_p} subspace, from a q >= 0 or a full series."""
    q = series.q
    full = np.any(q < 0)
    mult = np.ones(len(q)) if full else np.where(np.isclose(q, 0) | np.isclose(q, np.pi), 1.0, 2.0)
    total = series.F @ mult
    keep = np.isclose(np.abs(q), 0.0) | np.isclose(np.abs(q), q_p)
    inside = series.F[:, keep] @ (np.ones(keep.sum()) if full else mult[keep])
    return total - inside


def _chain_length(q: np.ndarray) -> int:
    q = np.asarray(q)
    step = np.min(np.diff(np.sort(q)))
    return int(round(2 * np.pi / step))


def quasiperiodic_persistence(series: ModeIntensitySeries, q_p: float, threshold: float = 0.05,
                              t_from: float = 0.0) -> float:
    """Last time up to which the intensity outside the {0, +-q_p} subspace
    stayed below ``threshold * L`` continuously after ``t_from``."""
    t = series.times
    L = _chain_length(series.q)
    out = outside_weight(series, q_p)
    bad = np.nonzero((t >= t_from) & (out > threshold * L))[0]
    return float(t[-1] if len(bad) == 0 else t[bad[0]])

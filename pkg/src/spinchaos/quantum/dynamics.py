"""Initial states and unitary evolution of expectation values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .hamiltonian import EigenDecomposition, full_hamiltonian, site_operator, total_operator
from .operators import spin_operators
from .sector import MomentumSectorBasis, momentum_sector


def psi_up(basis: MomentumSectorBasis) -> np.ndarray:
    """All spins in m = S, as a k = 0 sector vector (it is its own orbit)."""
    v = np.zeros(basis.dim, dtype=complex)
    v[0] = 1.0  # representative 0 is the all-zero digit string
    return v


def psi_up_full(S, L: int) -> np.ndarray:
    d = int(round(2 * float(S))) + 1
    v = np.zeros(d ** L, dtype=complex)
    v[0] = 1.0
    return v


def random_inf_state(N: int, rng: np.random.Generator) -> np.ndarray:
    """Typical infinite-temperature pure state: |c|^2 ~ N exp(-N x), uniform phases."""
    w = rng.exponential(1.0 / N, size=N)
    c = np.sqrt(w) * np.exp(2j * np.pi * rng.random(N))
    return c / np.linalg.norm(c)


def psi_inf(S, L: int, seed=None) -> np.ndarray:
    """Site 1 in m = S, sites 2..L in a random infinite-temperature state (product basis)."""
    d = int(round(2 * float(S))) + 1
    rest = random_inf_state(d ** (L - 1), np.random.default_rng(seed))
    v = np.zeros(d ** L, dtype=complex)
    v[: d ** (L - 1)] = rest  # first digit 0 <-> m_1 = S
    return v


def sz1_full(S, L: int) -> sp.csr_matrix:
    return site_operator(spin_operators(S).Sz, 0, L)


def sz_mean_sector(eig: EigenDecomposition) -> np.ndarray:
    """(1/L) sum_i Sz_i in the k = 0 basis; equals Sz_1 on translation-invariant states."""
    b = eig.basis
    m = b.S - b.rep_digits()
    return np.diag(m.mean(axis=1)).astype(complex)


@dataclass
class ExpectationSeries:
    times: np.ndarray
    values: np.ndarray
    norm: np.ndarray
    energy: np.ndarray
    label: str = ""

    def rows(self):
        return [("t", "value")] + [(float(t), float(v)) for t, v in zip(self.times, self.values)]


def evolve_observable(eig: EigenDecomposition, psi0: np.ndarray, observable: np.ndarray, times) -> ExpectationSeries:
    """<psi(t)|O|psi(t)> for psi0 and O given in the k = 0 sector basis."""
    psi0 = np.asarray(psi0, dtype=complex)
    O = np.asarray(observable)
    if psi0.shape[0] != eig.vectors.shape[0] or O.shape != (psi0.shape[0],) * 2:
        raise ValueError("state, observable and eigenbasis dimensions differ")
    times = np.asarray(times, dtype=float)
    c = eig.coefficients(psi0)
    Oe = eig.vectors.conj().T @ O @ eig.vectors
    A = c[None, :] * np.exp(-1j * np.outer(times, eig.energies))
    vals = np.einsum("tn,nm,tm->t", A.conj(), Oe, A).real
    norm = np.sqrt(np.sum(np.abs(A) ** 2, axis=1))
    energy = (np.abs(A) ** 2) @ eig.energies
    return ExpectationSeries(times, vals, norm, energy)


def evolve_full(H: sp.spmatrix, psi0: np.ndarray, observable: sp.spmatrix, t_max: float, n_times: int) -> ExpectationSeries:
    """Krylov-type propagation in the product basis on a uniform time grid [0, t_max]."""
    if psi0.shape[0] != H.shape[0]:
        raise ValueError("state and Hamiltonian dimensions differ")
    A = (-1j * H).tocsc()
    psis = expm_multiply(A, psi0, start=0.0, stop=t_max, num=n_times, endpoint=True)
    Opsi = (observable @ psis.T).T
    Hpsi = (H @ psis.T).T
    vals = np.einsum("ti,ti->t", psis.conj(), Opsi).real
    energy = np.einsum("ti,ti->t", psis.conj(), Hpsi).real
    norm = np.linalg.norm(psis, axis=1)
    return ExpectationSeries(np.linspace(0.0, t_max, n_times), vals, norm, energy)


@dataclass
class Relaxation:
    S: float
    L: int
    Jt: float
    up: ExpectationSeries
    inf: ExpectationSeries | None
    L_inf: int | None = None
    seed: int | None = None

    def rows(self):
        hdr = ("t", "sz1_up", "sz1_inf")
        out = [hdr]
        for k, t in enumerate(self.up.times):
            vi = float(self.inf.values[k]) if self.inf is not None and k < len(self.inf.values) else float("nan")
            out.append((float(t), float(self.up.values[k]), vi))
        return out


def relaxation(S, L: int, Jt: float, h: float = 1.0, t_max: float = 10.0, n_times: int = 201,
               L_inf: int | None = None, seed=0, eig: EigenDecomposition | None = None) -> Relaxation:
    """<Sz_1(t)> from Psi_up (sector eigenbasis) and from Psi_inf (product basis, length L_inf)."""
    from .hamiltonian import build_hamiltonian, diagonalize

    if eig is None:
        eig = diagonalize(build_hamiltonian(S, L, Jt, h), parities=(+1,))
    times = np.linspace(0.0, t_max, n_times)
    up = evolve_observable(eig, psi_up(eig.basis), sz_mean_sector(eig), times)
    up.label = "up"
    inf = None
    if L_inf != 0:
        Li = L if L_inf is None else L_inf
        Hf = full_hamiltonian(S, Li, Jt, h)
        inf = evolve_full(Hf, psi_inf(S, Li, seed), sz1_full(S, Li), t_max, n_times)
        inf.label = "inf"
    return Relaxation(float(S), L, Jt, up, inf, L_inf, seed)


@dataclass
class BaselineScan:
    S: float
    L: int
    Jt: np.ndarray
    baseline: np.ndarray   # time average of <Sz_1>/S from Psi_up
    amplitude: np.ndarray  # std over the same window
    t_window: tuple[float, float]

    def crossover(self, level: float = 0.5) -> float:
        """First J~ (linear interpolation) where the baseline reaches ``level`` of its scan maximum."""
        b = self.baseline
        thr = level * b.max()
        k = int(np.argmax(b >= thr))
        if k == 0:
            return float(self.Jt[0])
        x0, x1, y0, y1 = self.Jt[k - 1], self.Jt[k], b[k - 1], b[k]
        return float(x0 + (thr - y0) * (x1 - x0) / (y1 - y0))

    def transition(self, zero_frac: float = 0.1, positive_ratio: float = 0.5) -> tuple[float, float]:
        """(last J~ of the zero-baseline regime, first J~ of clearly positive-baseline oscillations).

        Zero regime: every point up to it has |baseline| <= ``zero_frac`` times the scan maximum.
        Positive regime: baseline >= ``positive_ratio`` times the oscillation amplitude.
        """
        b, a = self.baseline, self.amplitude
        zero = np.abs(b) <= zero_frac * b.max()
        k = int(np.argmin(zero)) if not zero.all() else len(b)
        lo = float(self.Jt[k - 1]) if k > 0 else float("nan")
        pos = np.flatnonzero(b >= positive_ratio * a)
        hi = float(self.Jt[pos[0]]) if len(pos) else float("nan")
        return lo, hi

    def rows(self):
        return [("Jt", "baseline", "amplitude")] + [
            (float(a), float(b), float(c)) for a, b, c in zip(self.Jt, self.baseline, self.amplitude)]


def baseline_scan(S, L: int, Jt_grid, h: float = 1.0, t_window=(2.0, 20.0), n_times: int = 721,
                  runner=map) -> BaselineScan:
    """Time-averaged Psi_up polarisation of site 1 as a function of J~."""
    jobs = [(S, L, float(J), h, t_window, n_times) for J in Jt_grid]
    res = np.array(list(runner(_baseline_point, jobs)))
    return BaselineScan(float(S), L, np.asarray(Jt_grid, float), res[:, 0], res[:, 1], tuple(t_window))


def _baseline_point(job):
    S, L, J, h, (t0, t1), n = job
    r = relaxation(S, L, J, h, t_max=t1, n_times=n, L_inf=0)
    v = r.up.values[r.up.times >= t0] / float(S)
    return float(v.mean()), float(v.std())

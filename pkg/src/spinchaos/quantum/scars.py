"""Entanglement, overlap and participation diagnostics for k = 0 eigenstates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonian import EigenDecomposition, build_hamiltonian, diagonalize
from .operators import spin_operators
from .sector import MomentumSectorBasis

ENTROPY_CLIP = 1e-14


def entanglement_entropy(psi_full: np.ndarray, d: int, L: int, cut: int | None = None) -> float:
    """Von Neumann entropy (nats) of sites 1..cut for a product-basis state vector."""
    return float(entanglement_entropies(np.asarray(psi_full)[:, None], d, L, cut)[0])


def entanglement_entropies(psis: np.ndarray, d: int, L: int, cut: int | None = None) -> np.ndarray:
    """Entropies for the columns of ``psis`` (product basis)."""
    cut = L // 2 if cut is None else cut
    n = psis.shape[1]
    M = psis.T.reshape(n, d ** cut, d ** (L - cut))
    s = np.linalg.svd(M, compute_uv=False)
    p = np.clip(s ** 2, ENTROPY_CLIP, None)
    p = p / p.sum(axis=1, keepdims=True)
    return -np.sum(p * np.log(p), axis=1)


def eigenstate_entropies(eig: EigenDecomposition, cut: int | None = None, chunk: int = 128) -> np.ndarray:
    b = eig.basis
    out = np.empty(len(eig))
    for k in range(0, len(eig), chunk):
        lifted = np.asarray(b.embedding() @ eig.vectors[:, k:k + chunk])
        out[k:k + chunk] = entanglement_entropies(lifted, b.d, b.L, cut)
    return out


def outlier_scores(values: np.ndarray, window: int = 5) -> np.ndarray:
    """(median of the +-window neighbours - value) / MAD of those neighbours."""
    n = len(values)
    score = np.zeros(n)
    for i in range(n):
        nb = np.r_[values[max(0, i - window):i], values[i + 1:i + 1 + window]]
        med = np.median(nb)
        mad = np.median(np.abs(nb - med))
        score[i] = (med - values[i]) / mad if mad > 0 else 0.0
    return score


@dataclass
class ScarReport:
    S: float
    L: int
    Jt: float
    energies: np.ndarray
    entropy: np.ndarray      # nats
    overlap: np.ndarray      # |<up|E_n>|^2
    score: np.ndarray
    threshold: float = 5.0

    @property
    def entropy_normalized(self) -> np.ndarray:
        return self.entropy / self.entropy.max()

    @property
    def central(self) -> np.ndarray:
        n = len(self.energies)
        idx = np.arange(n)
        return (idx >= n // 4) & (idx < n - n // 4)

    @property
    def top_overlap(self) -> np.ndarray:
        return np.argsort(self.overlap)[::-1][:5]

    @property
    def scars(self) -> np.ndarray:
        return np.flatnonzero(self.central & (self.score > self.threshold))

    @property
    def max_overlap(self) -> int:
        return int(np.argmax(self.overlap))

    def rows(self):
        top = set(self.top_overlap.tolist())
        scars = set(self.scars.tolist())
        out = [("n", "E_n", "entropy_raw", "entropy_normalized", "overlap", "outlier_score", "flags")]
        en = self.entropy_normalized
        for n in range(len(self.energies)):
            flags = ";".join(f for f, on in (("top5", n in top), ("scar", n in scars)) if on)
            out.append((n, float(self.energies[n]), float(self.entropy[n]), float(en[n]),
                        float(self.overlap[n]), float(self.score[n]), flags))
        return out


def scar_report(S, L: int, Jt: float, h: float = 1.0, eig: EigenDecomposition | None = None,
                window: int = 5, threshold: float = 5.0) -> ScarReport:
    if eig is None:
        eig = diagonalize(build_hamiltonian(S, L, Jt, h))
    ent = eigenstate_entropies(eig)
    ov = np.abs(eig.vectors[0, :]) ** 2  # Psi_up is the first k = 0 basis state
    return ScarReport(eig.basis.S, L, Jt, eig.energies, ent, ov, outlier_scores(ent, window), threshold)


def participation_ratio(overlaps) -> float:
    """1 / sum_n |<up|E_n>|^4 from the squared overlaps."""
    p = np.asarray(overlaps, dtype=float)
    return float(1.0 / np.sum(p ** 2))


@dataclass
class PRScan:
    S: float
    L: int
    Jt: np.ndarray
    P: np.ndarray
    peak: float          # vertex of the half-prominence parabola (nan if none)
    curvature: float
    prominence: float    # of the fitted parabola over the scan, 0 without a concave interior vertex
    raw_prominence: float

    @property
    def well_defined(self) -> bool:
        return bool(np.isfinite(self.peak) and self.prominence >= 0.2)

    def rows(self):
        return [("Jt", "P")] + [(float(a), float(b)) for a, b in zip(self.Jt, self.P)]


def peak_prominence(y) -> float:
    """Height of the global maximum above the higher of its two flanking minima, relative to it."""
    y = np.asarray(y, dtype=float)
    k = int(np.argmax(y))
    base = max(y[:k + 1].min(), y[k:].min())
    return float((y[k] - base) / y[k])


def locate_peak(x, y, level: float = 0.5) -> tuple[float, float, float]:
    """Least-squares parabola through the points above ``level`` of the scan's
    (max - min) range. Returns (vertex, curvature, prominence); vertex is nan
    unless the parabola is concave with its vertex inside the fitted points."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    base = y.min()
    sel = y >= base + level * (y.max() - base)
    if sel.sum() < 3:
        return float("nan"), 0.0, 0.0
    c = np.polyfit(x[sel], y[sel], 2)
    if c[0] >= 0:
        return float("nan"), float(c[0]), 0.0
    v = -c[1] / (2 * c[0])
    if not x[sel].min() <= v <= x[sel].max():
        return float("nan"), float(c[0]), 0.0
    top = np.polyval(c, v)
    ends = min(np.polyval(c, x[0]), np.polyval(c, x[-1]))
    return float(v), float(c[0]), float((top - max(ends, 0.0)) / top)


def participation_ratio_scan(S, L: int, Jt_grid, h: float = 1.0, runner=map) -> PRScan:
    Jt_grid = np.asarray(Jt_grid, dtype=float)
    P = np.array(list(runner(_pr_point, [(S, L, J, h) for J in Jt_grid])))
    v, c, prom = locate_peak(Jt_grid, P)
    return PRScan(float(S), L, Jt_grid, P, v, c, prom, peak_prominence(P))


def _pr_point(job) -> float:
    S, L, J, h = job
    # Psi_up is reflection even; the odd block never overlaps it
    eig = diagonalize(build_hamiltonian(S, L, J, h), parities=(+1,))
    return participation_ratio(np.abs(eig.vectors[0, :]) ** 2)


def coherent_amplitudes(S, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Single-spin amplitudes <m|n(theta, phi)> for m = S..-S, shape (..., 2S+1)."""
    ops = spin_operators(S)
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    out = np.empty(theta.shape + (ops.dim,), dtype=complex)
    for idx in np.ndindex(theta.shape):
        out[idx] = ops.rotation(theta[idx], phi[idx])[:, 0]
    return out


@dataclass
class SphericalMap:
    theta: np.ndarray
    phi: np.ndarray
    values: np.ndarray   # (n_theta, n_phi)

    def rows(self):
        out = [("theta", "phi", "value")]
        for i, t in enumerate(self.theta):
            for j, p in enumerate(self.phi):
                out.append((float(t), float(p), float(self.values[i, j])))
        return out


def default_grid(n_theta: int = 90, n_phi: int = 180):
    theta = np.linspace(0.0, np.pi, n_theta)
    phi = np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False)
    return theta, phi


def spherical_overlap_map(vector: np.ndarray, basis: MomentumSectorBasis, theta=None, phi=None,
                          chunk: int = 2048) -> SphericalMap:
    """|<E_n|Psi(theta, phi)>|^2 for a k = 0 eigenvector; Psi is the uniformly rotated all-up state.

    A translation-invariant product state has k = 0 coefficient sqrt(R_r) prod_i c(m_i) on
    representative r, so the map needs no product-basis vectors.
    """
    if theta is None or phi is None:
        theta, phi = default_grid()
    T, P = np.meshgrid(theta, phi, indexing="ij")
    amp = coherent_amplitudes(basis.S, T.ravel(), P.ravel())  # (G, d)
    dig = basis.rep_digits()
    w = np.sqrt(basis.orbit_size) * np.conj(vector)  # <E_n|r> sqrt(R_r)
    vals = np.empty(T.size)
    for k in range(0, T.size, chunk):
        a = amp[k:k + chunk]
        prod = np.ones((a.shape[0], basis.dim), dtype=complex)
        for i in range(basis.L):
            prod *= a[:, dig[:, i]]
        vals[k:k + chunk] = np.abs(prod @ w) ** 2
    return SphericalMap(np.asarray(theta), np.asarray(phi), vals.reshape(T.shape))


def orbit_band_ratio(smap: SphericalMap, orbit: np.ndarray, on: float = 0.1, off: float = 0.5) -> float:
    """Mean map value within angle ``on`` of the orbit over the median beyond angle ``off``."""
    T, P = np.meshgrid(smap.theta, smap.phi, indexing="ij")
    n = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1).reshape(-1, 3)
    o = np.asarray(orbit, dtype=float)
    o = o / np.linalg.norm(o, axis=1, keepdims=True)
    ang = np.full(len(n), np.pi)
    for k in range(0, len(o), 200):
        cosang = np.clip(n @ o[k:k + 200].T, -1, 1)
        ang = np.minimum(ang, np.arccos(cosang.max(axis=1)))
    v = smap.values.ravel()
    on_v, off_v = v[ang < on], v[ang > off]
    if len(on_v) == 0 or len(off_v) == 0:
        raise ValueError("band definition leaves no grid points on or off the orbit")
    return float(on_v.mean() / np.median(off_v))


def generic_neighbour(eig: EigenDecomposition, n: int) -> int:
    """Even-parity eigenstate closest in energy to ``n`` whose overlap with Psi_up is at most the median."""
    ov = np.abs(eig.vectors[0, :]) ** 2
    cand = np.flatnonzero((eig.parity > 0) & (ov <= np.median(ov[eig.parity > 0])))
    cand = cand[cand != n]
    if len(cand) == 0:
        raise ValueError("no generic even-parity eigenstate")
    return int(cand[np.argmin(np.abs(eig.energies[cand] - eig.energies[n]))])

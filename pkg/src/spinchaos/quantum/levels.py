"""Adjacent-gap ratio statistic of a spectrum."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

R_GOE = 0.5359
R_POISSON = 2 * np.log(2) - 1


class TooFewLevels(ValueError):
    pass


@dataclass
class RStatistic:
    mean: float
    stderr: float
    n_ratios: int
    n_degenerate: int


def gap_ratios(energies, trim: float = 0.1) -> tuple[np.ndarray, int]:
    """Ratios min(s_n, s_n-1) / max(s_n, s_n-1) after trimming a fraction
    ``trim`` of levels at each spectral edge. Zero gaps count as r = 0."""
    E = np.sort(np.asarray(energies, dtype=float))
    k = int(np.floor(trim * len(E)))
    if k:
        E = E[k:len(E) - k]
    s = np.diff(E)
    a, b = s[1:], s[:-1]
    hi = np.maximum(a, b)
    degenerate = hi <= 1e-12 * max(np.ptp(E), 1.0)
    r = np.where(degenerate, 0.0, np.minimum(a, b) / np.where(degenerate, 1.0, hi))
    zero_gap = int(np.sum(s <= 1e-12 * max(np.ptp(E), 1.0)))
    return r, zero_gap


def r_statistic(energies, trim: float = 0.1, min_levels: int = 100) -> RStatistic:
    if len(energies) < min_levels:
        raise TooFewLevels(f"{len(energies)} levels < {min_levels}")
    r, nz = gap_ratios(energies, trim)
    return RStatistic(float(r.mean()), float(r.std(ddof=1) / np.sqrt(len(r))), len(r), nz)


def pooled_r_statistic(sectors, trim: float = 0.1, min_levels: int = 100) -> RStatistic:
    """Pool ratios from several independent symmetry sectors (each trimmed separately)."""
    rs, nz = [], 0
    for E in sectors:
        if len(E) < 3:
            continue
        r, z = gap_ratios(E, trim)
        rs.append(r)
        nz += z
    r = np.concatenate(rs)
    if sum(len(E) for E in sectors) < min_levels:
        raise TooFewLevels(f"fewer than {min_levels} levels")
    return RStatistic(float(r.mean()), float(r.std(ddof=1) / np.sqrt(len(r))), len(r), nz)

"""Exact diagonalisation of the quantum spin-S chain in the zero-momentum sector."""

from .dynamics import (ExpectationSeries, Relaxation, evolve_full, evolve_observable, psi_inf, psi_up,
                       psi_up_full, relaxation, sz1_full, sz_mean_sector)
from .hamiltonian import (EigenDecomposition, SectorHamiltonian, build_hamiltonian, diagonalize,
                          full_hamiltonian, internal_coupling)
from .levels import R_GOE, R_POISSON, RStatistic, pooled_r_statistic, r_statistic
from .operators import InvalidSpin, SpinOperators, spin_operators
from .scars import (PRScan, ScarReport, SphericalMap, entanglement_entropy, orbit_band_ratio,
                    participation_ratio, participation_ratio_scan, scar_report, spherical_overlap_map)
from .sector import MomentumSectorBasis, SectorTooLarge, burnside_count, momentum_sector

__all__ = [
    "EigenDecomposition", "ExpectationSeries", "InvalidSpin", "MomentumSectorBasis", "PRScan",
    "RStatistic", "R_GOE", "R_POISSON", "Relaxation", "ScarReport", "SectorHamiltonian",
    "SectorTooLarge", "SphericalMap", "SpinOperators", "build_hamiltonian", "burnside_count",
    "diagonalize", "entanglement_entropy", "evolve_full", "evolve_observable", "full_hamiltonian",
    "internal_coupling", "momentum_sector", "orbit_band_ratio", "participation_ratio",
    "participation_ratio_scan", "pooled_r_statistic", "psi_inf", "psi_up", "psi_up_full",
    "r_statistic", "relaxation", "scar_report", "spherical_overlap_map", "spin_operators",
    "sz1_full", "sz_mean_sector",
]

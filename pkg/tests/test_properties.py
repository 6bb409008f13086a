"""Randomised invariants of the integrator, spectra, operators and fits."""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from spinchaos.chain import HamiltonianParams, energy, integrate, random_state
from spinchaos.ensemble import EnsembleKind, EnsembleSpec
from spinchaos.lyapunov import ReferenceKind, benettin
from spinchaos.quantum.hamiltonian import build_hamiltonian, diagonalize, full_hamiltonian
from spinchaos.quantum.operators import spin_operators
from spinchaos.spectral import fit_lambda_of_L, lambda_of_L, mode_intensities

SETTINGS = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
seeds = st.integers(0, 2 ** 32 - 1)


@SETTINGS
@given(seed=seeds, L=st.integers(2, 12), J=st.floats(0.0, 3.0), h=st.floats(0.1, 2.0))
def test_norm_and_energy_conserved(seed, L, J, h):
    p = HamiltonianParams(J, h, L)
    s0 = random_state(L, np.random.default_rng(seed))
    tr = integrate(s0, 5.0, p)
    np.testing.assert_allclose(np.linalg.norm(tr.final.spins, axis=1), 1, atol=1e-9)
    assert energy(tr.final, p) == pytest.approx(energy(s0, p), abs=1e-8 * L)


@SETTINGS
@given(seed=seeds, L=st.integers(2, 40))
def test_parseval(seed, L):
    s = random_state(L, np.random.default_rng(seed)).spins
    F = mode_intensities(s[None]).F[0]
    # |S_m| = 1, so the intensities sum to L
    assert F.sum() == pytest.approx(L)
    assert len(F) == L and np.all(F >= 0)


@settings(max_examples=20, deadline=None)
@given(S=st.sampled_from([0.5, 1, 1.5, 2]), theta=st.floats(0, np.pi), phi=st.floats(0, 2 * np.pi))
def test_operator_algebra(S, theta, phi):
    o = spin_operators(S)
    for A, B, C in ((o.Sx, o.Sy, o.Sz), (o.Sy, o.Sz, o.Sx), (o.Sz, o.Sx, o.Sy)):
        np.testing.assert_allclose(A @ B - B @ A, 1j * C, atol=1e-12)
    U = o.rotation(theta, phi)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(o.dim), atol=1e-12)
    v = U[:, 0]
    n = np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
    mean = np.array([(v.conj() @ M @ v).real for M in (o.Sx, o.Sy, o.Sz)])
    np.testing.assert_allclose(mean, S * n, atol=1e-10)


@settings(max_examples=15, deadline=None)
@given(L=st.integers(3, 6), Jt=st.floats(0.0, 3.0), h=st.floats(0.1, 2.0))
def test_sector_spectrum_is_subset_of_full(L, Jt, h):
    full = np.linalg.eigvalsh(full_hamiltonian(0.5, L, Jt, h).toarray())
    sec = diagonalize(build_hamiltonian(0.5, L, Jt, h)).energies
    # every k = 0 level appears in the full spectrum
    gap = np.min(np.abs(sec[:, None] - full[None, :]), axis=1)
    assert gap.max() < 1e-9
    # and the k = 0 block carries its share of the trace
    assert len(sec) < len(full)


@settings(max_examples=15, deadline=None)
@given(lam_max=st.floats(0.1, 0.6), q0=st.floats(0.6, 2.4), alpha=st.floats(2.0, 15.0))
def test_lambda_of_L_fit_round_trip(lam_max, q0, alpha):
    L = np.arange(4, 61)
    lam = lambda_of_L(L, lam_max, q0, alpha)
    keep = lam > 0
    if keep.sum() < 6:
        return
    fit = fit_lambda_of_L(L[keep], lam[keep])
    assert fit.lam_max == pytest.approx(lam_max, rel=1e-3)
    assert fit.q0 == pytest.approx(q0, rel=1e-3)
    assert fit.alpha == pytest.approx(alpha, rel=1e-3)


@settings(max_examples=5, deadline=None)
@given(seed=seeds)
def test_determinism_per_seed(seed):
    spec = EnsembleSpec(EnsembleKind.PERTURBED_PERIODIC, 8, seed, radius=1e-3)
    np.testing.assert_array_equal(spec.draw(5), spec.draw(5))
    p = HamiltonianParams(1.76, 1.0, 6)
    s0 = random_state(6, np.random.default_rng(seed))
    a = benettin(s0, p, T_R=1.0, M=5, seed=seed, kind=ReferenceKind.ERGODIC)
    b = benettin(s0, p, T_R=1.0, M=5, seed=seed, kind=ReferenceKind.ERGODIC)
    assert a.exponent == b.exponent
    np.testing.assert_array_equal(a.log_stretch, b.log_stretch)

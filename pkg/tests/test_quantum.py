import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp

from spinchaos.quantum.dynamics import (evolve_full, evolve_observable, psi_inf, psi_up, psi_up_full,
                                        sz1_full, sz_mean_sector)
from spinchaos.quantum.hamiltonian import (build_hamiltonian, diagonalize, full_hamiltonian,
                                           internal_coupling, site_operator)
from spinchaos.quantum.levels import R_POISSON, TooFewLevels, gap_ratios, r_statistic
from spinchaos.quantum.operators import InvalidSpin, check_spin, spin_operators
from spinchaos.quantum.scars import (entanglement_entropy, generic_neighbour, locate_peak,
                                     participation_ratio, peak_prominence, scar_report,
                                     spherical_overlap_map)
from spinchaos.quantum.sector import burnside_count, momentum_sector, translate

SPINS = [0.5, 1, 1.5, 2]


def translation_matrix(d, L):
    N = d ** L
    states = np.arange(N)
    return sp.csr_matrix((np.ones(N), (translate(states, d, L), states)), shape=(N, N))


@pytest.mark.parametrize("S", SPINS)
def test_spin_algebra(S):
    o = spin_operators(S)
    comm = o.Sx @ o.Sy - o.Sy @ o.Sx
    np.testing.assert_allclose(comm, 1j * o.Sz, atol=1e-12)
    cas = o.Sx @ o.Sx + o.Sy @ o.Sy + o.Sz @ o.Sz
    np.testing.assert_allclose(cas, S * (S + 1) * np.eye(o.dim), atol=1e-12)
    assert o.m[0] == S


def test_pauli_half():
    o = spin_operators(0.5)
    np.testing.assert_allclose(o.Sz, np.diag([0.5, -0.5]))
    np.testing.assert_allclose(o.Sx, 0.5 * np.array([[0, 1], [1, 0]]))
    np.testing.assert_allclose(o.Sy, 0.5 * np.array([[0, -1j], [1j, 0]]))


@pytest.mark.parametrize("bad", [0, 0.25, 2.5, -1, 3])
def test_invalid_spin(bad):
    with pytest.raises(InvalidSpin):
        check_spin(bad)


def test_two_site_spectrum_against_pauli_build():
    Jt, h = 0.7, 1.0
    J = Jt / np.sqrt(0.75)
    sx = np.array([[0, 1], [1, 0]]) / 2
    sy = np.array([[0, -1j], [1j, 0]]) / 2
    I = np.eye(2)
    # periodic L = 2: the bond appears once from each site
    H = -2 * (J * np.kron(sx, sx) + 2 * J * np.kron(sy, sy))
    H = H + h * (np.kron(sx + sy, I) + np.kron(I, sx + sy))
    ours = full_hamiltonian(0.5, 2, Jt, h).toarray()
    np.testing.assert_allclose(ours, H, atol=1e-12)
    np.testing.assert_allclose(np.linalg.eigvalsh(ours), np.linalg.eigvalsh(H), atol=1e-12)


@pytest.mark.parametrize("S,L", [(0.5, 5), (1, 4), (2, 3)])
def test_hamiltonian_hermitian_and_translation_invariant(S, L):
    H = full_hamiltonian(S, L, 1.3)
    d = int(2 * S + 1)
    assert abs(H - H.conj().T).max() < 1e-12
    T = translation_matrix(d, L)
    assert abs(H @ T - T @ H).max() < 1e-12


@pytest.mark.parametrize("S", SPINS)
def test_up_state_has_zero_energy(S):
    L = 4
    H = full_hamiltonian(S, L, 1.1)
    v = psi_up_full(S, L)
    assert abs(v.conj() @ (H @ v)) < 1e-12


def test_sector_dimension_burnside():
    assert momentum_sector(2, 6).dim == burnside_count(5, 6) == 2635
    assert momentum_sector(0.5, 12).dim == burnside_count(2, 12)


@pytest.mark.parametrize("L", [3, 4, 5, 6])
def test_sector_spectrum_matches_projected_full(L):
    S, Jt = 0.5, 0.9
    d = 2
    H = full_hamiltonian(S, L, Jt).toarray()
    T = translation_matrix(d, L).toarray()
    P = sum(np.linalg.matrix_power(T, j) for j in range(L)) / L
    Q = sla.orth(P)
    ref = np.linalg.eigvalsh(Q.conj().T @ H @ Q)
    eig = diagonalize(build_hamiltonian(S, L, Jt))
    np.testing.assert_allclose(eig.energies, ref, atol=1e-10)


def test_eigendecomposition_quality():
    eig = diagonalize(build_hamiltonian(1, 5, 1.2))
    assert eig.residual() < 1e-12
    V = eig.vectors
    np.testing.assert_allclose(V.conj().T @ V, np.eye(V.shape[1]), atol=1e-10)
    assert set(np.unique(eig.parity)) <= {-1, 1}
    # Psi_up lives in the even block
    assert np.allclose(eig.vectors[0, eig.parity < 0], 0)


def test_coupling_rescaling():
    assert internal_coupling(1.0, 0.5) == pytest.approx(1 / np.sqrt(0.75))


def test_poisson_ratio(rng):
    E = np.cumsum(rng.exponential(size=200_000))
    r, nz = gap_ratios(E)
    assert nz == 0
    assert r.mean() == pytest.approx(R_POISSON, abs=0.01)


def test_equally_spaced_ratio_is_one():
    st = r_statistic(np.arange(300.0))
    assert st.mean == pytest.approx(1.0)


def test_too_few_levels():
    with pytest.raises(TooFewLevels):
        r_statistic(np.arange(10.0))


def test_degenerate_gaps_count_as_zero():
    r, nz = gap_ratios([0, 1, 1, 2, 3], trim=0)
    assert nz == 1
    assert r[0] == 0 and r[1] == 0


@pytest.mark.parametrize("S", [0.5, 1.5])
def test_initial_states(S):
    L = 5
    up = psi_up_full(S, L)
    inf = psi_inf(S, L, seed=3)
    Sz1 = sz1_full(S, L)
    for v in (up, inf):
        assert np.linalg.norm(v) == pytest.approx(1.0)
        assert (v.conj() @ (Sz1 @ v)).real == pytest.approx(S)


def test_inf_state_is_typical():
    S, L = 1, 7
    v = psi_inf(S, L, seed=11)
    Sz2 = site_operator(spin_operators(S).Sz, 1, L)
    dim = 3 ** (L - 1)
    assert abs((v.conj() @ (Sz2 @ v)).real) < 3 / np.sqrt(dim)


def test_evolution_conserves_norm_and_energy():
    S, L, Jt = 1, 5, 1.5
    eig = diagonalize(build_hamiltonian(S, L, Jt))
    t = np.linspace(0, 10, 51)
    ser = evolve_observable(eig, psi_up(eig.basis), sz_mean_sector(eig), t)
    np.testing.assert_allclose(ser.norm, 1, atol=1e-10)
    np.testing.assert_allclose(ser.energy, 0, atol=1e-10)
    assert ser.values[0] == pytest.approx(S)

    H = full_hamiltonian(S, L, Jt)
    full = evolve_full(H, psi_up_full(S, L), sz1_full(S, L), 10.0, 51)
    np.testing.assert_allclose(full.norm, 1, atol=1e-8)
    np.testing.assert_allclose(full.energy, 0, atol=1e-8)
    # Psi_up is translation invariant, so the sector and product-basis routes agree
    np.testing.assert_allclose(full.values, ser.values, atol=1e-7)


def test_entropy_limits(rng):
    d, L = 2, 4
    prod = np.zeros(d ** L)
    prod[5] = 1
    assert entanglement_entropy(prod, d, L) == pytest.approx(0, abs=1e-9)
    singlet = np.zeros(4)
    singlet[1], singlet[2] = 1 / np.sqrt(2), -1 / np.sqrt(2)
    assert entanglement_entropy(singlet, 2, 2) == pytest.approx(np.log(2))
    psi = rng.normal(size=3 ** 5) + 1j * rng.normal(size=3 ** 5)
    psi /= np.linalg.norm(psi)
    s2 = entanglement_entropy(psi, 3, 5, cut=2)
    assert s2 <= 2 * np.log(3) + 1e-12
    assert s2 == pytest.approx(entanglement_entropy(psi.reshape((3,) * 5).transpose(2, 3, 4, 0, 1).ravel(), 3, 5, cut=3))


def test_scar_report_overlaps():
    rep = scar_report(1, 5, 1.2)
    assert rep.overlap.sum() == pytest.approx(1.0)
    assert rep.entropy.min() >= 0
    assert rep.rows()[0][0] == "n"


def test_spherical_map_at_pole_equals_overlap():
    eig = diagonalize(build_hamiltonian(1, 5, 1.2))
    n = int(np.argmax(np.abs(eig.vectors[0]) ** 2))
    m = spherical_overlap_map(eig.vectors[:, n], eig.basis, theta=np.array([0.0, 1.0]), phi=np.array([0.0, 2.0]))
    assert m.values[0, 0] == pytest.approx(abs(eig.vectors[0, n]) ** 2)
    assert m.values[0, 1] == pytest.approx(m.values[0, 0])
    assert np.all(m.values <= 1 + 1e-12)


def test_generic_neighbour_is_even_and_distinct():
    eig = diagonalize(build_hamiltonian(1, 5, 1.2))
    n = int(np.argmax(np.abs(eig.vectors[0]) ** 2))
    k = generic_neighbour(eig, n)
    assert k != n and eig.parity[k] == 1


def test_participation_ratio_limits():
    assert participation_ratio([1.0, 0, 0]) == pytest.approx(1)
    assert participation_ratio(np.full(40, 1 / 40)) == pytest.approx(40)


def test_locate_peak_synthetic():
    x = np.linspace(0.5, 2, 31)
    y = 1 + 5 * np.exp(-((x - 1.2) / 0.2) ** 2)
    v, c, prom = locate_peak(x, y)
    assert v == pytest.approx(1.2, abs=0.02)
    assert c < 0 and prom > 0.5
    assert peak_prominence(y) > 0.5
    v, _, prom = locate_peak(x, x)
    assert np.isnan(v) and prom == 0

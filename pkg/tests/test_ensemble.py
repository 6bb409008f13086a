import numpy as np
import pytest

from spinchaos.chain import HamiltonianParams, energy
from spinchaos.ensemble import (EnsembleKind, EnsembleSpec, ensemble_average, fit_maxima_growth,
                                imitation_average, otoc_style_exponent, refined_maxima,
                                sample_perturbed_periodic, sample_quantum_imitation)


@pytest.mark.parametrize("S", [0.5, 1, 1.5, 2])
def test_imitation_marginal(S):
    spec = EnsembleSpec(EnsembleKind.QUANTUM_IMITATION, 4000, 1, S=S)
    s = spec.draw(3)
    np.testing.assert_allclose(np.linalg.norm(s, axis=-1), 1, atol=1e-12)
    sz = s[..., 2].ravel()
    width = 2 / (2 * S + 1)
    assert sz.min() >= 1 - width
    assert sz.mean() == pytest.approx(1 - 1 / (2 * S + 1), abs=4 * width / np.sqrt(12 * sz.size))


def test_disk_within_radius():
    r = 1e-3
    st = sample_perturbed_periodic(200, r, seed=5)
    rho = np.hypot(st.spins[:, 0], st.spins[:, 1])
    assert rho.max() <= r
    # uniform area: half the points inside r / sqrt(2)
    assert np.mean(rho < r / np.sqrt(2)) == pytest.approx(0.5, abs=0.12)
    L, h = 200, 1.0
    e = energy(st, HamiltonianParams(1.76, h, L))
    # the field term is first order in r; what remains is quadratic
    linear = h * st.spins[:, :2].sum()
    assert abs(e - linear) < 10 * r ** 2 * L


def test_spec_validation():
    with pytest.raises(ValueError):
        EnsembleSpec(EnsembleKind.PERTURBED_PERIODIC, 10, 0)
    with pytest.raises(ValueError):
        EnsembleSpec(EnsembleKind.QUANTUM_IMITATION, 0, 0, S=1)
    with pytest.raises(ValueError):
        sample_quantum_imitation(0, 3)


def test_draw_is_reproducible():
    spec = EnsembleSpec(EnsembleKind.QUANTUM_IMITATION, 20, 9, S=1)
    np.testing.assert_array_equal(spec.draw(4), spec.draw(4))


def test_average_of_identical_members_has_zero_stderr():
    st = sample_quantum_imitation(1, 4, seed=2).spins
    states = np.repeat(st[None], 5, axis=0)
    out = ensemble_average(states, HamiltonianParams(1.2, 1.0, 4), 1.0, sample_dt=0.1)
    np.testing.assert_allclose(out.stderr, 0, atol=1e-14)
    assert out.mean[0] == pytest.approx(st[0, 2])


def test_imitation_average_starts_at_marginal_mean():
    out = imitation_average(1, HamiltonianParams(1.76, 1.0, 4), N=500, duration=0.5, seed=4)
    assert out.mean[0] == pytest.approx(2 / 3, abs=0.03)
    assert out.meta["N"] == 500


def test_refined_maxima_of_cosine():
    t = np.linspace(0, 10, 401)
    tm, ym = refined_maxima(t, np.cos(2 * t))
    np.testing.assert_allclose(tm, np.pi * np.arange(1, len(tm) + 1), atol=1e-3)
    np.testing.assert_allclose(ym, 1, atol=1e-4)


def test_fit_maxima_growth_recovers_slope():
    t = np.arange(20.0)
    d = 1e-6 * np.exp(0.6 * t)
    idx, slope, se = fit_maxima_growth(t, d, lo=1e-6, hi=1e-2)
    assert slope == pytest.approx(0.6)
    assert fit_maxima_growth(t, np.full(20, 1e-4), lo=1e-6) is None


@pytest.mark.parametrize("J,L", [(0.0, 8), (1.76, 23)])
def test_otoc_no_growth_where_orbit_is_stable(J, L):
    # J = 0 is trivially stable; at J = 1.76 the L = 23 chain admits no unstable wavenumber
    est = otoc_style_exponent(J, L=L, N=40, duration=20.0, seed=1)
    assert est.verdict == "NoGrowth"
    assert est.lam == 0.0

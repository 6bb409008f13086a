from fractions import Fraction
from math import gcd

import numpy as np
import pytest

from spinchaos.chain import HamiltonianParams, SpinChainState, energy, random_state
from spinchaos.floquet import chain_growth_rate
from spinchaos.spectral import (PUBLISHED_NARROW_WINDOW, PeakNotFound, UnstableWindow, WindowTooShort,
                                find_peaks, fit_lambda_of_L, fit_quasiperiodic_grid, fit_window, frequency_drift,
                                growth_rate_ladder, h0_h1_split, lambda_of_L, lyapunov_vector_spectrum,
                                mechanism_A_criterion, mode_intensities, mode_series, outside_weight,
                                peak_frequencies, perturbed_uniform, quasiperiodic_persistence, reduced_brillouin,
                                temporal_spectrum, wave_numbers)


def test_mode_intensities_examples(rng):
    L = 8
    F = mode_intensities(SpinChainState.all_up(L))
    assert F.F[0, F.index(0.0)] == pytest.approx(L)
    assert F.F.sum() == pytest.approx(L)
    v = rng.normal(size=3)
    F = mode_intensities(SpinChainState.uniform(L, v))
    assert F.F[0, F.index(0.0)] == pytest.approx(L)
    S = np.tile([0.0, 0.0, 1.0], (L, 1))
    S[3] = [0, 0, -1]
    F = mode_intensities(S)
    assert abs(F.F.sum() - L) < 1e-10
    with pytest.raises(KeyError):
        F.index(0.1)


def test_mode_intensity_symmetry(rng):
    st = random_state(9, rng)
    F = mode_intensities(st)
    for q in F.q:
        assert F.F[0, F.index(q)] == pytest.approx(F.F[0, F.index(-q)], abs=1e-12)


def test_vector_spectrum():
    vs = lyapunov_vector_spectrum(np.ones(30))
    assert vs.q_p == 0.0
    assert vs.f[np.argmax(vs.f)] == pytest.approx(vs.f.sum())
    L = 12
    m = np.arange(L)
    v = np.zeros((L, 3))
    v[:, 0] = np.cos(2 * np.pi * 2 * m / L)
    vs = lyapunov_vector_spectrum(v)
    assert vs.q_p == pytest.approx(2 * np.pi * 2 / L)
    assert vs.peak_share() == pytest.approx(1.0)
    assert sorted(np.abs(vs.top_two())) == pytest.approx([vs.q_p, vs.q_p])


def test_fit_lambda_of_L_round_trip(rng):
    L = np.arange(4, 45)
    lam = lambda_of_L(L, 0.35, 1.3, 8.0)
    keep = lam > 0
    noisy = lam * (1 + 0.01 * rng.normal(size=len(L)))
    fit = fit_lambda_of_L(L[keep], noisy[keep])
    assert fit.lam_max == pytest.approx(0.35, rel=0.05)
    assert fit.q0 == pytest.approx(1.3, rel=0.05)
    assert fit.alpha == pytest.approx(8.0, rel=0.05)
    with pytest.raises(ValueError):
        fit_lambda_of_L(L[:3], lam[:3] + 1)


def test_fit_lambda_of_L_floquet_data():
    L = np.arange(4, 45)
    lam = np.array([chain_growth_rate(1.76, int(x))[0] for x in L])
    fit = fit_lambda_of_L(L, lam)
    assert fit.lam_max == pytest.approx(0.35, rel=0.15)
    assert 23 in fit.predicted_stable(L)
    assert set(fit.predicted_stable(L)) == {int(x) for x, y in zip(L, lam) if y == 0}


def test_unstable_window():
    with pytest.raises(ValueError):
        UnstableWindow(1.0, -0.1, 1.0)
    w = UnstableWindow(1.0, 0.25, 1.0)
    assert w.edges == pytest.approx((0.5, 1.5))
    assert w.contains(0.6) and not w.contains(1.6)
    assert w.contains(1.55, margin=0.1)
    q = np.linspace(0.4, 1.6, 121)
    fit = fit_window(q, np.maximum(w.rate(q), 0))
    assert fit.q0 == pytest.approx(1.0) and fit.alpha == pytest.approx(1.0)


def test_mechanism_A_brute_force():
    main = UnstableWindow(0.969, 0.324, 25.9)
    wins = [main, PUBLISHED_NARROW_WINDOW]
    for L in range(2, 101):
        r = mechanism_A_criterion(L, wins)
        brute = [n for n in range(L // 2 + 1)
                 if any(w.lam_max - w.alpha * (w.q0 - 2 * np.pi * n / L) ** 2 > 0 for w in wins)]
        assert [n for n, _, _ in r.unstable] == brute
        assert r.operational == (len(brute) >= 2)
    assert mechanism_A_criterion(21, wins).operational
    assert [n for n, _, w in mechanism_A_criterion(21, wins).unstable if w == 1] == [5]
    for L in (6, 18, 19):
        assert not mechanism_A_criterion(L, wins).operational
    assert 7 in [n for n, _, _ in mechanism_A_criterion(42, wins).unstable]


@pytest.mark.parametrize("L, n, u", [(18, 3, 3), (19, 3, 1), (6, 1, 1), (42, 6, 6)])
def test_reduced_brillouin(L, n, u):
    z = reduced_brillouin(L, n)
    assert z.u == u and L % z.u == 0 and n % z.u == 0
    assert z.Q_u_turns * Fraction(L, z.u) == 1
    assert sorted(sum(z.groups, [])) == list(range(L))
    assert z.all_coupled == (u == 1)
    with pytest.raises(ValueError):
        reduced_brillouin(L, 0)


def test_two_tone_spectrum():
    dt = 0.05
    t = np.arange(0, 6200, dt)
    w0, w1 = 4.4, 0.42
    x = np.cos(w0 * t) + 0.1 * np.cos(w1 * t)
    spec = temporal_spectrum(x, dt, 100.0, 6000.0)
    assert np.all(spec.power >= 0)
    om, _ = find_peaks(spec)
    assert abs(om[0] - w0) < spec.resolution
    a, b = peak_frequencies(spec, w0)
    assert abs(a - w0) < spec.resolution and abs(b - w1) < spec.resolution
    g = fit_quasiperiodic_grid([w0, w1, w0 - w1, w0 / 2], w0, w1)
    assert g.explained == 1.0
    drift = frequency_drift(x, dt, w0, width=3000.0)
    assert np.ptp(drift.omega0) < drift.resolution and np.ptp(drift.omega1) < drift.resolution
    with pytest.raises(ValueError):
        temporal_spectrum(x, dt, 1000.0, 6000.0)


def test_single_tone_has_no_low_peak():
    dt = 0.05
    t = np.arange(0, 6000, dt)
    spec = temporal_spectrum(np.cos(4.4 * t), dt, 0.0, 6000.0)
    with pytest.raises(PeakNotFound):
        peak_frequencies(spec, 4.4)


def test_h0_h1_split(rng):
    for _ in range(5):
        st = random_state(10, rng)
        p = HamiltonianParams(1.76, 1.0, 10)
        h0, h1 = h0_h1_split(st, p)
        assert h0 + h1 == pytest.approx(energy(st, p), abs=1e-10)
    assert h0_h1_split(SpinChainState.all_up(6), HamiltonianParams(1.76, 1.0, 6)) == (0.0, 0.0)


def test_growth_ladder_and_no_growth():
    L = 6
    lam, q = chain_growth_rate(1.76, L)
    st = perturbed_uniform(L, 1e-11, np.random.default_rng(0))
    ms = mode_series(st, HamiltonianParams(1.76, 1.0, L), 250.0, stride=100)
    lad = growth_rate_ladder(ms, lam, q)
    assert lad[0].ratio == pytest.approx(1.0, abs=0.05)
    ms0 = mode_series(st, HamiltonianParams(0.0, 1.0, L), 50.0, stride=100)
    with pytest.raises(WindowTooShort):
        growth_rate_ladder(ms0, 0.1, q)


def test_outside_weight_and_persistence():
    L = 6
    q = wave_numbers(L)
    S = np.tile([0.0, 0.0, 1.0], (L, 1))
    F = mode_intensities(S, times=[0.0])
    assert outside_weight(F, np.pi / 3)[0] == pytest.approx(0.0, abs=1e-12)
    S2 = S.copy()
    S2[0] = [1.0, 0.0, 0.0]
    F2 = mode_intensities(np.stack([S, S2]), times=[0.0, 1.0])
    w = outside_weight(F2, np.pi / 3)
    assert w[1] > 0
    assert quasiperiodic_persistence(F2, np.pi / 3, threshold=1e-6) == 1.0
    assert len(q) == L

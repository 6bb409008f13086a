"""Compiled inner loops for classical spin-chain dynamics.

Spin configurations are ``(L, 3)`` float64 arrays with periodic boundary
conditions. Every RK4 step is followed by renormalisation of each spin to
unit length.
"""

import numpy as np
from numba import njit, prange


@njit(cache=True)
def field(S, J, h, out):
    L = S.shape[0]
    for i in range(L):
        a = S[(i - 1) % L]
        b = S[(i + 1) % L]
        out[i, 0] = -J * (a[0] + b[0]) + h
        out[i, 1] = -2.0 * J * (a[1] + b[1]) + h
        out[i, 2] = 0.0


@njit(cache=True)
def deriv(S, J, h, out):
    L = S.shape[0]
    for i in range(L):
        im = i - 1 if i > 0 else L - 1
        ip = i + 1 if i < L - 1 else 0
        hx = -J * (S[im, 0] + S[ip, 0]) + h
        hy = -2.0 * J * (S[im, 1] + S[ip, 1]) + h
        sx = S[i, 0]
        sy = S[i, 1]
        sz = S[i, 2]
        # H x S with H_z = 0
        out[i, 0] = hy * sz
        out[i, 1] = -hx * sz
        out[i, 2] = hx * sy - hy * sx


@njit(cache=True)
def energy(S, J, h):
    L = S.shape[0]
    e = 0.0
    for i in range(L):
        j = (i + 1) % L
        e -= J * S[i, 0] * S[j, 0] + 2.0 * J * S[i, 1] * S[j, 1]
        e += h * (S[i, 0] + S[i, 1])
    return e


@njit(cache=True)
def renormalize(S):
    for i in range(S.shape[0]):
        n = 1.0 / np.sqrt(S[i, 0] ** 2 + S[i, 1] ** 2 + S[i, 2] ** 2)
        S[i, 0] *= n
        S[i, 1] *= n
        S[i, 2] *= n


@njit(cache=True)
def rk4_step(S, J, h, dt, k1, k2, k3, k4, tmp):
    deriv(S, J, h, k1)
    for i in range(S.shape[0]):
        for c in range(3):
            tmp[i, c] = S[i, c] + 0.5 * dt * k1[i, c]
    deriv(tmp, J, h, k2)
    for i in range(S.shape[0]):
        for c in range(3):
            tmp[i, c] = S[i, c] + 0.5 * dt * k2[i, c]
    deriv(tmp, J, h, k3)
    for i in range(S.shape[0]):
        for c in range(3):
            tmp[i, c] = S[i, c] + dt * k3[i, c]
    deriv(tmp, J, h, k4)
    for i in range(S.shape[0]):
        for c in range(3):
            S[i, c] += dt / 6.0 * (k1[i, c] + 2.0 * k2[i, c] + 2.0 * k3[i, c] + k4[i, c])
    renormalize(S)


@njit(cache=True)
def advance(S, J, h, dt, nsteps):
    """Advance ``S`` in place; returns False on a non-finite component."""
    k1 = np.empty_like(S)
    k2 = np.empty_like(S)
    k3 = np.empty_like(S)
    k4 = np.empty_like(S)
    tmp = np.empty_like(S)
    for _ in range(nsteps):
        rk4_step(S, J, h, dt, k1, k2, k3, k4, tmp)
    for i in range(S.shape[0]):
        for c in range(3):
            if not np.isfinite(S[i, c]):
                return False
    return True


@njit(cache=True)
def record(S, J, h, dt, stride, nsamples):
    """Integrate and keep every ``stride``-th state (sample 0 is the input)."""
    L = S.shape[0]
    out = np.empty((nsamples, L, 3))
    k1 = np.empty_like(S)
    k2 = np.empty_like(S)
    k3 = np.empty_like(S)
    k4 = np.empty_like(S)
    tmp = np.empty_like(S)
    out[0] = S
    for n in range(1, nsamples):
        for _ in range(stride):
            rk4_step(S, J, h, dt, k1, k2, k3, k4, tmp)
        out[n] = S
    return out


@njit(cache=True)
def record_site(S, J, h, dt, stride, nsamples, site, comp):
    """Like :func:`record` but keeps a single scalar component."""
    out = np.empty(nsamples)
    k1 = np.empty_like(S)
    k2 = np.empty_like(S)
    k3 = np.empty_like(S)
    k4 = np.empty_like(S)
    tmp = np.empty_like(S)
    out[0] = S[site, comp]
    for n in range(1, nsamples):
        for _ in range(stride):
            rk4_step(S, J, h, dt, k1, k2, k3, k4, tmp)
        out[n] = S[site, comp]
    return out


@njit(cache=True)
def mode_record(S, J, h, dt, stride, nsamples, cosm, sinm):
    """Integrate while recording F_q(t) for the wave numbers encoded in
    ``cosm[k, m] = cos(q_k m)``, ``sinm[k, m] = sin(q_k m)``."""
    L = S.shape[0]
    nq = cosm.shape[0]
    out = np.empty((nsamples, nq))
    k1 = np.empty_like(S)
    k2 = np.empty_like(S)
    k3 = np.empty_like(S)
    k4 = np.empty_like(S)
    tmp = np.empty_like(S)
    for n in range(nsamples):
        if n > 0:
            for _ in range(stride):
                rk4_step(S, J, h, dt, k1, k2, k3, k4, tmp)
        for k in range(nq):
            tot = 0.0
            for c in range(3):
                re = 0.0
                im = 0.0
                for m in range(L):
                    re += S[m, c] * cosm[k, m]
                    im -= S[m, c] * sinm[k, m]
                tot += re * re + im * im
            out[n, k] = tot / L
    return out


@njit(cache=True)
def benettin_intervals(ref, twin, J, h, dt, nsteps, M, d0, limit, static=False):
    """Two-trajectory Benettin loop.

    Returns ``(log_stretch, ok)``; ``ok`` is False when the separation
    exceeded ``limit`` at the end of an interval, in which case the records
    up to the failing interval are valid and the rest are NaN. With
    ``static`` the reference is a fixed point and is not integrated.
    """
    L = ref.shape[0]
    logs = np.full(M, np.nan)
    k1 = np.empty_like(ref)
    k2 = np.empty_like(ref)
    k3 = np.empty_like(ref)
    k4 = np.empty_like(ref)
    tmp = np.empty_like(ref)
    for m in range(M):
        for _ in range(nsteps):
            if not static:
                rk4_step(ref, J, h, dt, k1, k2, k3, k4, tmp)
            rk4_step(twin, J, h, dt, k1, k2, k3, k4, tmp)
        d2 = 0.0
        for i in range(L):
            for c in range(3):
                d2 += (twin[i, c] - ref[i, c]) ** 2
        d = np.sqrt(d2)
        if not np.isfinite(d) or d > limit:
            return logs, False
        logs[m] = np.log(d / d0)
        s = d0 / d
        for i in range(L):
            for c in range(3):
                twin[i, c] = ref[i, c] + s * (twin[i, c] - ref[i, c])
    return logs, True


@njit(cache=True)
def distance_growth(S, ref, J, h, dt, stride, nsamples):
    """|S(t) - ref| sampled every ``stride`` steps for a static reference."""
    out = np.empty(nsamples)
    k1 = np.empty_like(S)
    k2 = np.empty_like(S)
    k3 = np.empty_like(S)
    k4 = np.empty_like(S)
    tmp = np.empty_like(S)
    for n in range(nsamples):
        if n > 0:
            for _ in range(stride):
                rk4_step(S, J, h, dt, k1, k2, k3, k4, tmp)
        d2 = 0.0
        for i in range(S.shape[0]):
            for c in range(3):
                d2 += (S[i, c] - ref[i, c]) ** 2
        out[n] = np.sqrt(d2)
    return out


@njit(parallel=True, cache=True)
def ensemble_site_series(states, J, h, dt, stride, nsamples, site, comp):
    """Integrate every member of ``states`` (N, L, 3) and return the chosen
    component of one site, shape (N, nsamples)."""
    N = states.shape[0]
    out = np.empty((N, nsamples))
    for n in prange(N):
        S = states[n].copy()
        out[n] = record_site(S, J, h, dt, stride, nsamples, site, comp)
    return out


@njit(cache=True)
def one_spin_deriv(s, J, h, out):
    hx = -2.0 * J * s[0] + h
    hy = -4.0 * J * s[1] + h
    out[0] = hy * s[2]
    out[1] = -hx * s[2]
    out[2] = hx * s[1] - hy * s[0]


@njit(cache=True)
def one_spin_step(s, J, h, dt, k1, k2, k3, k4, tmp):
    one_spin_deriv(s, J, h, k1)
    for c in range(3):
        tmp[c] = s[c] + 0.5 * dt * k1[c]
    one_spin_deriv(tmp, J, h, k2)
    for c in range(3):
        tmp[c] = s[c] + 0.5 * dt * k2[c]
    one_spin_deriv(tmp, J, h, k3)
    for c in range(3):
        tmp[c] = s[c] + dt * k3[c]
    one_spin_deriv(tmp, J, h, k4)
    for c in range(3):
        s[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c])
    n = np.sqrt(s[0] ** 2 + s[1] ** 2 + s[2] ** 2)
    for c in range(3):
        s[c] /= n


@njit(cache=True)
def one_spin_record(s, J, h, dt, stride, nsamples):
    out = np.empty((nsamples, 3))
    k1 = np.empty(3)
    k2 = np.empty(3)
    k3 = np.empty(3)
    k4 = np.empty(3)
    tmp = np.empty(3)
    out[0] = s
    for n in range(1, nsamples):
        for _ in range(stride):
            one_spin_step(s, J, h, dt, k1, k2, k3, k4, tmp)
        out[n] = s
    return out


@njit(cache=True)
def one_spin_first_return(s0, J, h, dt, tmax, r_close, t_min):
    """Integrate the one-spin flow until it re-enters the ball of radius
    ``r_close`` around ``s0`` moving in the initial direction.

    Detection uses the sign change of the along-velocity projection
    ``(s - s0) . v0`` near ``s0``; the crossing time is refined by cubic
    Hermite interpolation. Returns (period, samples, ok). Samples are taken
    every 10 steps.
    """
    s = s0.copy()
    v0 = np.empty(3)
    one_spin_deriv(s0, J, h, v0)
    k1 = np.empty(3)
    k2 = np.empty(3)
    k3 = np.empty(3)
    k4 = np.empty(3)
    tmp = np.empty(3)
    nmax = int(tmax / dt) + 1
    cap = 1 << 14
    buf = np.empty((cap, 3))
    nbuf = 0
    prev = s.copy()
    vprev = v0.copy()
    g_prev = 0.0
    for n in range(1, nmax + 1):
        prev[:] = s
        one_spin_deriv(prev, J, h, vprev)
        g_prev = 0.0
        for c in range(3):
            g_prev += (prev[c] - s0[c]) * v0[c]
        one_spin_step(s, J, h, dt, k1, k2, k3, k4, tmp)
        if n % 10 == 0:
            if nbuf == buf.shape[0]:
                nb = np.empty((2 * buf.shape[0], 3))
                nb[:nbuf] = buf[:nbuf]
                buf = nb
            buf[nbuf] = s
            nbuf += 1
        t = n * dt
        if t < t_min:
            continue
        g = 0.0
        for c in range(3):
            g += (s[c] - s0[c]) * v0[c]
        if g_prev < 0.0 <= g:
            # Newton on the cubic Hermite interpolant of g over the step
            vcur = np.empty(3)
            one_spin_deriv(s, J, h, vcur)
            dg0 = 0.0
            dg1 = 0.0
            for c in range(3):
                dg0 += vprev[c] * v0[c]
                dg1 += vcur[c] * v0[c]
            tau = -g_prev / (g - g_prev)
            for _ in range(20):
                t2 = tau * tau
                t3 = t2 * tau
                h00 = 2 * t3 - 3 * t2 + 1
                h10 = t3 - 2 * t2 + tau
                h01 = -2 * t3 + 3 * t2
                h11 = t3 - t2
                val = h00 * g_prev + h10 * dt * dg0 + h01 * g + h11 * dt * dg1
                d00 = 6 * t2 - 6 * tau
                d10 = 3 * t2 - 4 * tau + 1
                d01 = -6 * t2 + 6 * tau
                d11 = 3 * t2 - 2 * tau
                der = d00 * g_prev + d10 * dt * dg0 + d01 * g + d11 * dt * dg1
                if der == 0.0:
                    break
                step = val / der
                tau -= step
                if abs(step) < 1e-15:
                    break
            t2 = tau * tau
            t3 = t2 * tau
            h00 = 2 * t3 - 3 * t2 + 1
            h10 = t3 - 2 * t2 + tau
            h01 = -2 * t3 + 3 * t2
            h11 = t3 - t2
            dist2 = 0.0
            for c in range(3):
                p = h00 * prev[c] + h10 * dt * vprev[c] + h01 * s[c] + h11 * dt * vcur[c]
                dist2 += (p - s0[c]) ** 2
            if np.sqrt(dist2) < r_close:
                return (n - 1 + tau) * dt, buf[:nbuf].copy(), True
    return np.nan, buf[:nbuf].copy(), False

"""Command-line front end.

Every subcommand writes its tables (CSV with a header row, NDJSON records)
and a ``manifest.json`` with the resolved configuration, seed, tool version,
wall-clock time and SHA-256 of every output into the output directory.

Parameters come from built-in defaults, then an optional YAML file
(``--config``), then command-line flags; later sources win. Scan
subcommands fan out over ``--jobs`` worker processes; job i gets the seed
``SeedSequence(seed, spawn_key=(i,))`` so results do not depend on the
number of workers.

Exit status: 0 success, 2 usage error, 3 invalid parameter, 4 numerical
failure, 5 other runtime error, 6 manifest verification mismatch. On
failure a JSON error record is printed to stderr and written to
``error.json``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import io as sio

EXIT_OK, EXIT_USAGE, EXIT_PARAM, EXIT_NUMERIC, EXIT_RUNTIME, EXIT_VERIFY = 0, 2, 3, 4, 5, 6


class ParameterError(ValueError):
    pass


# ---------------------------------------------------------------- value parsers

def floats(v) -> list[float]:
    """List of floats from a scalar, a list, "a,b,c" or "start:stop:n" (inclusive linspace)."""
    if isinstance(v, (int, float)):
        return [float(v)]
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    s = str(v).strip()
    if ":" in s:
        a, b, n = s.split(":")
        return [float(x) for x in np.linspace(float(a), float(b), int(n))]
    return [float(x) for x in s.split(",") if x.strip()]


def ints(v) -> list[int]:
    """List of ints from a scalar, a list, "a,b,c" or "a..b" (inclusive)."""
    if isinstance(v, (int, np.integer)):
        return [int(v)]
    if isinstance(v, (list, tuple)):
        return [int(x) for x in v]
    s = str(v).strip()
    if ".." in s:
        a, b = s.split("..")
        return list(range(int(a), int(b) + 1))
    return [int(x) for x in s.split(",") if x.strip()]


def boolean(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ParameterError(f"not a boolean: {v!r}")


def one_float(v) -> float:
    out = floats(v)
    if len(out) != 1:
        raise ParameterError(f"expected a single number, got {v!r}")
    return out[0]


def one_int(v) -> int:
    out = ints(v)
    if len(out) != 1:
        raise ParameterError(f"expected a single integer, got {v!r}")
    return out[0]


def optional(conv):
    def f(v):
        return None if v is None or str(v).lower() in ("none", "auto", "") else conv(v)
    return f


def auto_or_ints(v):
    return "auto" if str(v).strip().lower() == "auto" else ints(v)


def text(v) -> str:
    return str(v)


@dataclass
class Param:
    conv: callable
    default: object = None
    help: str = ""


def _common():
    return {
        "h": Param(one_float, 1.0, "field strength"),
        "dt": Param(one_float, 1e-3, "RK4 time step"),
    }


COMMANDS: dict[str, dict] = {
    "classical-orbit": {
        "J": Param(floats, [1.76], "coupling(s)"),
        "samples": Param(one_int, 2000, "max orbit samples written per J"),
    },
    "separatrix": {
        "tol": Param(one_float, 1e-10, "bisection tolerance on J"),
        "scalings": Param(boolean, False, "also tabulate |dS|_min and period versus |J - J*|"),
    },
    "lyapunov-scan-J": {
        "J": Param(floats, "0.5:2.5:9", "J grid"),
        "L": Param(ints, [10], "chain length(s)"),
        "kind": Param(text, "periodic", "periodic or ergodic reference"),
        "T_R": Param(one_float, 5.0, "reset time"),
        "M": Param(optional(one_int), None, "number of resets (adaptive if unset)"),
        "d0": Param(optional(one_float), None, "initial separation (default 1e-8 sqrt(L))"),
        "vectors": Param(boolean, False, "write Lyapunov-vector spectra f(q)"),
    },
    "lyapunov-scan-L": {
        "J": Param(one_float, 1.76, "coupling"),
        "L": Param(ints, "4..44", "chain lengths"),
        "T_R": Param(one_float, 5.0, "reset time of the main estimate"),
        "M": Param(optional(one_int), None, "resets of the main estimate (adaptive if unset)"),
        "certify_below": Param(one_float, 0.05, "run a stability certificate when lambda is below this"),
        "certificate_M": Param(one_int, 100, "resets per T_R in the certificate"),
    },
    "stability-certificate": {
        "J": Param(one_float, 1.76, "coupling"),
        "L": Param(one_int, 23, "chain length"),
        "T_R": Param(floats, [2.0, 5.0, 10.0, 20.0, 50.0], "reset-time grid"),
        "M": Param(one_int, 1000, "resets per T_R"),
        "d0": Param(optional(one_float), None, "initial separation"),
    },
    "cusp-scan": {
        "L": Param(one_int, 10, "chain length"),
        "T_R": Param(one_float, 2.0, "reset time"),
        "decades": Param(ints, [1, 6], "log10 range of |J - J*|"),
        "per_decade": Param(one_int, 2, "points per decade on each side"),
        "cutoff": Param(one_float, 1e-3, "largest |J - J*| used in the fit"),
    },
    "fixed-point-exponent": {
        "L": Param(one_int, 10, "chain length"),
        "d0": Param(floats, [1e-6, 1e-5, 1e-4], "initial deviations per sqrt(L)"),
    },
    "fourier-modes": {
        "J": Param(one_float, 1.76, "coupling"),
        "L": Param(ints, [6], "chain length(s)"),
        "amplitude": Param(one_float, 1e-11, "initial random deviation per site"),
        "duration": Param(one_float, 400.0, "integration time"),
        "stride": Param(one_int, 100, "steps between recorded samples"),
    },
    "temporal-spectrum": {
        "J": Param(one_float, 1.76, "coupling"),
        "L": Param(one_int, 6, "chain length"),
        "amplitude": Param(one_float, 1e-11, "initial random deviation per site"),
        "t_start": Param(one_float, 300.0, "start of the analysed interval"),
        "window": Param(one_float, 6000.0, "interval length"),
        "taper": Param(one_float, 0.10, "Tukey taper fraction"),
        "sample_dt": Param(one_float, 0.05, "sampling interval of S1x"),
    },
    "mechanism-criterion": {
        "J": Param(one_float, 1.76, "coupling"),
        "L": Param(ints, [6, 18, 19, 21, 42], "chain lengths"),
        "narrow": Param(text, "published", "narrow window: 'published' or 'refit'"),
        "Lmax": Param(one_int, 44, "largest L in the lambda_p(L) fit of the main window"),
    },
    "arnold-watch": {
        "J": Param(one_float, 1.76, "coupling"),
        "L": Param(one_int, 6, "chain length"),
        "amplitude": Param(one_float, 1e-11, "initial random deviation per site"),
        "duration": Param(one_float, 1e5, "total integration time"),
        "checkpoint_every": Param(one_float, 1e4, "time between checkpoints"),
        "window": Param(one_float, 6000.0, "spectral window"),
        "sample_dt": Param(one_float, 0.05, "sampling interval of S1x"),
        "threshold": Param(one_float, 0.05, "outside-subspace weight threshold per site"),
        "resume": Param(boolean, True, "continue from an existing checkpoint"),
    },
    "quantum-rvalue": {
        "S": Param(floats, [0.5], "spin(s)"),
        "L": Param(auto_or_ints, "auto", "lengths 'a..b' / list, or 'auto' for the desk caps"),
        "Jt": Param(one_float, 1.76, "renormalised coupling"),
        "trim": Param(one_float, 0.1, "fraction trimmed at each spectral edge"),
    },
    "quantum-relax": {
        "S": Param(one_float, 1.5, "spin"),
        "L": Param(one_int, 6, "chain length"),
        "Jt": Param(floats, [1.76], "renormalised coupling(s)"),
        "L_inf": Param(optional(one_int), None, "length for Psi_inf (0 skips it; default L)"),
        "t_max": Param(one_float, 10.0, "final time"),
        "n_times": Param(one_int, 201, "time points"),
    },
    "scar-report": {
        "S": Param(one_float, 2.0, "spin"),
        "L": Param(one_int, 6, "chain length"),
        "Jt": Param(one_float, 1.76, "renormalised coupling"),
        "window": Param(one_int, 5, "levels on each side for the outlier score"),
        "threshold": Param(one_float, 5.0, "outlier score threshold"),
    },
    "spherical-map": {
        "S": Param(one_float, 2.0, "spin"),
        "L": Param(one_int, 6, "chain length"),
        "Jt": Param(one_float, 1.76, "renormalised coupling"),
        "state": Param(text, "max-overlap", "eigenstate: index, 'max-overlap' or 'generic'"),
        "n_theta": Param(one_int, 90, "polar grid points"),
        "n_phi": Param(one_int, 180, "azimuthal grid points"),
    },
    "pr-scan": {
        "S": Param(one_float, 1.5, "spin"),
        "L": Param(one_int, 6, "chain length"),
        "Jt": Param(floats, "0.6:1.8:61", "renormalised coupling grid"),
    },
    "ensemble-otoc": {
        "J": Param(one_float, 1.76, "coupling"),
        "L": Param(one_int, 100, "chain length"),
        "N": Param(one_int, 1000, "ensemble members"),
        "radius": Param(one_float, 1e-4, "disk radius of the perturbation"),
        "duration": Param(one_float, 60.0, "integration time"),
        "sample_dt": Param(one_float, 0.005, "sampling interval of the mean"),
    },
    "ensemble-imitation": {
        "S": Param(one_float, 1.0, "imitated quantum spin"),
        "L": Param(one_int, 8, "chain length"),
        "Jt": Param(one_float, 1.76, "coupling (classical J = Jt)"),
        "N": Param(one_int, 10000, "ensemble members"),
        "duration": Param(one_float, 10.0, "integration time"),
        "sample_dt": Param(one_float, 0.05, "sampling interval"),
        "compare": Param(boolean, True, "also evolve the quantum Psi_up state"),
    },
}

for _spec in COMMANDS.values():
    for _k, _v in _common().items():
        _spec.setdefault(_k, _v)


# ---------------------------------------------------------------- run context

def sub_seed(seed: int, index: int) -> int:
    """Seed of job ``index`` derived from the run seed (independent of worker count)."""
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, np.uint32)[0])


@dataclass
class Context:
    command: str
    cfg: dict
    seed: int
    outdir: Path
    jobs: int = 1
    manifest: sio.RunManifest = field(init=False)
    summary: dict = field(default_factory=dict)

    def __post_init__(self):
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.manifest = sio.RunManifest(self.command, self.cfg, self.seed)

    def csv(self, name: str, rows) -> Path:
        p = sio.write_csv(self.outdir / name, rows)
        self.manifest.add(self.outdir, p)
        return p

    def ndjson(self, name: str, records) -> Path:
        p = sio.write_ndjson(self.outdir / name, records)
        self.manifest.add(self.outdir, p)
        return p

    @contextmanager
    def runner(self):
        if self.jobs <= 1:
            yield map
        else:
            with ProcessPoolExecutor(self.jobs) as pool:
                yield pool.map


# ---------------------------------------------------------------- handlers

def _classical_orbit(ctx: Context):
    from .orbits import NoClosure, periodic_orbit

    c = ctx.cfg
    rows, recs = [("J", "t", "Sx", "Sy", "Sz")], []
    for J in c["J"]:
        try:
            po = periodic_orbit(J, h=c["h"], dt=c["dt"])
        except NoClosure as e:
            recs.append({"J": J, "kind": "Separatrix", "period": None, "note": str(e)})
            continue
        step = max(1, len(po.samples) // c["samples"])
        for t, s in zip(po.times()[::step], po.samples[::step]):
            rows.append((J, t, *s))
        recs.append({"J": J, "kind": po.kind.value, "period": po.period, "energy": po.energy})
    ctx.csv("orbit.csv", rows)
    ctx.ndjson("summary.ndjson", recs)
    ctx.summary = {"orbits": recs}


def _separatrix(ctx: Context):
    from .lyapunov import separatrix_scalings
    from .orbits import find_separatrix_J

    c = ctx.cfg
    Jstar, fp = find_separatrix_J(c["h"], tol=c["tol"])
    rec = {"Jstar": Jstar, "saddle": fp.orientation, "saddle_energy": fp.energy, "one_spin_rate": fp.rate, "h": c["h"]}
    ctx.ndjson("separatrix.ndjson", [rec])
    if c["scalings"]:
        sc = separatrix_scalings(c["h"], dt=c["dt"])
        ctx.csv("scalings.csv", [("dJ", "dS_min", "period", "kind")] + sc.rows())
        ctx.ndjson("scalings_fit.ndjson", [{"lam_S": sc.lam_S, "exponent": sc.exponent, "prefactor": sc.prefactor,
                                            "period_slope": sc.period_slope,
                                            "slope_x_lamS": {k: sc.slope_in_units(k) for k in sc.period_slope}}])
    ctx.summary = {"Jstar": Jstar}
    print(f"J* = {Jstar:.10f}")


def _lyap_job(job):
    from .chain import HamiltonianParams
    from .floquet import chain_growth_rate
    from .lyapunov import ReferenceKind, benettin, ergodic_state, periodic_reference
    from .spectral import lyapunov_vector_spectrum

    J, L, kind, T_R, M, d0, h, dt, seed = job
    params = HamiltonianParams(J, h, L)
    if kind == "ergodic":
        state = ergodic_state(params, np.random.default_rng(seed))
        k = ReferenceKind.ERGODIC
    else:
        state = periodic_reference(L)
        k = ReferenceKind.PERIODIC
    run = benettin(state, params, T_R=T_R, M=M, d0=d0, seed=seed, kind=k, dt=dt)
    rec = run.to_record()
    vs = lyapunov_vector_spectrum(run.vector, L)
    rec["q_p"] = vs.q_p
    rec["f_q"] = vs.f
    rec["q"] = vs.q
    rec["floquet"] = chain_growth_rate(J, L, h, dt)[0] if k is ReferenceKind.PERIODIC else None
    return rec


def _lyapunov_scan_J(ctx: Context):
    c = ctx.cfg
    if c["kind"] not in ("periodic", "ergodic"):
        raise ParameterError("kind must be 'periodic' or 'ergodic'")
    grid = [(J, L) for L in c["L"] for J in c["J"]]
    jobs = [(J, L, c["kind"], c["T_R"], c["M"], c["d0"], c["h"], c["dt"], sub_seed(ctx.seed, i))
            for i, (J, L) in enumerate(grid)]
    with ctx.runner() as run:
        recs = list(run(_lyap_job, jobs))
    rows = [("J", "L", "lambda", "stderr", "M", "q_p", "floquet")]
    vrows = [("J", "L", "q", "f")]
    for r in recs:
        p = r["params"]
        rows.append((p["J"], p["L"], r["lambda"], r["stderr"], r["M"], r["q_p"], r["floquet"]))
        for q, f in zip(r["q"], r["f_q"]):
            vrows.append((p["J"], p["L"], q, f))
    ctx.csv("lyapunov.csv", rows)
    if c["vectors"]:
        ctx.csv("vector_spectra.csv", vrows)
    ctx.ndjson("runs.ndjson", [{k: v for k, v in r.items() if k not in ("f_q", "q")} for r in recs])


def _lyap_L_job(job):
    from .chain import HamiltonianParams
    from .floquet import chain_growth_rate
    from .lyapunov import benettin, periodic_reference, stability_certificate

    J, L, T_R, M, below, cM, h, dt, seed = job
    params = HamiltonianParams(J, h, L)
    run = benettin(periodic_reference(L), params, T_R=T_R, M=M, seed=seed, dt=dt)
    lam, verdict, err = run.exponent, "Unstable", run.stderr
    if lam < below:
        cert = stability_certificate(params, (2.0, 5.0, 10.0, 20.0), M=cM, seed=seed, dt=dt)
        verdict = cert.verdict
        if verdict == "Stable":
            lam = 0.0
    return {"L": L, "lambda_p": lam, "raw": run.exponent, "stderr": err, "verdict": verdict,
            "floquet": chain_growth_rate(J, L, h, dt)[0]}


def _lyapunov_scan_L(ctx: Context):
    from .spectral import fit_lambda_of_L

    c = ctx.cfg
    jobs = [(c["J"], L, c["T_R"], c["M"], c["certify_below"], c["certificate_M"], c["h"], c["dt"], sub_seed(ctx.seed, i))
            for i, L in enumerate(c["L"])]
    with ctx.runner() as run:
        recs = list(run(_lyap_L_job, jobs))
    ctx.csv("lambda_L.csv", [("L", "lambda_p", "raw", "stderr", "verdict", "floquet")]
            + [(r["L"], r["lambda_p"], r["raw"], r["stderr"], r["verdict"], r["floquet"]) for r in recs])
    L = np.array([r["L"] for r in recs])
    lam = np.array([r["lambda_p"] for r in recs])
    try:
        fit = fit_lambda_of_L(L, lam)
        frec = {"lam_max": fit.lam_max, "q0": fit.q0, "alpha": fit.alpha, "rms": fit.rms,
                "predicted_stable": fit.predicted_stable(L),
                "observed_stable": [int(r["L"]) for r in recs if r["verdict"] == "Stable"]}
    except (ValueError, RuntimeError, Warning) as e:
        frec = {"error": str(e)}
    ctx.ndjson("fit.ndjson", [frec])
    ctx.summary = frec


def _stability_certificate(ctx: Context):
    from .chain import HamiltonianParams
    from .lyapunov import stability_certificate

    c = ctx.cfg
    cert = stability_certificate(HamiltonianParams(c["J"], c["h"], c["L"]), c["T_R"], M=c["M"], d0=c["d0"],
                                 seed=ctx.seed, dt=c["dt"])
    ctx.csv("certificate.csv", [("T_R", "lambda", "stderr")] + cert.rows())
    rec = {"verdict": cert.verdict, "c": cert.c, "b": cert.b, "r2": cert.r2}
    ctx.ndjson("verdict.ndjson", [rec])
    ctx.summary = rec
    print(cert.verdict)


def _cusp_scan(ctx: Context):
    from .lyapunov import cusp_scan, default_cusp_grid

    c = ctx.cfg
    if len(c["decades"]) != 2:
        raise ParameterError("decades takes two integers")
    grid = default_cusp_grid(tuple(c["decades"]), c["per_decade"])
    with ctx.runner() as run:
        fit = cusp_scan(c["h"], grid, c["L"], c["T_R"], c["cutoff"], ctx.seed, c["dt"], runner=run)
    ctx.csv("cusp.csv", [("dJ", "J", "lambda", "stderr")] + fit.rows())
    rec = {"lam_A": fit.lam_A, "C": fit.C, "Jstar": fit.Jstar, "cutoff": fit.cutoff,
           "max_residual": float(np.max(np.abs(fit.residuals[fit.used]))), "symmetry_residual": fit.symmetry_residual}
    ctx.ndjson("fit.ndjson", [rec])
    ctx.summary = rec


def _fixed_point_exponent(ctx: Context):
    from .lyapunov import fixed_point_exponent

    c = ctx.cfg
    fe = fixed_point_exponent(c["h"], c["L"], tuple(c["d0"]), ctx.seed, c["dt"])
    rows = [("d0", "t", "distance")]
    for d0, (t, d) in fe.curves.items():
        rows += [(d0, a, b) for a, b in zip(t[::10], d[::10])]
    ctx.csv("growth.csv", rows)
    rec = {"lam_S": fe.lam_S, "per_d0": {str(k): v for k, v in fe.per_d0.items()}, "spread": fe.spread,
           "linearisation_rate": fe.fixed_point.rate}
    ctx.ndjson("summary.ndjson", [rec])
    ctx.summary = rec


def _fourier_job(job):
    from .chain import HamiltonianParams
    from .floquet import chain_growth_rate
    from .spectral import WindowTooShort, growth_rate_ladder, mode_series, perturbed_uniform

    J, L, amp, duration, stride, h, dt, seed = job
    params = HamiltonianParams(J, h, L)
    state = perturbed_uniform(L, amp, np.random.default_rng(seed))
    series = mode_series(state, params, duration, dt, stride)
    lam_p, q_p = chain_growth_rate(J, L, h, dt)
    ladder = []
    if lam_p > 0:
        try:
            ladder = [vars(x) for x in growth_rate_ladder(series, lam_p, q_p)]
        except WindowTooShort as e:
            ladder = [{"error": str(e)}]
    return L, series, {"L": L, "lambda_p": lam_p, "q_p": q_p, "ladder": ladder}


def _fourier_modes(ctx: Context):
    c = ctx.cfg
    jobs = [(c["J"], L, c["amplitude"], c["duration"], c["stride"], c["h"], c["dt"], sub_seed(ctx.seed, i))
            for i, L in enumerate(c["L"])]
    with ctx.runner() as run:
        res = list(run(_fourier_job, jobs))
    recs = []
    for L, series, rec in res:
        ctx.csv(f"modes_L{L}.csv", [("t", "q", "F")] + list(series.rows()))
        recs.append(rec)
    ctx.ndjson("ladder.ndjson", recs)


def _temporal_spectrum(ctx: Context):
    from .chain import HamiltonianParams, site_series
    from .floquet import chain_growth_rate
    from .orbits import periodic_orbit
    from .spectral import PeakNotFound, find_peaks, peak_frequencies, perturbed_uniform, temporal_spectrum

    c = ctx.cfg
    params = HamiltonianParams(c["J"], c["h"], c["L"])
    state = perturbed_uniform(c["L"], c["amplitude"], np.random.default_rng(ctx.seed))
    stride = max(1, int(round(c["sample_dt"] / c["dt"])))
    t, x, _ = site_series(state, c["t_start"] + c["window"], params, c["dt"], stride, 0, 0)
    spec = temporal_spectrum(x, stride * c["dt"], c["t_start"], c["window"], c["taper"])
    ctx.csv("spectrum.csv", [("omega", "power")] + spec.rows())
    om, pw = find_peaks(spec)
    ctx.csv("peaks.csv", [("omega", "power")] + list(zip(om, pw)))
    omega_p = 2 * np.pi / periodic_orbit(c["J"], h=c["h"], dt=c["dt"]).period
    rec = {"omega_p": omega_p, "resolution": spec.resolution, "lambda_p": chain_growth_rate(c["J"], c["L"], c["h"])[0]}
    try:
        w0, w1 = peak_frequencies(spec, omega_p)
        rec.update({"omega0": w0, "omega1": w1, "ratio": w0 / w1})
    except PeakNotFound as e:
        rec["error"] = str(e)
    ctx.ndjson("summary.ndjson", [rec])
    ctx.summary = rec


def _mechanism_criterion(ctx: Context):
    from .floquet import chain_growth_rate
    from .spectral import PUBLISHED_NARROW_WINDOW, fit_lambda_of_L, mechanism_A_criterion, scan_window

    c = ctx.cfg
    Ls = np.arange(4, c["Lmax"] + 1)
    lam = np.array([chain_growth_rate(c["J"], int(L), c["h"])[0] for L in Ls])
    main = fit_lambda_of_L(Ls, lam).window
    if c["narrow"] == "published":
        narrow = PUBLISHED_NARROW_WINDOW
    elif c["narrow"] == "refit":
        narrow = scan_window(c["J"], 1.35, 1.65)[2]
    else:
        raise ParameterError("narrow must be 'published' or 'refit'")
    rows = [("L", "operational", "unstable_n", "window")]
    recs = []
    for L in c["L"]:
        r = mechanism_A_criterion(L, [main, narrow])
        rows.append((L, int(r.operational), ";".join(str(n) for n, _, _ in r.unstable),
                     ";".join(str(w) for _, _, w in r.unstable)))
        recs.append({"L": L, "operational": r.operational, "unstable": r.unstable})
    ctx.csv("criterion.csv", rows)
    ctx.ndjson("windows.ndjson", [{"main": vars(main), "narrow": vars(narrow)}] + recs)


def _arnold_watch(ctx: Context):
    from . import _kernels as K
    from .chain import HamiltonianParams
    from .floquet import chain_growth_rate
    from .orbits import periodic_orbit
    from .spectral import (PeakNotFound, mode_intensities, outside_weight, peak_frequencies,
                           perturbed_uniform, temporal_spectrum)

    c = ctx.cfg
    L, dt = c["L"], c["dt"]
    params = HamiltonianParams(c["J"], c["h"], L)
    ck = ctx.outdir / "checkpoint.npz"
    stride = max(1, int(round(c["sample_dt"] / dt)))
    sdt = stride * dt
    per_window = int(round(c["window"] / sdt))
    _, q_p = chain_growth_rate(c["J"], L, c["h"], dt)
    omega_p = 2 * np.pi / periodic_orbit(c["J"], h=c["h"], dt=dt).period
    if c["resume"] and ck.exists():
        z = np.load(ck, allow_pickle=False)
        S, t, buf = z["S"].copy(), float(z["t"]), list(z["buf"])
        drift = [tuple(r) for r in z["drift"]]
        wrows = [tuple(r) for r in z["weight"]]
        broken = float(z["broken"])
    else:
        S = perturbed_uniform(L, c["amplitude"], np.random.default_rng(ctx.seed)).spins.copy()
        t, buf, drift, wrows, broken = 0.0, [], [], [], float("nan")
    every = int(round(1.0 / sdt))  # mode weights once per time unit
    while t < c["duration"] - 1e-9:
        span = min(c["checkpoint_every"], c["duration"] - t)
        n = int(round(span / sdt))
        out = K.record(S, params.J, params.h, dt, stride, n + 1)
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("non-finite spins during arnold-watch")
        buf.extend(out[1:, 0, 0])
        ts = t + sdt * np.arange(1, n + 1)
        F = mode_intensities(out[1::every], ts[every - 1::every])
        w = outside_weight(F, q_p)
        for a, b in zip(F.times, w):
            wrows.append((float(a), float(b)))
            if not np.isfinite(broken) and b > c["threshold"] * L and a > 1000.0:
                broken = float(a)
        t = float(ts[-1])
        while len(buf) >= per_window:
            start = t - len(buf) * sdt
            spec = temporal_spectrum(np.asarray(buf[:per_window]), sdt, 0.0, c["window"])
            try:
                w0, w1 = peak_frequencies(spec, omega_p)
            except PeakNotFound:
                w0 = w1 = float("nan")
            drift.append((start, w0, w1))
            del buf[:per_window]
        np.savez(ck, S=S, t=t, buf=np.asarray(buf, dtype=float), drift=np.asarray(drift, dtype=float).reshape(-1, 3),
                 weight=np.asarray(wrows, dtype=float).reshape(-1, 2), broken=broken)
    ctx.csv("drift.csv", [("t_start", "omega0", "omega1")] + drift)
    ctx.csv("outside_weight.csv", [("t", "outside_weight")] + wrows)
    rec = {"t_end": t, "q_p": q_p, "breakdown_time": broken if np.isfinite(broken) else None,
           "max_outside_weight_after_1000": max([b for a, b in wrows if a > 1000.0], default=None)}
    ctx.ndjson("summary.ndjson", [rec])
    ctx.summary = rec


DESK_CAPS = {0.5: 14, 1.0: 8, 1.5: 7, 2.0: 6}


def _rvalue_job(job):
    from .quantum import build_hamiltonian, diagonalize, pooled_r_statistic

    S, L, Jt, h, trim = job
    e = diagonalize(build_hamiltonian(S, L, Jt, h))
    r = pooled_r_statistic([e.sector(+1), e.sector(-1)], trim)
    return {"S": S, "L": L, "Jt": Jt, "dim_even": int((e.parity > 0).sum()), "dim_odd": int((e.parity < 0).sum()),
            "r": r.mean, "stderr": r.stderr, "n_ratios": r.n_ratios, "zero_gaps": r.n_degenerate}


def _quantum_rvalue(ctx: Context):
    c = ctx.cfg
    jobs = []
    for S in c["S"]:
        if c["L"] == "auto":
            cap = DESK_CAPS.get(S)
            if cap is None:
                raise ParameterError(f"no desk cap for S={S}")
            Ls = range(max(4, cap - 2), cap + 1)
        else:
            Ls = c["L"]
        jobs += [(S, L, c["Jt"], c["h"], c["trim"]) for L in Ls]
    with ctx.runner() as run:
        recs = list(run(_rvalue_job, jobs))
    keys = ("S", "L", "Jt", "dim_even", "dim_odd", "r", "stderr", "n_ratios", "zero_gaps")
    ctx.csv("rvalue.csv", [keys] + [tuple(r[k] for k in keys) for r in recs])
    ctx.summary = {"r": [(r["S"], r["L"], r["r"]) for r in recs]}


def _quantum_relax(ctx: Context):
    from .quantum import relaxation
    from .quantum.dynamics import baseline_scan

    c = ctx.cfg
    if len(c["Jt"]) == 1:
        r = relaxation(c["S"], c["L"], c["Jt"][0], c["h"], c["t_max"], c["n_times"], c["L_inf"], ctx.seed)
        ctx.csv("relax.csv", r.rows())
        ctx.ndjson("summary.ndjson", [{"norm_error_up": float(np.max(np.abs(r.up.norm - 1))),
                                       "energy_drift_inf": None if r.inf is None else float(np.ptp(r.inf.energy))}])
        return
    with ctx.runner() as run:
        scan = baseline_scan(c["S"], c["L"], c["Jt"], c["h"], (2.0, c["t_max"]), c["n_times"], runner=run)
    ctx.csv("baseline.csv", scan.rows())
    lo, hi = scan.transition()
    rec = {"crossover": scan.crossover(), "zero_regime_end": lo, "positive_regime_start": hi}
    ctx.ndjson("summary.ndjson", [rec])
    ctx.summary = rec


def _scar_report(ctx: Context):
    from .quantum import scar_report

    c = ctx.cfg
    rep = scar_report(c["S"], c["L"], c["Jt"], c["h"], window=c["window"], threshold=c["threshold"])
    ctx.csv("scar_report.csv", rep.rows())
    m = rep.max_overlap
    rec = {"dim": len(rep.energies), "max_overlap_index": m, "max_overlap_energy": rep.energies[m],
           "max_overlap_score": rep.score[m], "max_overlap_central": bool(rep.central[m]),
           "scars": rep.scars.tolist(), "top5": rep.top_overlap.tolist(), "overlap_sum": float(rep.overlap.sum())}
    ctx.ndjson("summary.ndjson", [rec])
    ctx.summary = rec


def _spherical_map(ctx: Context):
    from .orbits import periodic_orbit
    from .quantum import build_hamiltonian, diagonalize, orbit_band_ratio, spherical_overlap_map
    from .quantum.scars import default_grid, generic_neighbour

    c = ctx.cfg
    eig = diagonalize(build_hamiltonian(c["S"], c["L"], c["Jt"], c["h"]))
    ov = np.abs(eig.vectors[0]) ** 2
    m = int(np.argmax(ov))
    if c["state"] == "max-overlap":
        n = m
    elif c["state"] == "generic":
        n = generic_neighbour(eig, m)
    else:
        try:
            n = int(c["state"])
        except ValueError:
            raise ParameterError("state must be an index, 'max-overlap' or 'generic'") from None
    th, ph = default_grid(c["n_theta"], c["n_phi"])
    sm = spherical_overlap_map(eig.vectors[:, n], eig.basis, th, ph)
    ctx.csv("map.csv", sm.rows())
    orbit = periodic_orbit(c["Jt"], h=c["h"]).samples
    rec = {"index": n, "energy": eig.energies[n], "overlap_up": ov[n], "band_ratio": orbit_band_ratio(sm, orbit)}
    ctx.ndjson("summary.ndjson", [rec])
    ctx.summary = rec


def _pr_scan(ctx: Context):
    from .quantum import participation_ratio_scan

    c = ctx.cfg
    with ctx.runner() as run:
        scan = participation_ratio_scan(c["S"], c["L"], c["Jt"], c["h"], runner=run)
    ctx.csv("pr.csv", scan.rows())
    rec = {"peak": scan.peak if np.isfinite(scan.peak) else None, "prominence": scan.prominence,
           "raw_prominence": scan.raw_prominence, "well_defined": scan.well_defined}
    ctx.ndjson("summary.ndjson", [rec])
    ctx.summary = rec


def _ensemble_otoc(ctx: Context):
    from .ensemble import otoc_style_exponent

    c = ctx.cfg
    est = otoc_style_exponent(c["J"], c["h"], c["L"], c["N"], c["radius"], c["duration"], ctx.seed,
                              c["sample_dt"], c["dt"])
    ctx.csv("mean.csv", est.series.rows())
    ctx.csv("maxima.csv", est.rows())
    rec = {"lambda": est.lam, "verdict": est.verdict, "slope": est.slope, "slope_stderr": est.slope_stderr,
           "window": est.window, "n_fit": len(est.t_fit), "mean_spacing": float(np.mean(est.spacing)) if len(est.t_fit) > 1 else None,
           "disk_sampling": "uniform-area"}
    ctx.ndjson("summary.ndjson", [rec])
    ctx.summary = rec


def _ensemble_imitation(ctx: Context):
    from .chain import HamiltonianParams
    from .ensemble import imitation_average

    c = ctx.cfg
    series = imitation_average(c["S"], HamiltonianParams(c["Jt"], c["h"], c["L"]), c["N"], c["duration"],
                               ctx.seed, c["sample_dt"], c["dt"])
    rows = [("t", "classical_mean", "stderr", "quantum_up")]
    q = [float("nan")] * len(series.times)
    rec = {"N": c["N"]}
    if c["compare"]:
        from .quantum import relaxation

        r = relaxation(c["S"], c["L"], c["Jt"], c["h"], series.times[-1], len(series.times), L_inf=0)
        q = r.up.values / c["S"]
        rec["max_abs_difference"] = float(np.max(np.abs(series.mean - q)))
    rows += [(t, m, s, v) for t, m, s, v in zip(series.times, series.mean, series.stderr, q)]
    ctx.csv("imitation.csv", rows)
    ctx.ndjson("summary.ndjson", [rec])
    ctx.summary = rec


HANDLERS = {
    "classical-orbit": _classical_orbit,
    "separatrix": _separatrix,
    "lyapunov-scan-J": _lyapunov_scan_J,
    "lyapunov-scan-L": _lyapunov_scan_L,
    "stability-certificate": _stability_certificate,
    "cusp-scan": _cusp_scan,
    "fixed-point-exponent": _fixed_point_exponent,
    "fourier-modes": _fourier_modes,
    "temporal-spectrum": _temporal_spectrum,
    "mechanism-criterion": _mechanism_criterion,
    "arnold-watch": _arnold_watch,
    "quantum-rvalue": _quantum_rvalue,
    "quantum-relax": _quantum_relax,
    "scar-report": _scar_report,
    "spherical-map": _spherical_map,
    "pr-scan": _pr_scan,
    "ensemble-otoc": _ensemble_otoc,
    "ensemble-imitation": _ensemble_imitation,
}


# ---------------------------------------------------------------- config resolution

def resolve_config(command: str, file_cfg: dict | None, flags: dict) -> dict:
    """Defaults < config file < flags, each value passed through its converter."""
    spec = COMMANDS[command]
    raw = {k: p.default for k, p in spec.items()}
    for src in (file_cfg or {}, flags):
        for k, v in src.items():
            if k not in spec:
                raise ParameterError(f"unknown parameter {k!r} for {command}")
            raw[k] = v
    cfg = {}
    for k, p in spec.items():
        try:
            cfg[k] = p.conv(raw[k]) if raw[k] is not None else None
        except (ValueError, TypeError) as e:
            raise ParameterError(f"bad value for {k}: {raw[k]!r} ({e})") from None
    validate(command, cfg)
    return cfg


def validate(command: str, cfg: dict) -> None:
    def need(cond, msg):
        if not cond:
            raise ParameterError(msg)

    need(cfg["h"] > 0, "h must be positive")
    need(0 < cfg["dt"] <= 0.01, "dt must lie in (0, 0.01]")
    for k in ("L",):
        if k in cfg and cfg[k] is not None and not isinstance(cfg[k], str):
            Ls = cfg[k] if isinstance(cfg[k], list) else [cfg[k]]
            need(all(L >= 2 for L in Ls), "L must be >= 2")
    if "S" in cfg:
        Ss = cfg["S"] if isinstance(cfg["S"], list) else [cfg["S"]]
        need(all(s in (0.5, 1.0, 1.5, 2.0) for s in Ss), "S must be one of 1/2, 1, 3/2, 2")
    for k in ("N", "M", "n_times", "n_theta", "n_phi", "stride", "samples", "per_decade", "certificate_M"):
        if cfg.get(k) is not None:
            need(cfg[k] >= 1, f"{k} must be >= 1")
    for k in ("T_R", "duration", "window", "t_max", "radius", "amplitude", "sample_dt", "checkpoint_every"):
        v = cfg.get(k)
        if isinstance(v, list):
            need(all(x > 0 for x in v), f"{k} must be positive")
        elif v is not None:
            need(v > 0, f"{k} must be positive")
    if "taper" in cfg:
        need(0 <= cfg["taper"] <= 1, "taper must lie in [0, 1]")
    if command == "ensemble-otoc":
        need(cfg["radius"] < 1, "radius must be < 1")


# ---------------------------------------------------------------- argument parsing

def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinchaos", description="Classical and quantum spin-chain chaos laboratory.")
    ap.add_argument("--version", action="version", version=f"spinchaos {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(p):
        p.add_argument("--config", type=Path, help="YAML file with parameters (flags override it)")
        p.add_argument("--seed", type=int, help="PRNG seed (default: fresh entropy, recorded in the manifest)")
        p.add_argument("--out", type=Path, help="output directory (default: $SPINCHAOS_OUTPUT_DIR or ./spinchaos-out)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for scans")

    for name, spec in COMMANDS.items():
        p = sub.add_parser(name, help=f"run {name}")
        common(p)
        for k, prm in spec.items():
            p.add_argument(_flag(k), dest=k, default=argparse.SUPPRESS, metavar="V",
                           help=f"{prm.help} (default {prm.default})")

    p = sub.add_parser("recipe", help="run a named figure preset")
    common(p)
    p.add_argument("name", nargs="?", help="recipe name, e.g. fig8")
    p.add_argument("--list", action="store_true", help="list recipes and exit")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a preset parameter")

    p = sub.add_parser("verify", help="re-check the checksums in a run manifest")
    p.add_argument("path", type=Path, help="manifest.json or its directory")
    return ap


def _error(outdir: Path | None, code: int, exc: BaseException) -> int:
    rec = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(rec), file=sys.stderr)
    if outdir is not None:
        try:
            outdir.mkdir(parents=True, exist_ok=True)
            (outdir / "error.json").write_text(json.dumps(rec) + "\n")
        except OSError:
            pass
    return code


NUMERIC_ERRORS: tuple = (FloatingPointError, ArithmeticError, np.linalg.LinAlgError)


def _numeric_errors() -> tuple:
    from .lyapunov import FitFailure
    from .orbits import BracketError, NoClosure
    from .quantum import SectorTooLarge
    from .spectral import PeakNotFound, WindowTooShort

    return NUMERIC_ERRORS + (FitFailure, NoClosure, BracketError, PeakNotFound, WindowTooShort, SectorTooLarge)


def run(command: str, cfg: dict, seed: int | None, outdir: Path, jobs: int = 1, extra: dict | None = None) -> Context:
    """Dispatch one resolved configuration and write its manifest."""
    if seed is None:
        seed = int(np.random.SeedSequence().generate_state(1, np.uint32)[0])
    ctx = Context(command, cfg, seed, outdir, jobs)
    t0 = time.perf_counter()
    HANDLERS[command](ctx)
    ctx.manifest.duration_s = time.perf_counter() - t0
    ctx.manifest.extra = {"summary": ctx.summary, **(extra or {})}
    ctx.manifest.write(outdir)
    return ctx


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)  # exits with status 2 on usage errors

    if args.command == "verify":
        try:
            bad = sio.verify_manifest(args.path)
        except (OSError, ValueError, KeyError) as e:
            return _error(None, EXIT_RUNTIME, e)
        if bad:
            print(json.dumps({"mismatch": bad}))
            return EXIT_VERIFY
        print("ok")
        return EXIT_OK

    outdir = args.out if args.out is not None else sio.default_output_dir()
    try:
        extra = {}
        if args.command == "recipe":
            from .recipes import RECIPES, UnknownRecipe, figure_recipe

            if args.list or not args.name:
                for k, r in RECIPES.items():
                    print(f"{k:7s} {r['command']:22s} {r.get('note', '')}")
                return EXIT_OK
            try:
                rec = figure_recipe(args.name)
            except UnknownRecipe as e:
                raise ParameterError(str(e)) from None
            command, flags = rec["command"], dict(rec["params"])
            for kv in args.set:
                if "=" not in kv:
                    raise ParameterError(f"--set expects KEY=VALUE, got {kv!r}")
                k, v = kv.split("=", 1)
                flags[k.replace("-", "_")] = v
            extra = {"recipe": args.name, "note": rec["note"]}
        else:
            command = args.command
            flags = {k: getattr(args, k) for k in COMMANDS[command] if hasattr(args, k)}
        file_cfg = None
        if args.config is not None:
            file_cfg = yaml.safe_load(args.config.read_text()) or {}
            if not isinstance(file_cfg, dict):
                raise ParameterError("config file must hold a mapping")
            file_cfg = {str(k).replace("-", "_"): v for k, v in file_cfg.items()}
        cfg = resolve_config(command, file_cfg, flags)
        if args.jobs < 1:
            raise ParameterError("--jobs must be >= 1")
    except ParameterError as e:
        return _error(outdir, EXIT_PARAM, e)
    except (OSError, yaml.YAMLError) as e:
        return _error(outdir, EXIT_RUNTIME, e)

    try:
        run(command, cfg, args.seed, outdir, args.jobs, extra)
    except ParameterError as e:
        return _error(outdir, EXIT_PARAM, e)
    except _numeric_errors() as e:
        return _error(outdir, EXIT_NUMERIC, e)
    except Exception as e:  # noqa: BLE001 - any other module error becomes a record
        return _error(outdir, EXIT_RUNTIME, e)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

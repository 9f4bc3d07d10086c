"""Named analyses that turn a :class:`ScenarioConfig` into CSV artifacts."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Callable

import numpy as np

from . import __version__
from .artifacts import CLASS_CODES, CsvArtifact
from .config import ScenarioConfig, serialize_config
from .errors import ConfigError, NonFiniteField, RangeError, StepSizeUnderflow
from .existence import branch_trace, default_omega_range, find_planewaves
from .model import PlaneWave, amplitude_branch_of
from .sim import Grid, Modal, Noise, Observables, estimate_planewave, integrate, make_initial_history
from .stability import (
    StabilityKind,
    certify_rightmost,
    rightmost_root,
    stability_map,
    strong_spectrum,
)
from .trivial import classify_trivial, hopf_curve, trivial_gamma

SEED_ENV = "DCGLE_SEED"


class ScenarioFailure(Exception):
    """Numerical failure inside a scenario; ``artifacts`` holds partial output."""

    def __init__(self, message, artifacts, node):
        super().__init__(message)
        self.artifacts = artifacts
        self.node = node


class _Run:
    def __init__(self, cfg: ScenarioConfig, threads: int, certify: bool):
        self.cfg = cfg
        self.threads = max(1, int(threads))
        self.certify = certify
        self.node = None
        self.artifacts: list[CsvArtifact] = []
        self.extra: dict = {}

    def new(self, name, columns, tag):
        a = CsvArtifact(name, list(columns), tag=tag)
        self.artifacts.append(a)
        return a

    def pmap(self, fn: Callable, items):
        items = list(items)
        if self.threads == 1 or len(items) < 2:
            out = []
            for it in items:
                self.node = it
                out.append(fn(it))
            return out
        with ProcessPoolExecutor(max_workers=self.threads) as ex:
            return list(ex.map(fn, items))


def _grid(scan, name, lo=None, hi=None, n=None):
    values = scan.get(f"{name}_values")
    if values:
        return np.asarray(values, dtype=float)
    lo = scan[f"{name}_min"] if lo is None else lo
    hi = scan[f"{name}_max"] if hi is None else hi
    n = scan[f"n_{name}"] if n is None else n
    return np.linspace(lo, hi, n)


def _branch(scan, default):
    return scan["branch"] if scan.get("branch") else default


# ---------------------------------------------------------------------------
# scenarios


def _hopf_curves(run: _Run):
    cfg = run.cfg
    p, s = cfg.model, cfg.scan
    qs = s["q_values"] or [s["q"]]
    om = np.linspace(
        -2.0 if s["omega_min"] is None else s["omega_min"],
        2.0 if s["omega_max"] is None else s["omega_max"],
        4001 if s["n_omega"] is None else s["n_omega"],
    )
    a = run.new("hopf-curves", ("omega", "eta", "delta", "q"), "hopf-curves")
    skipped = 0
    for q in qs:
        run.node = {"q": q}
        pts, sk = hopf_curve(p, float(q), om)
        skipped += sk
        for pt in pts:
            a.append((pt.omega_c, pt.eta, pt.delta, pt.q))
    run.extra["skipped_points"] = skipped


def _trivial_dispersion(run: _Run):
    p, s = run.cfg.model, run.cfg.scan
    xi = _grid(s, "xi")
    q = _grid(s, "q")
    g = trivial_gamma(p, q[None, :], xi[:, None])
    a = run.new("trivial-dispersion", ("xi", "q", "gamma"), "trivial-dispersion")
    for i, x in enumerate(xi):
        for j, qq in enumerate(q):
            a.append((float(x), float(qq), float(g[i, j])))


def _trivial_regions(run: _Run):
    p, s = run.cfg.model, run.cfg.scan
    if s["pairs"]:
        pairs = [tuple(v) for v in s["pairs"]]
    else:
        pairs = [(float(d), float(e)) for d in _grid(s, "delta") for e in _grid(s, "eta")]
    xi = _grid(s, "xi")
    q = _grid(s, "q")
    a = run.new("trivial-regions", ("delta", "eta", "class", "two_regions"), "trivial-regions")
    for d, e in pairs:
        run.node = {"delta": d, "eta": e}
        c = classify_trivial(p.replace(delta=d, eta=e), xi, q)
        a.append((d, e, int(c.kind), int(c.two_regions)))


def _omega_grid(p, s, q, n_default):
    lo, hi = default_omega_range(p, q)
    return np.linspace(
        lo if s["omega_min"] is None else s["omega_min"],
        hi if s["omega_max"] is None else s["omega_max"],
        n_default if s["n_omega"] is None else s["n_omega"],
    )


def _pw_roots(run: _Run):
    p, s = run.cfg.model, run.cfg.scan
    q = s["q"]
    rng = None
    if s["omega_min"] is not None or s["omega_max"] is not None:
        lo, hi = default_omega_range(p, q)
        rng = (lo if s["omega_min"] is None else s["omega_min"], hi if s["omega_max"] is None else s["omega_max"])
    a = run.new("pw-roots", ("omega", "a0", "theta", "branch"), "pw-roots")
    for pw in find_planewaves(p, q, omega_range=rng):
        a.append((pw.omega, pw.a0, pw.theta, amplitude_branch_of(p, pw)))


def _trace(run):
    p, s = run.cfg.model, run.cfg.scan
    q = s["q"]
    return branch_trace(p, q, _omega_grid(p, s, q, 2000), _branch(s, "-"))


def _pw_branch(run: _Run):
    br = _trace(run)
    a = run.new("pw-branch", ("omega", "a0", "delta", "theta", "segment_id"), "pw-branch")
    for row in br.points:
        a.append((row[0], row[1], row[2], row[3], int(row[4])))
    env = br.envelope
    e = run.new("pw-branch_envelope", ("a0", "delta_phi0", "delta_phipi"), None)
    for (a0, d0), (_, d1) in zip(env["phi=0"], env["phi=pi"]):
        e.append((float(a0), float(d0), float(d1)))
    run.extra["fold_count"] = br.fold_count()


def _finite_point(args):
    p, q, row, k, certify = args
    om, a0, d, th, sid = row
    pp = p.replace(delta=float(d))
    pw = PlaneWave(q, float(om), float(a0), float(th))
    r = rightmost_root(pp, pw, k)
    if r.max_re < 0:
        cls = int(StabilityKind.STABLE)
    else:
        l1, _ = strong_spectrum(pp, q, float(th), k, amplitude_branch_of(pp, pw))
        cls = int(StabilityKind.STRONG if np.max(l1.real) > 0 else StabilityKind.WEAK)
    ok = certify_rightmost(pp, pw, r, k[:: max(1, k.size // 12)]) if certify else None
    return (float(om), float(a0), float(d), float(th), int(sid), r.max_re, r.k, cls), ok


def _pw_stability_finite(run: _Run):
    p, s = run.cfg.model, run.cfg.scan
    if p.tau == 0:
        raise RangeError("tau", p.tau, "pw-stability-finite needs tau > 0")
    br = _trace(run)
    pts = br.points
    lo = s["delta_min"] if s["delta_values"] is None else min(s["delta_values"])
    hi = s["delta_max"] if s["delta_values"] is None else max(s["delta_values"])
    pts = pts[(pts[:, 2] >= lo) & (pts[:, 2] <= hi)]
    stride = s["stride"] or max(1, math.ceil(len(pts) / 400))
    pts = pts[::stride]
    k = _grid(s, "k")
    cols = ("omega", "a0", "delta", "theta", "segment_id", "max_re_lambda", "argmax_k", "class")
    a = run.new("pw-stability-finite", cols, "pw-stability-finite")
    results = run.pmap(_finite_point, [(p, s["q"], tuple(r), k, run.certify) for r in pts])
    uncertified = []
    for row, ok in results:
        a.append(row)
        if ok is False:
            uncertified.append(row[0])
    if run.certify:
        run.extra["uncertified_omegas"] = uncertified
    run.extra["stride"] = stride


def _map_row(args):
    p, q, d, theta, branch, k, xi = args
    return stability_map(p, q, [d], theta, branch, k_grid=k, xi_grid=xi)


def _maps(run: _Run, which):
    p, s = run.cfg.model, run.cfg.scan
    q = s["q"]
    deltas = _grid(s, "delta")
    theta = _grid(s, "theta")
    k = _grid(s, "k")
    xi = np.linspace(-math.pi, math.pi, s["weak_n_xi"])
    branch = _branch(s, "+")
    rows = run.pmap(_map_row, [(p, q, float(d), theta, branch, k, xi) for d in deltas])
    col = {"pw-strong-map": "strong_max_re", "pw-weak-map": "weak_sup_gamma", "pw-class-map": "class"}[which]
    a = run.new(which, ("delta", "theta", col), "map")
    up = run.new(which + "_upper", ("delta", "a0", "class"), "projection")
    lo = run.new(which + "_lower", ("delta", "a0", "class"), "projection")
    for m in rows:
        d = float(m.delta[0])
        for j, th in enumerate(m.theta):
            if which == "pw-strong-map":
                v = float(m.strong_max[0, j])
            elif which == "pw-weak-map":
                v = float(m.weak_sup[0, j])
            else:
                v = int(m.kind[0, j])
            a.append((d, float(th), v))
        for tgt, upper in ((up, True), (lo, False)):
            for dd, a0, c in m.projection(upper):
                tgt.append((float(dd), float(a0), int(c)))


def _fill_sim(grid, res, a, o):
    x = grid.x
    for t, v in zip(res.times, res.snapshots):
        for j in range(grid.n_points):
            a.append((float(t), j, float(x[j]), float(v[j].real), float(v[j].imag)))
    for row in res.observables.as_array():
        o.append((*(float(v) for v in row[:5]), int(row[5])))


def _simulate(run: _Run):
    p = run.cfg.model
    sim = run.cfg.simulation
    grid = Grid(sim["n_points"], sim["length"])
    pw = PlaneWave(sim["start_q"], sim["start_omega"], sim["start_a0"])
    seed = sim["seed"]
    if os.environ.get(SEED_ENV):
        seed = int(os.environ[SEED_ENV])
        run.extra["seed_override"] = seed
    amp = sim["perturbation_amplitude"] * pw.a0
    kind = sim["perturbation"]
    if kind == "modal":
        kp = sim["perturbation_k"] if sim["perturbation_k"] is not None else grid.dk
        pert = Modal(kp, amp)
    elif kind == "noise":
        pert = Noise(amp, seed)
    else:
        pert = None
    hist = make_initial_history(grid, pw, pert)
    run.node = {"t": 0.0}

    def progress(t, y):
        run.node = {"t": float(t)}

    a = run.new("simulate", ("t", "j", "x", "re", "im"), "simulate")
    o = run.new("simulate_observables", Observables.columns, "observables")
    try:
        res = integrate(
            p,
            grid,
            hist,
            sim["t_end"],
            rtol=sim["rtol"],
            atol=sim["atol"],
            snapshot_every=sim["snapshot_every"],
            observe_every=sim["observe_every"],
            callback=progress,
        )
    except (NonFiniteField, StepSizeUnderflow) as e:
        _fill_sim(grid, e.partial, a, o)
        raise
    _fill_sim(grid, res, a, o)
    window = max(p.tau, 2 * sim["snapshot_every"])
    sel = res.times >= res.times[-1] - window
    est = estimate_planewave(res.times[sel], res.snapshots[sel], grid)
    # snapshot cadence may alias the phase; the observables' omega is instantaneous
    obs = res.observables.as_array()
    osel = obs[:, 0] >= res.times[-1] - window
    omega = float(np.mean(obs[osel, 4]))
    run.extra["final_estimate"] = {
        "q": est.q,
        "omega": omega,
        "a0": est.a0,
        "is_planewave": est.is_planewave,
        "modulus_variation": est.modulus_variation,
        "peak_fraction": est.peak_fraction,
    }
    run.extra["steps"] = {"accepted": res.n_steps, "rejected": res.n_rejected}


_DISPATCH = {
    "hopf-curves": _hopf_curves,
    "trivial-dispersion": _trivial_dispersion,
    "trivial-regions": _trivial_regions,
    "pw-roots": _pw_roots,
    "pw-branch": _pw_branch,
    "pw-stability-finite": _pw_stability_finite,
    "pw-strong-map": lambda r: _maps(r, "pw-strong-map"),
    "pw-weak-map": lambda r: _maps(r, "pw-weak-map"),
    "pw-class-map": lambda r: _maps(r, "pw-class-map"),
    "simulate": _simulate,
}


def run_scenario(cfg: ScenarioConfig, threads: int = 1, certify_roots: bool = False) -> list[CsvArtifact]:
    """Run ``cfg.scenario``; every artifact carries the resolved config in its metadata.

    On a numerical failure the partial artifacts are returned inside a
    :class:`ScenarioFailure` with status ``FAILED`` and the failing node.
    """
    run = _Run(cfg, threads, certify_roots)
    t0 = time.perf_counter()
    status, err = "OK", None
    try:
        _DISPATCH[cfg.scenario](run)
    except ConfigError:
        raise
    except (ArithmeticError, RuntimeError, ValueError) as e:
        status, err = "FAILED", e
    meta = {
        "scenario": cfg.scenario,
        "config": cfg.resolved(),
        "config_text": serialize_config(cfg),
        "version": __version__,
        "wall_time_s": time.perf_counter() - t0,
        "status": status,
        "class_codes": CLASS_CODES,
        **run.extra,
    }
    if err is not None:
        meta["failed_node"] = run.node
        meta["error"] = f"{type(err).__name__}: {err}"
    for a in run.artifacts:
        a.metadata = dict(meta)
    if err is not None:
        raise ScenarioFailure(str(err), run.artifacts, run.node) from err
    return run.artifacts

"""Plane waves at finite delay: roots of the frequency equation and snaking branches."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import NoRealAmplitude, ResolutionWarning
from .model import (
    BRANCHES,
    ModelParams,
    PlaneWave,
    _check_branch,
    amplitude_squared_roots,
    theta_of,
)

log = logging.getLogger(__name__)

DEDUP_TOL = 1e-8


def _freq_residual(params: ModelParams, q, omega, branch, clip=False):
    omega = np.asarray(omega, dtype=float)
    arg = omega * params.tau - params.phi
    c = params.delta - params.beta * q * q + params.eta * np.cos(arg)
    if clip and params.mu != 0.0:
        # pin c onto the fold when roundoff pushes the discriminant negative
        cfold = params.epsilon ** 2 / (4.0 * params.mu)
        c = np.where(params.epsilon ** 2 - 4.0 * params.mu * c < 0, cfold, c)
    xp, xm = amplitude_squared_roots(params, c)
    x = xp if branch == "+" else xm
    if clip:
        x = np.where((x < 0) & (x > -1e-12), 0.0, x)
    x = np.where(x >= 0, x, np.nan)
    return omega + 0.5 * q * q - x - params.nu * x * x + params.eta * np.sin(arg)


def pw_frequency_residual(params: ModelParams, q: float, omega, branch: str = "+"):
    """``f_branch(omega)``; its zeros are plane-wave frequencies.

    Scalar input raises :class:`NoRealAmplitude` where the branch has no real
    nonnegative amplitude; array input returns NaN there.
    """
    _check_branch(branch)
    f = _freq_residual(params, q, omega, branch)
    if np.ndim(omega) == 0:
        f = float(f)
        if math.isnan(f):
            raise NoRealAmplitude(f"branch {branch} has no amplitude at omega={omega}")
    return f


def amplitude_at(params: ModelParams, q: float, omega: float, branch: str) -> float:
    c = params.delta - params.beta * q * q + params.eta * math.cos(omega * params.tau - params.phi)
    xp, xm = amplitude_squared_roots(params, c)
    x = float(xp if branch == "+" else xm)
    if -1e-12 < x < 0:
        x = 0.0
    if not (x >= 0):
        raise NoRealAmplitude(f"branch {branch} has no amplitude at omega={omega}")
    return math.sqrt(x)


def scan_spacing(params: ModelParams) -> float:
    if params.tau == 0.0:
        return 1e-3
    return min(2.0 * math.pi / (20.0 * params.tau * max(1.0, params.eta)), 1e-3)


def default_omega_range(params: ModelParams, q: float):
    """Frequency window from the tau = 0 envelopes, padded by ``eta + 1``."""
    lo, hi = math.inf, -math.inf
    for sign in (1.0, -1.0):
        p0 = params.replace(tau=0.0, phi=0.0 if sign > 0 else math.pi)
        c = p0.delta - p0.beta * q * q + sign * p0.eta
        for x in amplitude_squared_roots(p0, c):
            x = float(x)
            if math.isfinite(x) and x >= 0:
                w = -0.5 * q * q + x + p0.nu * x * x
                lo, hi = min(lo, w), max(hi, w)
    if not math.isfinite(lo):
        lo = hi = -0.5 * q * q
    return lo - params.eta - 1.0, hi + params.eta + 1.0


def _boundary(f, a, b, valid_a):
    """Bisect the validity edge between ``a`` and ``b``; returns the point on the valid side."""
    for _ in range(80):
        m = 0.5 * (a + b)
        if (not math.isnan(f(m))) == valid_a:
            a = m
        else:
            b = m
    return a if valid_a else b


def _polish(f, r, h=1e-7):
    fr = f(r)
    try:
        d = (f(r + h) - f(r - h)) / (2 * h)
    except (ValueError, ZeroDivisionError):
        return r
    if not (math.isfinite(d) and d != 0.0):
        return r
    r2 = r - fr / d
    f2 = f(r2)
    if math.isfinite(f2) and abs(f2) < abs(fr):
        return r2
    return r


def _branch_roots(params, q, branch, lo, hi, h):
    n = max(int(math.ceil((hi - lo) / h)), 2) + 1
    w = np.linspace(lo, hi, n)
    fv = _freq_residual(params, q, w, branch)

    def f(x):
        return float(_freq_residual(params, q, x, branch))

    def fc(x):
        return float(_freq_residual(params, q, x, branch, clip=True))

    roots = []
    valid = np.isfinite(fv)
    sc = valid[:-1] & valid[1:] & (np.sign(fv[:-1]) != np.sign(fv[1:]))
    hits = np.flatnonzero(sc)
    if hits.size > 1 and np.any(np.diff(hits) == 1):
        warnings.warn(
            f"branch {branch}: sign changes in adjacent scan cells; refine the scan",
            ResolutionWarning,
            stacklevel=3,
        )
    for i in hits:
        a, b = w[i], w[i + 1]
        if fv[i] == 0.0:
            roots.append(a)
            continue
        if fv[i + 1] == 0.0:
            continue
        r = brentq(f, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
        roots.append(_polish(f, r))
    if fv.size and valid[-1] and fv[-1] == 0.0:
        roots.append(w[-1])

    # roots hiding between the last valid scan point and the validity edge
    edges = np.flatnonzero(valid[:-1] != valid[1:])
    for i in edges:
        a, b = w[i], w[i + 1]
        va = bool(valid[i])
        e = _boundary(f, a, b, va)
        fe = fc(e)
        inner = a if va else b
        fi = fv[i] if va else fv[i + 1]
        if math.isfinite(fe) and fe != 0.0 and np.sign(fe) != np.sign(fi):
            lo_, hi_ = (inner, e) if inner < e else (e, inner)
            r = brentq(fc, lo_, hi_, xtol=1e-15, maxiter=200)
            roots.append(r)
        elif fe == 0.0:
            roots.append(e)
    return roots


def find_planewaves(
    params: ModelParams,
    q: float,
    omega_range: Optional[tuple] = None,
    branches: Sequence[str] = None,
    spacing: Optional[float] = None,
) -> list[PlaneWave]:
    """All plane waves with wavenumber ``q`` and frequency in ``omega_range``.

    Both amplitude branches are searched. Output is sorted by frequency and
    carries the tube angle.
    """
    if omega_range is None:
        omega_range = default_omega_range(params, q)
    lo, hi = map(float, omega_range)
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise ValueError(f"invalid omega_range {omega_range!r}")
    h = scan_spacing(params) if spacing is None else spacing
    if branches is None:
        branches = ("+",) if params.mu == 0.0 else BRANCHES
    found = []
    for br in branches:
        for r in _branch_roots(params, q, br, lo, hi, h):
            a0 = amplitude_at(params, q, r, br)
            found.append((r, a0, br))
    found.sort()
    out: list[PlaneWave] = []
    last = None
    for r, a0, br in found:
        if last is not None and abs(r - last[0]) < DEDUP_TOL and abs(a0 - last[1]) < 1e-6:
            continue
        out.append(PlaneWave(q, float(r), float(a0), float(theta_of(r, params.tau, params.phi))))
        last = (r, a0)
    return out


def count_planewaves(params: ModelParams, q: float, omega_range=None) -> int:
    return len(find_planewaves(params, q, omega_range))


def count_sign_changes(params: ModelParams, q: float, omega_range, n: int) -> int:
    """Brute-force count of sign changes of both branches on ``n`` uniform points."""
    w = np.linspace(omega_range[0], omega_range[1], n)
    total = 0
    for br in BRANCHES if params.mu != 0.0 else ("+",):
        f = _freq_residual(params, q, w, br)
        ok = np.isfinite(f[:-1]) & np.isfinite(f[1:])
        total += int(np.sum(ok & (np.sign(f[:-1]) != np.sign(f[1:]))))
    return total


# ---------------------------------------------------------------------------
# branches


@dataclass
class BranchSegment:
    omega: np.ndarray
    a0: np.ndarray
    delta: np.ndarray
    theta: np.ndarray


@dataclass
class Branch:
    q: float
    branch_tag: str
    segments: list = field(default_factory=list)
    envelope: dict = field(default_factory=dict)
    swaps: list = field(default_factory=list)

    @property
    def points(self):
        """All points stacked as rows ``(omega, a0, delta, theta, segment_id)``."""
        rows = []
        for sid, s in enumerate(self.segments):
            rows.append(np.column_stack([s.omega, s.a0, s.delta, s.theta, np.full(s.omega.size, sid)]))
        if not rows:
            return np.empty((0, 5))
        return np.vstack(rows)

    def fold_count(self, delta_range=None) -> int:
        """Number of turning points of delta along the branch."""
        n = 0
        for s in self.segments:
            d = s.delta
            if d.size < 3:
                continue
            dd = np.diff(d)
            turn = np.flatnonzero(np.sign(dd[:-1]) * np.sign(dd[1:]) < 0) + 1
            if delta_range is not None:
                turn = turn[(d[turn] >= delta_range[0]) & (d[turn] <= delta_range[1])]
            n += turn.size
        return n


def _a2_of_omega(params: ModelParams, q, omega, branch):
    """Roots of ``nu x^2 + x - r = 0``, ``r = eta sin(w tau - phi) + w + q^2/2``."""
    r = params.eta * np.sin(omega * params.tau - params.phi) + omega + 0.5 * q * q
    nu = params.nu
    if nu == 0.0:
        x = r.copy()
        return x, np.full_like(x, np.nan)
    disc = 1.0 + 4.0 * nu * r
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.sqrt(np.where(disc >= 0, disc, np.nan))
        w = -0.5 * (1.0 + s)
        r1 = w / nu
        r2 = -r / w
    return np.fmax(r1, r2), np.fmin(r1, r2)


def _branch_values(params, q, omega, branch):
    xp, xm = _a2_of_omega(params, q, omega, branch)
    x = xp if branch == "+" else xm
    x = np.where(x >= 0, x, np.nan)
    delta = (
        params.beta * q * q
        - params.epsilon * x
        - params.mu * x * x
        - params.eta * np.cos(omega * params.tau - params.phi)
    )
    return x, delta


def envelope_curves(params: ModelParams, q: float, a0_max: float = 3.0, n: int = 600):
    """Delay-free reference branches (tau = 0, phi = 0 and phi = pi) as ``(a0, delta)`` arrays."""
    a0 = np.linspace(0.0, a0_max, n)
    x = a0 * a0
    base = params.beta * q * q - params.epsilon * x - params.mu * x * x
    return {
        "phi=0": np.column_stack([a0, base - params.eta]),
        "phi=pi": np.column_stack([a0, base + params.eta]),
    }


def branch_trace(
    params: ModelParams,
    q: float,
    omega_grid,
    branch: str = "-",
    max_delta_step: float = 0.01,
    max_refine: int = 12,
) -> Branch:
    """Plane-wave branch parametrized by frequency.

    ``a0^2(omega)`` solves the imaginary-part relation (a quadratic when
    ``nu != 0``); ``delta(omega)`` then follows from the real part. Branch
    '-' is the smaller root, the one continuous with the ``nu -> 0`` limit.
    The grid is refined until consecutive delta values differ by less than
    ``max_delta_step``; gaps without a real amplitude split the branch into
    segments.
    """
    _check_branch(branch)
    w = np.unique(np.asarray(omega_grid, dtype=float))
    for _ in range(max_refine):
        x, d = _branch_values(params, q, w, branch)
        ok = np.isfinite(d)
        jump = ok[:-1] & ok[1:] & (np.abs(np.diff(d)) > max_delta_step)
        if not jump.any():
            break
        mids = 0.5 * (w[:-1] + w[1:])[jump]
        w = np.sort(np.concatenate([w, mids]))
    x, d = _branch_values(params, q, w, branch)

    out = Branch(q=q, branch_tag=branch)
    ok = np.isfinite(d)
    idx = np.flatnonzero(ok)
    if idx.size:
        breaks = np.flatnonzero(np.diff(idx) > 1) + 1
        for part in np.split(idx, breaks):
            ww = w[part]
            out.segments.append(
                BranchSegment(
                    omega=ww,
                    a0=np.sqrt(x[part]),
                    delta=d[part],
                    theta=np.asarray(theta_of(ww, params.tau, params.phi)),
                )
            )
    if params.nu != 0.0:
        xp, xm = _a2_of_omega(params, q, w, branch)
        near = np.isfinite(xp) & np.isfinite(xm) & (np.abs(xp - xm) < 1e-9 * (1 + np.abs(xp)))
        for om in w[near]:
            out.swaps.append(float(om))
            log.info("branch %s: roots of a0^2(omega) touch at omega=%.6g", branch, om)
    amax = 3.0
    if out.segments:
        amax = max(float(np.nanmax(s.a0)) for s in out.segments) * 1.1 + 0.1
    out.envelope = envelope_curves(params, q, a0_max=amax)
    return out


def branch_planewave(params: ModelParams, q: float, omega: float, branch: str = "-"):
    """Exact plane wave on the traced branch at ``omega`` (with its own delta)."""
    x, d = _branch_values(params, q, np.array([omega]), branch)
    if not np.isfinite(d[0]):
        raise NoRealAmplitude(f"no branch point at omega={omega}")
    p = params.replace(delta=float(d[0]))
    return p, PlaneWave(q, float(omega), float(math.sqrt(x[0])), float(theta_of(omega, params.tau, params.phi)))

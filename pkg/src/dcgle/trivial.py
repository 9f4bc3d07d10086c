"""Stability of the homogeneous state ``A = 0``.

Linearizing about zero decouples Fourier modes; mode ``q`` obeys

    lam = delta - (beta + i/2) q^2 + eta exp(i phi) exp(-lam tau),

a scalar quasipolynomial solved exactly with the Lambert W function.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import lambertw

from .errors import DegenerateSpectrum
from .model import ModelParams


def default_xi_grid():
    return np.linspace(-10.0, 10.0, 2001)


def default_q_grid():
    return np.linspace(-3.0, 3.0, 601)


@dataclass(frozen=True)
class HopfPoint:
    omega_c: float
    eta: float
    delta: float
    q: float


def hopf_curve(params: ModelParams, q: float, omega_grid, sin_tol: float = 1e-12):
    """Points ``(eta, delta)`` where ``lam = i omega`` is a root for mode ``q``.

    Returns ``(points, skipped)``; grid values with ``|sin(phi - omega tau)|``
    below ``sin_tol`` sit on an asymptote and are counted in ``skipped``.
    """
    pts = []
    skipped = 0
    q2 = q * q
    for om in np.asarray(omega_grid, dtype=float):
        arg = params.phi - om * params.tau
        s = math.sin(arg)
        if abs(s) < sin_tol:
            skipped += 1
            continue
        eta = (0.5 * q2 + om) / s
        delta = params.beta * q2 - math.cos(arg) * eta
        pts.append(HopfPoint(float(om), float(eta), float(delta), float(q)))
    return pts, skipped


def hopf_residual(params: ModelParams, pt: HopfPoint) -> float:
    """``|i w - delta - eta e^{i phi} e^{-i w tau} + (beta + i/2) q^2|`` at a Hopf point."""
    w = pt.omega_c
    z = (
        1j * w
        - pt.delta
        - pt.eta * np.exp(1j * (params.phi - w * params.tau))
        + (params.beta + 0.5j) * pt.q * pt.q
    )
    return float(abs(z))


def trivial_gamma(params: ModelParams, q, xi):
    """Rescaled growth rate of the pseudo-continuous spectrum of ``A = 0``."""
    if params.eta == 0.0:
        raise DegenerateSpectrum("eta = 0: no pseudo-continuous spectrum, use delta - (beta + i/2) q^2")
    q = np.asarray(q, dtype=float)
    xi = np.asarray(xi, dtype=float)
    r = (params.delta - params.beta * q * q) ** 2 + (xi + 0.5 * q * q) ** 2
    with np.errstate(divide="ignore"):
        g = -0.5 * np.log(r / params.eta ** 2)
    return float(g) if g.ndim == 0 else g


def nodelay_dispersion(params: ModelParams, q):
    """Growth rate ``delta - (beta + i/2) q^2`` without feedback."""
    q = np.asarray(q, dtype=float)
    return params.delta - (params.beta + 0.5j) * q * q


class TrivialKind(enum.IntEnum):
    STABLE = 0
    WEAK = 1
    STRONG = 2


@dataclass(frozen=True)
class TrivialClass:
    kind: TrivialKind
    two_regions: bool
    xi_c: float
    q_c: float
    gamma_max: float


def classify_trivial(params: ModelParams, xi_grid=None, q_grid=None) -> TrivialClass:
    """Strong / weak / stable verdict for ``A = 0`` in the large-delay limit."""
    d, eta = params.delta, abs(params.eta)
    if d > 0:
        kind = TrivialKind.STRONG
    elif d > -eta:
        kind = TrivialKind.WEAK
    else:
        kind = TrivialKind.STABLE
    two = kind != TrivialKind.STABLE and d > eta
    if d <= 0 or eta == 0:
        g = -0.5 * math.log(d * d / eta ** 2) if eta > 0 and d != 0 else (math.inf if eta > 0 else -math.inf)
        return TrivialClass(kind, two, 0.0, 0.0, g)
    xi = default_xi_grid() if xi_grid is None else np.asarray(xi_grid, dtype=float)
    qq = default_q_grid() if q_grid is None else np.asarray(q_grid, dtype=float)
    g = trivial_gamma(params, qq[:, None], xi[None, :])
    i, j = np.unravel_index(int(np.argmax(g)), g.shape)
    return TrivialClass(kind, two, float(xi[j]), float(qq[i]), float(g[i, j]))


def sup_gamma(params: ModelParams, xi_grid=None, q_grid=None) -> float:
    """Supremum of ``trivial_gamma`` over a grid (``+inf`` where it is unbounded)."""
    xi = default_xi_grid() if xi_grid is None else np.asarray(xi_grid, dtype=float)
    qq = default_q_grid() if q_grid is None else np.asarray(q_grid, dtype=float)
    return float(np.max(trivial_gamma(params, qq[:, None], xi[None, :])))


def weak_boundary(
    eta: float,
    lo: float = -2.0,
    hi: float = 0.0,
    tol: float = 1e-12,
    base: Optional[ModelParams] = None,
    xi_grid=None,
    q_grid=None,
) -> float:
    """Bisect on ``delta`` for the sign change of the gridded ``sup gamma``.

    The grid must contain ``q = 0`` and ``xi = 0``. The default here is a
    61 x 201 grid, coarser than :func:`sup_gamma`'s, since only the sign of the
    supremum matters for the bisection.
    """
    p0 = (base or ModelParams()).replace(eta=eta)
    xi = np.linspace(-10.0, 10.0, 201) if xi_grid is None else xi_grid
    qq = np.linspace(-3.0, 3.0, 61) if q_grid is None else q_grid

    def f(d):
        return sup_gamma(p0.replace(delta=d), xi, qq)

    flo, fhi = f(lo), f(hi)
    if not (flo <= 0 < fhi):
        raise ValueError("bracket does not contain the weak-instability boundary")
    while hi - lo > tol:
        m = 0.5 * (lo + hi)
        if f(m) > 0:
            hi = m
        else:
            lo = m
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# exact roots at finite delay


def _mode_coeff(params: ModelParams, q: float) -> complex:
    return params.delta - (params.beta + 0.5j) * q * q


def trivial_char(params: ModelParams, q: float, lam):
    lam = np.asarray(lam, dtype=complex)
    return lam - _mode_coeff(params, q) - params.feedback * np.exp(-lam * params.tau)


def trivial_roots(params: ModelParams, q: float, branches=range(-20, 21)) -> np.ndarray:
    """Characteristic roots of mode ``q`` from Lambert W branches.

    With ``z = (lam - d) tau`` the equation becomes ``z e^z = tau eta e^{i phi} e^{-d tau}``.
    """
    d = _mode_coeff(params, q)
    if params.tau == 0.0 or params.eta == 0.0:
        return np.array([d + params.feedback])
    arg = params.tau * params.feedback * np.exp(-d * params.tau)
    z = np.array([lambertw(arg, k) for k in branches])
    return d + z / params.tau


def trivial_newton(params: ModelParams, q: float, seeds, maxiter: int = 80, tol: float = 1e-14) -> np.ndarray:
    """Newton iteration on the scalar quasipolynomial from many seeds."""
    d = _mode_coeff(params, q)
    c = params.feedback
    tau = params.tau
    lam = np.asarray(seeds, dtype=complex).copy()
    for _ in range(maxiter):
        e = np.exp(-lam * tau)
        f = lam - d - c * e
        df = 1.0 + tau * c * e
        step = f / df
        lam = lam - step
        if np.all(np.abs(step) < tol * (1 + np.abs(lam))):
            break
    ok = np.abs(trivial_char(params, q, lam)) < 1e-10
    return lam[ok]


def trivial_rightmost(params: ModelParams, q: float) -> complex:
    """Root with the largest real part (principal branch of W)."""
    r = trivial_roots(params, q)
    return complex(r[int(np.argmax(r.real))])

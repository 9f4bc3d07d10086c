"""Model parameters and the algebra of plane-wave solutions.

The model is the delayed cubic-quintic complex Ginzburg-Landau equation

    A_t = (beta + i/2) A_xx + delta A + (eps + i)|A|^2 A + (mu + i nu)|A|^4 A
          + eta exp(i phi) A(x, t - tau)

and a plane wave is ``A = a0 exp(i (q x + omega t))`` with ``a0 >= 0``.
Everything here is a closed-form identity; nothing iterates.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NoRealAmplitude

TWO_PI = 2.0 * math.pi
BRANCHES = ("+", "-")


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the delayed CGLE.

    ``eta`` is kept nonnegative; a negative feedback sign is expressed
    through ``phi``.
    """

    beta: float = 0.5
    delta: float = 0.0
    epsilon: float = 1.0
    mu: float = -1.0
    nu: float = -0.1
    eta: float = 0.2
    phi: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise ValueError(f"{f.name} must be finite, got {v!r}")
            object.__setattr__(self, f.name, float(v))
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")

    @classmethod
    def quintic(cls, **overrides) -> "ModelParams":
        """Subcritical (cubic-quintic) default parameter set."""
        base = dict(beta=0.5, epsilon=1.0, mu=-1.0, nu=-0.1, eta=0.2)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def cubic(cls, **overrides) -> "ModelParams":
        """Supercritical cubic CGLE (mu = nu = 0)."""
        base = dict(beta=0.5, epsilon=-1.0, mu=0.0, nu=0.0, eta=0.2)
        base.update(overrides)
        return cls(**base)

    @property
    def is_cubic(self) -> bool:
        return self.mu == 0.0 and self.nu == 0.0

    @property
    def feedback(self) -> complex:
        """eta * exp(i phi)."""
        return self.eta * complex(math.cos(self.phi), math.sin(self.phi))

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class PlaneWave:
    q: float
    omega: float
    a0: float
    theta: Optional[float] = None

    def __post_init__(self):
        if self.a0 < 0:
            raise ValueError(f"a0 must be >= 0, got {self.a0}")

    @property
    def a2(self) -> float:
        return self.a0 * self.a0


def wrap_angle(x):
    """Map angles into [0, 2 pi)."""
    y = np.mod(x, TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    y = np.where(y >= TWO_PI, 0.0, y)
    return float(y) if np.ndim(y) == 0 else y


def angle_distance(a, b):
    """Distance between two angles on the circle."""
    d = np.mod(np.asarray(a) - np.asarray(b), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def theta_of(omega, tau, phi):
    """Tube angle (omega tau - phi + pi) mod 2 pi."""
    return wrap_angle(np.asarray(omega) * tau - phi + math.pi)


def _check_branch(branch):
    if branch not in BRANCHES:
        raise ValueError(f"branch must be '+' or '-', got {branch!r}")


def amplitude_squared_roots(params: ModelParams, c):
    """Roots of ``mu x^2 + eps x + c = 0`` for ``x = a0^2``.

    Returns ``(x_plus, x_minus)`` with ``x_plus >= x_minus`` (NaN where the
    discriminant is negative). With ``mu = 0`` the equation is linear; its
    single root is reported as ``x_plus`` and ``x_minus`` is NaN.
    """
    c = np.asarray(c, dtype=float)
    eps, mu = params.epsilon, params.mu
    if mu == 0.0:
        if eps == 0.0:
            raise NoRealAmplitude("epsilon = mu = 0: amplitude undetermined")
        return -c / eps, np.full_like(c, np.nan)
    disc = eps * eps - 4.0 * mu * c
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.sqrt(np.where(disc >= 0, disc, np.nan))
        # cancellation-free quadratic formula
        sgn = 1.0 if eps >= 0 else -1.0
        w = -0.5 * (eps + sgn * s)
        r1 = w / mu
        r2 = np.where(w != 0, c / np.where(w != 0, w, 1.0), r1)
    return np.fmax(r1, r2), np.fmin(r1, r2)


def _pick(params, c, branch):
    _check_branch(branch)
    xp, xm = amplitude_squared_roots(params, c)
    return xp if branch == "+" else xm


def residual_pw(params: ModelParams, pw: PlaneWave) -> complex:
    """Complex residual of the plane-wave relation; zero iff ``pw`` is a solution."""
    a2 = pw.a0 * pw.a0
    q2 = pw.q * pw.q
    return (
        1j * pw.omega
        + (params.beta + 0.5j) * q2
        - params.delta
        - (params.epsilon + 1j) * a2
        - (params.mu + 1j * params.nu) * a2 * a2
        - params.feedback * np.exp(-1j * pw.omega * params.tau)
    )


def tube_residual(params: ModelParams, pw: PlaneWave) -> float:
    """Residual of the delay-free tube equation (zero on the solution tube)."""
    a2 = pw.a0 * pw.a0
    q2 = pw.q * pw.q
    re = -params.beta * q2 + params.delta + params.epsilon * a2 + params.mu * a2 * a2
    im = pw.omega + 0.5 * q2 - a2 - params.nu * a2 * a2
    return re * re + im * im - params.eta ** 2


def nodelay_amplitude(params: ModelParams, q: float) -> list[float]:
    """All real nonnegative amplitudes of the feedback-free plane wave at ``q``.

    Ordered with the '+' (larger) root first. ``eta`` is ignored.
    """
    c = params.delta - params.beta * q * q
    xs = amplitude_squared_roots(params, c)
    out = []
    for x in xs:
        x = float(x)
        if math.isfinite(x) and x >= 0.0:
            out.append(math.sqrt(x))
    return out


def nodelay_frequency(params: ModelParams, q: float, a0: float) -> float:
    a2 = a0 * a0
    return -0.5 * q * q + a2 + params.nu * a2 * a2


def nodelay_planewaves(params: ModelParams, q: float) -> list[PlaneWave]:
    """Feedback-free plane waves at wavenumber ``q`` (eta treated as zero)."""
    return [PlaneWave(q, nodelay_frequency(params, q, a0), a0) for a0 in nodelay_amplitude(params, q)]


def planewave_from_theta(params: ModelParams, q: float, theta: float, branch: str = "+") -> PlaneWave:
    """Plane wave on the tube at angle ``theta``.

    The result does not depend on ``tau``: ``omega`` is not required to
    satisfy the finite-delay phase closure.
    """
    c = params.delta - params.beta * q * q - params.eta * math.cos(theta)
    x = float(_pick(params, c, branch))
    if not math.isfinite(x) or x < 0.0:
        raise NoRealAmplitude(
            f"no real amplitude on branch {branch} at delta={params.delta}, q={q}, theta={theta}"
        )
    omega = -0.5 * q * q + x + params.nu * x * x + params.eta * math.sin(theta)
    return PlaneWave(q, omega, math.sqrt(x), float(wrap_angle(theta)))


def amplitude_on_tube(params: ModelParams, q, theta, branch: str = "+"):
    """Vectorized ``a0^2`` over arrays of ``theta``; NaN off the tube."""
    c = params.delta - params.beta * q * q - params.eta * np.cos(theta)
    x = _pick(params, c, branch)
    return np.where(x >= 0, x, np.nan)


def with_theta(params: ModelParams, pw: PlaneWave) -> PlaneWave:
    """Attach the tube angle implied by ``params.tau`` and ``params.phi``."""
    return dataclasses.replace(pw, theta=float(theta_of(pw.omega, params.tau, params.phi)))


def amplitude_branch_of(params: ModelParams, pw: PlaneWave) -> str:
    """Which root of the amplitude quadratic ``pw.a0**2`` sits on.

    Uses ``pw.theta`` when attached, otherwise the angle implied by
    ``params``. Cubic models only have the '+' root.
    """
    theta = pw.theta if pw.theta is not None else float(theta_of(pw.omega, params.tau, params.phi))
    c = params.delta - params.beta * pw.q * pw.q - params.eta * math.cos(theta)
    xp, xm = (float(v) for v in amplitude_squared_roots(params, c))
    if not math.isfinite(xm):
        return "+"
    x = pw.a2
    return "+" if abs(xp - x) <= abs(xm - x) else "-"

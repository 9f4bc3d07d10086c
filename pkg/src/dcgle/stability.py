"""Linear stability of plane waves.

Perturbing ``A = (a0 + p) exp(i(qx + wt))`` with
``p = a+ exp(ikx + lt) + conj(a-) exp(-ikx + conj(l) t)`` gives

    dp/dt = (beta + i/2)(p_xx + 2iq p_x) + (Q - E) p + Q conj(p) + E p(t - tau)

with ``Q = (eps + i) a0^2 + 2 (mu + i nu) a0^4`` and
``E = eta exp(i(phi - w tau)) = -eta exp(-i theta)``. The 2x2 system for
``(a+, a-)`` is re-derived from the model equation rather than transcribed.

Three levels of description are provided:

* feedback-free closed form (``nodelay_growth``),
* the finite-delay quasipolynomial (``char_fn``, ``rightmost_root``),
* the large-delay limit: the strong spectrum (delay term dropped) and the
  pseudo-continuous weak spectrum ``gamma(k, xi)``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DegenerateBranch, DegenerateSpectrum, NoRealAmplitude, SeedingWarning
from .model import ModelParams, PlaneWave, amplitude_branch_of, planewave_from_theta

TOL_STRONG = 1e-8
TOL_WEAK = 1e-8
K_EXCL = 1e-3
XI_EXCL = 1e-3


def default_k_grid():
    return np.linspace(-3.0, 3.0, 601)


def default_xi_grid():
    return np.linspace(-math.pi, math.pi, 629)


class StabilityKind(enum.IntEnum):
    """Integer values double as the CSV class encoding."""

    STABLE = 0
    WEAK = 1
    STRONG = 2
    NO_SOLUTION = 3


@dataclass(frozen=True)
class StabilityClass:
    kind: StabilityKind
    k: float = float("nan")
    xi: float = float("nan")
    value: float = float("nan")
    strong_max: float = float("nan")
    weak_sup: float = float("nan")


@dataclass(frozen=True)
class SpectrumSample:
    k: float
    xi: float
    value: float
    branch_index: int


# ---------------------------------------------------------------------------
# linearization


def _q_coeff(params: ModelParams, a0: float) -> complex:
    a2 = a0 * a0
    return (params.epsilon + 1j) * a2 + 2.0 * (params.mu + 1j * params.nu) * a2 * a2


def _e_coeff(params: ModelParams, pw: PlaneWave) -> complex:
    """Feedback coefficient eta exp(i(phi - w tau)) seen by the perturbation."""
    return params.eta * np.exp(1j * (params.phi - pw.omega * params.tau))


@dataclass(frozen=True)
class CharacteristicSystem:
    """The 2x2 matrix ``M(lam; k)`` acting on ``(a+, a-)``.

    ``delay_terms`` are the coefficients multiplying ``exp(-lam tau)`` on the
    two diagonal entries; they are ``(-E, -conj(E))``.
    """

    params: ModelParams
    pw: PlaneWave
    Q: complex
    E: complex
    tau: float = field(default=0.0)
    symbol: Optional[Callable] = None

    @classmethod
    def about(cls, params: ModelParams, pw: PlaneWave, E: Optional[complex] = None, symbol=None):
        """``symbol(s)`` replaces ``s**2`` as the eigenvalue of ``-d_xx`` on ``exp(isx)``
        (e.g. the three-point stencil's ``2(1 - cos(s h))/h**2``)."""
        if E is None:
            E = _e_coeff(params, pw)
        return cls(params, pw, complex(_q_coeff(params, pw.a0)), complex(E), params.tau, symbol)

    @property
    def delay_terms(self):
        return (-self.E, -np.conj(self.E))

    def _diag_base(self, k):
        p = self.params
        q = self.pw.q
        if self.symbol is None:
            sp, sm = k * k + 2.0 * q * k, k * k - 2.0 * q * k
        else:
            s0 = self.symbol(q)
            sp, sm = self.symbol(q + k) - s0, self.symbol(q - k) - s0
        d1 = (p.beta + 0.5j) * sp - self.Q + self.E
        d2 = (p.beta - 0.5j) * sm - np.conj(self.Q) + np.conj(self.E)
        return d1, d2

    def entries(self, lam, k):
        d1, d2 = self._diag_base(k)
        ex = np.exp(-lam * self.tau) if self.tau > 0 else 1.0
        m11 = lam + d1 - self.E * ex
        m22 = lam + d2 - np.conj(self.E) * ex
        m12 = -self.Q * np.ones_like(m11)
        m21 = -np.conj(self.Q) * np.ones_like(m11)
        return m11, m12, m21, m22

    def det(self, lam, k):
        m11, m12, m21, m22 = self.entries(lam, k)
        return m11 * m22 - m12 * m21

    def det_and_derivative(self, lam, k):
        d1, d2 = self._diag_base(k)
        with np.errstate(over="ignore", invalid="ignore"):
            ex = np.exp(-lam * self.tau) if self.tau > 0 else np.ones_like(lam)
            m11 = lam + d1 - self.E * ex
            m22 = lam + d2 - np.conj(self.E) * ex
            dm11 = 1.0 + self.tau * self.E * ex
            dm22 = 1.0 + self.tau * np.conj(self.E) * ex
            f = m11 * m22 - abs(self.Q) ** 2
            df = dm11 * m22 + m11 * dm22
        return f, df


def char_fn(params: ModelParams, pw: PlaneWave, k, lam):
    """Characteristic function ``det M_tau(lam; k)`` about an exact plane wave."""
    return CharacteristicSystem.about(params, pw).det(np.asarray(lam, dtype=complex), np.asarray(k, dtype=float))


# ---------------------------------------------------------------------------
# feedback-free


def nodelay_growth(params: ModelParams, pw: PlaneWave, k):
    """Both growth rates ``lambda(k)`` of a feedback-free plane wave.

    Closed-form roots of ``l^2 + B l + C = 0`` written directly in the model
    coefficients. Returns ``(lam1, lam2)`` ordered so that
    ``Re lam1 >= Re lam2``.
    """
    b, e, m, n = params.beta, params.epsilon, params.mu, params.nu
    k = np.asarray(k, dtype=float)
    q = pw.q
    a2 = pw.a0 * pw.a0
    a4 = a2 * a2
    B = 2.0 * (1j * k * q + b * k * k - e * a2 - 2.0 * m * a4)
    C = (
        -2.0 * ((n + 2.0 * m * b) * k * k + 2.0 * (m - 2.0 * n * b) * 1j * k * q) * a4
        - ((1.0 + 2.0 * e * b) * k * k + 2.0 * (e - 2.0 * b) * 1j * k * q) * a2
        + (4.0 * b * b + 1.0) * (k ** 4 / 4.0 - k * k * q * q)
    )
    s = np.sqrt(B * B - 4.0 * C + 0j)
    l1 = 0.5 * (-B + s)
    l2 = 0.5 * (-B - s)
    swap = l2.real > l1.real
    return np.where(swap, l2, l1), np.where(swap, l1, l2)


@dataclass(frozen=True)
class LongWave:
    C1: float
    C2: float
    C3: float
    drift: float
    curvature: float
    printed_k2_coefficient: float
    threshold_flag: bool


def nodelay_longwave(params: ModelParams, pw: PlaneWave, atol: float = 1e-9) -> LongWave:
    """Long-wave expansion ``lambda(k) = i*drift*k + curvature*k^2 + O(k^3)``.

    ``C1, C2, C3`` are the printed auxiliary quantities and
    ``printed_k2_coefficient`` is the k^2 coefficient assembled from them.
    ``drift`` and ``curvature`` come from expanding the exact quadratic
    around the phase mode; ``threshold_flag`` tests ``|curvature| < atol``.
    """
    b, e, m, n = params.beta, params.epsilon, params.mu, params.nu
    q = pw.q
    a2 = pw.a0 * pw.a0
    a4 = a2 * a2
    C1 = e * a2 + 2.0 * m * a4
    if C1 == 0.0:
        raise DegenerateBranch("C1 = eps a0^2 + 2 mu a0^4 vanishes")
    C2 = 16.0 * b * b * q * q + 4.0 * a2 + 8.0 * n * a4
    C3 = 64.0 * b ** 3 * q ** 3 - 4.0 * b * q * C2
    printed = -C3 * C3 / (128.0 * C1 ** 3) - C2 * C2 / C1 - b

    # phase-mode branch of l^2 + B l + C: B = -2 C1 + 2iq k + 2 b k^2,
    # C = c1 k + c2 k^2 + O(k^3)
    c1 = -2j * q * (2.0 * (m - 2.0 * n * b) * a4 + (e - 2.0 * b) * a2)
    c2 = -2.0 * (n + 2.0 * m * b) * a4 - (1.0 + 2.0 * e * b) * a2 - (4.0 * b * b + 1.0) * q * q
    l1 = c1 / (2.0 * C1)
    l2 = (c2 + 2j * q * l1 + l1 * l1) / (2.0 * C1)
    return LongWave(C1, C2, C3, float(l1.imag), float(l2.real), float(printed), bool(abs(l2.real) < atol))


def printed_q0_threshold(params: ModelParams) -> float:
    """Closed-form q = 0 stability threshold in delta as printed in the literature."""
    b, e, m, n = params.beta, params.epsilon, params.mu, params.nu
    return (4 * b * e * (b * e + 2 * b * m + n + 1) + 2 * (2 * b * m + n + 1)) / (4 * (2 * b * m + n) ** 2)


def q0_threshold(params: ModelParams) -> float:
    """Delta where the q = 0 feedback-free wave ('+' branch) changes long-wave stability.

    Solves ``(1 + 2 eps beta) + 2 (nu + 2 mu beta) a0^2 = 0`` for ``a0^2`` and
    maps back to ``delta = -eps a0^2 - mu a0^4``.
    """
    b, e, m, n = params.beta, params.epsilon, params.mu, params.nu
    x = -(1.0 + 2.0 * e * b) / (2.0 * (n + 2.0 * m * b))
    return -e * x - m * x * x


# ---------------------------------------------------------------------------
# finite delay


def _newton(system: CharacteristicSystem, k, seeds: np.ndarray, maxiter: int = 60, tol: float = 1e-13):
    """Vectorized Newton iteration; ``k`` is a scalar or an array matching ``seeds``."""
    lam = seeds.astype(complex).copy()
    kk = np.broadcast_to(np.asarray(k, dtype=float), lam.shape).copy()
    active = np.ones(lam.shape, dtype=bool)
    for _ in range(maxiter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        la = lam[idx]
        f, df = system.det_and_derivative(la, kk[idx])
        with np.errstate(all="ignore"):
            step = f / df
        bad = ~np.isfinite(step)
        step[bad] = 0.0
        # damp huge jumps
        big = np.abs(step) > 1.0
        step[big] = step[big] / np.abs(step[big])
        la = la - step
        lam[idx] = la
        done = (np.abs(step) < tol * (1.0 + np.abs(la))) | bad | (la.real < -50.0)
        active[idx[done]] = False
    f, df = system.det_and_derivative(lam, kk)
    scale = 1.0 + np.abs(lam) ** 2 + abs(system.Q) ** 2 + abs(system.E) ** 2
    ok = np.isfinite(lam) & (np.abs(f) < 1e-9 * scale) & (lam.real > -50.0)
    return lam[ok], kk[ok]


def _dedupe(roots: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    if roots.size == 0:
        return roots
    key = np.round(np.column_stack([roots.real, roots.imag]) / tol)
    _, idx = np.unique(key, axis=0, return_index=True)
    return roots[np.sort(idx)]


def _seeds(params: ModelParams, system: CharacteristicSystem, k: float, pw: PlaneWave) -> np.ndarray:
    tau = params.tau
    strip = 2.0 * math.pi / tau
    # roots of the two delay-free quadratics (eta -> 0 and delay term dropped)
    quad = []
    for E in (0.0, system.E):
        d1 = (params.beta + 0.5j) * (k * k + 2 * pw.q * k) - system.Q + E
        d2 = (params.beta - 0.5j) * (k * k - 2 * pw.q * k) - np.conj(system.Q) + np.conj(E)
        B = d1 + d2
        C = d1 * d2 - abs(system.Q) ** 2
        s = np.sqrt(B * B - 4 * C + 0j)
        quad += [0.5 * (-B + s), 0.5 * (-B - s)]
    quad = np.array(quad)
    centers = np.unique(np.round(quad.imag, 6))

    seeds = [quad]
    # rectangular grid: Re in [-5, 3], three strips around each center
    re = np.linspace(-5.0, 3.0, 5)
    for c in centers:
        im = c + strip * np.linspace(-1.5, 1.5, 7)
        seeds.append((re[:, None] + 1j * im[None, :]).ravel())

    # pseudo-continuous spectrum: lam ~ i xi + gamma(xi) / tau
    if system.E != 0.0:
        lo = min(centers.min(), 0.0) - 6.0
        hi = max(centers.max(), 0.0) + 6.0
        n = int(math.ceil((hi - lo) / (0.25 * strip))) + 1
        n = min(n, 20000)
        xi = np.linspace(lo, hi, n)
        g1, g2 = _weak_gamma_from(system, pw.q, k, xi)
        for g in (g1, g2):
            gmax = np.nanmax(g)
            sel = np.isfinite(g) & (g > gmax - 4.0)
            seeds.append(1j * xi[sel] + g[sel] / tau)
    return np.concatenate(seeds)


@dataclass(frozen=True)
class RightmostResult:
    max_re: float
    k: float
    root: complex
    per_k: np.ndarray

    @property
    def stable(self) -> bool:
        return self.max_re < 0.0


def roots_at_k(params: ModelParams, pw: PlaneWave, k: float, system: Optional[CharacteristicSystem] = None) -> np.ndarray:
    """All characteristic roots found from the seed set at one ``k``."""
    if system is None:
        system = CharacteristicSystem.about(params, pw)
    if params.tau == 0.0:
        l1, l2 = nodelay_like_quadratic(system, k)
        return _dedupe(np.array([l1, l2]))
    seeds = _seeds(params, system, k, pw)
    roots, _ = _newton(system, k, seeds)
    if roots.size > 10 and _dedupe(roots, 1e-10).size < 3:
        warnings.warn(f"k={k}: {roots.size} seeds collapsed onto very few roots", SeedingWarning, stacklevel=2)
    return _dedupe(roots)


def nodelay_like_quadratic(system: CharacteristicSystem, k: float):
    """Roots when the delayed factor is absent or equal to one."""
    p = system.params
    q = system.pw.q
    # tau = 0: exp(-lam tau) = 1 cancels E; eta = 0: E = 0
    d1 = (p.beta + 0.5j) * (k * k + 2 * q * k) - system.Q
    d2 = (p.beta - 0.5j) * (k * k - 2 * q * k) - np.conj(system.Q)
    B = d1 + d2
    C = d1 * d2 - abs(system.Q) ** 2
    s = np.sqrt(B * B - 4 * C + 0j)
    return 0.5 * (-B + s), 0.5 * (-B - s)


def rightmost_root(params: ModelParams, pw: PlaneWave, k_grid: Optional[Sequence[float]] = None) -> RightmostResult:
    """Largest real part of the characteristic roots over ``k_grid``.

    The phase-mode root ``lam = 0`` at ``k = 0`` is excluded. Roots are
    located by multi-seed Newton iteration; this is heuristic, see
    :func:`count_roots_in_rectangle` for an independent count.
    """
    if k_grid is None:
        k_grid = np.linspace(-3.0, 3.0, 121)
    k_grid = np.asarray(k_grid, dtype=float)
    system = CharacteristicSystem.about(params, pw)
    per_k = np.full(k_grid.shape, -np.inf)
    if params.tau == 0.0:
        roots = [nodelay_like_quadratic(system, float(k)) for k in k_grid]
        lam = np.array([r for pair in roots for r in pair])
        kk = np.repeat(k_grid, 2)
    else:
        seeds = [_seeds(params, system, float(k), pw) for k in k_grid]
        kk0 = np.concatenate([np.full(s_.size, k) for s_, k in zip(seeds, k_grid)])
        lam, kk = _newton(system, kk0, np.concatenate(seeds))
        if lam.size > 10 and _dedupe(lam, 1e-10).size < 3:
            warnings.warn("almost all seeds collapsed onto the same root", SeedingWarning, stacklevel=2)
    keep = ~((kk == 0.0) & (np.abs(lam) < 1e-8))
    lam, kk = lam[keep], kk[keep]
    if lam.size == 0:
        return RightmostResult(-math.inf, math.nan, complex("nan"), per_k)
    pos = np.searchsorted(np.sort(k_grid), kk)
    order = np.argsort(k_grid)
    np.maximum.at(per_k, order[np.clip(pos, 0, k_grid.size - 1)], lam.real)
    j = int(np.argmax(lam.real))
    return RightmostResult(float(lam.real[j]), float(kk[j]), complex(lam[j]), per_k)


def count_roots_in_rectangle(
    params: ModelParams, pw: PlaneWave, k: float, re_range=(-0.5, 1.0), im_range=(-5.0, 5.0), n: int = 4000
) -> int:
    """Argument-principle root count inside a rectangle (slow verification)."""
    system = CharacteristicSystem.about(params, pw)
    (a, b), (c, d) = re_range, im_range
    t = np.linspace(0.0, 1.0, n, endpoint=False)
    path = np.concatenate(
        [a + (b - a) * t + 1j * c, b + 1j * (c + (d - c) * t), b - (b - a) * t + 1j * d, a + 1j * (d - (d - c) * t)]
    )
    f = system.det(path, k)
    ph = np.unwrap(np.angle(np.append(f, f[0])))
    return int(round((ph[-1] - ph[0]) / (2 * math.pi)))


def certify_rightmost(params: ModelParams, pw: PlaneWave, result: RightmostResult, k_values, margin: float = 1e-4) -> bool:
    """Check by the argument principle that no root lies right of ``result``.

    For each ``k`` a rectangle starting at ``max(max_re, 0) + margin`` is
    searched; ``True`` when every count is zero.
    """
    system = CharacteristicSystem.about(params, pw)
    q2 = abs(pw.q)
    left = max(result.max_re, 0.0) + margin
    if left >= 3.0:
        return True
    for k in np.asarray(k_values, dtype=float):
        r = 4.0 + k * k + 2.0 * q2 * abs(k) + abs(system.Q) + 2.0 * params.eta
        n = int(max(4000, 40 * params.tau * r))
        if count_roots_in_rectangle(params, pw, float(k), (left, 3.0), (-r, r), n) != 0:
            return False
    return True


# ---------------------------------------------------------------------------
# large delay


def _system_from_theta(params: ModelParams, q: float, theta: float, branch: str = "+"):
    pw = planewave_from_theta(params, q, theta, branch)
    E = -params.eta * np.exp(-1j * theta)
    return pw, CharacteristicSystem(params, pw, complex(_q_coeff(params, pw.a0)), complex(E), 0.0)


def strong_spectrum(params: ModelParams, q: float, theta: float, k, branch: str = "+"):
    """Roots of the characteristic equation with the delayed term dropped."""
    _, system = _system_from_theta(params, q, theta, branch)
    k = np.asarray(k, dtype=float)
    d1, d2 = system._diag_base(k)
    B = d1 + d2
    C = d1 * d2 - abs(system.Q) ** 2
    s = np.sqrt(B * B - 4.0 * C + 0j)
    l1 = 0.5 * (-B + s)
    l2 = 0.5 * (-B - s)
    swap = l2.real > l1.real
    return np.where(swap, l2, l1), np.where(swap, l1, l2)


def _weak_Y(system: CharacteristicSystem, q, k, xi):
    p = system.params
    E = system.E
    u = 1j * xi + (p.beta + 0.5j) * (k * k + 2 * q * k) - system.Q + E
    v = 1j * xi + (p.beta - 0.5j) * (k * k - 2 * q * k) - np.conj(system.Q) + np.conj(E)
    # (u - E Y)(v - conj(E) Y) - |Q|^2 = 0
    a = abs(E) ** 2
    b = -(u * np.conj(E) + v * E)
    c = u * v - abs(system.Q) ** 2
    s = np.sqrt(b * b - 4.0 * a * c + 0j)
    # avoid cancellation in the smaller root
    w = -0.5 * (b + np.where((np.conj(b) * s).real >= 0, s, -s))
    with np.errstate(divide="ignore", invalid="ignore"):
        y1 = w / a
        y2 = np.where(w != 0, c / w, -b / a - y1)
    return y1, y2


def _weak_gamma_from(system, q, k, xi):
    y1, y2 = _weak_Y(system, q, np.asarray(k, dtype=float), np.asarray(xi, dtype=float))
    with np.errstate(divide="ignore"):
        g1 = -np.log(np.abs(y1))
        g2 = -np.log(np.abs(y2))
    return np.maximum(g1, g2), np.minimum(g1, g2)


def weak_Y(params: ModelParams, q: float, theta: float, k, xi, branch: str = "+"):
    """The two roots ``Y = exp(-gamma - i xi tau)`` of the weak-spectrum quadratic."""
    if params.eta == 0.0:
        raise DegenerateSpectrum("eta = 0: no pseudo-continuous spectrum")
    _, system = _system_from_theta(params, q, theta, branch)
    return _weak_Y(system, q, np.asarray(k, dtype=float), np.asarray(xi, dtype=float))


def weak_gamma(params: ModelParams, q: float, theta: float, k, xi, branch: str = "+"):
    """Rescaled growth rates ``(gamma1, gamma2)`` with ``gamma1 >= gamma2``.

    ``tau`` does not enter.
    """
    if params.eta == 0.0:
        raise DegenerateSpectrum("eta = 0: no pseudo-continuous spectrum")
    _, system = _system_from_theta(params, q, theta, branch)
    return _weak_gamma_from(system, q, k, xi)


def _goldstone_cap(system, q, h: float = 1e-3) -> float:
    """Largest gamma of the phase-mode sheet on a ring of radius ``h`` about the origin."""
    ang = np.linspace(0.0, 2 * math.pi, 16, endpoint=False)
    k = h * np.cos(ang)
    xi = h * np.sin(ang)
    y1, y2 = _weak_Y(system, q, k, xi)
    # phase-mode sheet passes through |Y| = 1 at the origin
    g1 = -np.log(np.abs(y1))
    g2 = -np.log(np.abs(y2))
    y01, y02 = _weak_Y(system, q, np.array(0.0), np.array(0.0))
    g = g1 if abs(abs(y01) - 1.0) <= abs(abs(y02) - 1.0) else g2
    return float(np.max(g))


def classify_pw_large_delay(
    params: ModelParams,
    q: float,
    theta: float,
    branch: str = "+",
    k_grid=None,
    xi_grid=None,
    tol_strong: float = TOL_STRONG,
    tol_weak: float = TOL_WEAK,
    k_excl: float = K_EXCL,
    xi_excl: float = XI_EXCL,
) -> StabilityClass:
    """Strong / weak / stable classification of the tube point ``(delta, theta)``."""
    if params.eta == 0.0:
        raise DegenerateSpectrum("eta = 0: large-delay classification undefined")
    k = default_k_grid() if k_grid is None else np.asarray(k_grid, dtype=float)
    xi = default_xi_grid() if xi_grid is None else np.asarray(xi_grid, dtype=float)
    pw, system = _system_from_theta(params, q, theta, branch)

    l1, _ = strong_spectrum(params, q, theta, k, branch)
    i = int(np.argmax(l1.real))
    smax = float(l1.real[i])

    g1, _ = _weak_gamma_from(system, q, k[:, None], xi[None, :])
    excl = (np.abs(k)[:, None] < k_excl) & (np.abs(xi)[None, :] < xi_excl)
    g1 = np.where(excl, -np.inf, g1)
    j = np.unravel_index(int(np.argmax(g1)), g1.shape)
    gsup = float(g1[j])
    cap = _goldstone_cap(system, q, h=max(k_excl, xi_excl))
    if cap > gsup:
        gsup_eff, wk, wxi = cap, 0.0, 0.0
    else:
        gsup_eff, wk, wxi = gsup, float(k[j[0]]), float(xi[j[1]])

    if smax > tol_strong:
        return StabilityClass(StabilityKind.STRONG, float(k[i]), float(l1.imag[i]), smax, smax, gsup_eff)
    if gsup_eff > tol_weak:
        return StabilityClass(StabilityKind.WEAK, wk, wxi, gsup_eff, smax, gsup_eff)
    return StabilityClass(StabilityKind.STABLE, wk, wxi, gsup_eff, smax, gsup_eff)


@dataclass
class StabilityMap:
    q: float
    delta: np.ndarray
    theta: np.ndarray
    kind: np.ndarray  # int codes, shape (n_delta, n_theta)
    a0: np.ndarray
    omega: np.ndarray
    strong_max: np.ndarray
    weak_sup: np.ndarray

    def projection(self, upper: bool):
        """Rows ``(delta, a0, kind)`` for theta > pi (``upper``) or theta < pi."""
        sel = (self.theta > math.pi) if upper else (self.theta < math.pi)
        d = np.broadcast_to(self.delta[:, None], self.kind.shape)[:, sel]
        a = self.a0[:, sel]
        c = self.kind[:, sel]
        ok = c != StabilityKind.NO_SOLUTION
        return np.column_stack([d[ok], a[ok], c[ok]])


def stability_map(params: ModelParams, q: float, delta_grid, theta_grid, branch: str = "+", **kw) -> StabilityMap:
    """Classification on a ``(delta, theta)`` grid; off-tube nodes are NO_SOLUTION."""
    delta_grid = np.asarray(delta_grid, dtype=float)
    theta_grid = np.asarray(theta_grid, dtype=float)
    shape = (delta_grid.size, theta_grid.size)
    kind = np.full(shape, int(StabilityKind.NO_SOLUTION))
    a0 = np.full(shape, np.nan)
    om = np.full(shape, np.nan)
    smax = np.full(shape, np.nan)
    wsup = np.full(shape, np.nan)
    for i, d in enumerate(delta_grid):
        p = params.replace(delta=float(d))
        for j, th in enumerate(theta_grid):
            try:
                pw = planewave_from_theta(p, q, float(th), branch)
                c = classify_pw_large_delay(p, q, float(th), branch, **kw)
            except NoRealAmplitude:
                continue
            kind[i, j] = int(c.kind)
            a0[i, j] = pw.a0
            om[i, j] = pw.omega
            smax[i, j] = c.strong_max
            wsup[i, j] = c.weak_sup
    return StabilityMap(q, delta_grid, theta_grid, kind, a0, om, smax, wsup)


def weak_spectrum_samples(params: ModelParams, q: float, theta: float, k_grid, xi_grid, branch: str = "+"):
    """Flat list of ``SpectrumSample`` for both gamma sheets."""
    g1, g2 = weak_gamma(params, q, theta, np.asarray(k_grid)[:, None], np.asarray(xi_grid)[None, :], branch)
    out = []
    for bi, g in ((1, g1), (2, g2)):
        for a, k in enumerate(k_grid):
            for b, x in enumerate(xi_grid):
                if np.isfinite(g[a, b]):
                    out.append(SpectrumSample(float(k), float(x), float(g[a, b]), bi))
    return out


def strong_boundaries(params: ModelParams, q: float, theta_grid=None, k_grid=None, branch: str = "+", tol: float = 1e-10):
    """Theta values where the strong-instability indicator changes sign at fixed delta.

    Returns a list of ``(theta, k_at_boundary)`` refined by bisection.
    """
    th = np.linspace(0.0, 2 * math.pi, 1257) if theta_grid is None else np.asarray(theta_grid)
    k = default_k_grid() if k_grid is None else np.asarray(k_grid)

    def indicator(t):
        l1, _ = strong_spectrum(params, q, t, k, branch)
        i = int(np.argmax(l1.real))
        return float(l1.real[i]), float(k[i])

    vals = np.array([indicator(t)[0] for t in th])
    out = []
    for i in np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:])):
        a, b = th[i], th[i + 1]
        fa = vals[i]
        while b - a > tol:
            m = 0.5 * (a + b)
            fm = indicator(m)[0]
            if np.sign(fm) == np.sign(fa):
                a, fa = m, fm
            else:
                b = m
        t = 0.5 * (a + b)
        ka = indicator(a)[1]
        kb = indicator(b)[1]
        out.append((t, ka if indicator(a)[0] > indicator(b)[0] else kb))
    return out


@dataclass(frozen=True)
class BranchTransition:
    """Point on a traced branch where the stable/unstable verdict flips."""

    omega: float
    delta: float
    a0: float
    theta: float
    source: str  # "finite" or "asymptotic"


def _branch_point(params, q, omega, branch):
    from .existence import branch_planewave

    return branch_planewave(params, q, omega, branch)


def _finite_unstable(params, q, omega, branch, k_grid):
    p, pw = _branch_point(params, q, omega, branch)
    return rightmost_root(p, pw, k_grid).max_re > 0.0


def _asymptotic_unstable(params, q, omega, branch, k_grid, xi_grid):
    p, pw = _branch_point(params, q, omega, branch)
    amp = amplitude_branch_of(p, pw)
    c = classify_pw_large_delay(p, q, pw.theta, amp, k_grid=k_grid, xi_grid=xi_grid)
    return c.kind != StabilityKind.STABLE


def branch_transitions(
    params: ModelParams,
    q: float,
    omega_grid,
    branch: str = "-",
    delta_window=(-math.inf, math.inf),
    k_grid=None,
    large_delay_k_grid=None,
    xi_grid=None,
    omega_tol: float = 1e-6,
):
    """Stability flips along a branch, at finite delay and in the large-delay limit.

    Both verdicts are sampled on ``omega_grid`` and every flip between
    consecutive in-window samples is refined by bisection in ``omega``.
    Returns ``(finite, asymptotic)`` lists of :class:`BranchTransition`.
    """
    from .existence import _branch_values

    if params.tau == 0.0:
        raise ValueError("branch_transitions needs tau > 0")
    w = np.asarray(omega_grid, dtype=float)
    k = np.linspace(-2.0, 2.0, 41) if k_grid is None else np.asarray(k_grid, dtype=float)
    _, d = _branch_values(params, q, w, branch)
    inside = np.isfinite(d) & (d >= delta_window[0]) & (d <= delta_window[1])

    tests = {
        "finite": lambda om: _finite_unstable(params, q, om, branch, k),
        "asymptotic": lambda om: _asymptotic_unstable(params, q, om, branch, large_delay_k_grid, xi_grid),
    }
    result = {}
    for name, test in tests.items():
        flags = np.zeros(w.size, dtype=bool)
        for i in np.flatnonzero(inside):
            flags[i] = test(float(w[i]))
        found = []
        for i in np.flatnonzero(inside[:-1] & inside[1:] & (flags[:-1] != flags[1:])):
            a, b, fa = w[i], w[i + 1], flags[i]
            while b - a > omega_tol:
                m = 0.5 * (a + b)
                if test(m) == fa:
                    a = m
                else:
                    b = m
            om = 0.5 * (a + b)
            _, pw = _branch_point(params, q, om, branch)
            dd = float(_branch_values(params, q, np.array([om]), branch)[1][0])
            found.append(BranchTransition(om, dd, pw.a0, pw.theta, name))
        result[name] = found
    return result["finite"], result["asymptotic"]


def match_transitions(finite, asymptotic):
    """For each finite-delay flip, the delta gap to the nearest (in omega) asymptotic flip."""
    out = []
    for f in finite:
        if not asymptotic:
            out.append((f, None, math.inf))
            continue
        g = min(asymptotic, key=lambda a: abs(a.omega - f.omega))
        out.append((f, g, abs(f.delta - g.delta)))
    return out

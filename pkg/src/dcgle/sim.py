"""Direct simulation of the delayed CGLE.

Method of lines on a uniform periodic grid (three-point Laplacian), Cash-Karp
5(4) adaptive stepping, and cubic Hermite dense output over accepted steps to
supply ``A(x, t - tau)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import InadmissibleWavenumber, NonFiniteField, StepSizeUnderflow
from .model import ModelParams, PlaneWave

DEFAULT_N_POINTS = 500
DEFAULT_LENGTH = 32.0 * math.pi


@dataclass(frozen=True)
class Grid:
    n_points: int = DEFAULT_N_POINTS
    length: float = DEFAULT_LENGTH

    def __post_init__(self):
        if self.n_points < 16:
            raise ValueError(f"n_points must be >= 16, got {self.n_points}")
        if not self.length > 0:
            raise ValueError(f"length must be > 0, got {self.length}")

    @property
    def spacing(self) -> float:
        return self.length / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.spacing * np.arange(self.n_points)

    @property
    def dk(self) -> float:
        return 2.0 * math.pi / self.length

    @property
    def wavenumbers(self) -> np.ndarray:
        """Wavenumber of each FFT bin."""
        return 2.0 * math.pi * np.fft.fftfreq(self.n_points, d=self.spacing)

    def mode_index(self, q: float, tol: float = 1e-9) -> int:
        m = q / self.dk
        n = round(m)
        if abs(m - n) > tol * max(1.0, abs(m)):
            raise InadmissibleWavenumber(f"q={q} is not a multiple of 2*pi/L = {self.dk}")
        return int(n)

    def is_admissible(self, q: float) -> bool:
        try:
            self.mode_index(q)
        except InadmissibleWavenumber:
            return False
        return True

    def nearest_admissible(self, q: float) -> float:
        return round(q / self.dk) * self.dk

    def discrete_q2(self, q: float) -> float:
        """Eigenvalue of minus the discrete Laplacian on ``exp(i q x)``."""
        h = self.spacing
        return 2.0 * (1.0 - math.cos(q * h)) / (h * h)


@dataclass
class FieldState:
    t: float
    values: np.ndarray


# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class Modal:
    """Amplitude modulation ``amplitude * cos(k x)`` of the background wave."""

    k: float
    amplitude: float


@dataclass(frozen=True)
class Noise:
    """Complex Gaussian noise, fixed in the co-moving frame."""

    amplitude: float
    seed: int = 0


Perturbation = Optional[Union[Modal, Noise]]


def make_initial_history(grid: Grid, pw: PlaneWave, perturbation: Perturbation = None) -> Callable[[float], np.ndarray]:
    """History ``h(t) = (a0 + p(x)) exp(i(q x + omega t))`` for ``t <= 0``."""
    grid.mode_index(pw.q)
    x = grid.x
    if perturbation is None:
        p = np.zeros(grid.n_points, dtype=complex)
    elif isinstance(perturbation, Modal):
        if perturbation.amplitude < 0:
            raise ValueError("perturbation amplitude must be >= 0")
        grid.mode_index(perturbation.k)
        p = perturbation.amplitude * np.cos(perturbation.k * x) + 0j
    elif isinstance(perturbation, Noise):
        if perturbation.amplitude < 0:
            raise ValueError("perturbation amplitude must be >= 0")
        rng = np.random.default_rng(perturbation.seed)
        z = rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points)
        p = perturbation.amplitude * z / math.sqrt(2.0)
    else:
        raise TypeError(f"unsupported perturbation {perturbation!r}")
    profile = (pw.a0 + p) * np.exp(1j * pw.q * x)
    omega = pw.omega

    def history(t):
        return profile * np.exp(1j * omega * t)

    return history


# ---------------------------------------------------------------------------
# right-hand side


def rhs(state: np.ndarray, delayed: np.ndarray, params: ModelParams, grid: Grid) -> np.ndarray:
    """Semi-discrete right-hand side at every grid point."""
    a = np.asarray(state)
    h2 = grid.spacing ** 2
    lap = (np.roll(a, -1) - 2.0 * a + np.roll(a, 1)) / h2
    m2 = a.real * a.real + a.imag * a.imag
    out = (params.beta + 0.5j) * lap
    out += (params.delta + (params.epsilon + 1j) * m2 + (params.mu + 1j * params.nu) * m2 * m2) * a
    if params.eta != 0.0:
        out += params.feedback * np.asarray(delayed)
    return out


# ---------------------------------------------------------------------------
# history buffer


class HistoryBuffer:
    """Accepted steps ``(t_i, y_i, f_i)`` with cubic Hermite interpolation.

    Times before the first stored step are served by ``initial``.
    """

    order = 4

    def __init__(self, n: int, initial: Callable[[float], np.ndarray], capacity: int = 1024):
        self.n = n
        self.initial = initial
        self._t = np.empty(capacity)
        self._y = np.empty((capacity, n), dtype=complex)
        self._f = np.empty((capacity, n), dtype=complex)
        self._lo = 0
        self._hi = 0

    def __len__(self):
        return self._hi - self._lo

    @property
    def times(self) -> np.ndarray:
        return self._t[self._lo : self._hi]

    def append(self, t: float, y: np.ndarray, f: np.ndarray):
        if self._hi > self._lo and t <= self._t[self._hi - 1]:
            raise ValueError("history times must increase strictly")
        if self._hi == self._t.size:
            self._compact()
        self._t[self._hi] = t
        self._y[self._hi] = y
        self._f[self._hi] = f
        self._hi += 1

    def _compact(self):
        m = self._hi - self._lo
        if self._lo > self._t.size // 2:
            self._t[:m] = self._t[self._lo : self._hi]
            self._y[:m] = self._y[self._lo : self._hi]
            self._f[:m] = self._f[self._lo : self._hi]
        else:
            cap = 2 * self._t.size
            t = np.empty(cap)
            y = np.empty((cap, self.n), dtype=complex)
            f = np.empty((cap, self.n), dtype=complex)
            t[:m] = self._t[self._lo : self._hi]
            y[:m] = self._y[self._lo : self._hi]
            f[:m] = self._f[self._lo : self._hi]
            self._t, self._y, self._f = t, y, f
        self._lo, self._hi = 0, m

    def prune(self, t_min: float):
        """Drop steps that end before ``t_min`` (keeps one step covering it)."""
        i = int(np.searchsorted(self._t[self._lo : self._hi], t_min, side="right")) - 1
        if i > 0:
            self._lo += i

    def __call__(self, s: float) -> np.ndarray:
        if self._hi == self._lo or s <= self._t[self._lo]:
            if self._hi > self._lo and s >= self._t[self._lo] - 1e-14 * max(1.0, abs(s)):
                return self._y[self._lo].copy()
            return self.initial(s)
        t = self._t[self._lo : self._hi]
        i = int(np.searchsorted(t, s, side="right")) - 1
        if i >= t.size - 1:
            if s - t[-1] > 1e-12 * max(1.0, abs(s)):
                raise ValueError(f"history query at t={s} beyond last stored step {t[-1]}")
            return self._y[self._hi - 1].copy()
        j = self._lo + i
        return hermite(self._t[j], self._y[j], self._f[j], self._t[j + 1], self._y[j + 1], self._f[j + 1], s)


def hermite(t0, y0, f0, t1, y1, f1, s):
    h = t1 - t0
    th = (s - t0) / h
    th2 = th * th
    th3 = th2 * th
    return (
        (2 * th3 - 3 * th2 + 1) * y0
        + (th3 - 2 * th2 + th) * h * f0
        + (-2 * th3 + 3 * th2) * y1
        + (th3 - th2) * h * f1
    )


# ---------------------------------------------------------------------------
# Cash-Karp 5(4)

_C = np.array([0.0, 1 / 5, 3 / 10, 3 / 5, 1.0, 7 / 8])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [3 / 10, -9 / 10, 6 / 5],
    [-11 / 54, 5 / 2, -70 / 27, 35 / 27],
    [1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096],
]
_B5 = np.array([37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771])
_B4 = np.array([2825 / 27648, 0.0, 18575 / 48384, 13525 / 55296, 277 / 14336, 1 / 4])
_E = _B5 - _B4


def hermite_derivative(t0, y0, f0, t1, y1, f1, s):
    h = t1 - t0
    th = (s - t0) / h
    th2 = th * th
    return (
        (6 * th2 - 6 * th) / h * y0
        + (3 * th2 - 4 * th + 1) * f0
        + (-6 * th2 + 6 * th) / h * y1
        + (3 * th2 - 2 * th) * f1
    )


def cash_karp_step(f, t, y, k1, h):
    """One Cash-Karp step; returns ``(y5, err)`` where ``err = y5 - y4``."""
    ks = [k1]
    for i in range(1, 6):
        yi = y.copy()
        for j, a in enumerate(_A[i]):
            if a != 0.0:
                yi += (h * a) * ks[j]
        ks.append(f(t + _C[i] * h, yi))
    y5 = y.copy()
    err = np.zeros_like(y)
    for i in range(6):
        if _B5[i] != 0.0:
            y5 += (h * _B5[i]) * ks[i]
        if _E[i] != 0.0:
            err += (h * _E[i]) * ks[i]
    return y5, err


# ---------------------------------------------------------------------------
# observables


def dominant_mode(grid: Grid, values: np.ndarray):
    """``(q, coefficient, power_fraction)`` of the strongest Fourier mode."""
    c = np.fft.fft(values) / grid.n_points
    p = np.abs(c) ** 2
    i = int(np.argmax(p))
    tot = float(p.sum())
    return float(grid.wavenumbers[i]), c[i], (float(p[i]) / tot if tot > 0 else 0.0)


def defect_count(values: np.ndarray, threshold: float = 0.1) -> int:
    """Runs of grid points whose modulus is below ``threshold`` times the mean modulus."""
    m = np.abs(values)
    mean = m.mean()
    if mean == 0:
        return 0
    low = m < threshold * mean
    if not low.any():
        return 0
    if low.all():
        return 1
    # count rising edges on the periodic ring
    return int(np.sum(low & ~np.roll(low, 1)))


@dataclass
class Observables:
    t: list = field(default_factory=list)
    mean_amp: list = field(default_factory=list)
    max_amp: list = field(default_factory=list)
    dominant_q: list = field(default_factory=list)
    omega_est: list = field(default_factory=list)
    defect_count: list = field(default_factory=list)

    columns = ("t", "mean_amp", "max_amp", "dominant_q", "omega_est", "defect_count")

    def record(self, grid: Grid, t: float, values: np.ndarray, deriv: np.ndarray):
        """Append one sample; ``omega`` is ``Im(c'/c)`` of the dominant Fourier mode."""
        m = np.abs(values)
        q, c, _ = dominant_mode(grid, values)
        i = int(round(q / grid.dk)) % grid.n_points
        dc = np.fft.fft(deriv)[i] / grid.n_points
        om = float((dc / c).imag) if c != 0 else float("nan")
        self.t.append(t)
        self.mean_amp.append(float(m.mean()))
        self.max_amp.append(float(m.max()))
        self.dominant_q.append(q)
        self.omega_est.append(om)
        self.defect_count.append(defect_count(values))

    def as_array(self) -> np.ndarray:
        return np.column_stack([np.asarray(getattr(self, c), dtype=float) for c in self.columns])


@dataclass
class SimResult:
    times: np.ndarray
    snapshots: np.ndarray
    observables: Observables
    final: FieldState
    n_steps: int
    n_rejected: int


def integrate(
    params: ModelParams,
    grid: Grid,
    history: Callable[[float], np.ndarray],
    t_end: float,
    rtol: float = 1e-6,
    atol: float = 1e-9,
    snapshot_every: Optional[float] = None,
    observe_every: Optional[float] = None,
    h0: Optional[float] = None,
    max_step: Optional[float] = None,
    callback: Optional[Callable[[float, np.ndarray], None]] = None,
) -> SimResult:
    """Integrate from ``t = 0`` to ``t_end`` starting from ``history`` on ``[-tau, 0]``.

    Snapshots and observables are sampled on uniform cadences by Hermite
    interpolation between accepted steps. Steps are capped at ``tau / 2`` so
    delayed queries never fall inside the step being taken.
    """
    if not t_end > 0:
        raise ValueError("t_end must be > 0")
    if not (rtol > 0 and atol > 0):
        raise ValueError("rtol and atol must be > 0")
    tau = params.tau
    if snapshot_every is None:
        snapshot_every = t_end / 100.0
    if observe_every is None:
        observe_every = snapshot_every
    hmax = math.inf if max_step is None else max_step
    if tau > 0:
        hmax = min(hmax, 0.5 * tau)
    hmin = 1e-12 * t_end

    y = np.asarray(history(0.0), dtype=complex).copy()
    if y.shape != (grid.n_points,):
        raise ValueError("history returns the wrong shape")
    buf = HistoryBuffer(grid.n_points, history)

    def delayed(s):
        if tau == 0.0:
            return None
        return buf(s - tau)

    def f(s, state):
        d = state if tau == 0.0 else delayed(s)
        return rhs(state, d, params, grid)

    t = 0.0
    k1 = f(t, y)
    buf.append(t, y, k1)
    obs = Observables()
    snap_t, snap_y = [], []
    next_snap = 0.0
    next_obs = 0.0

    def emit(t0, y0, f0, t1, y1, f1):
        nonlocal next_snap, next_obs
        while next_snap <= t1 + 1e-12 and next_snap <= t_end + 1e-12:
            v = y1 if next_snap >= t1 else hermite(t0, y0, f0, t1, y1, f1, next_snap) if t1 > t0 else y0
            snap_t.append(next_snap)
            snap_y.append(np.array(v))
            next_snap += snapshot_every
        while next_obs <= t1 + 1e-12 and next_obs <= t_end + 1e-12:
            if t1 > t0 and next_obs < t1:
                v = hermite(t0, y0, f0, t1, y1, f1, next_obs)
                dv = hermite_derivative(t0, y0, f0, t1, y1, f1, next_obs)
            else:
                v, dv = y1, f1
            obs.record(grid, next_obs, v, dv)
            next_obs += observe_every

    emit(0.0, y, k1, 0.0, y, k1)

    if h0 is None:
        scale = atol + rtol * np.abs(y)
        d0 = np.max(np.abs(y) / scale)
        d1 = np.max(np.abs(k1) / scale)
        h = 0.01 * d0 / d1 if d1 > 1e-10 and d0 > 1e-10 else 1e-4
    else:
        h = h0
    h = min(h, hmax, t_end)

    n_steps = n_rej = 0

    def _run():
        nonlocal t, y, k1, h, n_steps, n_rej
        while t < t_end:
            h = min(h, t_end - t)
            y_new, err = cash_karp_step(f, t, y, k1, h)
            if not np.all(np.isfinite(y_new)):
                en = math.inf
            else:
                sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
                en = float(np.max(np.abs(err) / sc))
            if en <= 1.0:
                t_new = t + h
                k1_new = f(t_new, y_new)
                if not np.all(np.isfinite(k1_new)):
                    raise NonFiniteField(f"non-finite field at t={t_new}", t=t, last_state=y.copy())
                buf.append(t_new, y_new, k1_new)
                emit(t, y, k1, t_new, y_new, k1_new)
                if callback is not None:
                    callback(t_new, y_new)
                t, y, k1 = t_new, y_new, k1_new
                n_steps += 1
                if tau > 0 and n_steps % 64 == 0:
                    buf.prune(t - tau - hmax)
                fac = 5.0 if en == 0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
                h = min(h * fac, hmax)
            else:
                n_rej += 1
                if not math.isfinite(en):
                    h *= 0.1
                else:
                    h *= max(0.1, 0.9 * en ** -0.25)
                if h < hmin:
                    if not math.isfinite(en):
                        raise NonFiniteField(f"non-finite field near t={t}", t=t, last_state=y.copy())
                    raise StepSizeUnderflow(f"step size {h:g} below {hmin:g} at t={t}")

    def result():
        return SimResult(
            times=np.array(snap_t),
            snapshots=np.array(snap_y).reshape(len(snap_y), grid.n_points),
            observables=obs,
            final=FieldState(t, y),
            n_steps=n_steps,
            n_rejected=n_rej,
        )

    try:
        _run()
    except (NonFiniteField, StepSizeUnderflow) as e:
        # callers can still flush what was sampled before the failure
        e.partial = result()
        raise

    return result()


# ---------------------------------------------------------------------------
# plane-wave estimation


@dataclass(frozen=True)
class PlaneWaveEstimate:
    q: float
    omega: float
    a0: float
    is_planewave: bool
    modulus_variation: float
    peak_fraction: float


def estimate_planewave(times, snapshots, grid: Grid, var_tol: float = 0.01, power_tol: float = 0.99) -> PlaneWaveEstimate:
    """Fit ``(q, omega, a0)`` to a window of snapshots.

    ``q`` is the spectral peak of the last snapshot and ``omega`` the
    least-squares slope of the unwrapped phase of that Fourier mode. The
    sampling interval must satisfy ``|omega| * dt < pi`` or the phase aliases.
    """
    times = np.asarray(times, dtype=float)
    snaps = np.asarray(snapshots)
    last = snaps[-1]
    q, _, frac = dominant_mode(grid, last)
    i = int(round(q / grid.dk)) % grid.n_points
    coeffs = np.fft.fft(snaps, axis=1)[:, i] / grid.n_points
    ph = np.unwrap(np.angle(coeffs))
    if times.size >= 2:
        omega = float(np.polyfit(times - times.mean(), ph, 1)[0])
    else:
        omega = float("nan")
    m = np.abs(last)
    a0 = float(m.mean())
    var = float((m.max() - m.min()) / a0) if a0 > 0 else math.inf
    return PlaneWaveEstimate(q, omega, a0, bool(var < var_tol and frac > power_tol), var, frac)

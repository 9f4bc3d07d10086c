import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcgle.errors import NoRealAmplitude
from dcgle.existence import find_planewaves
from dcgle.model import (
    ModelParams,
    PlaneWave,
    amplitude_branch_of,
    amplitude_on_tube,
    amplitude_squared_roots,
    angle_distance,
    nodelay_amplitude,
    nodelay_planewaves,
    planewave_from_theta,
    residual_pw,
    theta_of,
    tube_residual,
    with_theta,
    wrap_angle,
)

QUINTIC = ModelParams.quintic()


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(beta=0.0)
    with pytest.raises(ValueError):
        ModelParams(tau=-1.0)
    with pytest.raises(ValueError):
        ModelParams(eta=-0.1)
    with pytest.raises(ValueError):
        ModelParams(delta=float("nan"))
    assert ModelParams.cubic().is_cubic
    assert not QUINTIC.is_cubic


def test_planewave_rejects_negative_amplitude():
    with pytest.raises(ValueError):
        PlaneWave(0.0, 0.0, -1.0)


def test_residual_cubic_example():
    p = ModelParams(beta=0.5, delta=1.0, epsilon=-1.0, mu=0.0, nu=0.0, eta=0.0)
    assert abs(residual_pw(p, PlaneWave(0.0, 1.0, 1.0))) < 1e-15


def test_residual_trivial_state():
    p = ModelParams(delta=0.0, eta=0.0)
    for om in (-2.0, 0.0, 0.7):
        assert residual_pw(p, PlaneWave(0.0, om, 0.0)) == pytest.approx(1j * om)


@pytest.mark.xfail(strict=True, reason="the quoted wave is not on the delta=0.023 tube")
def test_residual_quoted_low_delta_wave():
    p = ModelParams.quintic(delta=0.023, tau=20)
    assert abs(residual_pw(p, PlaneWave(0.0, 0.998, 1.166))) < 5e-3


def test_quoted_waves_exist_at_delta_04():
    # both quoted waves are exact once delta = 0.4
    p = ModelParams.quintic(delta=0.4, tau=20)
    ws = find_planewaves(p, 0.0)
    for om, a0 in ((0.998, 1.166), (1.12, 1.086)):
        best = min(ws, key=lambda w: abs(w.omega - om) + abs(w.a0 - a0))
        assert abs(best.omega - om) < 3e-3 and abs(best.a0 - a0) < 3e-3


def test_nodelay_amplitude_values():
    a = nodelay_amplitude(QUINTIC.replace(delta=0.1), 0.0)
    assert abs(a[0] - 1.04) < 0.01
    b = nodelay_amplitude(QUINTIC.replace(delta=-0.2), 0.0)
    assert abs(b[0] - 0.85) < 0.01


def test_nodelay_amplitude_bifurcation_point():
    for q in (0.0, 0.5, 1.3):
        p = QUINTIC.replace(delta=QUINTIC.beta * q * q)
        amps = nodelay_amplitude(p, q)
        assert min(amps) == pytest.approx(0.0, abs=1e-12)


def test_nodelay_amplitude_empty_when_no_root():
    assert nodelay_amplitude(QUINTIC.replace(delta=-1.0), 0.0) == []


@given(st.floats(-0.24, 1.5), st.floats(-1.5, 1.5))
def test_nodelay_real_part_vanishes(delta, q):
    p = QUINTIC.replace(delta=delta, eta=0.0)
    for pw in nodelay_planewaves(p, q):
        assert abs(residual_pw(p, pw)) < 1e-12 * max(1.0, pw.a0 ** 4)


def test_cubic_path_matches_quintic_limit():
    cub = ModelParams.cubic(delta=0.3)
    near = cub.replace(mu=-1e-6)
    for q in (0.0, 0.4):
        a = nodelay_amplitude(cub, q)
        b = nodelay_amplitude(near, q)
        assert len(a) == 1
        assert abs(a[0] - b[0]) < 1e-4


def test_cubic_has_single_branch():
    cub = ModelParams.cubic(delta=0.3)
    xp, xm = amplitude_squared_roots(cub, 0.3)
    assert math.isfinite(float(xp)) and math.isnan(float(xm))
    with pytest.raises(NoRealAmplitude):
        planewave_from_theta(cub, 0.0, 1.0, "-")


def test_tube_degenerates_without_feedback():
    p = QUINTIC.replace(delta=0.2, eta=0.0)
    for pw in nodelay_planewaves(p, 0.3):
        assert abs(tube_residual(p, pw)) < 1e-12


def test_tube_cross_section():
    p = ModelParams.quintic(delta=0.4, eta=0.5, tau=10.0)
    for pw in find_planewaves(p, 0.0):
        assert abs(tube_residual(p, pw)) < 1e-9


@given(
    st.floats(-0.2, 1.2),
    st.floats(0.0, 2 * math.pi, exclude_max=True),
    st.floats(-1.2, 1.2),
    st.sampled_from(["+", "-"]),
)
def test_planewave_from_theta_on_tube(delta, theta, q, branch):
    p = QUINTIC.replace(delta=delta)
    try:
        pw = planewave_from_theta(p, q, theta, branch)
    except NoRealAmplitude:
        return
    assert abs(tube_residual(p, pw)) < 1e-10 * max(1.0, pw.a0 ** 8)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_theta_pi_maximizes_amplitude(delta, q):
    p = QUINTIC.replace(delta=delta)
    th = np.linspace(0, 2 * math.pi, 721)
    a2 = amplitude_on_tube(p, q, th, "+")
    if np.all(np.isnan(a2)):
        return
    a_pi = amplitude_on_tube(p, q, np.array([math.pi]), "+")[0]
    assert a_pi >= np.nanmax(a2) - 1e-12


@pytest.mark.xfail(strict=True, reason="quoted (omega, a0) is more than 0.02 off the tube value")
def test_quoted_theta_wave():
    pw = planewave_from_theta(QUINTIC.replace(delta=0.56), 1.0, 3.94, "+")
    assert abs(pw.omega - 0.33) < 0.02 and abs(pw.a0 - 1.05) < 0.02


def test_theta_wave_tube_value():
    pw = planewave_from_theta(QUINTIC.replace(delta=0.56), 1.0, 3.94, "+")
    assert pw.omega == pytest.approx(0.3902, abs=1e-3)
    assert pw.a0 == pytest.approx(1.0818, abs=1e-3)


def test_theta_closure_agrees_with_roots():
    p = ModelParams.quintic(delta=0.4, tau=20.0, phi=0.3)
    for pw in find_planewaves(p, 0.5):
        br = amplitude_branch_of(p, pw)
        alt = planewave_from_theta(p, 0.5, pw.theta, br)
        assert abs(alt.omega - pw.omega) < 1e-9
        assert abs(alt.a0 - pw.a0) < 1e-9


@given(st.floats(-0.2, 1.2), st.floats(0.0, 6.28), st.floats(0.0, 1.5))
def test_reflection_symmetry(delta, theta, q):
    p = QUINTIC.replace(delta=delta)
    try:
        a = planewave_from_theta(p, q, theta, "+")
    except NoRealAmplitude:
        with pytest.raises(NoRealAmplitude):
            planewave_from_theta(p, -q, theta, "+")
        return
    b = planewave_from_theta(p, -q, theta, "+")
    assert (a.omega, a.a0) == (b.omega, b.a0)
    assert nodelay_amplitude(p, q) == nodelay_amplitude(p, -q)


@settings(max_examples=200)
@given(st.floats(-1e3, 1e3))
def test_wrap_angle_range(x):
    y = wrap_angle(x)
    assert 0.0 <= y < 2 * math.pi
    assert angle_distance(x, y) < 1e-9


def test_theta_attachment():
    p = ModelParams.quintic(tau=7.0, phi=1.1)
    pw = with_theta(p, PlaneWave(0.0, 0.83, 1.0))
    assert abs(pw.theta - ((0.83 * 7.0 - 1.1 + math.pi) % (2 * math.pi))) < 1e-12
    assert theta_of(0.0, 0.0, 0.0) == pytest.approx(math.pi)

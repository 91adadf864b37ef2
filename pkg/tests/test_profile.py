import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isoprofile.convex import make_ball, volume
from isoprofile.errors import VolumeOutOfRange, WitnessNotBall
from isoprofile.profile import (
    ProfileCurve,
    ProfileSample,
    ball_profile_constant,
    concavity_audit,
    curvature_audit,
    lower_bound_ball_transfer,
    profile_curve,
    scaling_audit,
    square_profile,
    strict_subadditivity_probe,
    upper_bound,
)

from conftest import triangle345, unit_disk, unit_square


def test_square_upper_bound_is_exact(square):
    v = np.linspace(0.02, 0.98, 49)
    vals, wits = upper_bound(square, v)
    assert np.max(np.abs(vals - square_profile(v))) <= 1e-9
    assert wits[0]["kind"] == "ball"
    assert upper_bound(square, 0.5)[0] == pytest.approx(1.0, abs=1e-12)


def test_disk_half_is_diameter(disk):
    assert upper_bound(disk, math.pi / 2)[0] == pytest.approx(2.0, abs=1e-9)


def test_ball_profile_constant_planar():
    # half disk of area pi/2 has free boundary 2
    assert ball_profile_constant(1) == pytest.approx(2 / math.sqrt(math.pi / 2), rel=1e-12)


@pytest.mark.parametrize("make", [unit_square, unit_disk, triangle345])
def test_upper_curve_symmetric_and_concave(make):
    body = make()
    total = volume(body)[0]
    curve = profile_curve(body, total * np.linspace(0.02, 0.98, 49))
    rep = concavity_audit(curve, tol=1e-9)
    assert rep.passed, rep.checks


def test_concavity_negative_control(square):
    v = np.linspace(0.05, 0.95, 19)
    curve = ProfileCurve("sq", 1.0, 1)
    for x, y in zip(v, square_profile(v)):
        curve.add(ProfileSample(float(x), float(y), "upper"))
    bad = ProfileCurve("sq", 1.0, 1)
    for k, s in enumerate(curve.samples):
        bad.add(ProfileSample(s.v, s.value * (0.8 if k == 6 else 1.0), "upper"))
    assert concavity_audit(curve).passed
    rep = concavity_audit(bad)
    assert not rep.checks["concavity"]["passed"]


@pytest.mark.parametrize("lam", [0.5, 2.0, 3.0])
def test_scaling(lam, triangle):
    rep = scaling_audit(triangle, lam, 6 * np.linspace(0.05, 0.95, 19))
    assert rep.passed, rep.checks


def test_lower_below_upper(triangle):
    v = 6 * np.linspace(0.05, 0.95, 10)
    low = lower_bound_ball_transfer(triangle, v)
    up, _ = upper_bound(triangle, v)
    assert np.all(low <= up)
    with pytest.raises(VolumeOutOfRange):
        lower_bound_ball_transfer(triangle, [6.0])


def test_curvature_square(square):
    rep = curvature_audit(None, square, 0.1)
    assert rep.passed, rep.checks
    assert rep.info["H"] == pytest.approx(1 / math.sqrt(0.4 / math.pi), rel=1e-9)
    with pytest.raises(WitnessNotBall):
        curvature_audit(None, square, 0.5)


def test_subadditivity_square(square):
    v = np.linspace(0.01, 0.99, 99)
    curve = ProfileCurve("sq", 1.0, 1)
    for x, y in zip(v, square_profile(v)):
        curve.add(ProfileSample(float(x), float(y), "analytic"))
    assert strict_subadditivity_probe(curve, [(0.1, 0.2), (0.05, 0.3)]).passed


def test_curve_rejects_out_of_range():
    curve = ProfileCurve("x", 1.0, 1)
    with pytest.raises(VolumeOutOfRange):
        curve.add(ProfileSample(1.0, 0.0, "upper"))


@settings(max_examples=25, deadline=None)
@given(lam=st.floats(0.05, 0.95), t=st.floats(0.3, 3.0))
def test_disk_upper_scaling(lam, t):
    d = make_ball([0, 0], 1.0)
    big = make_ball([0, 0], t)
    a = upper_bound(d, lam * math.pi)[0]
    b = upper_bound(big, lam * math.pi * t * t)[0]
    assert b == pytest.approx(t * a, rel=1e-7)
    assert a <= 2.0 + 1e-9

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isoprofile.cones import (
    Cone,
    cone_profile,
    geodesic_ball_in_cone,
    min_solid_angle_vertex,
    semicontinuity_probe,
    solid_angle,
    tangent_cone,
)
from isoprofile.convex import make_polytope, unit_ball_volume
from isoprofile.errors import InteriorPoint, MethodDimensionMismatch, NonpositiveAngle, NonpositiveVolume

CUBE = make_polytope([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)])
TETRA = make_polytope([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]])


def test_planar_angles(square, triangle):
    assert solid_angle(tangent_cone(square, [0, 0]))[0] == pytest.approx(math.pi / 2, abs=1e-12)
    assert solid_angle(tangent_cone(square, [0.5, 0]))[0] == pytest.approx(math.pi, abs=1e-12)
    m = min_solid_angle_vertex(triangle)
    assert np.allclose(m.vertex, [4, 0])
    assert m.alpha == pytest.approx(math.atan2(3, 4), abs=1e-12)
    assert m.alpha == pytest.approx(0.6435011087932844, abs=1e-12)


def test_octant_and_tetrahedron():
    assert solid_angle(tangent_cone(CUBE, [0, 0, 0]))[0] == pytest.approx(math.pi / 2, abs=1e-12)
    # regular tetrahedron vertex: arccos(23/27)
    expected = math.acos(23 / 27)
    assert solid_angle(tangent_cone(TETRA, [1, 1, 1]))[0] == pytest.approx(expected, abs=1e-9)


def test_montecarlo_agrees_with_exact():
    for body, p in [(CUBE, [0, 0, 0]), (TETRA, [1, 1, 1]), (CUBE, [0.5, 0, 0])]:
        cone = tangent_cone(body, p)
        exact = solid_angle(cone)[0]
        est, err = solid_angle(cone, method="montecarlo", samples=400_000, seed=2)
        assert abs(est - exact) <= err


def test_method_dimension_checks(square):
    with pytest.raises(MethodDimensionMismatch):
        solid_angle(tangent_cone(square, [0, 0]), method="exact3d")
    with pytest.raises(MethodDimensionMismatch):
        solid_angle(tangent_cone(CUBE, [0, 0, 0]), method="exact2d")


def test_interior_point_rejected(square):
    with pytest.raises(InteriorPoint):
        tangent_cone(square, [0.5, 0.5])


def test_geodesic_ball_matches_profile():
    for alpha in (math.pi / 6, math.pi / 2, math.pi):
        for v in (0.01, 0.3, 2.0):
            rho, per = geodesic_ball_in_cone(alpha, v, n=1)
            assert alpha * rho**2 / 2 == pytest.approx(v, rel=1e-12)
            assert per == pytest.approx(float(cone_profile(alpha, 1, v)), rel=1e-12)


def test_full_space_is_ball_profile():
    # alpha = |S^n| gives the Euclidean isoperimetric profile
    n = 2
    alpha = 4 * math.pi
    v = 1.0
    r = (v / unit_ball_volume(3)) ** (1 / 3)
    assert float(cone_profile(alpha, n, v)) == pytest.approx(4 * math.pi * r**2, rel=1e-12)


def test_cone_profile_errors():
    with pytest.raises(NonpositiveAngle):
        cone_profile(0.0, 1, 1.0)
    with pytest.raises(NonpositiveVolume):
        geodesic_ball_in_cone(1.0, 0.0, n=1)


@settings(max_examples=50, deadline=None)
@given(alpha=st.floats(0.05, 6.0), v=st.floats(1e-4, 10.0), t=st.floats(0.1, 10.0), n=st.integers(1, 3))
def test_cone_profile_homogeneity_and_monotonicity(alpha, v, t, n):
    e = n / (n + 1)
    assert float(cone_profile(alpha, n, t * v)) == pytest.approx(t**e * float(cone_profile(alpha, n, v)), rel=1e-10)
    assert float(cone_profile(alpha * 1.01, n, v)) > float(cone_profile(alpha, n, v))


def test_half_space_dominates():
    # any convex cone has angle at most the half-space angle
    for body in (CUBE, TETRA):
        for p in body.vertices:
            assert solid_angle(tangent_cone(body, p))[0] <= 2 * math.pi + 1e-12


def test_semicontinuity_on_square(square):
    pts = [[t, 0.0] for t in 0.5 ** np.arange(1, 12)]
    rep = semicontinuity_probe(square, [0, 0], pts)
    assert rep.passed
    assert rep.alpha_limit == pytest.approx(math.pi / 2)
    assert all(a == pytest.approx(math.pi) for a in rep.alphas)

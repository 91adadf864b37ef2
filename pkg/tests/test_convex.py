import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isoprofile.convex import (
    MetricBall,
    hausdorff_distance,
    make_ball,
    make_polytope,
    metric_ball_volume,
    metric_ball_volumes,
    polar_body,
    radial_function,
    radial_lipschitz_bound,
    regular_polygon,
    support_function,
    unit_ball_volume,
    volume,
)
from isoprofile.errors import CenterOutsideBody, DegenerateInput, DimensionMismatch, OriginNotInterior

from conftest import random_polygon

CUBE = [[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)]
SIMPLEX3 = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]


def test_square_primitives(square):
    assert square.inradius == pytest.approx(0.5, abs=1e-9)
    assert np.allclose(square.chebyshev_center, [0.5, 0.5], atol=1e-9)
    assert square.circumradius == pytest.approx(math.sqrt(0.5), abs=1e-12)
    assert len(square.normals) == 4
    assert volume(square)[0] == pytest.approx(1.0, abs=1e-15)


def test_simplex_inradius():
    # inradius of the corner simplex is 1 / (3 + sqrt(3))
    s = make_polytope(SIMPLEX3)
    assert s.inradius == pytest.approx(1 / (3 + math.sqrt(3)), abs=1e-9)
    assert volume(s)[0] == pytest.approx(1 / 6, abs=1e-12)


def test_cube_volume_methods():
    cube = make_polytope(CUBE)
    assert volume(cube)[0] == pytest.approx(1.0, abs=1e-12)
    est, err = volume(cube, method="montecarlo", samples=200_000, seed=3)
    assert abs(est - 1.0) <= 1e-9  # bounding box equals the cube


def test_montecarlo_deterministic_given_seed_and_workers(triangle):
    a = volume(triangle, method="montecarlo", samples=100_000, seed=11, workers=2)
    b = volume(triangle, method="montecarlo", samples=100_000, seed=11, workers=2)
    assert a == b
    assert abs(a[0] - 6.0) <= a[1] + 1e-12


def test_degenerate_inputs_rejected():
    with pytest.raises(DegenerateInput):
        make_polytope([[0, 0], [1, 0], [2, 0]])
    with pytest.raises(DegenerateInput):
        make_polytope([[0, 0], [1, 0], [1, 1e-8]])
    with pytest.raises(DegenerateInput):
        make_ball([0, 0], 0.0)


def test_vertices_satisfy_halfspaces():
    rng = np.random.default_rng(0)
    for _ in range(10):
        p = random_polygon(rng)
        assert np.all(p.vertices @ p.normals.T <= p.offsets + 1e-9)
        assert p.inradius <= p.circumradius


def test_polar_involution_and_duality():
    rng = np.random.default_rng(1)
    for _ in range(5):
        p = random_polygon(rng)
        p = p.translate(-p.chebyshev_center)
        pp = polar_body(polar_body(p))
        d = np.linalg.norm(pp.vertices[:, None, :] - p.vertices[None, :, :], axis=2)
        assert d.min(axis=1).max() <= 1e-7
        u = rng.standard_normal((1000, 2))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        prod = radial_function(p, u) * support_function(polar_body(p), u)
        assert np.max(np.abs(prod - 1)) <= 1e-9


def test_polar_of_centered_ball():
    b = polar_body(make_ball([0, 0], 2.0))
    assert b.radius == pytest.approx(0.5)


def test_origin_must_be_interior(square):
    with pytest.raises(OriginNotInterior):
        radial_function(square, np.array([1.0, 0.0]))
    with pytest.raises(OriginNotInterior):
        polar_body(square)


def test_radial_sandwich():
    rng = np.random.default_rng(2)
    p = random_polygon(rng)
    p = p.translate(-p.chebyshev_center)
    r, big_r = p.origin_radii()
    u = rng.standard_normal((1000, 2))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    rho = radial_function(p, u)
    assert np.all(rho >= r - 1e-12) and np.all(rho <= big_r + 1e-12)
    assert radial_lipschitz_bound(p) == pytest.approx(big_r**2 / r)


@pytest.mark.parametrize("k", [4, 6, 12, 64])
def test_inscribed_polygon_hausdorff(k):
    d = hausdorff_distance(regular_polygon(k, 1.0), make_ball([0, 0], 1.0))
    assert d == pytest.approx(1 - math.cos(math.pi / k), abs=1e-9)


def test_hausdorff_metric_axioms():
    bodies = [
        make_polytope([[0, 0], [1, 0], [1, 1], [0, 1]]),
        make_polytope([[0, 0], [2, 0], [0, 1]]),
        regular_polygon(5, 0.8, (0.3, 0.2)),
        make_ball([0.5, 0.5], 0.6),
        make_ball([0, 0], 1.0),
    ]
    for a in bodies:
        assert hausdorff_distance(a, a) <= 1e-12
        for b in bodies:
            assert hausdorff_distance(a, b) == hausdorff_distance(b, a)
            for c in bodies:
                assert hausdorff_distance(a, c) <= hausdorff_distance(a, b) + hausdorff_distance(b, c) + 1e-12
    sq = bodies[0]
    assert hausdorff_distance(sq, sq.translate([1, 1])) == pytest.approx(math.sqrt(2), abs=1e-12)
    with pytest.raises(DimensionMismatch):
        hausdorff_distance(sq, make_polytope(CUBE))


def test_metric_ball_volume(square):
    # quarter disk at a corner, half disk on an edge, full disk inside
    assert metric_ball_volume(MetricBall(square, [0, 0], 0.3))[0] == pytest.approx(math.pi * 0.09 / 4, abs=1e-12)
    assert metric_ball_volume(MetricBall(square, [0.5, 0], 0.3))[0] == pytest.approx(math.pi * 0.09 / 2, abs=1e-12)
    assert metric_ball_volume(MetricBall(square, [0.5, 0.5], 0.3))[0] == pytest.approx(math.pi * 0.09, abs=1e-12)
    with pytest.raises(CenterOutsideBody):
        MetricBall(square, [2, 2], 0.1)


def test_metric_ball_volume_3d_montecarlo():
    cube = make_polytope(CUBE)
    v, err = metric_ball_volume(MetricBall(cube, [0, 0, 0], 0.5), samples=200_000)
    assert abs(v - unit_ball_volume(3) * 0.125 / 8) <= err


@settings(max_examples=40, deadline=None)
@given(
    x=st.floats(0.0, 1.0),
    y=st.floats(0.0, 1.0),
    rho=st.floats(0.01, 0.5),
)
def test_ahlfors_sandwich_square(x, y, rho):
    # |B_C(x, rho)| <= omega rho^2, and >= quarter disk for rho <= inradius
    sq = make_polytope([[0, 0], [1, 0], [1, 1], [0, 1]])
    vol, _ = metric_ball_volumes(sq, [[x, y]], [rho])
    assert vol[0] <= math.pi * rho**2 * (1 + 1e-12)
    assert vol[0] >= math.pi * rho**2 / 4 * (1 - 1e-12)


@settings(max_examples=30, deadline=None)
@given(lam=st.floats(0.2, 5.0), seed=st.integers(0, 10_000))
def test_scaling_of_primitives(lam, seed):
    p = random_polygon(np.random.default_rng(seed))
    q = p.scale(lam)
    assert q.inradius == pytest.approx(lam * p.inradius, rel=1e-7)
    assert volume(q)[0] == pytest.approx(lam**2 * volume(p)[0], rel=1e-12)

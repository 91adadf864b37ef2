"""Tangent cones of polytopes, solid angles and exact cone profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .convex import ConvexBody, unit_sphere_area
from .errors import (
    InteriorPoint,
    MethodDimensionMismatch,
    NonpositiveAngle,
    NonpositiveVolume,
)

ACTIVE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Cone:
    dim: int
    apex: np.ndarray
    normals: np.ndarray  # active unit normals; the cone is {x : <a, x - apex> <= 0}
    offsets: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.offsets is None:
            object.__setattr__(self, "offsets", self.normals @ self.apex)

    @property
    def n(self) -> int:
        return self.dim - 1

    def contains_directions(self, u: np.ndarray) -> np.ndarray:
        return np.all(u @ self.normals.T < 0.0, axis=1)


def tangent_cone(body: ConvexBody, p) -> Cone:
    p = np.asarray(p, dtype=float)
    tol = ACTIVE_TOL * max(1.0, body.circumradius)
    slack = body.offsets - body.normals @ p
    if np.any(slack < -tol):
        raise InteriorPoint(f"point {p} is outside the body")
    active = np.abs(slack) <= tol
    if not np.any(active):
        raise InteriorPoint(f"point {p} is interior")
    return Cone(dim=body.dim, apex=p, normals=body.normals[active])


def _angle_between(a, b) -> float:
    return float(np.arctan2(np.linalg.norm(np.cross(a, b)) if len(a) == 3 else abs(a[0] * b[1] - a[1] * b[0]), a @ b))


def _solid_angle_2d(normals: np.ndarray) -> float:
    if len(normals) == 1:
        return math.pi
    ang = np.arctan2(normals[:, 1], normals[:, 0])
    # angular spread of the normals (they lie in an open half-circle for a pointed cone)
    order = np.sort(np.mod(ang, 2 * np.pi))
    gaps = np.diff(np.concatenate([order, [order[0] + 2 * np.pi]]))
    spread = 2 * np.pi - gaps.max()
    return math.pi - spread


def _solid_angle_3d(normals: np.ndarray) -> float | None:
    k = len(normals)
    if k == 1:
        return 2 * math.pi
    if k == 2:
        theta = _angle_between(normals[0], normals[1])
        return 2 * (math.pi - theta)
    # order normals cyclically around their mean; the spherical polygon of the
    # polar cone has area sum(theta_ij) - (k-2) pi and the cone's area is
    # 2 pi - sum(theta_ij) (Gauss-Bonnet on the dual polygon)
    c = normals.mean(axis=0)
    if np.linalg.norm(c) < 1e-12:
        return None
    c /= np.linalg.norm(c)
    if np.linalg.matrix_rank(normals - normals.mean(axis=0), tol=1e-10) < 2 and k >= 3:
        return None
    e1 = normals[0] - (normals[0] @ c) * c
    if np.linalg.norm(e1) < 1e-12:
        e1 = normals[1] - (normals[1] @ c) * c
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(c, e1)
    order = np.argsort(np.arctan2(normals @ e2, normals @ e1))
    ring = normals[order]
    total = sum(_angle_between(ring[i], ring[(i + 1) % k]) for i in range(k))
    return 2 * math.pi - total


def _solid_angle_mc(cone: Cone, samples: int, seed: int) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    hits, left = 0, samples
    while left > 0:
        m = min(left, 100_000)
        g = rng.standard_normal((m, cone.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        hits += int(np.count_nonzero(cone.contains_directions(g)))
        left -= m
    area = unit_sphere_area(cone.dim)
    p = hits / samples
    return area * p, 3.0 * area * math.sqrt(p * (1 - p) / samples)


def solid_angle(cone: Cone, method: str = "auto", samples: int = 10**6, seed: int = 0) -> tuple[float, float]:
    """H^n measure of the unit directions of the cone, with an error estimate."""
    if method == "auto":
        method = {2: "exact2d", 3: "exact3d"}.get(cone.dim, "montecarlo")
    if method == "exact2d":
        if cone.dim != 2:
            raise MethodDimensionMismatch("exact2d needs a planar cone")
        return float(_solid_angle_2d(cone.normals)), 0.0
    if method == "exact3d":
        if cone.dim != 3:
            raise MethodDimensionMismatch("exact3d needs a cone in R^3")
        val = _solid_angle_3d(cone.normals)
        if val is None:
            return _solid_angle_mc(cone, samples, seed)
        return val, 0.0
    if method == "montecarlo":
        return _solid_angle_mc(cone, samples, seed)
    raise MethodDimensionMismatch(f"unknown method {method!r}")


def cone_profile(alpha: float, n: int, v):
    """alpha^{1/(n+1)} (n+1)^{n/(n+1)} v^{n/(n+1)}, the profile of a cone of solid angle alpha."""
    if alpha <= 0:
        raise NonpositiveAngle(f"solid angle must be positive, got {alpha}")
    e = n / (n + 1)
    return alpha ** (1.0 / (n + 1)) * (n + 1) ** e * np.asarray(v, dtype=float) ** e


def geodesic_ball_radius(alpha: float, n: int, v):
    return ((n + 1) * np.asarray(v, dtype=float) / alpha) ** (1.0 / (n + 1))


def geodesic_ball_in_cone(cone_or_alpha, v: float, n: int | None = None) -> tuple[float, float]:
    """Radius and free-boundary measure of the apex ball of volume ``v``."""
    if isinstance(cone_or_alpha, Cone):
        alpha = solid_angle(cone_or_alpha)[0]
        n = cone_or_alpha.n
    else:
        alpha = float(cone_or_alpha)
    if alpha <= 0:
        raise NonpositiveAngle(f"solid angle must be positive, got {alpha}")
    if v <= 0:
        raise NonpositiveVolume(f"volume must be positive, got {v}")
    rho = float(geodesic_ball_radius(alpha, n, v))
    return rho, alpha * rho**n


@dataclass(frozen=True)
class MinAngle:
    vertex_index: int
    vertex: np.ndarray
    alpha: float
    n: int
    angles: np.ndarray  # solid angle at every vertex, in body vertex order

    def profile(self, v):
        return cone_profile(self.alpha, self.n, v)


def vertex_angles(body: ConvexBody, workers: int = 1) -> np.ndarray:
    from concurrent.futures import ThreadPoolExecutor

    def one(p):
        return solid_angle(tangent_cone(body, p))[0]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return np.array(list(pool.map(one, body.vertices)))
    return np.array([one(p) for p in body.vertices])


def min_solid_angle_vertex(body: ConvexBody, check_points: int = 32, workers: int = 1) -> MinAngle:
    """Vertex of smallest solid angle; ties go to the lexicographically smallest vertex.

    Also checks that no sampled non-vertex boundary point has a smaller angle.
    """
    angles = vertex_angles(body, workers)
    tol = 1e-12 * max(1.0, angles.max())
    cands = np.flatnonzero(angles <= angles.min() + tol)
    verts = body.vertices[cands]
    pick = cands[np.lexsort(verts.T[::-1])[0]]
    if check_points:
        pts = body.boundary_points(check_points)
        for p in pts:
            if np.min(np.linalg.norm(body.vertices - p, axis=1)) < 1e-9 * max(1.0, body.circumradius):
                continue
            a = solid_angle(tangent_cone(body, p))[0]
            assert a >= angles[pick] - 1e-9, "a non-vertex boundary point has a smaller solid angle"
    return MinAngle(
        vertex_index=int(pick),
        vertex=body.vertices[pick].copy(),
        alpha=float(angles[pick]),
        n=body.dim - 1,
        angles=angles,
    )


@dataclass
class SemicontinuityReport:
    alpha_limit: float
    alphas: list
    passed: bool


def semicontinuity_probe(body: ConvexBody, p, approach_points, tail: int | None = None) -> SemicontinuityReport:
    """Checks alpha(p) <= min over the tail of alpha(p_i) (up to 1e-9)."""
    a_p = solid_angle(tangent_cone(body, p))[0]
    alphas = [solid_angle(tangent_cone(body, q))[0] for q in approach_points]
    seq = alphas[-tail:] if tail else alphas
    ok = (not seq) or a_p <= min(seq) + 1e-9
    return SemicontinuityReport(alpha_limit=a_p, alphas=alphas, passed=bool(ok))

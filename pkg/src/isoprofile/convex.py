"""Convex bodies and the classical primitives computed on them.

A :class:`ConvexBody` is either a polytope (vertex and half-space data kept
side by side) or a Euclidean ball. Bodies are immutable; transformations
return new bodies.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.spatial import ConvexHull, QhullError

from . import planar
from .errors import (
    CenterOutsideBody,
    DegenerateInput,
    DimensionMismatch,
    MethodDimensionMismatch,
    OriginNotInterior,
    UnsupportedBody,
)

MEMBERSHIP_TOL = 1e-9
DEGENERACY_RATIO = 1e-6
DEFAULT_MC_SAMPLES = 10**6
_MC_CHUNK = 100_000


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in R^d."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def unit_sphere_area(d: int) -> float:
    """H^{d-1} measure of the unit sphere in R^d."""
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


@dataclass(frozen=True, eq=False)
class ConvexBody:
    dim: int
    kind: str  # "polytope" | "ball"
    chebyshev_center: np.ndarray
    inradius: float
    circumradius: float
    vertices: np.ndarray | None = None
    normals: np.ndarray | None = None
    offsets: np.ndarray | None = None
    facets: tuple = ()
    center: np.ndarray | None = None
    radius: float | None = None
    name: str = field(default="body")

    @property
    def is_polytope(self) -> bool:
        return self.kind == "polytope"

    @property
    def n(self) -> int:
        """Dimension of the free boundary (ambient dimension minus one)."""
        return self.dim - 1

    def contains(self, points, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.is_polytope:
            out = np.empty(len(pts), dtype=bool)
            for s in range(0, len(pts), _MC_CHUNK):
                chunk = pts[s : s + _MC_CHUNK]
                out[s : s + _MC_CHUNK] = np.all(chunk @ self.normals.T <= self.offsets + tol, axis=1)
            return out
        return np.linalg.norm(pts - self.center, axis=1) <= self.radius + tol

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.is_polytope:
            return self.vertices.min(axis=0), self.vertices.max(axis=0)
        return self.center - self.radius, self.center + self.radius

    def translate(self, shift) -> "ConvexBody":
        shift = np.asarray(shift, dtype=float)
        if self.is_polytope:
            return make_polytope(self.vertices + shift, name=self.name)
        return make_ball(self.center + shift, self.radius, name=self.name)

    def scale(self, lam: float) -> "ConvexBody":
        """Dilation about the origin by factor ``lam``."""
        if self.is_polytope:
            return make_polytope(lam * self.vertices, name=self.name)
        return make_ball(lam * self.center, lam * self.radius, name=self.name)

    def centered(self) -> "ConvexBody":
        """Translate so that the Chebyshev center sits at the origin."""
        return self.translate(-self.chebyshev_center)

    def origin_radii(self) -> tuple[float, float]:
        """Largest r and smallest R with B(0, r) ⊂ body ⊂ B(0, R)."""
        if self.is_polytope:
            return float(self.offsets.min()), float(np.linalg.norm(self.vertices, axis=1).max())
        c = float(np.linalg.norm(self.center))
        return self.radius - c, self.radius + c

    def origin_is_interior(self, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.origin_radii()[0] > tol

    def boundary_points(self, count: int) -> np.ndarray:
        """Deterministic, roughly evenly spread points on the boundary.

        In the plane the points are equally spaced in arclength starting from
        the first vertex (or angle 0 for a disk). In higher dimension facets
        are sampled with area weights from a fixed-seed generator.
        """
        if self.dim == 2:
            s = np.arange(count) / count
            if not self.is_polytope:
                ang = 2 * np.pi * s
                return self.center + self.radius * np.column_stack([np.cos(ang), np.sin(ang)])
            v = self.vertices
            w = np.roll(v, -1, axis=0)
            lens = np.linalg.norm(w - v, axis=1)
            cum = np.concatenate([[0.0], np.cumsum(lens)])
            pos = s * cum[-1]
            idx = np.clip(np.searchsorted(cum, pos, side="right") - 1, 0, len(v) - 1)
            frac = (pos - cum[idx]) / lens[idx]
            return v[idx] + frac[:, None] * (w[idx] - v[idx])
        rng = np.random.default_rng(12345)
        if not self.is_polytope:
            g = rng.standard_normal((count, self.dim))
            return self.center + self.radius * g / np.linalg.norm(g, axis=1, keepdims=True)
        tris = _facet_triangles(self)
        areas = np.array([_simplex_measure(t) for _, t in tris])
        pick = rng.choice(len(tris), size=count, p=areas / areas.sum())
        pts = []
        for k in pick:
            simplex = tris[k][1]
            lam = rng.dirichlet(np.ones(len(simplex)))
            pts.append(lam @ simplex)
        return np.array(pts)

    def to_dict(self) -> dict:
        if self.is_polytope:
            return {"dim": self.dim, "kind": "polytope", "vertices": self.vertices.tolist()}
        return {"dim": self.dim, "kind": "ball", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class MetricBall:
    """The relative ball B_C(x, rho) = B(x, rho) ∩ C."""

    body: ConvexBody
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not self.body.contains(self.center)[0]:
            raise CenterOutsideBody(f"center {self.center} is not in the body")


# ---------------------------------------------------------------- construction


def _merge_halfspaces(equations: np.ndarray, scale: float):
    normals, offsets = [], []
    for eq in equations:
        a, b = eq[:-1], -eq[-1]
        nrm = np.linalg.norm(a)
        a, b = a / nrm, b / nrm
        for j, (a2, b2) in enumerate(zip(normals, offsets)):
            if np.linalg.norm(a - a2) < 1e-9 and abs(b - b2) < 1e-9 * scale:
                break
        else:
            normals.append(a)
            offsets.append(b)
    return np.array(normals), np.array(offsets)


def chebyshev_ball(normals: np.ndarray, offsets: np.ndarray) -> tuple[np.ndarray, float]:
    """Center and radius of a largest ball inside ``{x : normals @ x <= offsets}``.

    Solves max t s.t. <a_i, x> + t <= b_i (normals are unit vectors).
    """
    m, d = normals.shape
    c = np.zeros(d + 1)
    c[-1] = -1.0
    a_ub = np.hstack([normals, np.ones((m, 1))])
    bounds = [(None, None)] * d + [(0, None)]
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=offsets,
        bounds=bounds,
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if not res.success:
        raise DegenerateInput(f"Chebyshev LP failed: {res.message}")
    return res.x[:d], float(res.x[d])


def make_polytope(vertices, name: str = "polytope") -> ConvexBody:
    """Convex hull of the given points, with its dual half-space description."""
    pts = np.asarray(vertices, dtype=float)
    if pts.ndim != 2 or pts.shape[1] < 2:
        raise DegenerateInput("need an (m, d) array of points with d >= 2")
    d = pts.shape[1]
    if len(pts) < d + 1:
        raise DegenerateInput(f"need at least {d + 1} points in dimension {d}")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateInput(f"points are affinely dependent: {exc}") from None
    verts = pts[hull.vertices]
    scale = float(np.max(np.ptp(verts, axis=0)))
    normals, offsets = _merge_halfspaces(hull.equations, scale)
    center, inr = chebyshev_ball(normals, offsets)
    circ = float(np.linalg.norm(verts - center, axis=1).max())
    if inr < DEGENERACY_RATIO * circ:
        raise DegenerateInput(f"inradius {inr:.3g} too small against circumradius {circ:.3g}")
    tol = 1e-9 * max(1.0, scale)
    facets = tuple(np.flatnonzero(np.abs(verts @ a - b) <= tol) for a, b in zip(normals, offsets))
    return ConvexBody(
        dim=d,
        kind="polytope",
        chebyshev_center=center,
        inradius=inr,
        circumradius=circ,
        vertices=verts,
        normals=normals,
        offsets=offsets,
        facets=facets,
        name=name,
    )


def make_ball(center, radius: float, name: str = "ball") -> ConvexBody:
    center = np.asarray(center, dtype=float)
    if radius <= 0:
        raise DegenerateInput("ball radius must be positive")
    return ConvexBody(
        dim=len(center),
        kind="ball",
        chebyshev_center=center.copy(),
        inradius=float(radius),
        circumradius=float(radius),
        center=center,
        radius=float(radius),
        name=name,
    )


def regular_polygon(k: int, radius: float = 1.0, center=(0.0, 0.0), phase: float = 0.0, name=None):
    ang = phase + 2 * np.pi * np.arange(k) / k
    pts = np.asarray(center, dtype=float) + radius * np.column_stack([np.cos(ang), np.sin(ang)])
    return make_polytope(pts, name=name or f"{k}-gon")


# ---------------------------------------------------------------- functions on bodies


def support_function(body: ConvexBody, u) -> np.ndarray | float:
    """max over x in body of <u, x>; vectorised over rows of ``u``."""
    u = np.asarray(u, dtype=float)
    if body.is_polytope:
        val = np.max(u @ body.vertices.T, axis=-1)
    else:
        val = u @ body.center + body.radius * np.linalg.norm(u, axis=-1)
    return float(val) if np.ndim(val) == 0 else val


def radial_function(body: ConvexBody, u) -> np.ndarray | float:
    """max{t >= 0 : t u in body} for unit vectors ``u`` (origin must be interior)."""
    if not body.origin_is_interior():
        raise OriginNotInterior("radial function needs the origin in the interior")
    u = np.asarray(u, dtype=float)
    if body.is_polytope:
        dots = u @ body.normals.T
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(dots > 1e-15, body.offsets / dots, np.inf)
        val = ratios.min(axis=-1)
    else:
        uc = u @ body.center
        val = uc + np.sqrt(uc * uc - body.center @ body.center + body.radius**2)
    return float(val) if np.ndim(val) == 0 else val


def polar_body(body: ConvexBody) -> ConvexBody:
    """Polar body {y : <x, y> <= 1 for all x in body}."""
    if not body.origin_is_interior():
        raise OriginNotInterior("polar body needs the origin in the interior")
    if body.is_polytope:
        return make_polytope(body.normals / body.offsets[:, None], name=f"{body.name}*")
    if np.linalg.norm(body.center) > 1e-12:
        raise UnsupportedBody("polar of an off-center ball is an ellipsoid, not representable")
    return make_ball(np.zeros(body.dim), 1.0 / body.radius, name=f"{body.name}*")


def radial_lipschitz_bound(body: ConvexBody) -> float:
    """R^2 / r, a Lipschitz constant of the radial function on the sphere."""
    if not body.origin_is_interior():
        raise OriginNotInterior("radial function needs the origin in the interior")
    r, big_r = body.origin_radii()
    return big_r * big_r / r


# ---------------------------------------------------------------- volumes


def _facet_triangles(body: ConvexBody):
    """Fan triangulation of each facet: list of (facet index, simplex vertex array)."""
    out = []
    d = body.dim
    for fi, (idx, a) in enumerate(zip(body.facets, body.normals)):
        pts = body.vertices[idx]
        if d == 2:
            out.append((fi, pts))
            continue
        if d != 3:
            raise MethodDimensionMismatch("facet triangulation implemented for d <= 3")
        c = pts.mean(axis=0)
        e1 = pts[0] - c
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(a, e1)
        ang = np.arctan2((pts - c) @ e2, (pts - c) @ e1)
        ring = pts[np.argsort(ang)]
        for j in range(1, len(ring) - 1):
            out.append((fi, np.array([ring[0], ring[j], ring[j + 1]])))
    return out


def _simplex_measure(simplex: np.ndarray) -> float:
    edges = simplex[1:] - simplex[0]
    gram = edges @ edges.T
    k = len(edges)
    return math.sqrt(max(np.linalg.det(gram), 0.0)) / math.factorial(k)


def _mc_hits(body: ConvexBody, lo, hi, samples: int, seed, workers: int) -> int:
    """Hit count of uniform box samples, split over per-worker child seeds."""
    workers = max(1, int(workers))
    children = np.random.SeedSequence(seed).spawn(workers)
    counts = [samples // workers + (1 if i < samples % workers else 0) for i in range(workers)]

    def job(i):
        rng = np.random.default_rng(children[i])
        hits, left = 0, counts[i]
        while left > 0:
            m = min(left, _MC_CHUNK)
            pts = lo + (hi - lo) * rng.random((m, body.dim))
            hits += int(np.count_nonzero(body.contains(pts, tol=0.0)))
            left -= m
        return hits

    if workers == 1:
        return job(0)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(job, range(workers)))


def volume(
    body: ConvexBody,
    method: str = "auto",
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
    workers: int = 1,
) -> tuple[float, float]:
    """Volume of a body and an error estimate.

    ``method`` is one of ``"exact2d"`` (shoelace), ``"triangulate3d"`` (fan
    from the Chebyshev center), ``"montecarlo"`` (box hit fraction with a 3σ
    binomial error bar) or ``"auto"``.
    """
    d = body.dim
    if method == "auto":
        method = {2: "exact2d", 3: "triangulate3d"}.get(d, "montecarlo")
    if method == "exact2d":
        if d != 2:
            raise MethodDimensionMismatch("exact2d needs a planar body")
        if body.is_polytope:
            return abs(planar.shoelace(body.vertices)), 0.0
        return math.pi * body.radius**2, 0.0
    if method == "triangulate3d":
        if d != 3:
            raise MethodDimensionMismatch("triangulate3d needs a body in R^3")
        if not body.is_polytope:
            return 4.0 / 3.0 * math.pi * body.radius**3, 0.0
        c = body.chebyshev_center
        total = 0.0
        for _, tri in _facet_triangles(body):
            total += abs(np.linalg.det(tri - c)) / 6.0
        return total, 0.0
    if method == "montecarlo":
        lo, hi = body.bounding_box()
        box = float(np.prod(hi - lo))
        hits = _mc_hits(body, lo, hi, samples, seed, workers)
        p = hits / samples
        return box * p, 3.0 * box * math.sqrt(p * (1 - p) / samples)
    raise MethodDimensionMismatch(f"unknown volume method {method!r}")


def _unit_ball_samples(d: int, count: int, seed: int = 2024) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.random(count)[:, None] ** (1.0 / d)


def _unit_sphere_samples(d: int, count: int, seed: int = 2025) -> np.ndarray:
    g = np.random.default_rng(seed).standard_normal((count, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def metric_ball_volumes(body: ConvexBody, centers, radii, samples: int = 20_000) -> tuple[np.ndarray, np.ndarray]:
    """Volumes |B(x, rho) ∩ C| and relative perimeters H^n(∂B(x, rho) ∩ C).

    Exact in the plane; in higher dimension a fixed set of ball/sphere samples
    is reused for every call (common random numbers), so results are
    deterministic and vary smoothly with the radius.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (len(centers),))
    if body.dim == 2:
        if body.is_polytope:
            return planar.disk_polygon_intersection(centers, radii, body.vertices)
        return planar.disk_disk_intersection(centers, radii, body.center, body.radius)
    d = body.dim
    ball = _unit_ball_samples(d, samples)
    sphere = _unit_sphere_samples(d, samples)
    vol = np.empty(len(centers))
    per = np.empty(len(centers))
    for i, (x, rho) in enumerate(zip(centers, radii)):
        vol[i] = np.mean(body.contains(x + rho * ball, tol=0.0)) * unit_ball_volume(d) * rho**d
        per[i] = np.mean(body.contains(x + rho * sphere, tol=0.0)) * unit_sphere_area(d) * rho ** (d - 1)
    return vol, per


def metric_ball_volume(ball: MetricBall, method: str = "auto", samples: int = 20_000) -> tuple[float, float]:
    """Volume of B(x, rho) ∩ C with an error estimate (0 when exact)."""
    body = ball.body
    if method == "auto":
        method = "exact2d" if body.dim == 2 else "montecarlo"
    if method == "exact2d":
        if body.dim != 2:
            raise MethodDimensionMismatch("exact2d needs a planar body")
        vol, _ = metric_ball_volumes(body, ball.center, ball.radius)
        return float(vol[0]), 0.0
    if method == "montecarlo":
        d = body.dim
        pts = ball.center + ball.radius * _unit_ball_samples(d, samples)
        p = float(np.mean(body.contains(pts, tol=0.0)))
        full = unit_ball_volume(d) * ball.radius**d
        return full * p, 3.0 * full * math.sqrt(p * (1 - p) / samples)
    raise MethodDimensionMismatch(f"unknown method {method!r}")


# ---------------------------------------------------------------- distances


def point_body_distance(body: ConvexBody, points) -> np.ndarray:
    """Euclidean distance from points to the body (0 for points inside)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if not body.is_polytope:
        return np.maximum(np.linalg.norm(pts - body.center, axis=1) - body.radius, 0.0)
    if body.dim == 2:
        return planar.point_polygon_distance(pts, body.vertices, body.normals, body.offsets)
    out = np.zeros(len(pts))
    inside = body.contains(pts, tol=1e-12)
    for i in np.flatnonzero(~inside):
        p = pts[i]
        cons = {"type": "ineq", "fun": lambda x: body.offsets - body.normals @ x, "jac": lambda x: -body.normals}
        res = minimize(
            lambda x: float((x - p) @ (x - p)),
            body.chebyshev_center,
            jac=lambda x: 2 * (x - p),
            constraints=[cons],
            method="SLSQP",
            options={"ftol": 1e-15, "maxiter": 500},
        )
        out[i] = math.sqrt(max(res.fun, 0.0))
    return out


def _sphere_directions(d: int, count: int) -> np.ndarray:
    if d == 2:
        ang = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(ang), np.sin(ang)])
    # Fibonacci lattice on S^2; random directions beyond that
    if d == 3:
        i = np.arange(count) + 0.5
        z = 1 - 2 * i / count
        phi = np.pi * (1 + 5**0.5) * i
        s = np.sqrt(1 - z * z)
        return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    return _unit_sphere_samples(d, count, seed=7)


def hausdorff_distance(a: ConvexBody, b: ConvexBody, directions: int = 4096) -> float:
    """Hausdorff distance between two convex bodies.

    Polytope pairs use vertex-to-body distances, which is exact. A ball against
    a polytope uses the analytic vertex side plus the support-function gap
    sup_u (h_ball(u) - h_P(u)) over sampled directions, augmented with the
    facet normals and center-minus-vertex directions where that supremum is
    attained in the plane.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions {a.dim} and {b.dim} differ")
    if not a.is_polytope and not b.is_polytope:
        return float(np.linalg.norm(a.center - b.center) + abs(a.radius - b.radius))
    if a.is_polytope and b.is_polytope:
        da = point_body_distance(b, a.vertices).max()
        db = point_body_distance(a, b.vertices).max()
        return float(max(da, db))
    poly, ball = (a, b) if a.is_polytope else (b, a)
    vertex_side = point_body_distance(ball, poly.vertices).max()
    dirs = [_sphere_directions(poly.dim, directions), poly.normals]
    toward = ball.center - poly.vertices
    norms = np.linalg.norm(toward, axis=1)
    dirs.append(toward[norms > 1e-15] / norms[norms > 1e-15, None])
    u = np.vstack(dirs)
    gap = np.max(support_function(ball, u) - support_function(poly, u))
    return float(max(vertex_side, gap, 0.0))

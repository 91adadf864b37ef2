"""Radial bilipschitz maps between convex bodies sharing an interior ball.

After both bodies are translated to put their Chebyshev centers at the
origin, the map fixes ``B(0, r)`` and, beyond it, stretches each ray
linearly so that the source boundary point ``rho_s(u) u`` lands on
``rho_t(u) u``::

    f(x) = x + (1 - k(u)) (r - |x|) u,   k(u) = (rho_t(u) - r) / (rho_s(u) - r)

for ``x = |x| u`` with ``|x| > r``. The inverse swaps the two radial
functions.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .convex import ConvexBody, radial_function
from .errors import InvalidRadii, NoCommonCore, PointOutsideSource

PROJECTION_TOL = 1e-9


def analytic_lip_bound(r: float, R: float) -> float:
    """Closed-form ceiling 1 + q (q - 1) (q^2 + 1), q = R / r, on both dilatations."""
    if r <= 0 or r >= R:
        raise InvalidRadii(f"need 0 < r < R, got r={r}, R={R}")
    q = R / r
    return 1.0 + q * (q - 1.0) * (q * q + 1.0)


def radial_gradient(body: ConvexBody, u: np.ndarray) -> np.ndarray:
    """Tangential gradient of the radial function at unit vectors ``u`` (rows).

    Exact for polytopes away from directions hitting lower-dimensional faces,
    where the active facet is taken as the arg-min.
    """
    u = np.atleast_2d(u)
    if body.is_polytope:
        dots = u @ body.normals.T
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(dots > 1e-15, body.offsets / dots, np.inf)
        j = np.argmin(ratios, axis=1)
        a = body.normals[j]
        b = body.offsets[j]
        au = dots[np.arange(len(u)), j]
        tangential = a - au[:, None] * u
        return -(b / au**2)[:, None] * tangential
    c = body.center
    uc = u @ c
    root = np.sqrt(uc * uc - c @ c + body.radius**2)
    tangential = c[None, :] - uc[:, None] * u
    return (1.0 + uc / root)[:, None] * tangential


@dataclass(frozen=True, eq=False)
class TransportMap:
    source: ConvexBody  # centered copy
    target: ConvexBody  # centered copy
    r_core: float
    source_shift: np.ndarray  # Chebyshev center of the original source
    target_shift: np.ndarray
    direction_cache: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.source.dim

    @property
    def outer_radius(self) -> float:
        """Smallest R with both centered bodies inside B(0, R)."""
        return max(self.source.origin_radii()[1], self.target.origin_radii()[1])

    def analytic_bound(self) -> float:
        return analytic_lip_bound(self.r_core, self.outer_radius)

    def apply(self, x) -> np.ndarray:
        """Image of source points (original coordinates) in target coordinates."""
        return self._push(x, self.source, self.target, self.source_shift, self.target_shift)

    def apply_inverse(self, y) -> np.ndarray:
        return self._push(y, self.target, self.source, self.target_shift, self.source_shift)

    def _push(self, x, src, dst, src_shift, dst_shift) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        z = np.atleast_2d(x) - src_shift
        z = _clamp_to_body(src, z)
        out = _radial_stretch(z, src, dst, self.r_core)
        out = out + dst_shift
        return out[0] if single else out

    def jacobian_norms(self, x, inverse: bool = False) -> np.ndarray:
        """Operator norm of the derivative at each point (local dilatation)."""
        src, dst = (self.target, self.source) if inverse else (self.source, self.target)
        shift = self.target_shift if inverse else self.source_shift
        z = np.atleast_2d(np.asarray(x, dtype=float)) - shift
        return _jacobian_norms(z, src, dst, self.r_core)


def _clamp_to_body(body: ConvexBody, z: np.ndarray) -> np.ndarray:
    """Reject points clearly outside; pull points within tolerance onto the boundary."""
    scale = max(1.0, body.circumradius)
    s = np.linalg.norm(z, axis=1)
    outside = ~body.contains(z, tol=0.0)
    if not np.any(outside):
        return z
    bad = outside & ~body.contains(z, tol=PROJECTION_TOL * scale)
    if np.any(bad):
        raise PointOutsideSource(f"point {z[np.flatnonzero(bad)[0]]} is outside the body")
    z = z.copy()
    idx = np.flatnonzero(outside)
    u = z[idx] / s[idx, None]
    rho = np.atleast_1d(radial_function(body, u))
    z[idx] = rho[:, None] * u
    return z


def _radial_stretch(z: np.ndarray, src: ConvexBody, dst: ConvexBody, r: float) -> np.ndarray:
    s = np.linalg.norm(z, axis=1)
    out = z.copy()
    far = s > r
    if not np.any(far):
        return out
    u = z[far] / s[far, None]
    rho_s = np.atleast_1d(radial_function(src, u))
    rho_t = np.atleast_1d(radial_function(dst, u))
    k = (rho_t - r) / (rho_s - r)
    out[far] = z[far] + ((1.0 - k) * (r - s[far]))[:, None] * u
    return out


def _jacobian_norms(z: np.ndarray, src: ConvexBody, dst: ConvexBody, r: float) -> np.ndarray:
    s = np.linalg.norm(z, axis=1)
    norms = np.ones(len(z))
    far = s > r
    if not np.any(far):
        return norms
    d = z.shape[1]
    zs, ss = z[far], s[far]
    u = zs / ss[:, None]
    rho_s = np.atleast_1d(radial_function(src, u))
    rho_t = np.atleast_1d(radial_function(dst, u))
    gs = radial_gradient(src, u)
    gt = radial_gradient(dst, u)
    den = rho_s - r
    k = (rho_t - r) / den
    grad_k = (gt * den[:, None] - (rho_t - r)[:, None] * gs) / (den * den)[:, None]
    g_over_s = (r + k * (ss - r)) / ss
    uu = u[:, :, None] * u[:, None, :]
    jac = (
        k[:, None, None] * uu
        + ((ss - r) / ss)[:, None, None] * (u[:, :, None] * grad_k[:, None, :])
        + g_over_s[:, None, None] * (np.eye(d)[None] - uu)
    )
    norms[far] = np.linalg.norm(jac, ord=2, axis=(1, 2))
    return norms


def build_map(source: ConvexBody, target: ConvexBody, cache_directions: int = 0) -> TransportMap:
    """Radial map from ``source`` onto ``target`` after Chebyshev centering."""
    if source.dim != target.dim:
        raise NoCommonCore("bodies live in different dimensions")
    cs, ct = source.centered(), target.centered()
    r_in = min(cs.origin_radii()[0], ct.origin_radii()[0])
    if r_in <= 1e-9:
        raise NoCommonCore(f"common inradius {r_in:.3g} after centering is too small")
    r_core = 0.5 * min(source.inradius, target.inradius)
    if 2 * r_core > r_in * (1 + 1e-12):
        raise NoCommonCore("B(0, 2 r_core) is not contained in both bodies")
    cache = None
    if cache_directions:
        ang = 2 * np.pi * np.arange(cache_directions) / cache_directions
        if source.dim == 2:
            u = np.column_stack([np.cos(ang), np.sin(ang)])
            cache = np.column_stack([u, radial_function(cs, u), radial_function(ct, u)])
    return TransportMap(
        source=cs,
        target=ct,
        r_core=float(r_core),
        source_shift=source.chebyshev_center.copy(),
        target_shift=target.chebyshev_center.copy(),
        direction_cache=cache,
    )


def sample_in_body(body: ConvexBody, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points in ``body`` by rejection from its bounding box."""
    lo, hi = body.bounding_box()
    out = []
    have = 0
    while have < count:
        pts = lo + (hi - lo) * rng.random((max(2 * (count - have), 64), body.dim))
        pts = pts[body.contains(pts, tol=0.0)]
        out.append(pts)
        have += len(pts)
    return np.vstack(out)[:count]


def _direction(rng, m, d):
    g = rng.standard_normal((m, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _lip_batch(tmap: TransportMap, count: int, seed, inverse: bool) -> float:
    rng = np.random.default_rng(seed)
    body = tmap.target if inverse else tmap.source
    shift = tmap.target_shift if inverse else tmap.source_shift
    push = tmap.apply_inverse if inverse else tmap.apply
    scale = body.circumradius
    half = count // 2
    # uniform pairs
    x = sample_in_body(body, half, rng) + shift
    y = sample_in_body(body, half, rng) + shift
    best = 1.0 if half == 0 else 0.0
    den = np.linalg.norm(x - y, axis=1)
    ok = den > 0
    if np.any(ok):
        best = float(np.max(np.linalg.norm(push(x[ok]) - push(y[ok]), axis=1) / den[ok]))
    # near-coincident pairs, offsets scaled by the body size
    m = count - half
    x = sample_in_body(body, m, rng)
    t = scale * 10.0 ** rng.uniform(-6, -3, m)
    y = x + t[:, None] * _direction(rng, m, body.dim)
    inside = body.contains(y, tol=0.0)
    x, y = x[inside] + shift, y[inside] + shift
    if len(x):
        q = np.linalg.norm(push(x) - push(y), axis=1) / np.linalg.norm(x - y, axis=1)
        best = max(best, float(q.max()))
        best = max(best, float(tmap.jacobian_norms(x, inverse=inverse).max()))
    return best


def empirical_lip(tmap: TransportMap, n_pairs: int = 10_000, seed: int = 0, workers: int = 1) -> tuple[float, float]:
    """Sampled dilatations (forward, inverse) of a transport map.

    Half of the pairs are uniform in the body, half are near-coincident with
    separation in ``[1e-6, 1e-3]`` times the circumradius; the near pairs also
    contribute the exact operator norm of the derivative at their first point.
    Deterministic for a fixed ``(seed, workers)``.
    """
    workers = max(1, int(workers))
    children = np.random.SeedSequence(seed).spawn(2 * workers)
    sizes = [n_pairs // workers + (1 if i < n_pairs % workers else 0) for i in range(workers)]
    jobs = [(sizes[i], children[i], False) for i in range(workers)]
    jobs += [(sizes[i], children[workers + i], True) for i in range(workers)]
    if workers == 1:
        vals = [_lip_batch(tmap, *job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(lambda job: _lip_batch(tmap, *job), jobs))
    return max(vals[:workers]), max(vals[workers:])


def lipschitz_distance_upper(
    source: ConvexBody, target: ConvexBody, n_pairs: int = 10_000, seed: int = 0, workers: int = 1
) -> float:
    """log max(Lip f, Lip f^-1) for the constructed map, an upper bound on d_L."""
    tmap = build_map(source, target)
    fwd, inv = empirical_lip(tmap, n_pairs, seed, workers)
    return float(math.log(max(fwd, inv, 1.0)))


def map_diagnostics(source: ConvexBody, target: ConvexBody, n_pairs: int = 10_000, seed: int = 0, workers: int = 1) -> dict:
    tmap = build_map(source, target)
    fwd, inv = empirical_lip(tmap, n_pairs, seed, workers)
    big_r = tmap.outer_radius
    bound = analytic_lip_bound(tmap.r_core, big_r) if big_r > tmap.r_core else 1.0
    return {
        "r_core": tmap.r_core,
        "R": big_r,
        "analytic_bound": bound,
        "lip_forward": fwd,
        "lip_inverse": inv,
        "dL_upper": float(math.log(max(fwd, inv, 1.0))),
    }


@dataclass
class Pushforward:
    polygon: np.ndarray
    volume: float
    perimeter: float
    source_volume: float
    source_perimeter: float
    volume_bounds: tuple[float, float]
    perimeter_bounds: tuple[float, float]

    @property
    def within_bounds(self) -> bool:
        tol = 1e-9
        lo, hi = self.volume_bounds
        plo, phi = self.perimeter_bounds
        return lo - tol <= self.volume <= hi + tol and plo - tol <= self.perimeter <= phi + tol


def _densify(poly: np.ndarray, step: float) -> np.ndarray:
    out = []
    for p, q in zip(poly, np.roll(poly, -1, axis=0)):
        m = max(1, int(math.ceil(np.linalg.norm(q - p) / step)))
        t = np.arange(m)[:, None] / m
        out.append(p + t * (q - p))
    return np.vstack(out)


def pushforward_region(tmap: TransportMap, region, lip=None, step: float | None = None) -> Pushforward:
    """Image of a planar region under the map, with bilipschitz sandwich bounds.

    ``region`` is a counter-clockwise vertex array or an object exposing
    ``to_polygon()`` (a :class:`~isoprofile.grid.GridRegion`). Edges are
    densified before mapping so the image polygon follows the curved image.
    ``lip`` defaults to the empirical dilatations of the map.
    """
    from shapely.geometry import Polygon

    if tmap.dim != 2:
        raise PointOutsideSource("pushforward is implemented for planar regions")
    poly = np.asarray(region.to_polygon() if hasattr(region, "to_polygon") else region, dtype=float)
    step = step or tmap.source.circumradius / 256
    dense = _densify(poly, step)
    image = tmap.apply(dense)
    src = Polygon(poly)
    img = Polygon(image)
    fwd, inv = lip if lip is not None else empirical_lip(tmap, 4000, seed=0)
    n = tmap.dim - 1
    vol_bounds = (src.area * inv ** -(n + 1), src.area * fwd ** (n + 1))
    per_bounds = (src.length * inv**-n, src.length * fwd**n)
    return Pushforward(
        polygon=image,
        volume=float(img.area),
        perimeter=float(img.length),
        source_volume=float(src.area),
        source_perimeter=float(src.length),
        volume_bounds=vol_bounds,
        perimeter_bounds=per_bounds,
    )

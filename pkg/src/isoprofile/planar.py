"""Exact planar primitives: disk/polygon clipping, half-plane cuts, chords.

All polygons are given as counter-clockwise vertex arrays of shape (k, 2).
"""

from __future__ import annotations

import numpy as np


def cross2(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return p[..., 0] * q[..., 1] - p[..., 1] * q[..., 0]


def shoelace(verts: np.ndarray) -> float:
    if len(verts) < 3:
        return 0.0
    return 0.5 * float(np.sum(cross2(verts, np.roll(verts, -1, axis=0))))


def disk_polygon_intersection(centers, radii, verts):
    """Area of ``B(c, r) ∩ P`` and length of ``∂B(c, r) ∩ P`` for many disks.

    Uses the signed decomposition of the intersection into pieces of the
    triangles (c, v_i, v_{i+1}); each edge splits into at most two circular
    sectors and one straight triangle. The sector angles add up to the part of
    the circle inside the polygon, which gives the arc length for free.

    Parameters
    ----------
    centers : (m, 2) array
    radii : (m,) array
    verts : (k, 2) counter-clockwise polygon

    Returns
    -------
    area, arc : (m,) arrays
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (len(centers),))
    verts = np.asarray(verts, dtype=float)

    a = verts[None, :, :] - centers[:, None, :]
    b = np.roll(verts, -1, axis=0)[None, :, :] - centers[:, None, :]
    d = b - a
    r = radii[:, None]
    r2 = r * r

    dd = np.sum(d * d, axis=-1)
    ad = np.sum(a * d, axis=-1)
    disc = ad * ad - dd * (np.sum(a * a, axis=-1) - r2)
    hit = disc > 0.0
    sq = np.sqrt(np.where(hit, disc, 0.0))
    t1 = np.where(hit, (-ad - sq) / dd, 1.0)
    t2 = np.where(hit, (-ad + sq) / dd, 1.0)
    s1 = np.clip(t1, 0.0, 1.0)[..., None]
    s2 = np.clip(t2, 0.0, 1.0)[..., None]
    p1 = a + s1 * d
    p2 = a + s2 * d

    ang1 = np.arctan2(cross2(a, p1), np.sum(a * p1, axis=-1))
    ang2 = np.arctan2(cross2(p2, b), np.sum(p2 * b, axis=-1))
    sector_angle = np.sum(ang1 + ang2, axis=-1)
    tri = 0.5 * np.sum(cross2(p1, p2), axis=-1)

    area = 0.5 * radii * radii * sector_angle + tri
    arc = np.maximum(radii * sector_angle, 0.0)
    area = np.maximum(area, 0.0)
    return area, arc


def disk_disk_intersection(centers, radii, c0, r0: float):
    """Area of ``B(c, r) ∩ B(c0, r0)`` and length of ``∂B(c, r) ∩ B(c0, r0)``."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    r = np.broadcast_to(np.asarray(radii, dtype=float), (len(centers),)).copy()
    dist = np.linalg.norm(centers - np.asarray(c0, dtype=float), axis=1)

    area = np.empty_like(r)
    arc = np.empty_like(r)

    inside = dist + r <= r0
    covers = r >= dist + r0
    apart = dist >= r + r0
    mid = ~(inside | covers | apart)

    area[inside] = np.pi * r[inside] ** 2
    arc[inside] = 2.0 * np.pi * r[inside]
    area[covers] = np.pi * r0 * r0
    arc[covers] = 0.0
    area[apart] = 0.0
    arc[apart] = 0.0

    if np.any(mid):
        dm, rm = dist[mid], r[mid]
        # half-angle subtended on each circle by the common chord
        alpha = np.arccos(np.clip((dm * dm + rm * rm - r0 * r0) / (2 * dm * rm), -1, 1))
        beta = np.arccos(np.clip((dm * dm + r0 * r0 - rm * rm) / (2 * dm * r0), -1, 1))
        area[mid] = (
            rm * rm * (alpha - 0.5 * np.sin(2 * alpha))
            + r0 * r0 * (beta - 0.5 * np.sin(2 * beta))
        )
        arc[mid] = 2.0 * alpha * rm
    return area, arc


def clip_halfplane(verts: np.ndarray, w: np.ndarray, t: float) -> np.ndarray:
    """Clip a convex polygon to ``{x : <w, x> <= t}`` (Sutherland-Hodgman, vectorised)."""
    q = np.roll(verts, -1, axis=0)
    fp = verts @ w - t
    fq = np.roll(fp, -1)
    cross = ((fp < 0) & (fq > 0)) | ((fq < 0) & (fp > 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(cross, fp / (fp - fq), 0.0)
    hit = verts + s[:, None] * (q - verts)
    pts = np.stack([verts, hit], axis=1).reshape(-1, 2)
    keep = np.stack([fp <= 0, cross], axis=1).ravel()
    return pts[keep]


def halfplane_polygon_area(verts: np.ndarray, w: np.ndarray, t: float) -> float:
    return shoelace(clip_halfplane(verts, w, t))


def chord_length_polygon(normals, offsets, w, t: float) -> float:
    """Length of ``{<w, x> = t} ∩ P`` for ``P = {x : normals @ x <= offsets}``."""
    w = np.asarray(w, dtype=float)
    perp = np.array([-w[1], w[0]])
    coef = normals @ perp
    rhs = offsets - t * (normals @ w)
    lo, hi = -np.inf, np.inf
    pos = coef > 1e-15
    neg = coef < -1e-15
    if np.any(pos):
        hi = np.min(rhs[pos] / coef[pos])
    if np.any(neg):
        lo = np.max(rhs[neg] / coef[neg])
    flat = ~(pos | neg)
    if np.any(rhs[flat] < 0):
        return 0.0
    return float(max(hi - lo, 0.0))


def circular_segment_area(radius: float, depth: float) -> float:
    """Area of the cap of a disk cut at signed distance ``radius - depth`` from its center."""
    depth = min(max(depth, 0.0), 2 * radius)
    h = radius - depth
    return radius * radius * np.arccos(h / radius) - h * np.sqrt(max(radius * radius - h * h, 0.0))


def point_segment_distance(points, p, q) -> np.ndarray:
    d = q - p
    t = np.clip(((points - p) @ d) / (d @ d), 0.0, 1.0)
    proj = p + t[:, None] * d
    return np.linalg.norm(points - proj, axis=1)


def point_polygon_distance(points, verts, normals, offsets) -> np.ndarray:
    """Euclidean distance from each point to a convex polygon (0 inside)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    inside = np.all(points @ normals.T <= offsets + 1e-12, axis=1)
    k = len(verts)
    dist = np.full(len(points), np.inf)
    for i in range(k):
        dist = np.minimum(dist, point_segment_distance(points, verts[i], verts[(i + 1) % k]))
    dist[inside] = 0.0
    return dist

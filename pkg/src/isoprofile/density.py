"""Density of regions in relative balls and the clearing-out dichotomy.

For a region E in a body C the density function is

    h(x, R) = min{|E ∩ B_C(x, R)|, |B_C(x, R) \\ E|} / |B_C(x, R)|.

For isoperimetric regions there is a threshold eps > 0 such that
``h(x, R) <= eps`` forces ``h(x, R/2) = 0``. On a grid, volumes are cell
counts and "zero" means at most a tolerance of cells.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .convex import ConvexBody, metric_ball_volumes, unit_ball_volume
from .errors import CenterOutsideBody, InvalidVolume
from .grid import GridRegion, connectedness
from .profile import ball_profile_constant
from .transport import analytic_lip_bound, sample_in_body

MIN_RADIUS_CELLS = 4


def _ball_counts(region: GridRegion, x: np.ndarray, radius: float) -> tuple[int, int]:
    """(occupied, unoccupied) in-body cells with centers in the closed ball."""
    centers = region.grid.centers()
    inside = np.sum((centers - x) ** 2, axis=1) <= radius * radius
    occ = int(np.count_nonzero(region.state[inside]))
    return occ, int(np.count_nonzero(inside)) - occ


def h_value(region: GridRegion, body: ConvexBody, x, radius: float) -> float:
    """Discrete density: minority cell count over in-ball cell count, in [0, 1/2]."""
    x = np.asarray(x, dtype=float)
    if not body.contains(x)[0]:
        raise CenterOutsideBody(f"probe {x} is outside the body")
    occ, free = _ball_counts(region, x, radius)
    total = occ + free
    if total == 0:
        return 0.0
    return min(min(occ, free) / total, 0.5)


def c2_constant(n: int, tol: float = 1e-15) -> float:
    """Root s* in (0, 1) of s^{-n/(n+1)} ((1 - s)^{n/(n+1)} - 1) = -1/2, by bisection."""
    e = n / (n + 1)

    def f(s):
        return s**-e * ((1 - s) ** e - 1) + 0.5

    lo, hi = 1e-300, 1.0
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def f1(n: int, s: float) -> float:
    e = n / (n + 1)
    return s**-e * ((1 - s) ** e - 1)


def epsilon_terms(n: int, v: float, total_volume: float, i_v: float, ell2: float) -> list[float]:
    if not 0 < v < total_volume:
        raise InvalidVolume(f"volume {v} must lie in (0, {total_volume})")
    if i_v <= 0:
        raise InvalidVolume("profile value must be positive")
    c2 = c2_constant(n)
    w = total_volume - v
    head = ell2 * 8 ** (n + 1)
    return [
        v / ell2,
        w / ell2,
        c2 * v,
        c2 * w,
        i_v ** (n + 1) / (head * v**n),
        i_v ** (n + 1) / (head * w**n),
    ]


def epsilon_threshold(n: int, v: float, total_volume: float, i_v: float, ell2: float) -> float:
    """0.99 times the six-term minimum (the threshold must be strictly below it)."""
    return 0.99 * min(epsilon_terms(n, v, total_volume, i_v, ell2))


@dataclass
class DensityReport:
    body_id: str
    region_id: str
    epsilon: float
    probes: list = field(default_factory=list)
    lower_density: list = field(default_factory=list)

    def counts(self) -> dict:
        out = {"Vacuous": 0, "Pass": 0, "Fail": 0}
        for p in self.probes:
            out[p["verdict"]] += 1
        return out

    @property
    def fails(self) -> int:
        return self.counts()["Fail"]

    @property
    def lower_density_fails(self) -> int:
        return sum(1 for p in self.lower_density if p["verdict"] == "Fail")

    def to_dict(self) -> dict:
        return {
            "body_id": self.body_id,
            "region_id": self.region_id,
            "epsilon": self.epsilon,
            "verdicts": self.counts(),
            "probes": self.probes,
            "lower_density": self.lower_density,
        }


def _probe_points(region: GridRegion, body: ConvexBody, count: int, rng: np.random.Generator) -> np.ndarray:
    """Half uniform in the body, half jittered around the region's interface cells."""
    grid = region.grid
    uniform = sample_in_body(body, count - count // 2, rng)
    mixed = region.free_boundary_cells(exclude_body_boundary=False)
    if len(mixed) == 0:
        return sample_in_body(body, count, rng)
    picks = mixed[rng.integers(len(mixed), size=count // 2)]
    near = grid.centers(grid.inside_flat[picks]) + grid.h * (rng.random((count // 2, grid.dim)) - 0.5)
    ok = body.contains(near, tol=0.0)
    near[~ok] = grid.centers(grid.inside_flat[picks[~ok]])
    return np.vstack([uniform, near])


def probe_radius_range(region: GridRegion, body: ConvexBody) -> tuple[float, float]:
    return MIN_RADIUS_CELLS * region.grid.h, min(1.0, body.circumradius)


def _layer_cells(region: GridRegion, x: np.ndarray, radius: float) -> int:
    """In-body cells whose cube straddles the sphere of the given radius."""
    grid = region.grid
    d = np.linalg.norm(grid.centers() - x, axis=1)
    half_diag = 0.5 * grid.h * math.sqrt(grid.dim)
    return int(np.count_nonzero(np.abs(d - radius) <= half_diag))


def _classify(region, x, radius, eps, grid_tol):
    occ, free = _ball_counts(region, x, radius)
    h_r = min(occ, free) / max(occ + free, 1)
    occ2, free2 = _ball_counts(region, x, radius / 2)
    n_half = occ2 + free2
    h_half = min(occ2, free2) / max(n_half, 1)
    if grid_tol is None or grid_tol == "cell":
        tol = 1.0 / max(n_half, 1)
    elif grid_tol == "layer":
        tol = _layer_cells(region, x, radius / 2) / max(n_half, 1)
    else:
        tol = float(grid_tol)
    if h_r > eps:
        verdict = "Vacuous"
    elif h_half <= tol * (1 + 1e-12):
        verdict = "Pass"
    else:
        verdict = "Fail"
    return {
        "x": [float(c) for c in x],
        "R": float(radius),
        "h_R": float(h_r),
        "h_halfR": float(h_half),
        "tol": float(tol),
        "verdict": verdict,
    }


def dichotomy_check(
    region: GridRegion,
    body: ConvexBody,
    eps: float,
    probe_count: int = 512,
    seed: int = 0,
    grid_tol: float | str | None = None,
    probes=None,
    workers: int = 1,
    body_id: str = "body",
    region_id: str = "region",
) -> DensityReport:
    """Probe the dichotomy ``h(x, R) <= eps  =>  h(x, R/2) = 0``.

    Radii are uniform in ``(4h, min(1, circumradius)]``. The zero tolerance
    for ``h(x, R/2)`` is ``"cell"`` (default: one cell over the cells of
    ``B_C(x, R/2)``), ``"layer"`` (the cells straddling the sphere of radius
    R/2 over the same count) or a number.
    Explicit ``probes`` (pairs ``(x, R)``) replace the random ones.
    """
    rng = np.random.default_rng(seed)
    if probes is None:
        pts = _probe_points(region, body, probe_count, rng)
        r_lo, r_hi = probe_radius_range(region, body)
        radii = r_lo + (r_hi - r_lo) * (1.0 - rng.random(len(pts)))
        probes = list(zip(pts, radii))

    def job(p):
        return _classify(region, np.asarray(p[0], dtype=float), float(p[1]), eps, grid_tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(job, probes))
    else:
        rows = [job(p) for p in probes]
    return DensityReport(body_id, region_id, float(eps), rows)


def lower_ahlfors_constant(body: ConvexBody, r0: float | None = None, points: int = 256) -> tuple[float, float]:
    """(ell_1, r0): min of |B_C(x, r0)| / r0^{n+1} over boundary samples and vertices."""
    r0 = r0 if r0 is not None else min(1.0, body.inradius)
    pts = [body.boundary_points(points)]
    if body.is_polytope:
        pts.append(body.vertices)
    x = np.vstack(pts)
    vol, _ = metric_ball_volumes(body, x, np.full(len(x), r0))
    return float(vol.min() / r0**body.dim), r0


def density_constant(body: ConvexBody, eps: float, ell1: float | None = None) -> float:
    """M in P(E, B_C(x, r)) >= M r^n, following the relative-inequality chain.

    ``ell1 = omega (delta / r0)^{n+1}`` fixes the inner radius delta of the
    relative balls; the radial map between B(y, delta) ⊂ B_C(x, r0) ⊂ B(y, 2 r0)
    has dilatations bounded by the closed form with R/r = 4 r0 / delta.
    """
    n = body.dim - 1
    if ell1 is None:
        ell1, _ = lower_ahlfors_constant(body)
    omega = unit_ball_volume(n + 1)
    ratio = (ell1 / omega) ** (-1.0 / (n + 1))  # r0 / delta
    lip = analytic_lip_bound(1.0, 4.0 * ratio)
    m_rel = ball_profile_constant(n) * lip ** (-2 * n)
    return m_rel * (ell1 * eps) ** (n / (n + 1))


def perimeter_in_ball(region: GridRegion, x: np.ndarray, radius: float) -> float:
    """Weight of cut edges whose midpoint lies in B(x, radius)."""
    grid = region.grid
    centers = grid.centers()
    occ = np.flatnonzero(region.state)
    j = grid.adj[occ]
    valid = j >= 0
    cut = valid & (region.state[np.where(valid, j, 0)] == 0)
    rows, cols = np.nonzero(cut)
    mid = 0.5 * (centers[occ[rows]] + centers[j[rows, cols]])
    inside = np.sum((mid - x) ** 2, axis=1) <= radius * radius
    return float(grid.adj_w[occ[rows], cols][inside].sum() * grid.h**grid.n)


def lower_density_check(
    region: GridRegion,
    body: ConvexBody,
    eps: float,
    probe_count: int = 64,
    seed: int = 0,
    report: DensityReport | None = None,
) -> list:
    """Perimeter of the region inside B_C(x, r) against M r^n at interface points."""
    rng = np.random.default_rng(seed)
    grid = region.grid
    n = grid.n
    big_m = density_constant(body, eps)
    mixed = region.free_boundary_cells(exclude_body_boundary=False)
    rows = []
    if len(mixed):
        r_lo, r_hi = probe_radius_range(region, body)
        picks = mixed[rng.integers(len(mixed), size=probe_count)]
        xs = grid.centers(grid.inside_flat[picks])
        radii = r_lo + (r_hi - r_lo) * (1.0 - rng.random(probe_count))
        for x, r in zip(xs, radii):
            per = perimeter_in_ball(region, x, r)
            bound = big_m * r**n
            rows.append(
                {
                    "x": [float(c) for c in x],
                    "r": float(r),
                    "perimeter_in_ball": float(per),
                    "bound": float(bound),
                    "verdict": "Pass" if per >= bound else "Fail",
                }
            )
    if report is not None:
        report.lower_density = rows
    return rows


def connectedness_check(region: GridRegion) -> tuple[bool, bool]:
    """Face-connectivity of the region and of its in-body complement."""
    return connectedness(region)


def speckled_half(grid, body: ConvexBody, spacing: int = 28) -> tuple[GridRegion, list]:
    """Negative control: lower half of the body plus isolated 2x2 specks above it.

    Returns the region and one probe ``(x, R)`` per speck, with ``R`` small
    enough that the ball stays in the upper half but large enough to contain
    the whole speck.
    """
    centers = grid.centers()
    lo, hi = body.bounding_box()
    mid = 0.5 * (lo[1] + hi[1])
    state = (centers[:, 1] < mid).astype(np.uint8)
    idx = np.array(np.unravel_index(grid.inside_flat, grid.shape)).T
    specks = []
    mid_row = int(math.floor((mid - grid.origin[1]) / grid.h))
    for ix in range(spacing // 2, grid.shape[0] - 1, spacing):
        for iy in range(mid_row + spacing // 2, grid.shape[1] - 1, spacing):
            block = (idx[:, 0] >= ix) & (idx[:, 0] <= ix + 1) & (idx[:, 1] >= iy) & (idx[:, 1] <= iy + 1)
            if np.count_nonzero(block) == 4:
                state[block] = 1
                specks.append(centers[block].mean(axis=0))
    region = GridRegion(grid, state)
    probes = []
    for c in specks:
        room = min(c[1] - mid, hi[1] - c[1], c[0] - lo[0], hi[0] - c[0])
        radius = min(0.45 * spacing * grid.h, room)
        if radius > MIN_RADIUS_CELLS * grid.h and body.contains(c)[0]:
            probes.append((c, radius))
    return region, probes


def checkerboard(grid) -> GridRegion:
    idx = np.array(np.unravel_index(grid.inside_flat, grid.shape)).T
    return GridRegion(grid, (idx.sum(axis=1) % 2).astype(np.uint8))

"""Convergence experiments along sequences of convex bodies.

Every experiment returns an :class:`ExperimentResult` holding a per-element
table (list of dicts, in sequence order) and named pass/fail checks. Trend
checks look at the last three elements only.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from .cones import geodesic_ball_in_cone, min_solid_angle_vertex, semicontinuity_probe
from .convex import ConvexBody, make_ball, regular_polygon, volume
from .grid import Grid, GridRegion, grid_on_frame, make_grid
from .oracle import AnnealSchedule, grid_oracle
from .profile import upper_bound
from .transport import build_map, empirical_lip

TAIL = 3


@dataclass
class ExperimentResult:
    name: str
    table: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def check(self, key: str, passed: bool, **details) -> None:
        self.checks[key] = dict(details, passed=bool(passed))

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "checks": self.checks, "info": self.info, "table": self.table}


def _map(fn, items, workers: int):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def nonincreasing(values, slack: float = 0.0, tail: int = TAIL) -> bool:
    seq = list(values)[-tail:]
    return all(b <= a + slack for a, b in zip(seq, seq[1:]))


def inscribed_polygon_sequence(disk_radius: float, k_list, center=(0.0, 0.0)) -> list[ConvexBody]:
    """Regular k-gons inscribed in the disk, with a vertex on the positive x-axis."""
    if any(int(k) < 3 for k in k_list):
        raise ValueError("polygons need at least 3 vertices")
    return [regular_polygon(int(k), disk_radius, center) for k in k_list]


def _labels(sequence) -> list:
    return [len(b.vertices) if b.is_polytope else i for i, b in enumerate(sequence)]


# ---------------------------------------------------------------- profiles


def profile_convergence_experiment(
    sequence,
    limit_body: ConvexBody,
    lambda_grid,
    tol: float = 0.05,
    spot_lambda: float | None = 0.5,
    resolution: int = 64,
    seed: int = 0,
    workers: int = 1,
    schedule: AnnealSchedule = AnnealSchedule(),
) -> ExperimentResult:
    """sup over lambda of |J_{C_k}(lambda) - J_C(lambda)| from the candidate curves.

    ``spot_lambda`` adds a grid-oracle value of J at the final element and
    checks it against the limit's candidate value within ``tol`` relative.
    """
    lam = np.asarray(lambda_grid, dtype=float)
    if np.any(lam < 0.1 - 1e-12) or np.any(lam > 0.9 + 1e-12):
        raise ValueError("lambda grid must lie in [0.1, 0.9]")
    total_c = volume(limit_body)[0]
    j_lim = upper_bound(limit_body, lam * total_c)[0]

    def job(body):
        total = volume(body)[0]
        return upper_bound(body, lam * total)[0]

    curves = _map(job, sequence, workers)
    res = ExperimentResult("profile_convergence")
    sups = []
    for k, curve in zip(_labels(sequence), curves):
        dev = np.abs(curve - j_lim)
        sups.append(float(dev.max()))
        res.table.append({"k": k, "sup_deviation": sups[-1], "argmax_lambda": float(lam[int(np.argmax(dev))])})
    res.check("nonincreasing", nonincreasing(sups), values=sups[-TAIL:])
    res.check("final_within_tol", sups[-1] <= tol, value=sups[-1], tol=tol)
    if spot_lambda is not None:
        last = sequence[-1]
        v = spot_lambda * volume(last)[0]
        ref = upper_bound(limit_body, spot_lambda * total_c)[0]
        orc = grid_oracle(last, v, resolution, seed=seed, schedule=schedule, workers=workers)
        rel = abs(orc.perimeter - ref) / ref
        res.info["spot"] = {
            "lambda": spot_lambda,
            "oracle": orc.perimeter,
            "uncertainty": orc.uncertainty,
            "upper": upper_bound(last, v)[0],
            "limit": ref,
        }
        res.check("spot_oracle", rel <= tol, value=orc.perimeter, reference=ref, rel_error=rel, tol=tol)
    return res


# ---------------------------------------------------------------- dilatations


def dilatation_convergence_experiment(
    sequence,
    limit_body: ConvexBody,
    n_pairs: int = 10_000,
    seed: int = 0,
    tol: float = 1e-2,
    workers: int = 1,
) -> ExperimentResult:
    """Empirical (Lip f_k, Lip f_k^{-1}) of the radial maps C_k -> C."""

    def job(body):
        return empirical_lip(build_map(body, limit_body), n_pairs, seed)

    lips = _map(job, sequence, workers)
    res = ExperimentResult("dilatation_convergence")
    for k, (fwd, inv) in zip(_labels(sequence), lips):
        res.table.append({"k": k, "lip_forward": fwd, "lip_inverse": inv})
    fwd = [a for a, _ in lips]
    inv = [b for _, b in lips]
    res.check("forward_nonincreasing", nonincreasing(fwd), values=fwd[-TAIL:])
    res.check("inverse_nonincreasing", nonincreasing(inv), values=inv[-TAIL:])
    res.check("final_within_tol", max(fwd[-1], inv[-1]) <= 1 + tol, forward=fwd[-1], inverse=inv[-1], tol=tol)
    return res


# ---------------------------------------------------------------- regions


def symmetry_group(body: ConvexBody) -> list[np.ndarray]:
    """Orthogonal maps (about the centroid) of the body's symmetry group, as far as detected.

    Planar polytopes are tested against the dihedral group of order 2k of
    their vertex count; balls use a 360-element dihedral sample. Other bodies
    get the identity only.
    """
    eye = np.eye(body.dim)
    if body.dim != 2:
        return [eye]
    if body.is_polytope:
        k = len(body.vertices)
    elif body.kind == "ball":
        k = 360
    else:
        return [eye]
    c = _centroid(body)
    out = []
    for j in range(k):
        t = 2 * math.pi * j / k
        rot = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
        ref = rot @ np.diag([1.0, -1.0])
        for g in (rot, ref):
            if body.is_polytope:
                img = (body.vertices - c) @ g.T + c
                d = np.min(np.linalg.norm(img[:, None, :] - body.vertices[None, :, :], axis=2), axis=1)
                if d.max() > 1e-9 * max(1.0, body.circumradius):
                    continue
            out.append(g)
    return out or [eye]


def _centroid(body: ConvexBody) -> np.ndarray:
    if body.kind == "ball":
        return np.asarray(body.center, dtype=float)
    if body.dim == 2:
        v = body.vertices
        ang = np.arctan2(*(v - v.mean(axis=0)).T[::-1])
        v = v[np.argsort(ang)]
        x, y = v.T
        cr = x * np.roll(y, -1) - np.roll(x, -1) * y
        a = cr.sum() / 2
        return np.array([((x + np.roll(x, -1)) * cr).sum(), ((y + np.roll(y, -1)) * cr).sum()]) / (6 * a)
    return body.vertices.mean(axis=0)


def pull_back(region: GridRegion, grid: Grid, inverse) -> GridRegion:
    """Region on ``grid``: each in-body cell takes the state of the source cell
    nearest to its preimage under the map whose inverse is ``inverse``."""
    from scipy.spatial import cKDTree

    src = region.grid
    tree = cKDTree(src.centers())
    _, nearest = tree.query(inverse(grid.centers()))
    return GridRegion(grid, region.state[nearest].astype(np.uint8))


def canonicalize(region: GridRegion, body: ConvexBody, reference: GridRegion) -> tuple[GridRegion, np.ndarray]:
    """Image of ``region`` under the symmetry of ``body`` (plus centroid alignment)
    that minimises the symmetric difference with ``reference``, on the reference grid."""
    pts = region.centers()
    c = _centroid(body)
    target_c = reference.centers().mean(axis=0)
    best, best_g, best_sd = None, None, np.inf
    for g in symmetry_group(body):
        shift = target_c - ((pts - c) @ g.T + c).mean(axis=0)

        def inverse(y, g=g, shift=shift):
            return (y - c - shift) @ g + c

        cand = pull_back(region, reference.grid, inverse)
        sd = int(np.count_nonzero(cand.state != reference.state))
        if sd < best_sd:
            best, best_g, best_sd = cand, g, sd
    return best, best_g


def _hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    if len(a) == 0 or len(b) == 0:
        return 0.0 if len(a) == len(b) else math.inf
    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])


def region_metrics(a: GridRegion, b: GridRegion) -> dict:
    """Symmetric difference volume and Hausdorff distances of two regions on one grid."""
    grid = b.grid
    sd = int(np.count_nonzero(a.state != b.state)) * grid.cell_volume
    fa = grid.centers(grid.inside_flat[a.free_boundary_cells()])
    fb = grid.centers(grid.inside_flat[b.free_boundary_cells()])
    return {
        "symmetric_difference": float(sd),
        "hausdorff_region": float(_hausdorff(a.centers(), b.centers())),
        "hausdorff_free_boundary": float(_hausdorff(fa, fb)),
        "free_boundary_cells": int(len(b.free_boundary_cells())),
    }


def region_convergence_experiment(
    sequence,
    limit_body: ConvexBody,
    lam: float,
    resolution: int = 64,
    seed: int = 0,
    workers: int = 1,
    schedule: AnnealSchedule = AnnealSchedule(),
) -> ExperimentResult:
    """Oracle minimisers at fixed lambda along the sequence against the limit's.

    All bodies share the limit body's grid frame. Trend checks allow a slack
    of one cell size since discrete minimisers move in steps of h.
    """
    ref_grid = make_grid(limit_body, resolution)
    total_c = volume(limit_body)[0]
    ref = grid_oracle(limit_body, lam * total_c, seed=seed, schedule=schedule, workers=workers, grid=ref_grid)

    def job(body):
        grid = grid_on_frame(body, ref_grid.origin, ref_grid.h, ref_grid.shape, ref_grid.stencil_name, resolution)
        orc = grid_oracle(body, lam * volume(body)[0], seed=seed, schedule=schedule, grid=grid)
        canon, g = canonicalize(orc.region, body, ref.region)
        return orc, canon

    results = _map(job, sequence, 1)
    h = ref_grid.h
    res = ExperimentResult("region_convergence", info={"h": h, "limit_perimeter": ref.perimeter})
    for k, (orc, canon) in zip(_labels(sequence), results):
        row = {"k": k, "perimeter": orc.perimeter}
        row.update(region_metrics(canon, ref.region))
        res.table.append(row)
    for key, slack in (("symmetric_difference", h * h * 4), ("hausdorff_region", h), ("hausdorff_free_boundary", h)):
        vals = [r[key] for r in res.table]
        res.check(f"{key}_nonincreasing", nonincreasing(vals, slack), values=vals[-TAIL:])
    last = res.table[-1]
    res.check("final_hausdorff_region", last["hausdorff_region"] <= 4 * h, value=last["hausdorff_region"], bound=4 * h)
    res.check(
        "final_hausdorff_free_boundary",
        last["hausdorff_free_boundary"] <= 4 * h,
        value=last["hausdorff_free_boundary"],
        bound=4 * h,
    )
    sd_bound = 2 * last["free_boundary_cells"] * h * h
    res.check("final_symmetric_difference", last["symmetric_difference"] <= sd_bound, value=last["symmetric_difference"], bound=sd_bound)
    return res


# ---------------------------------------------------------------- small volumes


def small_volume_experiment(
    body: ConvexBody,
    v_list,
    resolution: int = 96,
    seed: int = 0,
    workers: int = 1,
    schedule: AnnealSchedule = AnnealSchedule(),
    ratio_range: tuple[float, float] = (0.95, 1.10),
    oracle: bool = True,
) -> ExperimentResult:
    """Profile ratios against the smallest tangent cone and location of small minimisers.

    The witness comparison uses the cells of the ideal apex ball on the same
    grid. Distances are reported raw and rescaled by v^{-1/(n+1)}; the raw
    distance is checked against 4h, i.e. the rescaled distance against 4h
    rescaled the same way.
    """
    if not body.is_polytope:
        raise ValueError("small-volume experiments need a polytope")
    total = volume(body)[0]
    v_list = [float(v) for v in v_list]
    if any(not 0 < v < 0.1 * total for v in v_list):
        raise ValueError(f"volumes must lie in (0, {0.1 * total})")
    mina = min_solid_angle_vertex(body)
    n = body.dim - 1
    grid = make_grid(body, resolution) if oracle else None
    res = ExperimentResult("small_volume", info={"alpha_min": mina.alpha, "vertex": mina.vertex.tolist()})

    def job(v):
        return grid_oracle(body, v, grid=grid, seed=seed, schedule=schedule) if oracle else None

    results = _map(job, v_list, workers)
    for v, orc in zip(v_list, results):
        i_min = float(mina.profile(v))
        row = {"v": v, "I_min": i_min, "upper_ratio": upper_bound(body, v)[0] / i_min}
        if orc is not None:
            h = grid.h
            cells = orc.region.centers()
            c = cells.mean(axis=0)
            near = int(np.argmin(np.linalg.norm(body.vertices - c, axis=1)))
            rho, _ = geodesic_ball_in_cone(mina.angles[near], v, n)
            apex = body.vertices[near]
            ideal = grid.centers()[np.linalg.norm(grid.centers() - apex, axis=1) <= rho]
            dist = _hausdorff(cells, ideal)
            scale = v ** (-1.0 / (n + 1))
            row.update(
                {
                    "oracle": orc.perimeter,
                    "oracle_uncertainty": orc.uncertainty,
                    "oracle_ratio": orc.perimeter / i_min,
                    "nearest_vertex": near,
                    "at_min_vertex": bool(abs(mina.angles[near] - mina.alpha) <= 1e-9),
                    "hausdorff": dist,
                    "hausdorff_rescaled": dist * scale,
                    "h": h,
                    "h_rescaled": h * scale,
                }
            )
        res.table.append(row)
    res.check("upper_ratio_le_1", all(r["upper_ratio"] <= 1 + 1e-9 for r in res.table), values=[r["upper_ratio"] for r in res.table])
    if oracle:
        last = res.table[-1]
        lo, hi = ratio_range
        res.check("oracle_ratio_range", lo <= last["oracle_ratio"] <= hi, value=last["oracle_ratio"], range=[lo, hi])
        res.check(
            "oracle_ratio_lower",
            all(r["oracle_ratio"] >= 1 - 3 * r["oracle_uncertainty"] / r["I_min"] for r in res.table),
        )
        res.check("at_min_vertex", all(r["at_min_vertex"] for r in res.table))
        res.check("hausdorff", last["hausdorff"] <= 4 * last["h"], value=last["hausdorff_rescaled"], bound=4 * last["h_rescaled"])
    return res


# ---------------------------------------------------------------- semicontinuity


def approach_points(body: ConvexBody, vertex, k: int) -> list[np.ndarray]:
    """Points at distance 2^{-j} (j = 1..k, relative to the facet size) from ``vertex``
    inside each incident facet, interleaved so the sequence cycles facets."""
    p = np.asarray(vertex, dtype=float)
    scale = max(1.0, body.circumradius)
    tol = 1e-9 * scale
    active = np.flatnonzero(np.abs(body.normals @ p - body.offsets) <= tol)
    dirs = []
    for f in active:
        on = np.abs(body.vertices @ body.normals[f] - body.offsets[f]) <= tol
        d = body.vertices[on].mean(axis=0) - p
        length = float(np.linalg.norm(d))
        if length > tol:
            dirs.append(d / length * min(1.0, length))
    if not dirs:
        raise ValueError("point has no incident facets")
    return [p + 2.0**-j * d for j in range(1, k + 1) for d in dirs]


def semicontinuity_experiment(body: ConvexBody, vertex, k: int = 12, tail: int | None = None) -> ExperimentResult:
    """alpha(p) <= liminf alpha(p_j) for facet points approaching ``vertex``."""
    pts = approach_points(body, vertex, k)
    rep = semicontinuity_probe(body, vertex, pts, tail)
    res = ExperimentResult("semicontinuity", info={"alpha_limit": rep.alpha_limit})
    for q, a in zip(pts, rep.alphas):
        res.table.append({"point": [float(c) for c in q], "distance": float(np.linalg.norm(q - np.asarray(vertex))), "alpha": a})
    tails = range(1, len(pts) + 1) if tail is None else [tail]
    ok = all(rep.alpha_limit <= min(rep.alphas[-t:]) + 1e-9 for t in tails)
    res.check("liminf", ok and rep.passed, alpha_limit=rep.alpha_limit, liminf=min(rep.alphas))
    return res


# ---------------------------------------------------------------- experiment specs


def build_sequence(generator: dict) -> tuple[list, ConvexBody]:
    """(sequence, limit body) from ``{kind, params}``."""
    from .io import body_from_dict

    kind = generator.get("kind")
    params = generator.get("params", {})
    if kind == "inscribed_polygons":
        radius = float(params.get("radius", 1.0))
        center = params.get("center", [0.0, 0.0])
        seq = inscribed_polygon_sequence(radius, params.get("k_list", [16, 32, 64]), center)
        return seq, make_ball(center, radius, name="disk")
    if kind == "constant":
        body = body_from_dict(params["body"])
        return [body] * int(params.get("count", 3)), body
    raise ValueError(f"unknown generator kind {kind!r}")


EXPERIMENT_KINDS = ("profile", "dilatation", "region", "small_volume", "semicontinuity")


def run_experiment(spec: dict, workers: int = 1, seed: int | None = None) -> ExperimentResult:
    """Run an experiment described by a JSON-style dict.

    Keys: ``name``, ``kind`` (optional, inferred from the grid keys),
    ``generator``, ``lambda_grid`` | ``lambda`` | ``v_list``, ``resolution``,
    ``seed`` and ``tolerances``.
    """
    from .io import body_from_dict

    seed = int(spec.get("seed", 0)) if seed is None else seed
    tols = spec.get("tolerances", {})
    resolution = int(spec.get("resolution", 64))
    kind = spec.get("kind")
    if kind is None:
        if "lambda_grid" in spec:
            kind = "profile"
        elif "v_list" in spec:
            kind = "small_volume"
        elif "lambda" in spec:
            kind = "region"
        else:
            kind = "dilatation"
    if kind not in EXPERIMENT_KINDS:
        raise ValueError(f"unknown experiment kind {kind!r}")
    if kind == "small_volume":
        body = body_from_dict(spec["body"])
        res = small_volume_experiment(body, spec["v_list"], resolution, seed, workers)
    elif kind == "semicontinuity":
        body = body_from_dict(spec["body"])
        res = semicontinuity_experiment(body, spec["vertex"], int(spec.get("k", 12)))
    else:
        seq, limit = build_sequence(spec["generator"])
        if kind == "profile":
            res = profile_convergence_experiment(
                seq, limit, spec["lambda_grid"], tols.get("sup", 0.05), spec.get("spot_lambda", 0.5), resolution, seed, workers
            )
        elif kind == "dilatation":
            res = dilatation_convergence_experiment(seq, limit, int(spec.get("n_pairs", 10_000)), seed, tols.get("lip", 1e-2), workers)
        else:
            res = region_convergence_experiment(seq, limit, float(spec["lambda"]), resolution, seed, workers)
    res.name = spec.get("name", res.name)
    return res

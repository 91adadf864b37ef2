"""Discrete isoperimetric oracle: minimum relative perimeter at fixed cell count."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .convex import ConvexBody
from .grid import Grid, GridRegion, make_grid
from .errors import ResolutionTooCoarse

EXHAUSTIVE_LIMIT = 24


@dataclass(frozen=True)
class AnnealSchedule:
    t0_factor: float = 0.1  # T0 = t0_factor * h^n (kernel energies are in units of h^n)
    cooling: float = 0.995
    sweeps: int = 400
    restarts: int = 8
    p_uniform: float = 0.1


@dataclass
class OracleResult:
    region: GridRegion
    perimeter: float
    uncertainty: float
    strategy: str
    restart_perimeters: list = field(default_factory=list)

    @property
    def volume(self) -> float:
        return self.region.volume


def target_cells(grid: Grid, v_target: float) -> int:
    m = int(round(v_target / grid.cell_volume))
    if m <= 0 or m >= grid.n_inside:
        raise ResolutionTooCoarse(f"target of {m} cells is impossible with {grid.n_inside} in-body cells")
    return m


def oracle_uncertainty(grid: Grid, perimeter: float, inradius: float) -> float:
    """Heuristic error bar: stencil anisotropy plus one cell against the body scale."""
    return (grid.anisotropy + grid.h / inradius) * perimeter


def _lowest(score: np.ndarray, m: int) -> np.ndarray:
    state = np.zeros(len(score), dtype=np.uint8)
    state[np.argsort(score, kind="stable")[:m]] = 1
    return state


def initial_states(grid: Grid, m: int, rngs, body: ConvexBody | None = None) -> list[np.ndarray]:
    """One structured starting set per restart.

    Slots, in order: a cut orthogonal to x, a ball at the sharpest vertex, a
    cut orthogonal to y, balls at the next two sharpest vertices, a ball at a
    random body-boundary cell, a cut in a random direction and a ball at a
    random in-body cell. Missing vertices are replaced by random boundary
    balls; slots beyond eight cycle through the random kinds.
    """
    x = grid.centers()
    d = grid.dim
    verts = []
    if body is not None and body.is_polytope:
        from .cones import vertex_angles

        ang = vertex_angles(body)
        verts = [body.vertices[i] for i in np.argsort(ang, kind="stable")[:3]]
    edge = grid.body_boundary_cells()
    if len(edge) == 0:
        edge = np.arange(grid.n_inside)

    def ball_at(p):
        return _lowest(np.linalg.norm(x - p, axis=1), m)

    def cut(u):
        return _lowest(x @ u, m)

    def random_boundary_ball(rng):
        return ball_at(x[edge[rng.integers(len(edge))]])

    def random_cut(rng):
        g = rng.standard_normal(d)
        return cut(g / np.linalg.norm(g))

    def random_ball(rng):
        return ball_at(x[rng.integers(len(x))])

    def vertex_ball(i, rng):
        return ball_at(verts[i]) if i < len(verts) else random_boundary_ball(rng)

    slots = [
        lambda rng: cut(np.eye(d)[0]),
        lambda rng: vertex_ball(0, rng),
        lambda rng: cut(np.eye(d)[1]),
        lambda rng: vertex_ball(1, rng),
        lambda rng: vertex_ball(2, rng),
        random_boundary_ball,
        random_cut,
        random_ball,
    ]
    out = []
    for k, rng in enumerate(rngs):
        slot = slots[k] if k < len(slots) else slots[5 + (k - len(slots)) % 3]
        out.append(slot(rng))
    return out


def _run_restart(grid: Grid, state: np.ndarray, seed: int, schedule: AnnealSchedule) -> np.ndarray:
    state = state.copy()
    t0 = schedule.t0_factor
    _kernels.anneal(state, grid.adj, grid.adj_w, t0, schedule.cooling, schedule.sweeps, seed, schedule.p_uniform)
    _kernels.greedy(state, grid.adj, grid.adj_w, 1e-9 * grid.weights.min())
    return state


def anneal_region(
    grid: Grid,
    m: int,
    seed: int = 0,
    schedule: AnnealSchedule = AnnealSchedule(),
    workers: int = 1,
    body: ConvexBody | None = None,
) -> tuple[GridRegion, list[float]]:
    """Best of ``schedule.restarts`` annealing runs with ``m`` occupied cells.

    Restart ``k`` uses the ``k``-th child of ``SeedSequence(seed)`` regardless of
    the worker count, so results do not depend on ``workers``.
    """
    children = np.random.SeedSequence(seed).spawn(schedule.restarts)
    rngs = [np.random.default_rng(c) for c in children]
    seeds = [int(c.generate_state(1)[0]) for c in children]
    inits = initial_states(grid, m, rngs, body)

    def job(k):
        return _run_restart(grid, inits[k], seeds[k], schedule)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(schedule.restarts)))
    else:
        results = [job(k) for k in range(schedule.restarts)]
    perims = [grid.perimeter_of(s) for s in results]
    best = int(np.argmin(perims))  # first minimum = lowest restart index
    return GridRegion(grid, results[best]), perims


def exhaustive_region(grid: Grid, m: int) -> GridRegion:
    if grid.n_inside > EXHAUSTIVE_LIMIT:
        raise ResolutionTooCoarse(f"exhaustive search needs at most {EXHAUSTIVE_LIMIT} in-body cells, got {grid.n_inside}")
    mask, _ = _kernels.exhaustive(grid.adj, grid.adj_w, m)
    state = ((int(mask) >> np.arange(grid.n_inside)) & 1).astype(np.uint8)
    return GridRegion(grid, state)


def grid_oracle(
    body: ConvexBody,
    v_target: float,
    resolution: int = 64,
    strategy: str = "anneal",
    seed: int = 0,
    schedule: AnnealSchedule = AnnealSchedule(),
    workers: int = 1,
    grid: Grid | None = None,
    stencil: str = "isotropic",
) -> OracleResult:
    """Discrete minimiser of relative perimeter among regions of volume ~ ``v_target``.

    ``strategy`` is ``"exhaustive"`` (all subsets, at most 24 in-body cells) or
    ``"anneal"``. A prebuilt ``grid`` overrides ``resolution`` and ``stencil``.
    """
    grid = grid or make_grid(body, resolution, stencil)
    m = target_cells(grid, v_target)
    if strategy == "exhaustive":
        region = exhaustive_region(grid, m)
        restarts = []
    elif strategy == "anneal":
        region, restarts = anneal_region(grid, m, seed, schedule, workers, body)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    per = region.perimeter
    return OracleResult(
        region=region,
        perimeter=per,
        uncertainty=oracle_uncertainty(grid, per, body.inradius),
        strategy=strategy,
        restart_perimeters=restarts,
    )

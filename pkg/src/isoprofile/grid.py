"""Cell grids over convex bodies and discrete relative perimeter.

A :class:`Grid` covers the bounding box of a body with cubes of side ``h``;
a cell is *in-body* when its center lies in the body. A :class:`GridRegion`
is a set of in-body cells. Its relative perimeter counts only cut pairs
between an occupied and an unoccupied in-body cell, so the part of the
region's boundary lying on the body's boundary is free.

Pairs whose far cell lies outside the body are not dropped. The outside
cell takes the occupancy of its nearest in-body cell(s) and the pair counts
with half weight. The body's boundary stays free, while an interface that
meets the boundary is not shortened by the stencil's reach.

Two perimeter stencils are provided:

``face``
    Face-adjacent pairs, each weighted ``h^n``. This is the plain face count,
    which overestimates oblique interfaces by up to a factor sqrt(n+1).
``isotropic`` (default)
    A Crofton-type stencil over 16 neighbours in the plane and 26 in space,
    with per-class weights chosen so that flat interfaces in every direction
    are measured to within 2.9% (plane) and 7.4% (space).

Flat cell indices are row-major over ``shape`` with axis 0 along x.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .convex import ConvexBody
from .errors import ResolutionTooCoarse

# offsets up to sign, their weight class, and per-class weights (units of h^n)
_ISO2_OFFSETS = np.array([[1, 0], [0, 1], [1, 1], [1, -1], [1, 2], [2, 1], [1, -2], [2, -1]])
_ISO2_CLASSES = np.array([0, 0, 1, 1, 2, 2, 2, 2])
_ISO2_WEIGHTS = np.array([0.17267576, 0.05135542, 0.1207689])

_ISO3_OFFSETS = np.array([o for o in itertools.product([-1, 0, 1], repeat=3) if o > (0, 0, 0)])
_ISO3_CLASSES = np.abs(_ISO3_OFFSETS).sum(axis=1) - 1
_ISO3_WEIGHTS = np.array([0.18595849, 0.10675557, 0.07732882])

# worst relative error of the stencil on flat interfaces
STENCIL_ANISOTROPY = {("face", 2): math.sqrt(2) - 1, ("face", 3): math.sqrt(3) - 1, ("isotropic", 2): 0.0284, ("isotropic", 3): 0.0736}


def stencil(name: str, dim: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(offsets up to sign, class per offset, weight per class)."""
    if name == "face":
        return np.eye(dim, dtype=int), np.zeros(dim, dtype=int), np.ones(1)
    if name == "isotropic":
        if dim == 2:
            return _ISO2_OFFSETS, _ISO2_CLASSES, _ISO2_WEIGHTS
        if dim == 3:
            return _ISO3_OFFSETS, _ISO3_CLASSES, _ISO3_WEIGHTS
    raise ValueError(f"no {name!r} stencil in dimension {dim}")


@dataclass(frozen=True, eq=False)
class Grid:
    dim: int
    origin: np.ndarray
    h: float
    shape: tuple
    inside: np.ndarray  # flat bool mask over all cells
    stencil_name: str = "isotropic"
    resolution: int = 0
    inside_flat: np.ndarray = field(init=False)
    compact: np.ndarray = field(init=False)
    nbr: np.ndarray = field(init=False)
    nbr_cls: np.ndarray = field(init=False)
    weights: np.ndarray = field(init=False)
    face_nbr: np.ndarray = field(init=False)
    adj: np.ndarray = field(init=False)
    adj_w: np.ndarray = field(init=False)

    def __post_init__(self):
        inside_flat = np.flatnonzero(self.inside)
        compact = np.full(self.inside.size, -1, dtype=np.int64)
        compact[inside_flat] = np.arange(len(inside_flat))
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("inside_flat", inside_flat)
        set_("compact", compact)
        offsets, classes, weights = stencil(self.stencil_name, self.dim)
        signed = np.vstack([offsets, -offsets])
        set_("nbr", self._neighbours(signed))
        set_("nbr_cls", np.concatenate([classes, classes]).astype(np.int64))
        set_("weights", np.asarray(weights, dtype=float))
        face = np.vstack([np.eye(self.dim, dtype=int), -np.eye(self.dim, dtype=int)])
        set_("face_nbr", self._neighbours(face))
        adj, adj_w = self._graph(signed, np.concatenate([classes, classes]))
        set_("adj", adj)
        set_("adj_w", adj_w)

    def _graph(self, signed: np.ndarray, classes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Symmetric weighted adjacency (padded) from the stencil plus half-weight boundary pairs."""
        from scipy.spatial import cKDTree

        n_in = self.n_inside
        idx = np.array(np.unravel_index(self.inside_flat, self.shape)).T
        shape = np.array(self.shape)
        centers = self.origin + (idx + 0.5) * self.h
        tree = cKDTree(centers)
        src, dst, wts = [], [], []
        for k, off in enumerate(signed):
            w = float(self.weights[classes[k]])
            nb = self.nbr[:, k]
            full = nb >= 0
            src.append(np.flatnonzero(full))
            dst.append(nb[full])
            wts.append(np.full(int(full.sum()), w))
            out = np.flatnonzero(~full)
            if len(out) == 0:
                continue
            pts = self.origin + (idx[out] + off + 0.5) * self.h
            kq = min(8, n_in)
            d, q = tree.query(pts, k=kq)
            d, q = d.reshape(len(out), kq), q.reshape(len(out), kq)
            tied = d <= d[:, :1] + 1e-9 * self.h
            share = 0.5 * w / tied.sum(axis=1)
            rows, cols = np.nonzero(tied)
            i, p = out[rows], q[rows, cols]
            keep = i != p
            src += [i[keep], p[keep]]
            dst += [p[keep], i[keep]]
            wts += [share[rows][keep]] * 2
        src = np.concatenate(src)
        dst = np.concatenate(dst)
        wts = np.concatenate(wts)
        key = src * n_in + dst
        uniq, inv = np.unique(key, return_inverse=True)
        w_sum = np.zeros(len(uniq))
        np.add.at(w_sum, inv, wts)
        a, b = uniq // n_in, uniq % n_in
        deg = np.bincount(a, minlength=n_in)
        width = int(deg.max()) if len(deg) else 0
        adj = np.full((n_in, width), -1, dtype=np.int64)
        adj_w = np.zeros((n_in, width))
        start = np.concatenate([[0], np.cumsum(deg)[:-1]])
        slot = np.arange(len(a)) - start[a]
        adj[a, slot] = b
        adj_w[a, slot] = w_sum
        return adj, adj_w

    def _neighbours(self, signed: np.ndarray) -> np.ndarray:
        idx = np.array(np.unravel_index(self.inside_flat, self.shape)).T
        shape = np.array(self.shape)
        out = np.full((len(idx), len(signed)), -1, dtype=np.int64)
        for k, off in enumerate(signed):
            nb = idx + off
            ok = np.all((nb >= 0) & (nb < shape), axis=1)
            flat = np.ravel_multi_index(nb[ok].T, self.shape)
            out[ok, k] = self.compact[flat]
        return out

    @property
    def n_inside(self) -> int:
        return len(self.inside_flat)

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    @property
    def n(self) -> int:
        return self.dim - 1

    def centers(self, flat=None) -> np.ndarray:
        flat = self.inside_flat if flat is None else np.asarray(flat)
        idx = np.array(np.unravel_index(flat, self.shape)).T
        return self.origin + (idx + 0.5) * self.h

    def perimeter_of(self, state: np.ndarray) -> float:
        from ._kernels import cut_value

        return float(self.h**self.n * cut_value(np.asarray(state, dtype=np.uint8), self.adj, self.adj_w))

    @property
    def anisotropy(self) -> float:
        return STENCIL_ANISOTROPY[(self.stencil_name, self.dim)]

    def body_boundary_cells(self) -> np.ndarray:
        """Compact indices of in-body cells with a face neighbour outside the body."""
        return np.flatnonzero(np.any(self.face_nbr < 0, axis=1))

    def same_frame(self, other: "Grid") -> bool:
        return self.shape == other.shape and self.h == other.h and np.array_equal(self.origin, other.origin)


def make_grid(body: ConvexBody, resolution: int, stencil_name: str = "isotropic") -> Grid:
    """``resolution`` cells along the longest side of the body's bounding box."""
    if resolution < 1:
        raise ResolutionTooCoarse("resolution must be positive")
    lo, hi = body.bounding_box()
    h = float(np.max(hi - lo)) / resolution
    shape = tuple(int(max(1, math.ceil((hi[i] - lo[i]) / h - 1e-9))) for i in range(body.dim))
    return grid_on_frame(body, lo, h, shape, stencil_name, resolution)


def grid_on_frame(body: ConvexBody, origin, h: float, shape, stencil_name: str = "isotropic", resolution: int = 0) -> Grid:
    """Grid with a prescribed frame (e.g. shared across a sequence of bodies)."""
    origin = np.asarray(origin, dtype=float)
    shape = tuple(int(s) for s in shape)
    idx = np.indices(shape).reshape(len(shape), -1).T
    centers = origin + (idx + 0.5) * h
    inside = body.contains(centers, tol=1e-12 * max(1.0, body.circumradius))
    return Grid(
        dim=body.dim,
        origin=origin,
        h=float(h),
        shape=shape,
        inside=inside,
        stencil_name=stencil_name,
        resolution=resolution,
    )


@dataclass(frozen=True, eq=False)
class GridRegion:
    grid: Grid
    state: np.ndarray  # compact uint8 occupancy over in-body cells

    @classmethod
    def from_cells(cls, grid: Grid, cells) -> "GridRegion":
        """Region from flat cell indices (all must be in-body)."""
        cells = np.asarray(cells, dtype=np.int64)
        comp = grid.compact[cells] if len(cells) else cells
        if np.any(comp < 0):
            raise ValueError("region contains cells outside the body")
        state = np.zeros(grid.n_inside, dtype=np.uint8)
        state[comp] = 1
        return cls(grid, state)

    @classmethod
    def from_predicate(cls, grid: Grid, pred) -> "GridRegion":
        """Region of in-body cells whose centers satisfy ``pred(points) -> bool array``."""
        return cls(grid, np.asarray(pred(grid.centers()), dtype=np.uint8))

    @property
    def cells(self) -> np.ndarray:
        return self.grid.inside_flat[self.state.astype(bool)]

    @property
    def count(self) -> int:
        return int(self.state.sum())

    @property
    def volume(self) -> float:
        return self.count * self.grid.cell_volume

    @property
    def perimeter(self) -> float:
        return self.grid.perimeter_of(self.state)

    def face_perimeter(self) -> float:
        """h^n times the number of faces between occupied and unoccupied in-body cells."""
        nb = self.grid.face_nbr
        s = self.state.astype(bool)
        valid = nb >= 0
        other = np.where(valid, self.state[np.where(valid, nb, 0)], 1).astype(bool)
        cut = s[:, None] & valid & ~other
        return float(cut.sum() * self.grid.h**self.grid.n)

    def centers(self) -> np.ndarray:
        return self.grid.centers(self.cells)

    def dense(self) -> np.ndarray:
        """Occupancy as an array of the grid's shape."""
        out = np.zeros(self.grid.inside.size, dtype=bool)
        out[self.cells] = True
        return out.reshape(self.grid.shape)

    def complement(self) -> "GridRegion":
        return GridRegion(self.grid, (1 - self.state).astype(np.uint8))

    def free_boundary_cells(self, exclude_body_boundary: bool = True) -> np.ndarray:
        """Compact indices of occupied cells with an unoccupied in-body face neighbour.

        With ``exclude_body_boundary`` cells touching the body's boundary are
        dropped, so the result approximates the closure of the free boundary.
        """
        nb = self.grid.face_nbr
        valid = nb >= 0
        other = self.state[np.where(valid, nb, 0)]
        mixed = (self.state[:, None] != other) & valid
        is_mixed = np.any(mixed, axis=1)
        if exclude_body_boundary:
            is_mixed &= np.all(valid, axis=1)
        return np.flatnonzero(is_mixed)

    def to_polygon(self) -> np.ndarray:
        """Outline of a planar region as a counter-clockwise vertex array."""
        from shapely.geometry import box
        from shapely.geometry.polygon import orient
        from shapely.ops import unary_union

        if self.grid.dim != 2:
            raise ValueError("polygon outline exists only for planar regions")
        h = self.grid.h
        shapes = [box(x - h / 2, y - h / 2, x + h / 2, y + h / 2) for x, y in self.centers()]
        geom = unary_union(shapes)
        if geom.geom_type != "Polygon":
            geom = max(geom.geoms, key=lambda g: g.area)
        geom = orient(geom.simplify(0), 1.0)
        return np.asarray(geom.exterior.coords)[:-1]

    def to_dict(self) -> dict:
        return {
            "resolution": self.grid.resolution,
            "origin": self.grid.origin.tolist(),
            "h": self.grid.h,
            "shape": list(self.grid.shape),
            "stencil": self.grid.stencil_name,
            "cells": [int(c) for c in self.cells],
        }

    @classmethod
    def from_dict(cls, data: dict, body: ConvexBody) -> "GridRegion":
        stencil_name = data.get("stencil", "isotropic")
        if "shape" in data:
            grid = grid_on_frame(body, data["origin"], data["h"], data["shape"], stencil_name, data.get("resolution", 0))
        else:
            grid = make_grid(body, int(data["resolution"]), stencil_name)
        return cls.from_cells(grid, data["cells"])


def connected(mask: np.ndarray) -> bool:
    """Whether a dense boolean array is face-connected (empty counts as connected)."""
    if not mask.any():
        return True
    _, count = ndimage.label(mask)
    return count == 1


def connectedness(region: GridRegion) -> tuple[bool, bool]:
    occ = region.dense()
    comp = region.grid.inside.reshape(region.grid.shape) & ~occ
    return connected(occ), connected(comp)

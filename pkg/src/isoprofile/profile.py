"""Isoperimetric profile curves: bounds, oracle samples, normalisations and audits.

For a body ``C`` in R^{n+1} the profile is ``I(v) = inf P_C(E)`` over
``E ⊂ C`` with ``|E| = v``. Derived curves:

* ``Y = I^{(n+1)/n}``
* ``J(lam) = I(lam |C|)``
* ``y = J^{(n+1)/n}``
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import planar
from .convex import ConvexBody, make_ball, metric_ball_volumes, unit_ball_volume, volume
from .errors import VolumeOutOfRange, WitnessNotBall
from .oracle import AnnealSchedule, grid_oracle
from .transport import build_map, empirical_lip

PROVENANCES = ("analytic", "upper", "lower", "oracle")
N_BOUNDARY_CENTERS = 64
N_CHORD_ANGLES = 32


@dataclass(frozen=True)
class ProfileSample:
    v: float
    value: float
    provenance: str
    uncertainty: float = 0.0
    witness: dict | None = None


@dataclass
class ProfileCurve:
    body_id: str
    total_volume: float
    n: int
    samples: list = field(default_factory=list)

    def add(self, sample: ProfileSample) -> None:
        if not 0 < sample.v < self.total_volume:
            raise VolumeOutOfRange(f"sample volume {sample.v} outside (0, {self.total_volume})")
        self.samples.append(sample)
        self.samples.sort(key=lambda s: (s.v, PROVENANCES.index(s.provenance)))

    def provenances(self) -> list[str]:
        return [p for p in PROVENANCES if any(s.provenance == p for s in self.samples)]

    def select(self, provenance: str | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(v, value, uncertainty) arrays for one provenance (the only one if None)."""
        if provenance is None:
            provs = self.provenances()
            if len(provs) != 1:
                raise ValueError(f"curve mixes provenances {provs}; pick one")
            provenance = provs[0]
        rows = [s for s in self.samples if s.provenance == provenance]
        v = np.array([s.v for s in rows])
        val = np.array([s.value for s in rows])
        unc = np.array([s.uncertainty for s in rows])
        return v, val, unc

    def value_at(self, v: float, provenance: str | None = None) -> float:
        vs, vals, _ = self.select(provenance)
        return float(np.interp(v, vs, vals))


def normalizations(curve: ProfileCurve, provenance: str | None = None) -> dict:
    """Y, J and y for one provenance of the curve."""
    v, val, _ = curve.select(provenance)
    e = (curve.n + 1) / curve.n
    return {
        "v": v,
        "I": val,
        "Y": val**e,
        "lambda": v / curve.total_volume,
        "J": val,
        "y": val**e,
    }


def analytic_curve(body_id: str, total_volume: float, n: int, v_grid, func) -> ProfileCurve:
    curve = ProfileCurve(body_id, total_volume, n)
    for v in v_grid:
        curve.add(ProfileSample(float(v), float(func(v)), "analytic"))
    return curve


def square_profile(v, side: float = 1.0):
    """Known profile of a square: corner quarter-disks and straight chords."""
    v = np.asarray(v, dtype=float)
    return np.minimum.reduce([np.sqrt(np.pi * v), np.full_like(v, side), np.sqrt(np.pi * (side * side - v))])


# ---------------------------------------------------------------- upper bound


def _is_box(body: ConvexBody) -> bool:
    if not body.is_polytope or len(body.normals) != 2 * body.dim:
        return False
    gram = np.abs(body.normals @ body.normals.T)
    return bool(np.all((gram < 1e-9) | (np.abs(gram - 1) < 1e-9)))


class CandidateFamily:
    """Explicit competitors for the profile of one body.

    * relative balls ``B_C(p, r)`` centered at every vertex and at 64
      arclength-spaced boundary points;
    * in the plane, half-planes cut by chords in the edge-normal and
      edge-tangent directions and 32 uniform directions;
    * in space, slabs along the facet normals when the body is a box;
    * complements of all of the above.
    """

    def __init__(self, body: ConvexBody, mc_samples: int = 4000):
        self.body = body
        self.total = volume(body, "auto" if body.dim <= 3 else "montecarlo")[0]
        self.n = body.dim - 1
        pts = [body.boundary_points(N_BOUNDARY_CENTERS)]
        if body.is_polytope:
            pts.insert(0, body.vertices)
        self.centers = np.vstack(pts)
        self.mc_samples = mc_samples
        self.directions = self._chord_directions()

    def _chord_directions(self) -> np.ndarray:
        if self.body.dim != 2:
            return np.zeros((0, 2))
        ang = list(np.pi * np.arange(N_CHORD_ANGLES) / N_CHORD_ANGLES)
        if self.body.is_polytope:
            for a in self.body.normals:
                t = math.atan2(a[1], a[0])
                ang += [t, t + math.pi / 2]
        ang = np.unique(np.round(np.mod(np.array(ang), np.pi), 12))
        return np.column_stack([np.cos(ang), np.sin(ang)])

    # balls ---------------------------------------------------------

    def _ball_volumes(self, centers, radii):
        if self.body.dim == 2:
            return metric_ball_volumes(self.body, centers, radii)
        return metric_ball_volumes(self.body, centers, radii, samples=self.mc_samples)

    def ball_radii(self, v: np.ndarray) -> np.ndarray:
        """Radius of the relative ball of volume v[j] at center i, shape (centers, len(v))."""
        v = np.atleast_1d(v)
        c = np.repeat(self.centers, len(v), axis=0)
        target = np.tile(v, len(self.centers))
        if self.body.is_polytope:
            hi = np.max(np.linalg.norm(c[:, None, :] - self.body.vertices[None], axis=2), axis=1)
        else:
            hi = np.linalg.norm(c - self.body.center, axis=1) + self.body.radius
        lo = np.zeros_like(hi)
        rho = 0.5 * hi
        newton = self.body.dim == 2  # exact volumes and arcs: safeguarded Newton
        for _ in range(200):
            vol, arc = self._ball_volumes(c, rho)
            below = vol < target
            lo = np.where(below, rho, lo)
            hi = np.where(below, hi, rho)
            nxt = 0.5 * (lo + hi)
            if newton:
                with np.errstate(divide="ignore", invalid="ignore"):
                    step = rho - (vol - target) / arc
                ok = np.isfinite(step) & (step > lo) & (step < hi)
                nxt = np.where(ok, step, nxt)
            done = np.abs(nxt - rho) <= 2e-16 * np.maximum(rho, 1e-300)
            rho = nxt
            if np.all(done | (hi - lo <= 2e-16 * np.maximum(hi, 1e-300))):
                break
        return rho.reshape(len(self.centers), len(v))

    def balls(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Best ball perimeter per volume and the corresponding (center index, radius)."""
        v = np.atleast_1d(v)
        radii = self.ball_radii(v)
        c = np.repeat(self.centers, len(v), axis=0)
        _, per = self._ball_volumes(c, radii.ravel())
        per = per.reshape(radii.shape)
        k = np.argmin(per, axis=0)
        cols = np.arange(len(v))
        return per[k, cols], np.column_stack([k, radii[k, cols]])

    # chords and slabs ---------------------------------------------

    def _disk_chord(self, v: float) -> tuple[float, float]:
        body = self.body
        depth = brentq(lambda d: planar.circular_segment_area(body.radius, d) - v, 0.0, 2 * body.radius, xtol=1e-15, rtol=1e-15)
        h = body.radius - depth
        return 2.0 * math.sqrt(max(body.radius**2 - h * h, 0.0)), float(self.directions[0] @ body.center) - h

    def _polygon_chords(self, w: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Chord length and offset t with |{<w, x> <= t}| = v, for all v at once.

        Between consecutive vertex projections the chord length is affine in t,
        so the cut area is quadratic and each volume is solved in closed form.
        """
        body = self.body
        knots = np.unique(body.vertices @ w)
        lo, hi = knots[:-1], knots[1:]
        width = hi - lo
        chord = lambda t: planar.chord_length_polygon(body.normals, body.offsets, w, t)  # noqa: E731
        l1 = np.array([chord(a + b / 3) for a, b in zip(lo, width)])
        l2 = np.array([chord(a + 2 * b / 3) for a, b in zip(lo, width)])
        slope = 3 * (l2 - l1) / width
        start = l1 - slope * width / 3
        end = start + slope * width
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (start + end) * width)])
        seg = np.clip(np.searchsorted(cum, v, side="right") - 1, 0, len(width) - 1)
        rem = v - cum[seg]
        la, sl = start[seg], slope[seg]
        disc = np.sqrt(np.maximum(la * la + 2 * sl * rem, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            ds = np.where(la + disc > 0, 2 * rem / (la + disc), 0.0)
        return la + sl * ds, lo[seg] + ds

    def chords(self, v: np.ndarray):
        v = np.atleast_1d(v)
        best = np.full(len(v), np.inf)
        arg = [None] * len(v)
        if self.body.dim == 2 and not self.body.is_polytope:
            w = self.directions[0]
            for j, vv in enumerate(v):
                best[j], t = self._disk_chord(vv)
                arg[j] = (w, t)
        elif self.body.dim == 2:
            for w in self.directions:
                length, t = self._polygon_chords(w, v)
                for j in np.flatnonzero(length < best):
                    best[j] = length[j]
                    arg[j] = (w, t[j])
        elif _is_box(self.body):
            lo, hi = self.body.bounding_box()
            for j in range(len(v)):
                for axis in range(self.body.dim):
                    width = hi[axis] - lo[axis]
                    area = self.total / width
                    if area < best[j]:
                        w = np.eye(self.body.dim)[axis]
                        best[j] = area
                        arg[j] = (w, lo[axis] + v[j] / area)
        return best, arg

    # combined -----------------------------------------------------

    def family(self, v: np.ndarray):
        """Best candidate of volume exactly v (no complements)."""
        bval, barg = self.balls(v)
        cval, carg = self.chords(v)
        out, wit = [], []
        for j in range(len(np.atleast_1d(v))):
            if cval[j] < bval[j]:
                w, t = carg[j]
                out.append(cval[j])
                wit.append({"kind": "chord", "direction": [float(x) for x in w], "offset": float(t)})
            else:
                k, r = barg[j]
                out.append(bval[j])
                wit.append({"kind": "ball", "center": [float(x) for x in self.centers[int(k)]], "radius": float(r)})
        return np.array(out), wit

    def evaluate(self, v) -> tuple[np.ndarray, list]:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        if np.any(v <= 0) or np.any(v >= self.total):
            raise VolumeOutOfRange(f"volumes must lie in (0, {self.total})")
        direct, dw = self.family(v)
        comp, cw = self.family(self.total - v)
        vals, wits = [], []
        for j in range(len(v)):
            if comp[j] < direct[j]:
                vals.append(comp[j])
                wits.append(dict(cw[j], complement=True))
            else:
                vals.append(direct[j])
                wits.append(dict(dw[j], complement=False))
        return np.array(vals), wits


_FAMILY_CACHE: dict = {}


def candidate_family(body: ConvexBody) -> CandidateFamily:
    key = id(body)
    fam = _FAMILY_CACHE.get(key)
    if fam is None or fam.body is not body:
        fam = CandidateFamily(body)
        _FAMILY_CACHE[key] = fam
    return fam


def upper_bound(body: ConvexBody, v):
    """Smallest relative perimeter among the explicit candidates of volume ``v``.

    Returns ``(value, witness)`` for a scalar ``v`` and arrays/lists otherwise.
    """
    vals, wits = candidate_family(body).evaluate(v)
    if np.ndim(v) == 0:
        return float(vals[0]), wits[0]
    return vals, wits


# ---------------------------------------------------------------- lower bounds


def ball_profile_constant(n: int) -> float:
    """I_B(|B|/2) / (|B|/2)^{n/(n+1)} for a Euclidean ball in R^{n+1} (scale free)."""
    return unit_ball_volume(n) / (unit_ball_volume(n + 1) / 2) ** (n / (n + 1))


@dataclass(frozen=True)
class TransferConstant:
    M: float
    M_ball: float
    lip_forward: float
    lip_inverse: float


def ball_transfer_constant(body: ConvexBody, n_pairs: int = 10_000, seed: int = 0, workers: int = 1) -> TransferConstant:
    """Profile constant transported from the circumscribed ball through the radial map."""
    centered = body.centered()
    big_r = centered.origin_radii()[1]
    ball = make_ball(np.zeros(body.dim), big_r)
    tmap = build_map(centered, ball)
    fwd, inv = empirical_lip(tmap, n_pairs, seed, workers)
    n = body.dim - 1
    m_ball = ball_profile_constant(n)
    return TransferConstant(m_ball / (fwd * inv) ** n, m_ball, fwd, inv)


def lower_bound_ball_transfer(body: ConvexBody, v, constant: TransferConstant | None = None, total: float | None = None):
    total = total if total is not None else volume(body)[0]
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr <= 0) or np.any(v_arr >= total):
        raise VolumeOutOfRange(f"volumes must lie in (0, {total})")
    constant = constant or ball_transfer_constant(body)
    n = body.dim - 1
    out = constant.M * np.minimum(v_arr, total - v_arr) ** (n / (n + 1))
    return float(out) if np.ndim(out) == 0 else out


def lower_bound_half_profile(body: ConvexBody, v, i_half: float, total: float | None = None):
    """(I(|C|/2) / (|C|/2)^{n/(n+1)}) min{v, |C|-v}^{n/(n+1)}."""
    total = total if total is not None else volume(body)[0]
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr <= 0) or np.any(v_arr >= total):
        raise VolumeOutOfRange(f"volumes must lie in (0, {total})")
    n = body.dim - 1
    e = n / (n + 1)
    half = total / 2
    out = i_half / half**e * np.minimum(v_arr, total - v_arr) ** e
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------- curves


def profile_curve(
    body: ConvexBody,
    v_grid,
    methods=("upper",),
    resolution: int = 64,
    seed: int = 0,
    workers: int = 1,
    schedule: AnnealSchedule = AnnealSchedule(),
    body_id: str | None = None,
    grid=None,
) -> ProfileCurve:
    """Profile samples at each volume for the requested provenances.

    ``methods`` may contain ``"upper"``, ``"lower"`` and ``"oracle"``. Oracle
    runs for different volumes are independent jobs; each uses the same seed.
    """
    total = volume(body)[0]
    curve = ProfileCurve(body_id or body.name, total, body.dim - 1)
    v_grid = np.asarray(v_grid, dtype=float)
    if np.any(v_grid <= 0) or np.any(v_grid >= total):
        raise VolumeOutOfRange(f"volume grid must lie in (0, {total})")
    if "upper" in methods:
        vals, wits = upper_bound(body, v_grid)
        for v, val, w in zip(v_grid, vals, wits):
            curve.add(ProfileSample(float(v), float(val), "upper", 0.0, w))
    if "lower" in methods:
        const = ball_transfer_constant(body, seed=seed, workers=workers)
        vals = np.atleast_1d(lower_bound_ball_transfer(body, v_grid, const, total))
        for v, val in zip(v_grid, vals):
            curve.add(ProfileSample(float(v), float(val), "lower", 0.0, {"kind": "ball-transfer", "M": const.M}))
    if "oracle" in methods:

        def job(v):
            return grid_oracle(body, v, resolution, "anneal", seed, schedule, 1, grid)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(job, v_grid))
        else:
            results = [job(v) for v in v_grid]
        for v, res in zip(v_grid, results):
            curve.add(
                ProfileSample(
                    float(v), res.perimeter, "oracle", res.uncertainty,
                    {"kind": "grid", "cells": res.region.count, "volume": res.region.volume},
                )
            )
    return curve


# ---------------------------------------------------------------- audits


@dataclass
class AuditReport:
    name: str
    checks: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def check(self, key: str, value: float, tol: float, passed: bool) -> None:
        self.checks[key] = {"value": float(value), "tol": float(tol), "passed": bool(passed)}

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def to_dict(self) -> dict:
        return {"audit": self.name, "passed": self.passed, "checks": self.checks, **self.info}


def concavity_defect(v: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Chord value minus sample at each interior point; positive means non-concave."""
    v0, v1, v2 = v[:-2], v[1:-1], v[2:]
    t = (v1 - v0) / (v2 - v0)
    return (1 - t) * y[:-2] + t * y[2:] - y[1:-1]


def concavity_audit(
    curve: ProfileCurve,
    provenance: str | None = None,
    tol: float = 1e-9,
    symmetry_tol: float | None = None,
    monotone_tol: float | None = None,
) -> AuditReport:
    """Concavity of y, symmetry about |C|/2 and monotonicity on each half."""
    v, val, unc = curve.select(provenance)
    if len(v) < 3:
        raise ValueError("concavity audit needs at least three samples")
    symmetry_tol = tol if symmetry_tol is None else symmetry_tol
    monotone_tol = tol if monotone_tol is None else monotone_tol
    e = (curve.n + 1) / curve.n
    y = val**e
    report = AuditReport("concavity")
    defect = concavity_defect(v, y)
    worst = float(max(defect.max(), 0.0))
    report.check("concavity", worst, tol, worst <= tol)
    total = curve.total_volume
    mirror = total - v
    inside = (mirror >= v.min() - 1e-15) & (mirror <= v.max() + 1e-15)
    sym = float(np.max(np.abs(val[inside] - np.interp(mirror[inside], v, val)))) if np.any(inside) else 0.0
    report.check("symmetry", sym, symmetry_tol, sym <= symmetry_tol)
    steps = np.diff(val)
    left = v[1:] <= total / 2 + 1e-15
    right = v[:-1] >= total / 2 - 1e-15
    drop = float(max(np.max(-steps[left], initial=0.0), np.max(steps[right], initial=0.0), 0.0))
    report.check("monotone", drop, monotone_tol, drop <= monotone_tol)
    report.info["max_uncertainty"] = float(unc.max()) if len(unc) else 0.0
    return report


def scaling_audit(body: ConvexBody, lam: float, v_grid, tol: float = 1e-9) -> AuditReport:
    """Checks I_{lam C}(lam^{n+1} v) = lam^n I_C(v) and, for lam >= 1, I_{lam C}(v) >= I_C(v)."""
    if lam <= 0:
        raise ValueError("scale factor must be positive")
    n = body.dim - 1
    scaled = body.scale(lam)
    v_grid = np.asarray(v_grid, dtype=float)
    base, _ = upper_bound(body, v_grid)
    big, _ = upper_bound(scaled, lam ** (n + 1) * v_grid)
    report = AuditReport("scaling", info={"lambda": lam})
    eq = float(np.max(np.abs(big - lam**n * base)))
    report.check("equality", eq, tol, eq <= tol)
    if lam >= 1:
        same, _ = upper_bound(scaled, v_grid)
        one = float(np.min(same - base))
        report.check("monotone_in_scale", one, tol, one >= -tol)
    return report


def strict_subadditivity_probe(curve: ProfileCurve, pairs, provenance: str | None = None) -> AuditReport:
    """Margins I(v1) + I(v2) - I(v1 + v2), interpolating Y linearly between samples."""
    v, val, unc = curve.select(provenance)
    e = (curve.n + 1) / curve.n

    def interp(x):
        return float(np.interp(x, v, val**e)) ** (1 / e), float(np.interp(x, v, unc))

    report = AuditReport("subadditivity")
    margins = []
    for k, (v1, v2) in enumerate(pairs):
        if v1 + v2 >= curve.total_volume:
            raise VolumeOutOfRange(f"pair ({v1}, {v2}) exceeds the body volume")
        (a, ua), (b, ub), (c, uc) = interp(v1), interp(v2), interp(v1 + v2)
        margin = a + b - c
        slack = ua + ub + uc
        margins.append(margin)
        report.check(f"pair{k}", margin, slack, margin > slack)
    report.info["pairs"] = [list(map(float, p)) for p in pairs]
    report.info["margins"] = [float(m) for m in margins]
    return report


def curve_constants(curve: ProfileCurve, provenance: str | None = None) -> tuple[float, float]:
    """(m, M) with I(v) >= m v^{n/(n+1)} for v <= |C|/2 and I^{(n+1)/n}(v) <= M v, over the samples."""
    v, val, _ = curve.select(provenance)
    n = curve.n
    low = v <= curve.total_volume / 2
    m = float(np.min(val[low] / v[low] ** (n / (n + 1))))
    big_m = float(np.max(val ** ((n + 1) / n) / v))
    return m, big_m


def curvature_audit(
    curve: ProfileCurve | None,
    body: ConvexBody,
    v: float,
    tol: float = 1e-3,
    rel_step: float = 1e-5,
    provenance: str | None = None,
) -> AuditReport:
    """Slope of the upper-bound profile against the witness curvature at ``v``.

    The curve (one provenance; "upper" when it mixes several) supplies the
    constants m and M of the scaled curvature bound.

    Mean curvature is normalised as the mean of the principal curvatures, so
    a sphere of radius rho has H = 1 / rho.
    """
    fam = candidate_family(body)
    total = fam.total
    value, witness = upper_bound(body, v)
    if witness["kind"] != "ball":
        raise WitnessNotBall(f"witness at v={v} is a {witness['kind']}, not a geodesic ball")
    step = rel_step * total
    (up, down), _ = upper_bound(body, np.array([v + step, v - step]))
    slope = (up - down) / (2 * step)
    curv = 1.0 / witness["radius"]
    n = body.dim - 1
    if curve is None:
        grid = total * np.linspace(0.02, 0.98, 49)
        curve = profile_curve(body, grid, ("upper",))
    if provenance is None and len(curve.provenances()) > 1 and "upper" in curve.provenances():
        provenance = "upper"
    m, big_m = curve_constants(curve, provenance)
    scaled_h = v ** (1 / (n + 1)) * curv
    ceiling = big_m * n / ((n + 1) * m ** (1 / n))
    report = AuditReport(
        "curvature",
        info={
            "v": v,
            "value": value,
            "slope": slope,
            "H": curv,
            "radius": witness["radius"],
            "scaled_H": scaled_h,
            "ceiling": ceiling,
            "m": m,
            "M": big_m,
            "convention": "H = mean of principal curvatures (1/rho for balls)",
        },
    )
    report.check("slope_matches_H", abs(slope - curv), tol, abs(slope - curv) <= tol)
    report.check("scaled_curvature_bound", scaled_h - ceiling, 0.0, scaled_h <= ceiling * (1 + 1e-12))
    return report

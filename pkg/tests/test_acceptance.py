"""Acceptance criteria, one test each; a summary line per criterion is printed at the end."""

import math

import numpy as np
import pytest

from isoprofile.cones import cone_profile, geodesic_ball_in_cone, solid_angle, tangent_cone
from isoprofile.convergence import (
    dilatation_convergence_experiment,
    inscribed_polygon_sequence,
    profile_convergence_experiment,
    small_volume_experiment,
)
from isoprofile.convex import make_ball, make_polytope, unit_ball_volume, volume
from isoprofile.density import (
    connectedness_check,
    c2_constant,
    dichotomy_check,
    epsilon_threshold,
    f1,
    speckled_half,
)
from isoprofile.grid import make_grid
from isoprofile.oracle import exhaustive_region, grid_oracle
from isoprofile.profile import (
    ProfileCurve,
    ProfileSample,
    concavity_audit,
    curvature_audit,
    profile_curve,
    scaling_audit,
    square_profile,
    upper_bound,
)
from isoprofile.transport import analytic_lip_bound, map_diagnostics

from conftest import random_polygon, triangle345, unit_disk, unit_square

MAKERS = (unit_square, unit_disk, triangle345)


def _finish(criterion, number, failures, detail):
    criterion(number, not failures, "; ".join(failures + [detail]) if failures else detail)
    assert not failures, failures


def test_criterion_01_cone_profile(criterion):
    failures = []
    worst = 0.0
    for alpha in (math.pi / 6, math.pi / 2, math.pi):
        for v in (1e-3, 0.05, 1.0, 7.5):
            _, per = geodesic_ball_in_cone(alpha, v, n=1)
            worst = max(worst, abs(per - float(cone_profile(alpha, 1, v))))
    if worst > 1e-12:
        failures.append(f"formula vs construction {worst:.2e}")
    # truncated cones: the apex region of a body whose sharpest boundary point has angle alpha
    t = math.tan(math.pi / 6)
    cases = [
        ("pi/6", math.pi / 6, make_polytope([[0, 0], [1, 0], [1, t]]), [0, 0]),
        ("pi/2", math.pi / 2, make_polytope([[0, 0], [1, 0], [1, 1], [0, 1]]), [0, 0]),
        ("pi", math.pi, make_ball([0, 0], 2.0), None),
    ]
    v = 0.05
    errs = []
    for label, alpha, body, apex in cases:
        if apex is not None:
            assert solid_angle(tangent_cone(body, apex))[0] == pytest.approx(alpha, abs=1e-12)
        ref = float(cone_profile(alpha, 1, v))
        orc = grid_oracle(body, v, 96, seed=0)
        rel = (orc.perimeter - ref) / ref
        errs.append(f"{label} {rel:+.2%}")
        if abs(rel) > 0.05:
            failures.append(f"oracle at alpha={label}: {orc.perimeter:.5f} vs {ref:.5f} ({rel:+.2%})")
    _finish(criterion, 1, failures, f"formula defect {worst:.1e}; oracle {', '.join(errs)}")


def test_criterion_02_square_profile(criterion, square):
    failures = []
    v = np.round(np.arange(0.02, 0.981, 0.02), 12)
    vals, _ = upper_bound(square, v)
    dev = float(np.max(np.abs(vals - square_profile(v))))
    if dev > 1e-6:
        failures.append(f"upper bound deviation {dev:.2e}")
    errs = []
    for x in (0.1, 0.3, 0.5):
        orc = grid_oracle(square, x, 64, seed=0)
        ref = float(square_profile(x))
        rel = abs(orc.perimeter - ref) / ref
        errs.append(f"{rel:.2%}")
        if rel > 0.05:
            failures.append(f"oracle at v={x}: {rel:.2%}")
    _finish(criterion, 2, failures, f"upper deviation {dev:.1e}; oracle errors {', '.join(errs)}")


def test_criterion_03_concavity(criterion):
    failures = []
    parts = []
    for make in MAKERS:
        body = make()
        total = volume(body)[0]
        curve = profile_curve(body, total * np.round(np.arange(0.02, 0.981, 0.02), 12))
        rep = concavity_audit(curve, tol=1e-9)
        if not rep.passed:
            failures.append(f"{body.name} upper: {rep.checks}")
        parts.append(f"{body.name} {rep.checks['concavity']['value']:.1e}")
        ocurve = profile_curve(body, total * np.round(np.arange(0.1, 0.91, 0.1), 12), ("oracle",), seed=0)
        _, val, unc = ocurve.select("oracle")
        sigma_i = float(unc.max())
        sigma_y = float(np.max(2 * val * unc))  # y = I^2 in the plane
        orep = concavity_audit(ocurve, tol=3 * sigma_y, symmetry_tol=3 * sigma_i, monotone_tol=3 * sigma_i)
        if not orep.passed:
            failures.append(f"{body.name} oracle: {orep.checks}")
    # negative control: one sample dented by 20%
    v = np.round(np.arange(0.02, 0.981, 0.02), 12)
    bad = ProfileCurve("square", 1.0, 1)
    for k, (x, y) in enumerate(zip(v, square_profile(v))):
        bad.add(ProfileSample(float(x), float(y) * (0.8 if k == 10 else 1.0), "analytic"))
    if concavity_audit(bad).passed:
        failures.append("corrupted curve passed")
    _finish(criterion, 3, failures, f"upper defects {', '.join(parts)}; oracle within 3 sigma; control FAILs")


def test_criterion_04_scaling(criterion):
    failures = []
    worst_eq, worst_one = 0.0, math.inf
    for make in MAKERS:
        body = make()
        total = volume(body)[0]
        grid = total * np.round(np.arange(0.02, 0.981, 0.04), 12)
        for lam in (0.5, 2.0, 3.0):
            rep = scaling_audit(body, lam, grid, tol=1e-9)
            worst_eq = max(worst_eq, rep.checks["equality"]["value"])
            if "monotone_in_scale" in rep.checks:
                worst_one = min(worst_one, rep.checks["monotone_in_scale"]["value"])
            if not rep.passed:
                failures.append(f"{body.name} lambda={lam}: {rep.checks}")
    _finish(criterion, 4, failures, f"equality defect {worst_eq:.1e}; one-sided min {worst_one:.3g}")


def test_criterion_05_lipschitz_bound(criterion):
    failures = []
    if analytic_lip_bound(1, 2) != 11:
        failures.append(f"analytic_lip_bound(1, 2) = {analytic_lip_bound(1, 2)}")
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        a = random_polygon(rng)
        b = random_polygon(rng, center=rng.uniform(-2, 2, 2))
        d = map_diagnostics(a, b, n_pairs=10_000, seed=0)
        worst = max(worst, max(d["lip_forward"], d["lip_inverse"]) / d["analytic_bound"])
        if max(d["lip_forward"], d["lip_inverse"]) > d["analytic_bound"]:
            failures.append(f"pair exceeds bound: {d}")
    disk = make_ball([0, 0], 1.0)
    res = dilatation_convergence_experiment(inscribed_polygon_sequence(1.0, [16, 32, 64]), disk, 10_000, seed=0)
    last = res.table[-1]
    lip64 = max(last["lip_forward"], last["lip_inverse"])
    if not (res.checks["forward_nonincreasing"]["passed"] and res.checks["inverse_nonincreasing"]["passed"]):
        failures.append(f"k-gon dilatations not nonincreasing: {res.table}")
    if lip64 > 1.01:
        failures.append(f"k=64 dilatation {lip64:.4f} > 1.01")
    _finish(criterion, 5, failures, f"bound 11; worst empirical/bound {worst:.3f}; k=64 dilatation {lip64:.4f}")


def test_criterion_06_profile_convergence(criterion):
    disk = make_ball([0, 0], 1.0)
    seq = inscribed_polygon_sequence(1.0, [16, 32, 64])
    lam = np.round(np.arange(0.1, 0.91, 0.1), 12)
    res = profile_convergence_experiment(seq, disk, lam, tol=0.05, spot_lambda=0.5, resolution=64, seed=0)
    failures = [f"{k}: {c}" for k, c in res.checks.items() if not c["passed"]]
    spot = res.info["spot"]
    if abs(spot["limit"] - 2.0) > 1e-9:
        failures.append(f"limit J(1/2) = {spot['limit']}")
    sups = [r["sup_deviation"] for r in res.table]
    detail = f"sup deviations {', '.join(f'{s:.4f}' for s in sups)}; J_P64(1/2) oracle {spot['oracle']:.4f} vs 2.0"
    _finish(criterion, 6, failures, detail)


def test_criterion_07_c2(criterion):
    failures = []
    c2 = c2_constant(1)
    if abs(c2 - 16 / 25) > 1e-10:
        failures.append(f"c2(1) = {c2!r}")
    defects = []
    for n in (1, 2, 3):
        d = abs(f1(n, c2_constant(n)) + 0.5)
        defects.append(d)
        if d > 1e-9:
            failures.append(f"f1 defect n={n}: {d:.2e}")
    _finish(criterion, 7, failures, f"c2(1) - 16/25 = {c2 - 16 / 25:.1e}; max f1 defect {max(defects):.1e}")


def _epsilon(body, region):
    total = volume(body)[0]
    v = region.volume
    return epsilon_threshold(1, v, total, upper_bound(body, v)[0], unit_ball_volume(2))


def test_criterion_08_density_dichotomy(criterion, fleet_minimizers):
    failures = []
    tallies = {"Vacuous": 0, "Pass": 0, "Fail": 0}
    for (name, lam), (body, res) in sorted(fleet_minimizers.items()):
        rep = dichotomy_check(res.region, body, _epsilon(body, res.region), probe_count=512, seed=0)
        for k, c in rep.counts().items():
            tallies[k] += c
        if rep.fails:
            failures.append(f"{name} lambda={lam}: {rep.fails} Fail")
    # negative control: half of the square plus isolated 2x2 specks (a sparse checkerboard)
    square = unit_square()
    grid = make_grid(square, 64)
    control, probes = speckled_half(grid, square)
    rep = dichotomy_check(control, square, _epsilon(square, control), probes=probes)
    if rep.fails < 1:
        failures.append(f"negative control gave {rep.counts()}")
    _finish(criterion, 8, failures, f"fleet verdicts {tallies}; control {rep.fails}/{len(probes)} Fail")


def test_criterion_09_connectedness(criterion, fleet_minimizers):
    failures = []
    for (name, lam), (_, res) in sorted(fleet_minimizers.items()):
        conn = connectedness_check(res.region)
        if conn != (True, True):
            failures.append(f"{name} lambda={lam}: {conn}")
    _finish(criterion, 9, failures, f"(True, True) on {len(fleet_minimizers)} minimisers")


def test_criterion_10_small_volume(criterion, square):
    failures = []
    v = np.linspace(1e-4, 1 / math.pi, 60)
    ratio = upper_bound(square, v)[0] / cone_profile(math.pi / 2, 1, v)
    dev = float(np.max(np.abs(ratio - 1)))
    if dev > 1e-9:
        failures.append(f"square ratio deviates by {dev:.2e}")
    tri = triangle345()
    res = small_volume_experiment(tri, [0.01 * volume(tri)[0]], resolution=96, seed=0)
    failures += [f"{k}: {c}" for k, c in res.checks.items() if not c["passed"]]
    row = res.table[-1]
    if not np.allclose(tri.vertices[row["nearest_vertex"]], [4, 0]):
        failures.append(f"witness at vertex {tri.vertices[row['nearest_vertex']]}")
    detail = (
        f"square ratio defect {dev:.1e}; triangle oracle ratio {row['oracle_ratio']:.4f} at (4, 0), "
        f"rescaled Hausdorff {row['hausdorff_rescaled']:.3f} <= {4 * row['h_rescaled']:.3f}"
    )
    _finish(criterion, 10, failures, detail)


def test_criterion_11_curvature(criterion, square):
    rep = curvature_audit(None, square, 0.1, tol=1e-3)
    failures = [f"{k}: {c}" for k, c in rep.checks.items() if not c["passed"]]
    detail = f"slope {rep.info['slope']:.6f} vs 1/rho {rep.info['H']:.6f}"
    _finish(criterion, 11, failures, detail)


def test_criterion_12_exhaustive_vs_anneal(criterion):
    rng = np.random.default_rng(12)
    failures = []
    sizes = []
    while len(sizes) < 10:
        body = random_polygon(rng)
        grid = make_grid(body, int(rng.integers(4, 10)))
        if not 4 <= grid.n_inside <= 24 or (len(sizes) % 2 and grid.n_inside < 18):
            continue  # every other instance near the exhaustive limit
        m = int(rng.integers(1, grid.n_inside))
        ex = exhaustive_region(grid, m).perimeter
        an = grid_oracle(body, m * grid.cell_volume, grid=grid, seed=int(rng.integers(1 << 30))).perimeter
        sizes.append(grid.n_inside)
        if an != ex:
            failures.append(f"{grid.n_inside} cells, m={m}: anneal {an!r} vs exhaustive {ex!r}")
    _finish(criterion, 12, failures, f"10 instances with {min(sizes)}..{max(sizes)} cells, all equal")

"""Command-line entry point ``isoprofile``.

Exit codes: 0 success, 2 a checked property failed, 1 computation error,
64 usage error. ``ISOPROFILE_SEED`` supplies the seed when ``--seed`` is
absent.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import IsoprofileError

EXIT_OK, EXIT_ERROR, EXIT_FAIL, EXIT_USAGE = 0, 1, 2, 64

TOLERANCES = {
    "body": (),
    "profile": (),
    "oracle": (),
    "cone-angles": (),
    "map-lip": (),
    "audit:concavity": ("concavity", "symmetry", "monotone"),
    "audit:scaling": ("equality",),
    "audit:subadd": (),
    "audit:curvature": ("curvature",),
    "density-audit": ("grid_tol",),
    "converge": ("sup", "lip"),
    "small-volume": ("ratio_lo", "ratio_hi"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- helpers


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _parse_range(text: str) -> np.ndarray:
    """``a:b:step`` (inclusive of b up to rounding) or a comma list."""
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise UsageError(f"bad range {text!r}, expected a:b:step")
        a, b, step = parts
        count = int(np.floor((b - a) / step + 1e-9)) + 1
        return np.round(a + step * np.arange(count), 12)
    return np.array([float(p) for p in text.split(",") if p.strip()])


def _parse_tols(items, key: str) -> dict:
    """``name=value`` pairs; a bare number sets the subcommand's main tolerance."""
    allowed = TOLERANCES.get(key, ())
    out = {}
    for item in items or []:
        if "=" not in item:
            if not allowed:
                raise UsageError(f"{key} takes no tolerances")
            item = f"{allowed[0]}={item}"
        name, value = item.split("=", 1)
        if name not in allowed:
            raise UsageError(f"unknown tolerance {name!r} for {key}; allowed: {', '.join(allowed) or 'none'}")
        try:
            out[name] = float(value)
        except ValueError:
            raise UsageError(f"tolerance {name} needs a number, got {value!r}") from None
    return out


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("ISOPROFILE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"ISOPROFILE_SEED must be an integer, got {env!r}") from None
    return 0


class Output:
    """Collects the metadata header and writes CSV or JSON payloads."""

    def __init__(self, args, subcommand: str):
        self.args = args
        self.start = time.perf_counter()
        self.meta = {
            "tool": "isoprofile",
            "version": __version__,
            "subcommand": subcommand,
            "seed": args.seed_value,
            "workers": args.workers,
        }

    def _finish(self) -> dict:
        return dict(self.meta, wall_time=round(time.perf_counter() - self.start, 6))

    def _emit(self, text: str, path: str | None) -> None:
        if path and path != "-":
            with open(path, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)

    def json(self, data, path: str | None = None) -> None:
        from .io import dumps_json

        self._emit(dumps_json({"meta": self._finish(), "data": data}) + "\n", path or self.args.output)

    def csv(self, rows, columns, extra: dict | None = None, path: str | None = None) -> None:
        from .io import write_csv

        meta = self._finish()
        meta.update(extra or {})
        self._emit(write_csv(rows, columns, meta), path or self.args.output)

    def table(self, rows, columns, extra: dict | None = None) -> None:
        if self.args.format == "json":
            self.json({"rows": rows, **(extra or {})})
        else:
            self.csv(rows, columns, extra)


# ---------------------------------------------------------------- subcommands


def cmd_body(args, out: Output) -> int:
    from .convex import volume
    from .io import body_summary, load_body

    body = load_body(args.body)
    vol = volume(body, seed=args.seed_value, workers=args.workers)[0]
    out.json(body_summary(body, vol))
    return EXIT_OK


def cmd_profile(args, out: Output) -> int:
    from .convex import volume
    from .io import curve_to_csv, load_body
    from .profile import profile_curve

    body = load_body(args.body)
    grid = _parse_range(args.v_grid)
    if args.relative:
        grid = grid * volume(body)[0]
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    bad = set(methods) - {"upper", "lower", "oracle"}
    if bad:
        raise UsageError(f"unknown methods {sorted(bad)}")
    curve = profile_curve(body, grid, methods, args.resolution, args.seed_value, args.workers, body_id=body.name)
    if args.format == "json":
        rows = [
            {"v": s.v, "method": s.provenance, "value": s.value, "uncertainty": s.uncertainty, "witness": s.witness}
            for s in curve.samples
        ]
        out.json({"body": body.to_dict(), "total_volume": curve.total_volume, "n": curve.n, "samples": rows})
        return EXIT_OK
    meta = out._finish()
    meta["body"] = body.to_dict()
    meta["mean_curvature_convention"] = "mean of principal curvatures"
    out._emit(curve_to_csv(curve, meta), args.output)
    return EXIT_OK


def _load_curve(path: str):
    from .io import body_from_dict, curve_from_csv, read_csv

    text = _read(path)
    meta, _ = read_csv(text)
    body = body_from_dict(meta["body"]) if "body" in meta else None
    return curve_from_csv(text), body


def cmd_audit(args, out: Output) -> int:
    from .io import load_body
    from .profile import concavity_audit, curvature_audit, scaling_audit, strict_subadditivity_probe

    tols = args.tols
    curve, body = _load_curve(args.profile)
    if args.body:
        body = load_body(args.body)
    if args.kind == "concavity":
        tol = tols.get("concavity", 1e-9)
        report = concavity_audit(curve, args.provenance, tol, tols.get("symmetry"), tols.get("monotone"))
        reports = [report]
    elif args.kind == "scaling":
        if body is None:
            raise UsageError("scaling audit needs a body (profile metadata or --body)")
        if args.provenance:
            v, _, _ = curve.select(args.provenance)
        else:
            v = np.unique([s.v for s in curve.samples])  # only the volumes matter here
        lams = _parse_range(args.lam) if args.lam else np.array([0.5, 2.0, 3.0])
        reports = [scaling_audit(body, float(lam), v, tols.get("equality", 1e-9)) for lam in lams]
    elif args.kind == "subadd":
        if not args.pairs:
            raise UsageError("subadd audit needs --pairs v1,v2;v1,v2")
        pairs = [tuple(float(x) for x in p.split(",")) for p in args.pairs.split(";") if p.strip()]
        reports = [strict_subadditivity_probe(curve, pairs, args.provenance)]
    else:
        if body is None:
            raise UsageError("curvature audit needs a body (profile metadata or --body)")
        if args.v is None:
            raise UsageError("curvature audit needs --v")
        reports = [curvature_audit(curve, body, args.v, tols.get("curvature", 1e-3), provenance=args.provenance)]
    passed = all(r.passed for r in reports)
    out.json({"audit": args.kind, "passed": passed, "reports": [r.to_dict() for r in reports]})
    return EXIT_OK if passed else EXIT_FAIL


def cmd_cone_angles(args, out: Output) -> int:
    from .cones import min_solid_angle_vertex
    from .io import load_body

    body = load_body(args.body)
    mina = min_solid_angle_vertex(body, workers=args.workers)
    coords = [f"x{i}" for i in range(body.dim)]
    rows = []
    for i, (p, a) in enumerate(zip(body.vertices, mina.angles)):
        row = {"vertex_index": i, "alpha": float(a), "is_min": i == mina.vertex_index}
        row.update({c: float(x) for c, x in zip(coords, p)})
        rows.append(row)
    out.table(rows, ["vertex_index", *coords, "alpha", "is_min"])
    return EXIT_OK


def cmd_map_lip(args, out: Output) -> int:
    from .io import load_body
    from .transport import map_diagnostics

    src, dst = load_body(args.source), load_body(args.target)
    diag = map_diagnostics(src, dst, args.pairs, args.seed_value, args.workers)
    out.json(diag)
    return EXIT_OK if max(diag["lip_forward"], diag["lip_inverse"]) <= diag["analytic_bound"] else EXIT_FAIL


def cmd_density(args, out: Output) -> int:
    from .convex import unit_ball_volume, volume
    from .density import connectedness_check, dichotomy_check, epsilon_threshold, lower_density_check
    from .io import load_body, load_region
    from .profile import upper_bound

    body = load_body(args.body)
    region = load_region(args.region, body)
    total = volume(body)[0]
    v = region.volume
    i_v = upper_bound(body, v)[0]
    n = body.dim - 1
    eps = epsilon_threshold(n, v, total, i_v, unit_ball_volume(n + 1))
    grid_tol = args.tols.get("grid_tol", args.grid_tol)
    if isinstance(grid_tol, str) and grid_tol not in ("cell", "layer"):
        try:
            grid_tol = float(grid_tol)
        except ValueError:
            raise UsageError(f"--grid-tol must be 'cell', 'layer' or a number, got {grid_tol!r}") from None
    report = dichotomy_check(
        region, body, eps, args.probes, args.seed_value, grid_tol, workers=args.workers,
        body_id=os.path.basename(args.body), region_id=os.path.basename(args.region),
    )
    lower_density_check(region, body, eps, seed=args.seed_value, report=report)
    conn = connectedness_check(region)
    data = report.to_dict()
    data.update({"volume": v, "profile_value": i_v, "connected": list(conn)})
    out.json(data)
    ok = report.fails == 0 and report.lower_density_fails == 0
    return EXIT_OK if ok else EXIT_FAIL


def _experiment_output(res, out: Output, verdict_path: str | None) -> int:
    from .io import dumps_json

    cols = []
    for row in res.table:
        for k in row:
            if k not in cols:
                cols.append(k)
    rows = [{k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in r.items()} for r in res.table]
    verdict = {"name": res.name, "passed": res.passed, "checks": res.checks, "info": res.info}
    if out.args.format == "json":
        out.json({"verdict": verdict, "table": res.table})
    else:
        out.csv(rows, cols, {"experiment": res.name})
        text = dumps_json(verdict) + "\n"
        if verdict_path:
            with open(verdict_path, "w") as fh:
                fh.write(text)
        else:
            sys.stderr.write(text)
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_converge(args, out: Output) -> int:
    from .convergence import run_experiment

    spec = json.loads(_read(args.experiment))
    if args.tols:
        spec.setdefault("tolerances", {}).update(args.tols)
    explicit = args.seed is not None or "ISOPROFILE_SEED" in os.environ
    seed = args.seed_value if explicit else int(spec.get("seed", 0))
    out.meta["seed"] = seed
    res = run_experiment(spec, args.workers, seed)
    return _experiment_output(res, out, args.verdict)


def cmd_small_volume(args, out: Output) -> int:
    from .convergence import small_volume_experiment
    from .convex import volume
    from .io import load_body

    body = load_body(args.body)
    v_list = _parse_range(args.v_list)
    if args.relative:
        v_list = v_list * volume(body)[0]
    lo = args.tols.get("ratio_lo", 0.95)
    hi = args.tols.get("ratio_hi", 1.10)
    res = small_volume_experiment(
        body, v_list, args.resolution, args.seed_value, args.workers, ratio_range=(lo, hi), oracle=not args.no_oracle
    )
    return _experiment_output(res, out, args.verdict)


def cmd_oracle(args, out: Output) -> int:
    from .convex import volume
    from .grid import connectedness
    from .io import dumps_json, load_body
    from .oracle import grid_oracle

    body = load_body(args.body)
    v = args.v * volume(body)[0] if args.relative else args.v
    res = grid_oracle(body, v, args.resolution, args.strategy, args.seed_value, workers=args.workers, stencil=args.stencil)

    data = {
        "v_target": v,
        "volume": res.volume,
        "cells": res.region.count,
        "perimeter": res.perimeter,
        "uncertainty": res.uncertainty,
        "strategy": res.strategy,
        "restart_perimeters": res.restart_perimeters,
        "connected": list(connectedness(res.region)),
        "h": res.region.grid.h,
    }
    if args.region_out:
        with open(args.region_out, "w") as fh:
            fh.write(dumps_json(res.region.to_dict()) + "\n")
    out.json(data)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default: $ISOPROFILE_SEED or 0)")
    common.add_argument("--workers", type=int, default=1, help="worker threads")
    common.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE", help="named tolerance override")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", "-o", default=None, help="output file (default: stdout)")

    p = _Parser(prog="isoprofile", description="Isoperimetric profiles of convex bodies.")
    p.add_argument("--version", action="version", version=f"isoprofile {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser(
        "body", parents=[common],
        help="summary of a convex body",
        description="Volume, inradius, circumradius and Chebyshev center of a compact convex body with interior.",
    )
    s.add_argument("body")

    s = sub.add_parser(
        "profile", parents=[common],
        help="sample the isoperimetric profile",
        description=(
            "Sample I_C(v), the least relative perimeter of regions of volume v in C. "
            "'upper' uses balls centred on the boundary, chords and their complements; "
            "'lower' the ball-transfer bound M min(v, |C|-v)^{n/(n+1)}; "
            "'oracle' the annealed grid minimiser."
        ),
    )
    s.add_argument("body")
    s.add_argument("--v-grid", required=True, help="a:b:step or comma list of volumes")
    s.add_argument("--relative", action="store_true", help="read the grid as fractions of |C|")
    s.add_argument("--methods", default="upper")
    s.add_argument("--resolution", type=int, default=64)

    s = sub.add_parser(
        "audit", parents=[common],
        help="check structural properties of a profile CSV",
        description=(
            "concavity: I^{(n+1)/n} is concave, symmetric about |C|/2 and monotone on each half. "
            "scaling: I_{lC}(l^{n+1} v) = l^n I_C(v) and I_{lC}(v) >= I_C(v) for l >= 1. "
            "subadd: I(v1) + I(v2) > I(v1 + v2). "
            "curvature: the one-sided derivatives of I bracket the mean curvature of the witness."
        ),
    )
    s.add_argument("kind", choices=("concavity", "scaling", "subadd", "curvature"))
    s.add_argument("profile")
    s.add_argument("--provenance", default=None)
    s.add_argument("--body", default=None, help="body JSON (default: from the CSV metadata)")
    s.add_argument("--lam", default=None, help="scale factors for the scaling audit")
    s.add_argument("--pairs", default=None, help="volume pairs for subadd, 'v1,v2;v1,v2'")
    s.add_argument("--v", type=float, default=None, help="volume for the curvature audit")

    s = sub.add_parser(
        "cone-angles", parents=[common],
        help="solid angles of the vertex tangent cones",
        description="Solid angle of the tangent cone at every vertex; the smallest gives the small-volume profile.",
    )
    s.add_argument("body")

    s = sub.add_parser(
        "map-lip", parents=[common],
        help="radial bilipschitz map between two bodies",
        description=(
            "Dilatations of the radial map between two bodies sharing an interior ball, against the bound "
            "1 + (R/r)(R/r - 1)((R/r)^2 + 1)."
        ),
    )
    s.add_argument("source")
    s.add_argument("target")
    s.add_argument("--pairs", type=int, default=10_000)

    s = sub.add_parser(
        "density-audit", parents=[common],
        help="density dichotomy on a grid region",
        description=(
            "Checks h(x, R) <= eps => h(x, R/2) = 0 at random probes, the lower density bound "
            "P(E, B_C(x, r)) >= M r^n, and connectedness of the region and its complement."
        ),
    )
    s.add_argument("body")
    s.add_argument("region")
    s.add_argument("--probes", type=int, default=512)
    s.add_argument("--grid-tol", default=None, help="'cell', 'layer' or a number")

    s = sub.add_parser(
        "converge", parents=[common],
        help="run a convergence experiment",
        description=(
            "Along a Hausdorff-convergent sequence C_k -> C: profiles J_{C_k} -> J_C, dilatations of the "
            "radial maps -> 1, or minimisers and free boundaries -> those of C."
        ),
    )
    s.add_argument("experiment")
    s.add_argument("--verdict", default=None, help="file for the JSON verdict (default: stderr)")

    s = sub.add_parser(
        "small-volume", parents=[common],
        help="small-volume asymptotics of a polytope",
        description=(
            "I_C(v) / I_{C_min}(v) -> 1 as v -> 0, with minimisers near the vertex of smallest solid angle."
        ),
    )
    s.add_argument("body")
    s.add_argument("--v-list", required=True)
    s.add_argument("--relative", action="store_true")
    s.add_argument("--resolution", type=int, default=96)
    s.add_argument("--no-oracle", action="store_true")
    s.add_argument("--verdict", default=None)

    s = sub.add_parser(
        "oracle", parents=[common],
        help="grid minimiser of relative perimeter",
        description="Least relative perimeter among grid regions of a given volume (annealing or exhaustive).",
    )
    s.add_argument("body")
    s.add_argument("--v", type=float, required=True)
    s.add_argument("--relative", action="store_true")
    s.add_argument("--resolution", type=int, default=64)
    s.add_argument("--strategy", choices=("anneal", "exhaustive"), default="anneal")
    s.add_argument("--stencil", choices=("isotropic", "face"), default="isotropic")
    s.add_argument("--region-out", default=None)
    return p


COMMANDS = {
    "body": cmd_body,
    "profile": cmd_profile,
    "audit": cmd_audit,
    "cone-angles": cmd_cone_angles,
    "map-lip": cmd_map_lip,
    "density-audit": cmd_density,
    "converge": cmd_converge,
    "small-volume": cmd_small_volume,
    "oracle": cmd_oracle,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        if args.workers < 1:
            raise UsageError("--workers must be positive")
        key = f"audit:{args.kind}" if args.command == "audit" else args.command
        args.tols = _parse_tols(args.tol, key)
        args.seed_value = _seed(args)
        out = Output(args, args.command)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (IsoprofileError, ValueError, KeyError, OSError, AssertionError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

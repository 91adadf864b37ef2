"""File formats: JSON bodies and regions, CSV tables with a metadata header.

CSV files start with one ``# {json}`` comment line carrying metadata, then
a header row. Floats are written with 12 significant digits and ``.`` as
decimal separator regardless of locale.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .convex import ConvexBody, make_ball, make_polytope
from .errors import UnsupportedBody
from .grid import GridRegion
from .profile import ProfileCurve, ProfileSample

DIGITS = 12


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, f".{DIGITS}g")
    return str(x)


def round_floats(obj):
    """Recursively round floats to 12 significant digits for JSON output."""
    if isinstance(obj, dict):
        return {str(k): round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float(format(x, f".{DIGITS}g"))
    return obj


def dumps_json(obj) -> str:
    return json.dumps(round_floats(obj), indent=2, sort_keys=False)


# ---------------------------------------------------------------- bodies


def body_from_dict(data: dict) -> ConvexBody:
    kind = str(data.get("kind", "polytope")).lower()
    name = data.get("name", kind)
    if kind == "polytope":
        body = make_polytope(data["vertices"], name=name)
    elif kind == "ball":
        body = make_ball(data["center"], float(data["radius"]), name=name)
    else:
        raise UnsupportedBody(f"unknown body kind {kind!r}")
    if "dim" in data and int(data["dim"]) != body.dim:
        raise UnsupportedBody(f"declared dim {data['dim']} does not match the data ({body.dim})")
    return body


def load_body(path) -> ConvexBody:
    with open(path) as fh:
        return body_from_dict(json.load(fh))


def save_body(body: ConvexBody, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_json(body.to_dict()))


def body_summary(body: ConvexBody, vol: float) -> dict:
    return {
        "dim": body.dim,
        "kind": body.kind,
        "volume": vol,
        "inradius": body.inradius,
        "circumradius": body.circumradius,
        "chebyshev_center": [float(c) for c in body.chebyshev_center],
    }


# ---------------------------------------------------------------- regions


def load_region(path, body: ConvexBody) -> GridRegion:
    with open(path) as fh:
        return GridRegion.from_dict(json.load(fh), body)


def save_region(region: GridRegion, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_json(region.to_dict()))


# ---------------------------------------------------------------- CSV


def write_csv(rows, columns, meta: dict | None = None) -> str:
    out = io.StringIO()
    if meta is not None:
        out.write("# " + json.dumps(round_floats(meta), sort_keys=True) + "\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in _vals(row, columns)])
    return out.getvalue()


def _vals(row, columns):
    if isinstance(row, dict):
        return [row.get(c, "") for c in columns]
    return list(row)


def read_csv(text: str) -> tuple[dict, list[dict]]:
    """(metadata, rows) from a CSV string written by :func:`write_csv`."""
    lines = text.splitlines()
    meta = {}
    while lines and lines[0].startswith("#"):
        meta.update(json.loads(lines.pop(0)[1:].strip() or "{}"))
    return meta, list(csv.DictReader(lines))


def curve_to_csv(curve: ProfileCurve, meta: dict | None = None) -> str:
    meta = dict(meta or {})
    meta.update({"body_id": curve.body_id, "total_volume": curve.total_volume, "n": curve.n})
    rows = [
        {
            "v": s.v,
            "method": s.provenance,
            "value": s.value,
            "uncertainty": s.uncertainty,
            "witness": json.dumps(round_floats(s.witness), sort_keys=True),
        }
        for s in curve.samples
    ]
    return write_csv(rows, ["v", "method", "value", "uncertainty", "witness"], meta)


def curve_from_csv(text: str) -> ProfileCurve:
    meta, rows = read_csv(text)
    if "total_volume" not in meta or "n" not in meta:
        raise ValueError("profile CSV needs total_volume and n in its metadata line")
    curve = ProfileCurve(meta.get("body_id", "body"), float(meta["total_volume"]), int(meta["n"]))
    for r in rows:
        wit = json.loads(r["witness"]) if r.get("witness") else {}
        curve.add(ProfileSample(float(r["v"]), float(r["value"]), r["method"], float(r.get("uncertainty") or 0.0), wit))
    return curve

"""Text formats: grid functions as CSV plus a JSON sidecar, groups and cocycles as JSON.

Numbers are written with 17 significant digits so that reading back is exact.
"""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .convex_core import GridDomain, GridError, GridFunction
from .deformations import Cocycle, GroupRep, make_cocycle, make_group

FMT = "%.17g"


def fmt(x) -> str:
    return FMT % float(x)


def write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(fmt(v) if not isinstance(v, str) else v for v in r) + "\n")
    return path


def read_rows(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.array([[float(t) for t in line.split(",")] for line in fh if line.strip()], float)
    return header, data.reshape(-1, len(header))


def sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_suffix(p.suffix + ".json")


def dump_json(obj, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def jsonable(obj):
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


# ---------------------------------------------------------------- grid functions

def write_grid_function(f: GridFunction, path, extra=None):
    """Rows y1,y2,value: interior nodes first, then boundary samples (when present)."""
    dom = f.domain
    rows = [(*p, v) for p, v in zip(dom.nodes, f.values)]
    if f.boundary_values is not None:
        rows += [(*p, v) for p, v in zip(dom.boundary_nodes, f.boundary_values)]
    path = write_rows(path, ["y1", "y2", "value"], rows)
    side = {
        "domain": dom.to_dict(),
        "resolution": dom.resolution,
        "spacing": dom.h,
        "convexity_certified": bool(f.convexity_certified),
        "interior_rows": dom.size,
        "boundary_rows": 0 if f.boundary_values is None else len(dom.boundary_nodes),
    }
    if extra:
        side.update(extra)
    dump_json(side, sidecar_path(path))
    return path


def read_grid_function(path, domain: GridDomain | None = None) -> GridFunction:
    side = json.loads(sidecar_path(path).read_text())
    dom = GridDomain.from_dict(side["domain"]) if domain is None else domain
    _, data = read_rows(path)
    n, m = side["interior_rows"], side["boundary_rows"]
    if len(data) != n + m or n != dom.size:
        raise GridError(f"{path}: row count does not match the domain")
    if np.abs(data[:n, :2] - dom.nodes).max(initial=0.0) > 1e-9 * max(1.0, dom.h):
        raise GridError(f"{path}: node coordinates do not match the domain")
    bv = data[n:, 2] if m else None
    return GridFunction(dom, data[:n, 2], bv, bool(side["convexity_certified"]))


# ---------------------------------------------------------------- groups and cocycles

def group_to_json(rep: GroupRep) -> str:
    return json.dumps(rep.to_dict(), indent=2)


def group_from_json(text, strict_cone=True) -> GroupRep:
    d = json.loads(text)
    gens = {l: np.asarray(m, float) for l, m in d["generators"].items()}
    dim = d.get("dim")
    for l, g in gens.items():
        if dim is not None and g.shape != (dim, dim):
            g = g.reshape(dim, dim)  # row-major flat lists
            gens[l] = g
    return make_group(gens, d.get("relators", []), d.get("section"), strict_cone)


def cocycle_to_json(c: Cocycle) -> str:
    return json.dumps(c.to_dict(), indent=2)


def cocycle_from_json(rep: GroupRep, text) -> Cocycle:
    return make_cocycle(rep, {l: np.asarray(v, float) for l, v in json.loads(text).items()})


# ---------------------------------------------------------------- hashes

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for blk in iter(lambda: fh.read(1 << 20), b""):
            h.update(blk)
    return h.hexdigest()

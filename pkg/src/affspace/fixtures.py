"""Explicit groups for tests and demos.

The genus-2 surface group: side pairings of the regular hyperbolic octagon with interior
angles pi/4, realised in SO(2, 1) acting on the Minkowski cone over the unit disk.
"""
from __future__ import annotations

import numpy as np

from .deformations import GroupRep, Splitting, make_group, validate_splitting

MINKOWSKI = np.diag([1.0, 1.0, -1.0])


def rotation(t):
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def boost(L):
    c, s = np.cosh(L), np.sinh(L)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def _side_map(j, i):
    # octagon centred at the apex; side k has outward normal at angle k pi / 4 and
    # hyperbolic distance r from the centre, with cosh r = cot(pi / 8)
    r = np.arccosh(1.0 / np.tan(np.pi / 8))
    return rotation(i * np.pi / 4) @ boost(2 * r) @ rotation(np.pi - j * np.pi / 4)


def octagon_group() -> GroupRep:
    """Generators a, b, c, d with the single relator abABcdCD (upper case = inverse)."""
    inv = np.linalg.inv
    gens = {
        "a": _side_map(2, 0),
        "b": inv(_side_map(3, 1)),
        "c": _side_map(6, 4),
        "d": inv(_side_map(7, 5)),
    }
    return make_group(gens, ["abABcdCD"])


def minkowski_complement(X):
    """Two rows spanning the Minkowski-orthogonal complement of X."""
    n = MINKOWSKI @ np.asarray(X, float)
    _, _, vt = np.linalg.svd(n[None])
    return vt[1:]


def octagon_splitting(rep: GroupRep | None = None, s=0.0) -> Splitting:
    """Split along the separating geodesic fixed by abAB: factors <a, b> and <c, d>.
    X is the unit spacelike fixed vector of abAB, H its Minkowski-orthogonal complement."""
    rep = octagon_group() if rep is None else rep
    lam = rep.matrix("abAB")
    w, v = np.linalg.eig(lam)
    k = int(np.argmin(np.abs(w - 1)))
    X = np.real(v[:, k])
    X = X / np.sqrt(X @ MINKOWSKI @ X)
    if X[np.flatnonzero(np.abs(X) > 1e-12)[0]] < 0:
        X = -X
    split = Splitting(("a", "b"), ("c", "d"), ("abAB",), X, minkowski_complement(X), float(s))
    validate_splitting(rep, split)
    return split

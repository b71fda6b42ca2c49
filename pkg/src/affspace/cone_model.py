"""Cones over a planar section, their duals, and convex domains described by support functions.

A cone C = {t (x, 1) : x in Omega, t > 0} has dual directions (y, -1) with y in the
polar section Omega*. A domain K with recession cone C is the epigraph of s* where
s(y) = sup_K X.(y, -1).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .convex_core import (GridDomain, GridError, GridFunction, conjugate_at, envelope_from_boundary,
                          evaluate_planes, fenchel_tolerance, legendre_transform)
from .shapes import make_shape


class ConeError(ValueError):
    pass


def polar_domain(omega: GridDomain) -> GridDomain:
    if not omega.shape.contains(np.zeros((1, 2)))[0]:
        raise ConeError("origin is not interior to the section")
    return GridDomain(omega.shape.polar(), omega.resolution)


@dataclass(frozen=True, eq=False)
class ConeSpec:
    omega: GridDomain
    omega_star: GridDomain

    @staticmethod
    def from_shape(shape, resolution=65) -> "ConeSpec":
        om = GridDomain(make_shape(shape), resolution)
        return ConeSpec(om, polar_domain(om))

    @staticmethod
    def minkowski(resolution=65) -> "ConeSpec":
        return ConeSpec.from_shape("disk", resolution)

    @property
    def h(self):
        return self.omega_star.h

    def in_cone(self, V, closed=True, tol=1e-12):
        """Future cone membership via the section test nu > 0 and v/nu in Omega."""
        V = np.atleast_2d(np.asarray(V, float))
        nu = V[:, -1]
        ok = nu > tol
        out = np.zeros(len(V), bool)
        if ok.any():
            d = self.omega.shape.distance_to_boundary(V[ok, :-1] / nu[ok, None])
            out[ok] = d >= -tol if closed else d > tol
        if closed:
            out |= np.all(np.abs(V) <= tol, axis=1)
        return out


# ---------------------------------------------------------------- hyperplanes

@dataclass(frozen=True)
class CausalClass:
    kind: str  # "spacelike", "null" or "other"
    Y: tuple

    def __str__(self):
        return self.kind


def classify_hyperplane(cone: ConeSpec, Y, tol=None) -> CausalClass:
    Y = np.asarray(Y, float).ravel()
    if Y.shape[0] != 3:
        raise ConeError("covector must have d + 1 = 3 entries")
    if not np.any(Y):
        raise ConeError("zero covector")
    tol = cone.h if tol is None else tol
    last = Y[-1]
    if last == 0:
        return CausalClass("other", tuple(Y))
    Z = Y if last < 0 else -Y
    with np.errstate(over="ignore"):  # a nearly vertical plane sends y far out: "other"
        y = Z[:-1] / abs(Z[-1])
        d = float(cone.omega_star.shape.distance_to_boundary(y))
    if abs(d) <= tol:
        kind = "null"
    elif d > 0:
        kind = "spacelike"
    else:
        kind = "other"
    return CausalClass(kind, tuple(Y))


# ---------------------------------------------------------------- support functions

@dataclass(frozen=True, eq=False)
class SupportFunction:
    """Support function on the polar section.

    ``s`` holds the grid samples. ``pieces`` (B, a) marks s as the exact maximum of
    affine functions y -> B[k].y + a[k]; ``exact`` is a (value, gradient) pair of
    callables for closed-form support functions. Either one lets the function be
    evaluated off the grid without interpolation.
    """

    cone: ConeSpec
    s: GridFunction
    pieces: tuple | None = None
    exact: tuple[Callable, Callable] | None = None

    def __post_init__(self):
        if self.s.domain is not self.cone.omega_star:
            raise ConeError("support function must live on the cone's polar grid")

    @property
    def boundary_trace(self):
        return self.s.boundary_values

    @property
    def kind(self):
        if self.pieces is not None:
            return "pieces"
        if self.exact is not None:
            return "exact"
        return "grid"

    def value(self, y):
        y = np.atleast_2d(np.asarray(y, float))
        if self.pieces is not None:
            return evaluate_planes(self.pieces, y)
        if self.exact is not None:
            return self.exact[0](y)
        return self.s.interpolate(y)

    def gradient(self, y):
        y = np.atleast_2d(np.asarray(y, float))
        if self.pieces is not None:
            B, a = self.pieces
            return B[np.argmax(y @ B.T + a[None], axis=1)]
        if self.exact is not None:
            return self.exact[1](y)
        e = 1e-3 * self.cone.h
        cols = [(self.value(y + e * u) - self.value(y - e * u)) / (2 * e) for u in np.eye(2)]
        return np.stack(cols, 1)

    def total(self, Y):
        """1-homogeneous extension s~(y, -mu) = mu s(y / mu) for mu > 0."""
        Y = np.atleast_2d(np.asarray(Y, float))
        mu = -Y[:, -1]
        if np.any(mu <= 0):
            raise ConeError("covector outside the representable chart")
        return mu * self.value(Y[:, :-1] / mu[:, None])

    def __add__(self, other):
        return minkowski_sum_support(self, other)


def support_from_values(cone: ConeSpec, values, boundary_values=None, certified=None) -> SupportFunction:
    f = GridFunction(cone.omega_star, values, boundary_values, bool(certified))
    return SupportFunction(cone, f)


def support_from_function(cone: ConeSpec, value, gradient=None, certified=True) -> SupportFunction:
    """Wrap a closed-form support function (vectorized over (P, 2) arrays)."""
    dom = cone.omega_star
    f = GridFunction(dom, value(dom.nodes), value(dom.boundary_nodes), certified)
    if gradient is None:
        def gradient(y, _v=value, _e=1e-6):
            return np.stack([(_v(y + _e * u) - _v(y - _e * u)) / (2 * _e) for u in np.eye(2)], 1)
    return SupportFunction(cone, f, None, (value, gradient))


def support_from_pieces(cone: ConeSpec, B, a) -> SupportFunction:
    B = np.atleast_2d(np.asarray(B, float))
    a = np.atleast_1d(np.asarray(a, float))
    dom = cone.omega_star
    f = GridFunction(dom, evaluate_planes((B, a), dom.nodes), evaluate_planes((B, a), dom.boundary_nodes), True)
    return SupportFunction(cone, f, (B, a))


def support_from_points(cone: ConeSpec, points) -> SupportFunction:
    """s(y) = max over the points X of X.(y, -1); the domain conv(points) + closed cone."""
    P = np.atleast_2d(np.asarray(points, float))
    if P.size == 0:
        raise ConeError("empty point list")
    if P.shape[1] != 3:
        raise ConeError("points must have d + 1 = 3 coordinates")
    return support_from_pieces(cone, P[:, :-1], -P[:, -1])


def affine_support(cone: ConeSpec, X0) -> SupportFunction:
    return support_from_points(cone, [X0])


def zero_support(cone: ConeSpec) -> SupportFunction:
    return support_from_points(cone, [[0.0, 0.0, 0.0]])


def support_from_envelope(cone: ConeSpec, g, method="hull") -> SupportFunction:
    """Support function whose values are the convex envelope of boundary data ``g``."""
    f = envelope_from_boundary(g, cone.omega_star, method)
    planes = f.meta.get("planes")
    return SupportFunction(cone, f, planes)


def domain_from_support(s: SupportFunction, window=2.0, resolution=None) -> GridFunction:
    """f = s* on a window; the domain is the epigraph of f."""
    return legendre_transform(s.s, window, resolution or s.cone.omega.resolution)


def boundary_height(s: SupportFunction, x):
    """s*(x) by direct maximum over the samples of s."""
    return conjugate_at(s.s, np.atleast_2d(np.asarray(x, float)))


def point_in_domain(s: SupportFunction, X, tol=0.0):
    """Membership of X = (x, lambda) in the domain: lambda > s*(x) - tol."""
    X = np.atleast_2d(np.asarray(X, float))
    return X[:, -1] > boundary_height(s, X[:, :-1]) - tol


def _kink(s: SupportFunction, y, tol_rel=3.0):
    # a kink concentrates the slope jump at one lattice cell; smooth functions spread it evenly
    h = s.cone.h
    for u in np.eye(2):
        pts = y[None] + h * np.arange(-3, 4)[:, None] * u[None]
        v = s.value(pts)
        if np.isnan(v).any():
            continue
        jumps = v[2:] - 2 * v[1:-1] + v[:-2]  # centred at offsets -2..2
        c = jumps[2]
        side = max(jumps[0], jumps[-1])
        scale = 1e-9 * max(1.0, np.abs(v).max())
        if c > scale and c > tol_rel * max(side, 0.0) + scale:
            return True
    return False


def inverse_gauss(s: SupportFunction, y, check=True):
    """Point (grad s(y), grad s(y).y - s(y)) of the spacelike boundary with normal y."""
    y = np.atleast_2d(np.asarray(y, float))
    if not np.all(s.cone.omega_star.shape.contains(y)):
        raise ConeError("normal direction outside the polar section")
    if s.pieces is not None and check:
        B, a = s.pieces
        vals = y @ B.T + a[None]
        for row in vals:
            m = row.max()
            act = row >= m - 1e-12 * max(1.0, abs(m))
            if np.ptp(B[act], axis=0).max() > 1e-12:
                raise ConeError("support function has a corner here; the Gauss map is not invertible")
    elif s.kind == "grid" and check:
        for row in y:
            if _kink(s, row):
                raise ConeError("support function has a corner here; the Gauss map is not invertible")
    g = s.gradient(y)
    lam = (g * y).sum(1) - s.value(y)
    out = np.c_[g, lam]
    return out[0] if len(out) == 1 else out


def gauss_map(s: SupportFunction, X, tol=None, on_graph_tol=None):
    """Polar-grid nodes y supporting the domain at the boundary point X."""
    X = np.asarray(X, float).ravel()
    x, lam = X[:-1], X[-1]
    fx = float(boundary_height(s, x)[0])
    on_tol = fenchel_tolerance(s.s) if on_graph_tol is None else on_graph_tol
    if abs(lam - fx) > on_tol:
        raise ConeError(f"point is not on the boundary graph (offset {lam - fx:.3g})")
    ys = s.cone.omega_star.nodes
    gap = s.s.values + fx - ys @ x
    tol = s.cone.h ** 2 if tol is None else tol
    return ys[gap <= tol]


def is_spacelike_boundary_point(s: SupportFunction, X) -> bool:
    G = gauss_map(s, X)
    if len(G) == 0:
        return False
    d = s.cone.omega_star.shape.distance_to_boundary(G)
    return bool(np.any(d > s.cone.h))


def minkowski_sum_support(s1: SupportFunction, s2: SupportFunction) -> SupportFunction:
    if s1.cone is not s2.cone:
        raise ConeError("mismatched grids")
    f = s1.s + s2.s
    pieces = None
    exact = None
    if s1.pieces is not None and s2.pieces is not None and len(s1.pieces[1]) * len(s2.pieces[1]) <= 200_000:
        B1, a1 = s1.pieces
        B2, a2 = s2.pieces
        pieces = ((B1[:, None] + B2[None]).reshape(-1, 2), (a1[:, None] + a2[None]).ravel())
    elif s1.kind != "grid" and s2.kind != "grid":
        exact = (lambda y: s1.value(y) + s2.value(y), lambda y: s1.gradient(y) + s2.gradient(y))
    return SupportFunction(s1.cone, f, pieces, exact)


# ---------------------------------------------------------------- null half-spaces

@dataclass(frozen=True, eq=False)
class HalfSpaces:
    """Family {X : X.(y, -1) < offset(y)} over boundary normals y."""

    covectors: np.ndarray
    offsets: np.ndarray

    def contains(self, X, tol=0.0):
        X = np.atleast_2d(np.asarray(X, float))
        if len(self.offsets) == 0:
            return np.ones(len(X), bool)
        return np.all(X @ self.covectors.T < self.offsets[None] + tol, axis=1)

    def to_json(self):
        return json.dumps([{"y": c[:-1].tolist(), "offset": float(o)} for c, o in zip(self.covectors, self.offsets)])

    @staticmethod
    def from_json(text):
        rows = json.loads(text)
        cov = np.array([list(r["y"]) + [-1.0] for r in rows], float).reshape(-1, 3)
        return HalfSpaces(cov, np.array([r["offset"] for r in rows], float))


def cauchy_development_halfspaces(g, cone: ConeSpec) -> HalfSpaces:
    """Null half-spaces of boundary data g; entries equal to +inf impose no constraint."""
    g = np.asarray(g, float).ravel()
    b = cone.omega_star.boundary_nodes
    if len(g) != len(b):
        raise GridError("boundary data does not match the boundary nodes")
    if np.isnan(g).any() or np.isneginf(g).any():
        raise GridError("boundary data must be finite or +inf")
    keep = np.isfinite(g)
    cov = np.c_[b[keep], -np.ones(keep.sum())]
    return HalfSpaces(cov, g[keep])


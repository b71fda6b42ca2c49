"""Discrete convex analysis on lattice-sampled functions.

Conjugates are exhaustive maxima over sample nodes. That is O(N*M) but exact
for the sampled function, which keeps order reversal and the Fenchel
inequality exact on the nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .shapes import Box, Shape, make_shape

_CHUNK = 4_000_000  # entries per block in node-by-node products


class GridError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Lattice points strictly inside a planar convex shape, plus boundary samples."""

    shape: Shape
    resolution: int
    dim: int = 2

    def __post_init__(self):
        object.__setattr__(self, "shape", make_shape(self.shape))
        if self.dim != 2:
            raise GridError("only planar grids (d = 2) are supported")
        if int(self.resolution) < 3:
            raise GridError("resolution must be at least 3")
        object.__setattr__(self, "resolution", int(self.resolution))

    @cached_property
    def h(self) -> float:
        lo, hi = self.shape.bbox
        return float((hi - lo).max() / (self.resolution - 1))

    @cached_property
    def axes(self):
        lo, hi = self.shape.bbox
        h = self.h
        if self.shape.closed:
            return tuple(lo[k] + h * np.arange(int(np.floor((hi[k] - lo[k]) / h + 1e-9)) + 1) for k in range(2))
        # origin-anchored lattice so that 0 is a node whenever it is interior
        return tuple(h * np.arange(int(np.ceil(lo[k] / h - 1e-9)), int(np.floor(hi[k] / h + 1e-9)) + 1) for k in range(2))

    @cached_property
    def _layout(self):
        ax, ay = self.axes
        X, Y = np.meshgrid(ax, ay, indexing="ij")
        pts = np.c_[X.ravel(), Y.ravel()]
        if self.shape.closed:
            inside = self.shape.contains(pts)
        else:
            inside = self.shape.contains(pts, margin=1e-6 * self.h)
        index = np.full(X.shape, -1, dtype=int)
        flat = np.flatnonzero(inside)
        index.ravel()[flat] = np.arange(len(flat))
        return pts[flat], index

    @property
    def nodes(self) -> np.ndarray:
        """Interior nodes, lexicographically ordered (first coordinate major)."""
        return self._layout[0]

    @property
    def index(self) -> np.ndarray:
        """Lattice index array: node number or -1 outside."""
        return self._layout[1]

    @cached_property
    def boundary_nodes(self) -> np.ndarray:
        return self.shape.boundary_samples(4 * self.resolution)

    @property
    def size(self) -> int:
        return len(self.nodes)

    @cached_property
    def lattice_ij(self) -> np.ndarray:
        return np.argwhere(self.index >= 0)

    @cached_property
    def boundary_distance(self) -> np.ndarray:
        return self.shape.distance_to_boundary(self.nodes)

    def locate(self, pts, tol=1e-9):
        """Node numbers of the given points (-1 when a point is not a node)."""
        p = np.atleast_2d(np.asarray(pts, float))
        ax, ay = self.axes
        i = np.rint((p[:, 0] - ax[0]) / self.h).astype(int)
        j = np.rint((p[:, 1] - ay[0]) / self.h).astype(int)
        ok = (i >= 0) & (i < len(ax)) & (j >= 0) & (j < len(ay))
        out = np.full(len(p), -1)
        out[ok] = self.index[i[ok], j[ok]]
        hit = out >= 0
        if hit.any():
            far = np.abs(self.nodes[out[hit]] - p[hit]).max(1) > tol * max(1.0, self.h)
            sub = np.flatnonzero(hit)[far]
            out[sub] = -1
        return out

    def to_dict(self) -> dict:
        return {"shape": self.shape.to_dict(), "resolution": self.resolution, "dim": self.dim, "spacing": self.h}

    @staticmethod
    def from_dict(d) -> "GridDomain":
        return GridDomain(Shape.from_dict(d["shape"]), int(d["resolution"]), int(d.get("dim", 2)))


def window_domain(window, resolution) -> GridDomain:
    """Closed rectangular grid. ``window`` is a GridDomain, a Box, a half-width, or a (lo, hi) pair."""
    if isinstance(window, GridDomain):
        return window
    if isinstance(window, Box):
        return GridDomain(window, resolution)
    if np.isscalar(window):
        w = float(window)
        return GridDomain(Box([-w, -w], [w, w]), resolution)
    lo, hi = window
    return GridDomain(Box(lo, hi), resolution)


@dataclass(frozen=True, eq=False)
class GridFunction:
    domain: GridDomain
    values: np.ndarray
    boundary_values: np.ndarray | None = None
    convexity_certified: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.shape[0] != self.domain.size:
            raise GridError(f"expected {self.domain.size} values, got {v.shape[0]}")
        if not np.all(np.isfinite(v)):
            raise GridError("non-finite values")
        object.__setattr__(self, "values", v)
        if self.boundary_values is not None:
            b = np.asarray(self.boundary_values, dtype=float).ravel()
            if b.shape[0] != len(self.domain.boundary_nodes):
                raise GridError("boundary value count does not match boundary nodes")
            if not np.all(np.isfinite(b)):
                raise GridError("non-finite boundary values")
            object.__setattr__(self, "boundary_values", b)

    @property
    def nodes(self):
        return self.domain.nodes

    def samples(self, with_boundary=True):
        """All sample points and values; boundary samples come after interior nodes."""
        if with_boundary and self.boundary_values is not None:
            return (np.vstack([self.domain.nodes, self.domain.boundary_nodes]),
                    np.r_[self.values, self.boundary_values])
        return self.domain.nodes, self.values

    def grid(self) -> np.ndarray:
        g = np.full(self.domain.index.shape, np.nan)
        g[self.domain.index >= 0] = self.values[self.domain.index[self.domain.index >= 0]]
        return g

    def with_values(self, values, boundary_values=None, certified=False, **meta):
        return GridFunction(self.domain, values, boundary_values, certified, dict(meta))

    def __add__(self, other):
        if isinstance(other, GridFunction):
            if other.domain is not self.domain:
                raise GridError("mismatched grids")
            bv = None
            if self.boundary_values is not None and other.boundary_values is not None:
                bv = self.boundary_values + other.boundary_values
            return GridFunction(self.domain, self.values + other.values, bv,
                                self.convexity_certified and other.convexity_certified)
        return NotImplemented

    def scaled(self, c):
        bv = None if self.boundary_values is None else c * self.boundary_values
        return GridFunction(self.domain, c * self.values, bv, self.convexity_certified and c >= 0)

    def interpolate(self, pts):
        """Bilinear interpolation where all four lattice corners are nodes; piecewise
        linear over nodes and boundary samples elsewhere. NaN outside the sample hull."""
        p = np.atleast_2d(np.asarray(pts, float))
        ax, ay = self.domain.axes
        h = self.domain.h
        fx = (p[:, 0] - ax[0]) / h
        fy = (p[:, 1] - ay[0]) / h
        i = np.floor(fx).astype(int)
        j = np.floor(fy).astype(int)
        # points sitting on the last lattice line use the cell to their left
        i = np.where(i == len(ax) - 1, i - 1, i)
        j = np.where(j == len(ay) - 1, j - 1, j)
        ok = (i >= 0) & (i < len(ax) - 1) & (j >= 0) & (j < len(ay) - 1)
        out = np.full(len(p), np.nan)
        idx = self.domain.index
        ii, jj = i[ok], j[ok]
        c = np.stack([idx[ii, jj], idx[ii + 1, jj], idx[ii, jj + 1], idx[ii + 1, jj + 1]], 1)
        full = np.all(c >= 0, axis=1)
        sel = np.flatnonzero(ok)[full]
        if len(sel):
            tx = fx[sel] - i[sel]
            ty = fy[sel] - j[sel]
            v = self.values[c[full]]
            out[sel] = ((1 - tx) * (1 - ty) * v[:, 0] + tx * (1 - ty) * v[:, 1]
                        + (1 - tx) * ty * v[:, 2] + tx * ty * v[:, 3])
        rest = np.isnan(out)
        if rest.any():
            from scipy.interpolate import LinearNDInterpolator
            q, val = self.samples()
            out[rest] = LinearNDInterpolator(q, val)(p[rest])
        return out


def sample_function(domain: GridDomain, fn, boundary=True, certify=False) -> GridFunction:
    """Evaluate ``fn`` (vectorized over (P, 2) arrays) at the nodes and optionally at boundary nodes."""
    vals = np.asarray(fn(domain.nodes), float)
    bv = np.asarray(fn(domain.boundary_nodes), float) if boundary else None
    f = GridFunction(domain, vals, bv, False)
    if certify:
        ok, _ = check_convexity(f)
        f = GridFunction(domain, vals, bv, ok)
    return f


# ---------------------------------------------------------------- diagnostics

_DIRS = ((1, 0), (0, 1), (1, 1), (1, -1))


def second_differences(f: GridFunction):
    """Undivided second differences f(x-e) - 2 f(x) + f(x+e) for lattice directions e."""
    idx = f.domain.index
    ij = f.domain.lattice_ij
    n0, n1 = idx.shape
    out = []
    for di, dj in _DIRS:
        a = ij - (di, dj)
        b = ij + (di, dj)
        ok = ((a >= 0) & (a < (n0, n1))).all(1) & ((b >= 0) & (b < (n0, n1))).all(1)
        ia = np.full(len(ij), -1)
        ib = np.full(len(ij), -1)
        ia[ok] = idx[a[ok, 0], a[ok, 1]]
        ib[ok] = idx[b[ok, 0], b[ok, 1]]
        good = (ia >= 0) & (ib >= 0)
        c = idx[ij[good, 0], ij[good, 1]]
        out.append((c, f.values[ia[good]] - 2 * f.values[c] + f.values[ib[good]]))
    return out


def convexity_tolerance(f: GridFunction) -> float:
    """eps_cvx = 10 h^2 max|second difference| (undivided differences), with a roundoff floor."""
    sd = second_differences(f)
    m = max((np.abs(d).max() for _, d in sd if len(d)), default=0.0)
    scale = np.abs(f.values).max() if f.values.size else 1.0
    return 10 * f.domain.h**2 * m + 1e-12 * max(scale, 1.0)


def check_convexity(f: GridFunction):
    """Discrete midpoint convexity over node triples. Returns (ok, worst_violation_node)."""
    eps = convexity_tolerance(f)
    worst, node = 0.0, None
    for c, d in second_differences(f):
        if len(d) and d.min() < worst:
            k = int(np.argmin(d))
            worst, node = float(d[k]), int(c[k])
    return worst >= -eps, node


def lipschitz_estimate(f: GridFunction) -> float:
    """Largest slope between lattice neighbours (the discrete Lipschitz constant along the grid)."""
    h = f.domain.h
    best = 0.0
    g = f.grid()
    for di, dj in _DIRS:
        a = g[max(di, 0):g.shape[0] + min(di, 0), max(dj, 0):g.shape[1] + min(dj, 0)]
        b = g[max(-di, 0):g.shape[0] + min(-di, 0), max(-dj, 0):g.shape[1] + min(-dj, 0)]
        d = np.abs(a - b) / (h * np.hypot(di, dj))
        if np.isfinite(d).any():
            best = max(best, float(np.nanmax(d)))
    return best


def fenchel_tolerance(f: GridFunction) -> float:
    """eps_fen = 4 Lip h, Lip taken as the larger of the domain circumradius and the grid slope."""
    lip = max(f.domain.shape.circumradius, lipschitz_estimate(f))
    return 4 * lip * f.domain.h


# ---------------------------------------------------------------- conjugates

def conjugate_at(f: GridFunction, pts, with_boundary=True, return_argmax=False):
    """max over samples x of (x.y - f(x)) at each query y; ties go to the lowest sample index."""
    q = np.atleast_2d(np.asarray(pts, float))
    x, v = f.samples(with_boundary)
    if len(x) == 0:
        raise GridError("empty node set")
    out = np.empty(len(q))
    arg = np.empty(len(q), dtype=int)
    step = max(1, _CHUNK // len(x))
    for k in range(0, len(q), step):
        m = q[k:k + step] @ x.T - v[None]
        a = np.argmax(m, axis=1)
        arg[k:k + step] = a
        out[k:k + step] = m[np.arange(len(a)), a]
    if return_argmax:
        return out, x[arg], arg
    return out


def legendre_transform(f: GridFunction, window=2.0, dual_resolution=None, with_boundary=True) -> GridFunction:
    """Discrete Legendre-Fenchel conjugate of ``f`` sampled on a closed rectangular window."""
    if f.domain.size == 0:
        raise GridError("empty node set")
    n = dual_resolution or f.domain.resolution
    dom = window_domain(window, n)
    vals = conjugate_at(f, dom.nodes, with_boundary)
    lip = float(np.linalg.norm(f.samples(with_boundary)[0], axis=1).max())
    return GridFunction(dom, vals, None, True, {"lipschitz_bound": lip})


def default_dual_window(f: GridFunction) -> Box:
    w = 1.05 * lipschitz_estimate(f) + f.domain.h
    return Box([-w, -w], [w, w])


def biconjugate(f: GridFunction, window=None, dual_resolution=None) -> GridFunction:
    """Convexification of ``f``: conjugate on a dual window, then conjugate back onto f's nodes."""
    win = default_dual_window(f) if window is None else window
    fs = legendre_transform(f, win, dual_resolution)
    vals = conjugate_at(fs, f.domain.nodes, with_boundary=False)
    bv = None
    if f.boundary_values is not None:
        bv = conjugate_at(fs, f.domain.boundary_nodes, with_boundary=False)
    return GridFunction(f.domain, vals, bv, True)


def subdifferential(f: GridFunction, x, window=None, dual_resolution=None, tol=None):
    """Dual window nodes y with |f(x) + f*(y) - x.y| <= tol at the node x.

    The default tolerance (h + h_dual)^2 / 2 resolves kinks at the grid scale; when
    nothing passes (a coarse dual grid) the minimal-gap nodes are returned.
    """
    k = int(f.domain.locate(x)[0])
    if k < 0:
        if not f.domain.shape.contains(np.atleast_2d(x))[0]:
            raise GridError("point outside the domain")
        raise GridError("point is not a grid node")
    win = default_dual_window(f) if window is None else window
    fs = legendre_transform(f, win, dual_resolution)
    y = fs.domain.nodes
    xk = f.domain.nodes[k]
    gap = f.values[k] + fs.values - y @ xk
    if tol is None:
        tol = 0.5 * (f.domain.h + fs.domain.h) ** 2
    sel = gap <= tol
    if not sel.any():
        sel = gap <= gap.min() + 1e-12
    return y[sel], gap[sel]


def fenchel_gap(s: GridFunction, x, y, window=None) -> np.ndarray:
    """s(x) + s*(y) - x.y for paired rows of x and y; s* is the exact discrete conjugate."""
    x = np.atleast_2d(np.asarray(x, float))
    y = np.atleast_2d(np.asarray(y, float))
    if window is not None:
        box = window.shape if isinstance(window, GridDomain) else (window if isinstance(window, Box) else window_domain(window, 3).shape)
        if not np.all(box.contains(y)):
            raise GridError("query outside the conjugate window")
    k = s.domain.locate(x)
    sx = np.empty(len(x))
    on = k >= 0
    sx[on] = s.values[k[on]]
    if (~on).any():
        inside = s.domain.shape.distance_to_boundary(x[~on]) > -1e-12
        if not np.all(inside):
            raise GridError("x outside the domain")
        sx[~on] = s.interpolate(x[~on])
        if np.isnan(sx).any():
            raise GridError("x outside the sampled hull")
    return sx + conjugate_at(s, y) - (x * y).sum(1)


# ---------------------------------------------------------------- envelopes

def envelope_planes(points, g):
    """Affine pieces (B, a) of the lower convex hull of the lifted samples (points, g).

    The envelope is y -> max_k (B[k].y + a[k]); every piece is an affine minorant of g
    touching it on a facet, so this is the supremum of affine minorants.
    """
    p = np.asarray(points, float)
    g = np.asarray(g, float)
    if len(p) < p.shape[1] + 1:
        raise GridError("too few boundary samples for an envelope")
    A = np.c_[p, np.ones(len(p))]
    coef, *_ = np.linalg.lstsq(A, g, rcond=None)
    scale = max(1.0, np.abs(g).max())
    if np.abs(A @ coef - g).max() <= 1e-11 * scale:
        return coef[None, :2], coef[2:3]
    try:
        hull = ConvexHull(np.c_[p, g])
    except QhullError:
        return None
    eq = hull.equations
    low = eq[:, 2] < -1e-12
    B = -eq[low, :2] / eq[low, 2:3]
    a = -eq[low, 3] / eq[low, 2]
    return B, a


def _envelope_lp(points, g, q):
    out = np.empty(len(q))
    A = np.c_[np.ones(len(points)), points]
    for k, y in enumerate(q):
        r = linprog(-np.r_[1.0, y], A_ub=A, b_ub=g, bounds=[(None, None)] * 3, method="highs")
        out[k] = -r.fun if r.status == 0 else np.nan
    return out


def evaluate_planes(planes, q):
    B, a = planes
    q = np.atleast_2d(q)
    out = np.empty(len(q))
    step = max(1, _CHUNK // max(len(a), 1))
    for k in range(0, len(q), step):
        out[k:k + step] = (q[k:k + step] @ B.T + a[None]).max(1)
    return out


def envelope_from_boundary(g, domain: GridDomain, method="hull") -> GridFunction:
    """Largest convex function on the domain lying below the boundary data ``g``.

    ``method='hull'`` reads the affine minorants off the lower convex hull of the
    lifted boundary samples; ``method='lp'`` solves the minorant linear program at
    every node. Both give the same supremum; the hull route is much faster.
    """
    g = np.asarray(g, float).ravel()
    b = domain.boundary_nodes
    if len(g) != len(b):
        raise GridError("boundary data does not match the boundary nodes")
    if len(b) < 3:
        raise GridError("too few boundary samples for an envelope")
    if not np.all(np.isfinite(g)):
        raise GridError("non-finite boundary data")
    planes = envelope_planes(b, g) if method == "hull" else None
    if planes is None:
        vals = _envelope_lp(b, g, domain.nodes)
        bv = _envelope_lp(b, g, b)
        # nodes outside the sampled polygon make the program unbounded; use the nearest feasible value
        if np.isnan(vals).any():
            bad = np.isnan(vals)
            near = np.argmin(((domain.nodes[bad][:, None] - b[None]) ** 2).sum(-1), axis=1)
            vals[bad] = bv[near]
        return GridFunction(domain, vals, bv, True, {"method": "lp"})
    vals = evaluate_planes(planes, domain.nodes)
    bv = evaluate_planes(planes, b)
    return GridFunction(domain, vals, np.minimum(bv, g), True, {"method": "hull", "planes": planes})

"""Convex planar shapes: disks, axis-aligned ellipses, convex polygons and closed boxes.

Every shape knows how to test membership, measure distance to its boundary,
shoot rays to the boundary, sample its boundary by arclength and form its polar.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree


class ShapeError(ValueError):
    pass


def _as_points(p):
    p = np.asarray(p, dtype=float)
    return p.reshape(-1, 2), p.ndim == 1


def _segment_distance(p, a, b):
    # distance from points p (P,2) to segments a->b (E,2); returns (P,E)
    ab = b - a
    t = ((p[:, None, :] - a[None]) * ab[None]).sum(-1) / (ab * ab).sum(-1)[None]
    t = np.clip(t, 0.0, 1.0)
    proj = a[None] + t[..., None] * ab[None]
    return np.linalg.norm(p[:, None, :] - proj, axis=-1)


class Shape:
    kind = "abstract"
    closed = False  # closed shapes keep their boundary lattice points as nodes

    def contains(self, pts, margin=0.0):
        return self.distance_to_boundary(pts) > margin

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(d: dict) -> "Shape":
        kind = d["kind"]
        if kind == "disk":
            return Disk(d.get("radius", 1.0))
        if kind == "ellipse":
            return Ellipse(d["a"], d["b"])
        if kind == "polygon":
            return Polygon(d["vertices"])
        if kind == "box":
            return Box(d["lo"], d["hi"])
        raise ShapeError(f"unknown shape kind {kind!r}")

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


class Disk(Shape):
    kind = "disk"

    def __init__(self, radius=1.0):
        if not radius > 0:
            raise ShapeError("disk radius must be positive")
        self.radius = float(radius)

    def to_dict(self):
        return {"kind": "disk", "radius": self.radius}

    @property
    def bbox(self):
        r = self.radius
        return np.array([-r, -r]), np.array([r, r])

    @property
    def circumradius(self):
        return self.radius

    def distance_to_boundary(self, pts):
        p, single = _as_points(pts)
        d = self.radius - np.linalg.norm(p, axis=1)
        return d[0] if single else d

    def ray_exit(self, p, e):
        # t > 0 with |p + t e| = r, for p inside
        p, _ = _as_points(p)
        e = np.asarray(e, float)
        a = e @ e
        b = 2 * p @ e
        c = (p * p).sum(1) - self.radius**2
        return (-b + np.sqrt(np.maximum(b * b - 4 * a * c, 0.0))) / (2 * a)

    def boundary_samples(self, m):
        th = 2 * np.pi * np.arange(m) / m
        return self.radius * np.c_[np.cos(th), np.sin(th)]

    def support(self, x):
        p, single = _as_points(x)
        v = self.radius * np.linalg.norm(p, axis=1)
        return v[0] if single else v

    def polar(self):
        return Disk(1.0 / self.radius)


class Ellipse(Shape):
    kind = "ellipse"

    def __init__(self, a, b):
        if not (a > 0 and b > 0):
            raise ShapeError("ellipse semi-axes must be positive")
        self.a, self.b = float(a), float(b)
        th = np.linspace(0, 2 * np.pi, 8193)
        self._poly = np.c_[self.a * np.cos(th), self.b * np.sin(th)]
        self._tree = cKDTree(self._poly[:-1])

    def to_dict(self):
        return {"kind": "ellipse", "a": self.a, "b": self.b}

    @property
    def bbox(self):
        return np.array([-self.a, -self.b]), np.array([self.a, self.b])

    @property
    def circumradius(self):
        return max(self.a, self.b)

    def _q(self, p):
        return (p[:, 0] / self.a) ** 2 + (p[:, 1] / self.b) ** 2

    def contains(self, pts, margin=0.0):
        p, single = _as_points(pts)
        ok = self._q(p) < 1
        if margin > 0:
            ok &= self.distance_to_boundary(p) > margin
        return ok[0] if single else ok

    def distance_to_boundary(self, pts):
        p, single = _as_points(pts)
        # nearest vertex of a dense polyline, then Newton on the curve parameter
        _, k = self._tree.query(p)
        m = len(self._poly) - 1
        dt = 2 * np.pi / m
        t0 = k * dt
        t = t0.copy()
        a, b = self.a, self.b
        for _ in range(4):
            c, s = np.cos(t), np.sin(t)
            rx, ry = p[:, 0] - a * c, p[:, 1] - b * s
            d1 = -(rx * (-a * s) + ry * (b * c))
            d2 = (a * s) ** 2 + (b * c) ** 2 + rx * a * c + ry * b * s
            step = np.where(d2 > 0, -d1 / np.where(d2 > 0, d2, 1.0), 0.0)
            t = np.clip(t + step, t0 - 2 * dt, t0 + 2 * dt)
        out = np.hypot(p[:, 0] - a * np.cos(t), p[:, 1] - b * np.sin(t))
        out = np.where(self._q(p) < 1, out, -out)
        return out[0] if single else out

    def ray_exit(self, p, e):
        p, _ = _as_points(p)
        e = np.asarray(e, float)
        w = np.array([1 / self.a**2, 1 / self.b**2])
        a = (w * e * e).sum()
        b = 2 * (w * p * e).sum(1)
        c = (w * p * p).sum(1) - 1
        return (-b + np.sqrt(np.maximum(b * b - 4 * a * c, 0.0))) / (2 * a)

    def boundary_samples(self, m):
        seg = np.linalg.norm(np.diff(self._poly, axis=0), axis=1)
        s = np.r_[0, np.cumsum(seg)]
        target = s[-1] * np.arange(m) / m
        th = np.interp(target, s, np.linspace(0, 2 * np.pi, len(s)))
        return np.c_[self.a * np.cos(th), self.b * np.sin(th)]

    def support(self, x):
        p, single = _as_points(x)
        v = np.sqrt((self.a * p[:, 0]) ** 2 + (self.b * p[:, 1]) ** 2)
        return v[0] if single else v

    def polar(self):
        return Ellipse(1.0 / self.a, 1.0 / self.b)


class Polygon(Shape):
    kind = "polygon"

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ShapeError("polygon needs at least three planar vertices")
        # counter-clockwise orientation
        area = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        if area < 0:
            v = v[::-1]
        self.vertices = v
        edges = np.roll(v, -1, axis=0) - v
        n = np.c_[edges[:, 1], -edges[:, 0]]
        n /= np.linalg.norm(n, axis=1, keepdims=True)
        off = (n * v).sum(1)
        if np.any(np.einsum("ij,kj->ik", n, v) > off[:, None] + 1e-12 * np.abs(v).max()):
            raise ShapeError("polygon is not convex")
        self.normals, self.offsets = n, off

    def to_dict(self):
        return {"kind": "polygon", "vertices": self.vertices.tolist()}

    @property
    def bbox(self):
        return self.vertices.min(0), self.vertices.max(0)

    @property
    def circumradius(self):
        return float(np.linalg.norm(self.vertices, axis=1).max())

    def distance_to_boundary(self, pts):
        p, single = _as_points(pts)
        slack = self.offsets[None] - p @ self.normals.T
        inside = slack.min(1)
        out = inside.copy()
        bad = inside <= 0
        if bad.any():
            v = self.vertices
            out[bad] = -_segment_distance(p[bad], v, np.roll(v, -1, axis=0)).min(1)
        return out[0] if single else out

    def ray_exit(self, p, e):
        p, _ = _as_points(p)
        ne = self.normals @ np.asarray(e, float)
        slack = self.offsets[None] - p @ self.normals.T
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(ne[None] > 1e-15, slack / ne[None], np.inf)
        return t.min(1)

    def boundary_samples(self, m):
        v = self.vertices
        nv = len(v)
        if m < nv:
            raise ShapeError("need at least one sample per polygon vertex")
        w = np.roll(v, -1, axis=0)
        lens = np.linalg.norm(w - v, axis=1)
        # every vertex is kept; the remaining samples go to edges by length
        extra = m - nv
        share = extra * lens / lens.sum()
        cnt = np.floor(share).astype(int)
        rem = extra - cnt.sum()
        order = np.argsort(-(share - cnt), kind="stable")
        cnt[order[:rem]] += 1
        pts = []
        for k in range(nv):
            t = np.arange(cnt[k] + 1) / (cnt[k] + 1)
            pts.append(v[k] + t[:, None] * (w[k] - v[k]))
        return np.concatenate(pts)

    def support(self, x):
        p, single = _as_points(x)
        val = (p @ self.vertices.T).max(1)
        return val[0] if single else val

    def polar(self):
        if np.any(self.offsets <= 0):
            raise ShapeError("origin is not interior to the polygon")
        return Polygon(self.normals / self.offsets[:, None])


class Box(Polygon):
    """Closed axis-aligned rectangle, used as a window for conjugates."""

    kind = "box"
    closed = True

    def __init__(self, lo, hi):
        lo = np.asarray(lo, float) * np.ones(2)
        hi = np.asarray(hi, float) * np.ones(2)
        if np.any(hi <= lo):
            raise ShapeError("degenerate window")
        self.lo, self.hi = lo, hi
        super().__init__([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])

    def to_dict(self):
        return {"kind": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}

    def contains(self, pts, margin=0.0):
        p, single = _as_points(pts)
        tol = 1e-9 * np.abs(np.r_[self.lo, self.hi]).max()
        ok = np.all((p >= self.lo - tol) & (p <= self.hi + tol), axis=1)
        return ok[0] if single else ok


def make_shape(spec) -> Shape:
    """Build a shape from a dict, a Shape, or a short string like 'disk', 'disk:2', 'ellipse:1,0.6', 'square'."""
    if isinstance(spec, Shape):
        return spec
    if isinstance(spec, dict):
        return Shape.from_dict(spec)
    name, _, args = str(spec).partition(":")
    vals = [float(t) for t in args.split(",") if t.strip()]
    if name == "disk":
        return Disk(vals[0] if vals else 1.0)
    if name == "ellipse":
        return Ellipse(*(vals or [1.0, 1.0]))
    if name == "square":
        r = vals[0] if vals else 1.0
        return Polygon([[r, r], [-r, r], [-r, -r], [r, -r]])
    if name == "diamond":
        r = vals[0] if vals else 1.0
        return Polygon([[r, 0], [0, r], [-r, 0], [0, -r]])
    if name == "polygon":
        return Polygon(np.asarray(vals).reshape(-1, 2))
    raise ShapeError(f"unknown shape {spec!r}")

"""Cosmological time on domains with a prescribed recession cone.

A point X = (x, lam) of K = epi(s*) decomposes as X = P + T * G(y), where P lies on the
boundary of K with supporting normal y, and G(y) = (grad w(y), grad w(y).y - w(y)) is the
point of the affine sphere with normal y. T is the cosmological time. Since
(s + t w)*(x) is increasing in t, T is the t at which it reaches lam, and one checks that

    T(X) = min over y of (s(y) - x.y + lam) / (-w(y)),

with y the minimizer. The grid minimum gives a first estimate; it is then polished by a
continuous constrained solve.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .affine_sphere import GaugeError, GaugeFunction, radial_profile
from .cone_model import SupportFunction, boundary_height
from .convex_core import GridFunction, conjugate_at, legendre_transform


class CosmoError(ValueError):
    pass


class OutsideDomainError(CosmoError):
    pass


@dataclass(frozen=True)
class CosmoChart:
    """Cosmological time T, normal projection P and projecting normal y of a point X."""

    X: np.ndarray
    T: float
    P: np.ndarray
    y: np.ndarray
    low_confidence: bool = False
    grid_T: float = float("nan")
    info: dict = field(default_factory=dict)

    @property
    def gradient(self):
        return _time_gradient(self.y, self.info["omega_y"])


def _time_gradient(y, wy):
    return np.r_[y, -1.0] / wy


def sphere_point(omega: GaugeFunction, y):
    """Point of the affine sphere whose supporting normal is y: (grad w, grad w.y - w)."""
    y = np.atleast_2d(np.asarray(y, float))
    g = omega.gradient(y)
    out = np.c_[g, (g * y).sum(1) - omega.value(y)]
    return out[0] if len(out) == 1 else out


def _check_grids(s: SupportFunction, omega: GaugeFunction):
    if s.s.domain is not omega.domain and s.s.domain.to_dict() != omega.domain.to_dict():
        raise CosmoError("support function and gauge live on different grids")


# ---------------------------------------------------------------- grid stage

def _grid_ratio(s: SupportFunction, omega: GaugeFunction, X, chunk=2_000_000):
    """Minimum over interior polar nodes of (s(y) - x.y + lam) / (-w(y)) and its argmin."""
    ys = omega.domain.nodes
    sv, wv = s.s.values, omega.omega.values
    X = np.atleast_2d(X)
    T = np.empty(len(X))
    k = np.empty(len(X), int)
    step = max(1, chunk // len(ys))
    for i in range(0, len(X), step):
        Xb = X[i:i + step]
        r = (sv[None] - Xb[:, :-1] @ ys.T + Xb[:, -1:]) / (-wv[None])
        k[i:i + step] = np.argmin(r, axis=1)
        T[i:i + step] = r[np.arange(len(Xb)), k[i:i + step]]
    return T, k


def foliation_height(s: SupportFunction, omega: GaugeFunction, x, t):
    """(s + t w)*(x) by direct maximum over the polar samples (boundary included)."""
    f = s.s + omega.omega.scaled(t)
    return conjugate_at(f, np.atleast_2d(np.asarray(x, float)))


def _bisect_time(s, omega, X, t_cap, iters=60):
    x, lam = X[:-1], X[-1]
    phi = lambda t: float(foliation_height(s, omega, x, t)[0]) - lam
    lo, hi = 0.0, 1e-3
    while phi(hi) <= 0:
        lo, hi = hi, 2 * hi
        if hi > t_cap:
            raise CosmoError(f"cosmological time exceeds the cap {t_cap:g}")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if phi(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- continuous polish

def _ratio_terms(s: SupportFunction, omega: GaugeFunction, X, y, idx):
    """Ratios r_k(y) = n_k(y) / d(y) and their gradients for the affine pieces idx
    (or for s itself when it has no pieces)."""
    x, lam = X[:-1], X[-1]
    y2 = y[None]
    d = -float(omega.value(y2)[0])
    dd = -omega.gradient(y2)[0]
    if s.pieces is not None:
        B, a = s.pieces
        Bk = B[idx]
        n = (Bk - x) @ y + a[idx] + lam
        dn = Bk - x
    else:
        n = np.array([float(s.value(y2)[0]) - x @ y + lam])
        dn = (s.gradient(y2)[0] - x)[None]
    r = n / d
    dr = dn / d - n[:, None] * dd[None] / d**2
    return r, dr


def _polish(s: SupportFunction, omega: GaugeFunction, X, y0, T0):
    shape = omega.domain.shape
    h = omega.domain.h
    x, lam = X[:-1], X[-1]
    inside = lambda y: float(shape.distance_to_boundary(y))

    if s.pieces is None and s.exact is None:
        # grid-only s: derivative-free local search on the interpolated ratio
        def r(y):
            if inside(y) <= 0:
                return np.inf
            d = -float(omega.value(y[None])[0])
            return (float(s.value(y[None])[0]) - x @ y + lam) / d if d > 0 else np.inf
        res = minimize(r, y0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000})
        return (res.x, float(res.fun)) if res.fun < T0 else (y0, T0)

    if s.pieces is not None:
        B, a = s.pieces
        n0 = (B - x) @ y0 + a + lam
        spread = np.linalg.norm(B - x, axis=1).max() + 1.0
        idx = np.flatnonzero(n0 >= n0.max() - 6 * spread * h)
    else:
        idx = np.array([0])

    y, T = y0, T0
    for _ in range(6):
        def obj(v):
            return v[2]

        def obj_jac(v):
            return np.array([0.0, 0.0, 1.0])

        def cons(v):
            r, _ = _ratio_terms(s, omega, X, v[:2], idx)
            return np.r_[v[2] - r, inside(v[:2]) - 1e-9]

        def cons_jac(v):
            _, dr = _ratio_terms(s, omega, X, v[:2], idx)
            e = 1e-7
            gd = np.array([(inside(v[:2] + e * u) - inside(v[:2] - e * u)) / (2 * e) for u in np.eye(2)])
            J = np.c_[-dr, np.ones(len(idx))]
            return np.vstack([J, np.r_[gd, 0.0]])

        v0 = np.r_[y, T]
        with np.errstate(all="ignore"):
            res = minimize(obj, v0, jac=obj_jac, method="SLSQP",
                           constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
                           options={"ftol": 1e-15, "maxiter": 200})
        yn = res.x[:2]
        if not np.all(np.isfinite(res.x)) or inside(yn) <= 0:
            break
        # the true time at yn is the largest ratio over all pieces
        if s.pieces is not None:
            nn = (B - x) @ yn + a + lam
            rn = nn / (-float(omega.value(yn[None])[0]))
            Tn = float(rn.max())
            missing = np.setdiff1d(np.flatnonzero(rn > res.x[2] + 1e-12 * max(1.0, abs(Tn))), idx)
        else:
            Tn = float(_ratio_terms(s, omega, X, yn, idx)[0][0])
            missing = np.array([], int)
        if Tn < T:
            y, T = yn, Tn
        if len(missing) == 0:
            break
        idx = np.union1d(idx, missing)
    return y, T


# ---------------------------------------------------------------- charts

def cosmological_charts(s: SupportFunction, omega: GaugeFunction, X, method="ratio", polish=True, t_cap=1e6):
    """Charts for a batch of points; returns a list of CosmoChart."""
    _check_grids(s, omega)
    X = np.atleast_2d(np.asarray(X, float))
    if X.shape[1] != 3:
        raise CosmoError("points must have d + 1 = 3 coordinates")
    f_x = boundary_height(s, X[:, :-1])
    outside = X[:, -1] <= f_x
    if outside.any():
        k = int(np.flatnonzero(outside)[0])
        raise OutsideDomainError(f"point {X[k].tolist()} is not inside the domain")
    Tg, kg = _grid_ratio(s, omega, X)
    ys = omega.domain.nodes
    h = omega.domain.h
    shape = omega.domain.shape
    out = []
    for i, Xi in enumerate(X):
        y, T = ys[kg[i]].copy(), float(Tg[i])
        if method == "bisection":
            T = _bisect_time(s, omega, Xi, t_cap)
        elif method != "ratio":
            raise CosmoError(f"unknown method {method!r}")
        if T > t_cap:
            raise CosmoError(f"cosmological time exceeds the cap {t_cap:g}")
        if polish:
            y, T = _polish(s, omega, Xi, y, T)
        G = sphere_point(omega, y)
        P = Xi - T * G
        wy = float(omega.value(y[None])[0])
        low = bool(shape.distance_to_boundary(y) < 2 * h)
        out.append(CosmoChart(Xi.copy(), T, P, y, low, float(Tg[i]), {"omega_y": wy, "grid_node": int(kg[i])}))
    return out


def cosmological_chart(s: SupportFunction, omega: GaugeFunction, X, method="ratio", polish=True, t_cap=1e6) -> CosmoChart:
    """Cosmological time, normal projection and projecting normal of X in the domain of s."""
    return cosmological_charts(s, omega, np.asarray(X, float)[None], method, polish, t_cap)[0]


def cosmological_time(s, omega, X, **kw):
    return np.array([c.T for c in cosmological_charts(s, omega, X, **kw)])


def cosmo_gradient(s: SupportFunction, omega: GaugeFunction, X, **kw):
    """Gradient of the cosmological time: (y, -1) / w(y) at the projecting normal y."""
    return cosmological_chart(s, omega, X, **kw).gradient


def reconstruction_residual(s: SupportFunction, chart: CosmoChart) -> float:
    """Height of the normal projection above the boundary graph, P_lam - s*(P_x).
    X = P + T G(y) holds by construction, so this measures whether P lands on the boundary."""
    return float(chart.P[-1] - boundary_height(s, chart.P[:-1])[0])


def reconstruction_tolerance(omega: GaugeFunction, T) -> float:
    return 5 * omega.domain.h * (1 + T)


# ---------------------------------------------------------------- foliation

def level_set(s: SupportFunction, omega: GaugeFunction, t, window=2.0, resolution=None) -> GridFunction:
    """(s + t w)* on a window; its graph is the level set T = t."""
    if not t > 0:
        raise CosmoError("level must be positive")
    _check_grids(s, omega)
    f = s.s + omega.omega.scaled(t)
    return legendre_transform(f, window, resolution or omega.domain.resolution)


# ---------------------------------------------------------------- Finsler norm and lengths

def _section(omega: GaugeFunction):
    return omega.domain.shape.polar()


def _future_check(omega, V, tol):
    V = np.atleast_2d(np.asarray(V, float))
    nu = V[:, -1]
    scale = np.maximum(1.0, np.abs(V).max(1))
    zero = np.abs(V).max(1) <= tol * scale
    past = (nu < -tol * scale) | ((np.abs(nu) <= tol * scale) & ~zero)
    ok = ~past
    ok_nz = ok & ~zero
    x = np.zeros((len(V), 2))
    x[ok_nz] = V[ok_nz, :-1] / nu[ok_nz, None]
    dist = np.full(len(V), np.inf)
    if ok_nz.any():
        dist[ok_nz] = _section(omega).distance_to_boundary(x[ok_nz])
    ok &= zero | (dist >= -tol * (1 + np.abs(x).max(1)))
    return V, nu, x, dist, zero, ok


def finsler_norm(omega: GaugeFunction, V, method="radial", tol=1e-12):
    """F(V) = -nu w(v / nu) for future causal V = (v, nu); zero on null and zero vectors.

    ``radial`` intersects the ray through (v/nu, 1) with the graph of w*; ``dual`` evaluates
    min over polar nodes of (nu - v.y) / (-w(y)).
    """
    V, nu, x, dist, zero, ok = _future_check(omega, V, tol)
    if not ok.all():
        k = int(np.flatnonzero(~ok)[0])
        raise CosmoError(f"vector {V[k].tolist()} is not future causal")
    F = np.zeros(len(V))
    h = omega.domain.h
    for i in range(len(V)):
        if zero[i] or dist[i] <= tol * (1 + np.abs(x[i]).max()):
            continue
        if method == "radial":
            try:
                F[i] = -nu[i] * radial_profile(omega, x[i])
            except GaugeError:
                if dist[i] < 4 * h:  # the ray leaves the sampled window near null directions
                    F[i] = 0.0
                else:
                    raise
        elif method == "dual":
            ys, wv = omega.domain.nodes, omega.omega.values
            F[i] = float(((nu[i] - ys @ V[i, :-1]) / (-wv)).min())
        else:
            raise CosmoError(f"unknown method {method!r}")
    return F


def causal_distance(omega: GaugeFunction, X0, X1, method="radial", tol=1e-12):
    """Finsler length F(X1 - X0) of the straight segment; requires X1 in X0 + closed cone."""
    V = np.atleast_2d(np.asarray(X1, float) - np.asarray(X0, float))
    *_, ok = _future_check(omega, V, tol)
    if not ok.all():
        raise CosmoError("points are not causally related")
    out = finsler_norm(omega, V, method, tol)
    return float(out[0]) if np.ndim(X1) == 1 and np.ndim(X0) == 1 else out


@dataclass(frozen=True)
class CausalCurve:
    """Piecewise straight curve; every increment must be future causal."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, float))
        if len(v) < 2:
            raise CosmoError("a curve needs at least two vertices")
        object.__setattr__(self, "vertices", v)

    def increments(self):
        return np.diff(self.vertices, axis=0)


def curve_length(omega: GaugeFunction, curve: CausalCurve, method="radial", tol=1e-12) -> float:
    dV = curve.increments()
    *_, ok = _future_check(omega, dV, tol)
    if not ok.all():
        k = int(np.flatnonzero(~ok)[0])
        raise CosmoError(f"segment {k} is not future causal")
    return float(finsler_norm(omega, dV, method, tol).sum())

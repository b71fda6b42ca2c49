"""Gauge support functions and the affine sphere Monge-Ampere solve.

The gauge w of a cone solves det Hess w = (-w)^(-d-2) on the polar section with
zero boundary values. We solve it in two stages on the lattice:

1. a monotone wide-stencil scheme (minimum over four orthogonal direction pairs
   of products of directional second differences), driven by damped Newton steps
   from w0 = -c sqrt(torsion). It is robust and keeps iterates convex, but its angular
   resolution caps the accuracy at a few 1e-2;
2. Newton on phi = w^2, which is smooth up to the boundary: with
   M = grad phi grad phi^T - 2 phi Hess phi one has det Hess w = det M / (16 phi^3),
   so the equation becomes det M = 16 phi. Directional differences use
   Shortley-Weller arms that end exactly on the boundary. The line search keeps
   phi > 0 and M positive definite, i.e. w negative and strictly convex.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import CloughTocher2DInterpolator
from scipy.optimize import brentq, minimize_scalar

from .convex_core import GridDomain, GridFunction, conjugate_at


class SolverError(RuntimeError):
    def __init__(self, msg, residual=None, log=None):
        super().__init__(msg if residual is None else f"{msg} (final residual {residual:.3e})")
        self.residual = residual
        self.log = log or []


class GaugeError(ValueError):
    pass


# ---------------------------------------------------------------- stencils

class Stencil:
    """Directional difference operators on a GridDomain with boundary-hitting arms.

    For a lattice direction e, each node gets two arms (forward, backward). An arm
    either ends at the neighbouring node or at the point where the ray leaves the
    shape, where the boundary value is imposed.
    """

    def __init__(self, domain: GridDomain):
        self.domain = domain
        self._cache = {}

    def arms(self, e):
        if e in self._cache:
            return self._cache[e]
        dom = self.domain
        idx = dom.index
        ij = dom.lattice_ij
        n0, n1 = idx.shape
        step = np.asarray(e, float) * dom.h
        L = float(np.linalg.norm(step))
        out = []
        for sgn in (1, -1):
            t = ij + sgn * np.asarray(e)
            ok = (t[:, 0] >= 0) & (t[:, 0] < n0) & (t[:, 1] >= 0) & (t[:, 1] < n1)
            nb = np.full(len(ij), -1)
            nb[ok] = idx[t[ok, 0], t[ok, 1]]
            ln = np.full(len(ij), L)
            miss = nb < 0
            if miss.any():
                frac = dom.shape.ray_exit(dom.nodes[miss], sgn * step)
                ln[miss] = np.minimum(frac, 1.0) * L
            out.append((ln, nb))
        self._cache[e] = out
        return out

    def second(self, e):
        """Second derivative along the unit vector of e (Shortley-Weller)."""
        (a, ia), (b, ib) = self.arms(e)
        N = len(a)
        k = np.arange(N)
        c = 2.0 / (a + b)
        rows, cols, vals = [k], [k], [-c * (1 / a + 1 / b)]
        for arm, nb in ((a, ia), (b, ib)):
            m = nb >= 0
            rows.append(k[m]); cols.append(nb[m]); vals.append((c / arm)[m])
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))

    def first(self, e):
        """First derivative along the unit vector of e (three-point, non-uniform)."""
        (a, ia), (b, ib) = self.arms(e)
        N = len(a)
        k = np.arange(N)
        den = a * b * (a + b)
        rows, cols, vals = [k], [k], [(a * a - b * b) / den]
        m = ia >= 0
        rows.append(k[m]); cols.append(ia[m]); vals.append((b * b / den)[m])
        m = ib >= 0
        rows.append(k[m]); cols.append(ib[m]); vals.append((-a * a / den)[m])
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))

    def boundary_terms(self, e, bvals_fwd, bvals_bwd):
        """Contributions of nonzero boundary values to second() and first()."""
        (a, ia), (b, ib) = self.arms(e)
        c = 2.0 / (a + b)
        den = a * b * (a + b)
        s2 = np.where(ia < 0, c / a * bvals_fwd, 0.0) + np.where(ib < 0, c / b * bvals_bwd, 0.0)
        s1 = np.where(ia < 0, b * b / den * bvals_fwd, 0.0) - np.where(ib < 0, a * a / den * bvals_bwd, 0.0)
        return s2, s1

    @cached_property
    def hessian_ops(self):
        Dxx = self.second((1, 0))
        Dyy = self.second((0, 1))
        Dxy = (self.second((1, 1)) - self.second((1, -1))) / 2
        return Dxx, Dyy, Dxy

    @cached_property
    def gradient_ops(self):
        return self.first((1, 0)), self.first((0, 1))


PAIRS = (((1, 0), (0, 1)), ((1, 1), (-1, 1)), ((2, 1), (-1, 2)), ((1, 2), (-2, 1)))


def monotone_operator(st: Stencil, u):
    """min over direction pairs of max(D_a u, 0) max(D_b u, 0), and the active pair."""
    vals = []
    for a, b in PAIRS:
        vals.append(np.maximum(st.second(a) @ u, 0) * np.maximum(st.second(b) @ u, 0))
    V = np.array(vals)
    return V.min(0), V.argmin(0)


def _mono_parts(st, u):
    F, act = monotone_operator(st, u)
    return F * (-u) ** 4 - 1, F, act


def _mono_residual(st, u, inner):
    r = np.abs(_mono_parts(st, u)[0])
    return float(r[inner].max()) if inner.any() else float(r.max())


def _directional_convex(st, u):
    # same tolerance form as the grid convexity certificate: 10 h^2 max|D2 u|
    d2 = [st.second(e) @ u for pr in PAIRS for e in pr]
    eps = 10 * st.domain.h ** 2 * max(np.abs(x).max() for x in d2)
    return all(x.min() >= -eps for x in d2)


def _monotone_stage(st: Stencil, base, inner, max_iter, tol, log):
    """Damped Newton on F(u) (-u)^4 - 1 = 0 with the monotone operator F.

    The merit is the RMS residual over all nodes; steps must keep u negative and
    every directional second difference non-negative.
    """
    cs = np.geomspace(0.125, 8.0, 31)
    rms = [np.linalg.norm(_mono_parts(st, -c * base)[0]) for c in cs]
    u = -cs[int(np.argmin(rms))] * base
    ops = {e: st.second(e) for pr in PAIRS for e in pr}
    G, F, act = _mono_parts(st, u)
    merit = float(np.linalg.norm(G) / math.sqrt(len(G)))
    log.append({"iter": 0, "stage": "monotone", "residual": merit, "inner_max": _mono_residual(st, u, inner), "step": 0.0})
    for it in range(1, max_iter + 1):
        J = sp.csr_matrix((len(u), len(u)))
        for p, (a, b) in enumerate(PAIRS):
            sel = (act == p).astype(float)
            da, db = ops[a] @ u, ops[b] @ u
            J = J + sp.diags(sel * (da >= 0) * np.maximum(db, 0)) @ ops[a] + sp.diags(sel * (db >= 0) * np.maximum(da, 0)) @ ops[b]
        J = sp.diags((-u) ** 4) @ J - sp.diags(4.0 * F * (-u) ** 3)
        # the diagonal is negative; a tiny shift keeps degenerate rows solvable
        J = J - sp.diags(np.full(len(u), 1e-10 * np.abs(J.diagonal()).max()))
        try:
            du = spla.spsolve(J.tocsc(), -G)
        except RuntimeError:
            break
        if not np.all(np.isfinite(du)):
            break
        step = 1.0
        accepted = False
        while step >= 1e-6:
            un = u + step * du
            if np.all(un < 0) and _directional_convex(st, un):
                Gn, Fn, actn = _mono_parts(st, un)
                mn = float(np.linalg.norm(Gn) / math.sqrt(len(Gn)))
                if mn < (1 - 1e-4 * step) * merit:
                    accepted = True
                    break
            step /= 2
        if not accepted:
            break
        u, G, F, act, merit = un, Gn, Fn, actn, mn
        log.append({"iter": it, "stage": "monotone", "residual": merit, "inner_max": _mono_residual(st, u, inner), "step": step})
        if merit < tol:
            break
    return u, _mono_residual(st, u, inner)


def _phi_system(st: Stencil, phi):
    Gx, Gy = st.gradient_ops
    Dxx, Dyy, Dxy = st.hessian_ops
    gx, gy = Gx @ phi, Gy @ phi
    hxx, hyy, hxy = Dxx @ phi, Dyy @ phi, Dxy @ phi
    M11 = gx * gx - 2 * phi * hxx
    M22 = gy * gy - 2 * phi * hyy
    M12 = gx * gy - 2 * phi * hxy
    det = M11 * M22 - M12 ** 2
    return det / (16 * phi) - 1, (gx, gy, hxx, hyy, hxy, M11, M22, M12, det)


def _admissible(phi, parts):
    M11, det = parts[5], parts[8]
    return np.all(phi > 0) and np.all(M11 > 0) and np.all(det > 0)


def _phi_stage(st: Stencil, phi, max_iter, tol, log, it0):
    Gx, Gy = st.gradient_ops
    Dxx, Dyy, Dxy = st.hessian_ops
    dg = sp.diags
    g, parts = _phi_system(st, phi)
    merit = float(np.linalg.norm(g) / math.sqrt(len(g)))
    log.append({"iter": it0, "stage": "newton", "residual": merit, "step": 0.0})
    for it in range(it0 + 1, it0 + max_iter + 1):
        gx, gy, hxx, hyy, hxy, M11, M22, M12, det = parts
        dM11 = 2 * dg(gx) @ Gx - dg(2 * hxx) - 2 * dg(phi) @ Dxx
        dM22 = 2 * dg(gy) @ Gy - dg(2 * hyy) - 2 * dg(phi) @ Dyy
        dM12 = dg(gy) @ Gx + dg(gx) @ Gy - dg(2 * hxy) - 2 * dg(phi) @ Dxy
        J = dg(1 / (16 * phi)) @ (dg(M22) @ dM11 + dg(M11) @ dM22 - 2 * dg(M12) @ dM12) - dg(det / (16 * phi ** 2))
        d = spla.spsolve(J.tocsc(), -g)
        step = 1.0
        ok = False
        while step >= 1e-8:
            pn = phi + step * d
            gn, pp = _phi_system(st, pn)
            mn = float(np.linalg.norm(gn) / math.sqrt(len(gn)))
            if _admissible(pn, pp) and mn < (1 - 1e-4 * step) * merit:
                ok = True
                break
            step /= 2
        if not ok:
            break
        phi, g, parts, merit = pn, gn, pp, mn
        log.append({"iter": it, "stage": "newton", "residual": merit, "step": step})
        if np.abs(g).max() < tol:
            break
    return phi, g, parts


def pde_residual(st: Stencil, w, inner):
    """max over inner nodes of |det Hess w (-w)^4 - 1| using the phi = w^2 operator."""
    g, _ = _phi_system(st, w * w)
    return float(np.abs(g[inner]).max()) if inner.any() else float(np.abs(g).max())


# ---------------------------------------------------------------- gauge functions

@dataclass(frozen=True, eq=False)
class GaugeFunction:
    """A validated gauge: negative, strictly convex, zero on the boundary, steep there.

    ``value``/``gradient`` evaluate off the grid; ``conj`` is an optional closed-form
    conjugate. Build these through ``make_gauge`` (validates) or the solver.
    """

    omega: GridFunction
    gradient_field: np.ndarray
    hessian_min_eig: np.ndarray
    value: Callable
    gradient: Callable
    conj: Callable | None = None
    report: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def domain(self) -> GridDomain:
        return self.omega.domain

    def conjugate(self, z):
        """w*(z); closed form when known, otherwise the direct maximum over samples."""
        z = np.atleast_2d(np.asarray(z, float))
        if self.conj is not None:
            return self.conj(z)
        return conjugate_at(self.omega, z)

    @property
    def min_abs(self) -> float:
        return float(np.abs(self.omega.values).min())


def _lattice_hessian(f: GridFunction):
    """Plain 3x3-stencil Hessian at nodes whose full stencil is present; NaN elsewhere."""
    g = f.grid()
    h = f.domain.h
    H = np.full(g.shape + (3,), np.nan)
    c = g[1:-1, 1:-1]
    H[1:-1, 1:-1, 0] = (g[2:, 1:-1] - 2 * c + g[:-2, 1:-1]) / h**2
    H[1:-1, 1:-1, 1] = (g[1:-1, 2:] - 2 * c + g[1:-1, :-2]) / h**2
    H[1:-1, 1:-1, 2] = (g[2:, 2:] - g[2:, :-2] - g[:-2, 2:] + g[:-2, :-2]) / (4 * h**2)
    ij = f.domain.lattice_ij
    return H[ij[:, 0], ij[:, 1]]


def _min_eig(hxx, hyy, hxy):
    return 0.5 * (hxx + hyy) - np.sqrt(0.25 * (hxx - hyy) ** 2 + hxy ** 2)


def _grid_gradient(f: GridFunction):
    """Three-point gradient with arms ending on the boundary (nearest boundary sample value)."""
    st = Stencil(f.domain)
    out = []
    bn = f.domain.boundary_nodes
    bv = f.boundary_values if f.boundary_values is not None else np.zeros(len(bn))
    for e in ((1, 0), (0, 1)):
        D1 = st.first(e)
        (a, ia), (b, ib) = st.arms(e)
        u = np.asarray(e, float)
        pf = f.domain.nodes + a[:, None] * u
        pb = f.domain.nodes - b[:, None] * u
        near = lambda p: bv[np.argmin(((p[:, None] - bn[None]) ** 2).sum(-1), axis=1)]
        fwd = np.zeros(len(a))
        bwd = np.zeros(len(a))
        if (ia < 0).any():
            fwd[ia < 0] = near(pf[ia < 0])
        if (ib < 0).any():
            bwd[ib < 0] = near(pb[ib < 0])
        _, s1 = st.boundary_terms(e, fwd, bwd)
        out.append(D1 @ f.values + s1)
    return np.stack(out, 1)


def _sample_derivatives(omega: GridFunction, eps_bd):
    """Gradient and least Hessian eigenvalue from samples. For gauge-like samples (negative,
    zero trace) they go through phi = w^2 with arms ending on the boundary, as in the solver;
    the plain lattice Hessian of w is unreliable next to the square-root boundary layer."""
    bv = omega.boundary_values
    if bv is not None and np.abs(bv).max(initial=0.0) <= eps_bd and np.all(omega.values < 0):
        phi = omega.values ** 2
        _, parts = _phi_system(Stencil(omega.domain), phi)
        gx, gy, _, _, _, M11, M22, M12, _ = parts
        grad = -np.c_[gx, gy] / (2 * np.sqrt(phi))[:, None]
        return grad, _min_eig(M11, M22, M12) / (4 * phi ** 1.5)
    H = _lattice_hessian(omega)
    return _grid_gradient(omega), _min_eig(H[:, 0], H[:, 1], H[:, 2])


def gauge_validate(omega: GridFunction, gradient=None, hessian_min_eig=None, eps_bd=1e-7, rings=6) -> dict:
    """Check negativity and the three gauge axioms; report pass/fail and worst node per axiom.
    The default eps_bd sits above the square-root roundoff (about 1.5e-8) of exact samples."""
    dom = omega.domain
    v = omega.values
    rep = {}
    if gradient is None or hessian_min_eig is None:
        g0, e0 = _sample_derivatives(omega, eps_bd)
        gradient = g0 if gradient is None else gradient
        hessian_min_eig = e0 if hessian_min_eig is None else hessian_min_eig
    k = int(np.argmax(v))
    rep["negative"] = {"pass": bool(v.max() < 0), "worst_node": dom.nodes[k].tolist(), "value": float(v[k])}
    # strict convexity
    ev = np.asarray(hessian_min_eig, float)
    fin = np.isfinite(ev)
    scale = 1e-12 * max(1.0, np.abs(v).max()) / dom.h**2
    if fin.any():
        kk = np.flatnonzero(fin)[np.argmin(ev[fin])]
        rep["GS1"] = {"pass": bool(ev[fin].min() > scale), "worst_node": dom.nodes[kk].tolist(), "value": float(ev[kk])}
    else:
        rep["GS1"] = {"pass": False, "worst_node": None, "value": None}
    # zero boundary values
    if omega.boundary_values is None:
        rep["GS2"] = {"pass": False, "worst_node": None, "value": None, "reason": "no boundary trace"}
    else:
        bv = omega.boundary_values
        kb = int(np.argmax(np.abs(bv)))
        rep["GS2"] = {"pass": bool(np.abs(bv).max() <= eps_bd), "worst_node": dom.boundary_nodes[kb].tolist(), "value": float(bv[kb])}
    # gradient blow-up: slope of log max|grad| against log(distance) over boundary rings
    grad = np.asarray(gradient, float)
    gn = np.linalg.norm(grad, axis=1)
    ring = np.ceil(dom.boundary_distance / dom.h).astype(int)
    ks, gm = [], []
    for r in range(1, rings + 1):
        m = ring == r
        if m.any():
            ks.append(r)
            gm.append(gn[m].max())
    gm = np.array(gm)
    if len(ks) >= 3 and np.all(gm > 0):
        slope = float(np.polyfit(np.log(ks), np.log(gm), 1)[0])
        ok = slope <= -0.2 and gm[0] > gm[-1]
    else:
        slope, ok = None, False
    kg = int(np.argmax(gn)) if len(gn) else 0
    rep["GS3"] = {"pass": bool(ok), "worst_node": dom.nodes[kg].tolist() if len(gn) else None,
                  "ring_max_gradient": gm.tolist(), "log_slope": slope}
    rep["pass"] = all(rep[a]["pass"] for a in ("negative", "GS1", "GS2", "GS3"))
    return rep


def make_gauge(omega: GridFunction, value, gradient, conj=None, gradient_field=None, hessian_min_eig=None, info=None,
               validate=True) -> GaugeFunction:
    gf = gradient(omega.domain.nodes) if gradient_field is None else gradient_field
    if hessian_min_eig is None:
        hessian_min_eig = _sample_derivatives(omega, 1e-7)[1]
    rep = gauge_validate(omega, gf, hessian_min_eig)
    if validate and not rep["pass"]:
        failed = [a for a in ("negative", "GS1", "GS2", "GS3") if not rep[a]["pass"]]
        raise GaugeError(f"gauge axioms fail: {failed}")
    return GaugeFunction(omega, gf, hessian_min_eig, value, gradient, conj, rep, dict(info or {}))


def minkowski_gauge(domain: GridDomain) -> GaugeFunction:
    """Closed-form gauge of the round cone on the unit disk: -sqrt(1 - |y|^2)."""
    return ellipse_gauge(domain)


def ellipse_gauge(domain: GridDomain) -> GaugeFunction:
    """Closed form on an axis-aligned ellipse with semi-axes (a, b):
    -(ab)^(1/3) sqrt(1 - y1^2/a^2 - y2^2/b^2), the linear image of the round solution."""
    sh = domain.shape
    if sh.kind == "disk":
        a = b = sh.radius
    elif sh.kind == "ellipse":
        a, b = sh.a, sh.b
    else:
        raise GaugeError("closed form is only available for disks and ellipses")
    k = (a * b) ** (1.0 / 3.0)
    w = np.array([1 / a**2, 1 / b**2])

    def value(y):
        y = np.atleast_2d(y)
        return -k * np.sqrt(np.clip(1 - (y * y * w).sum(1), 0, None))

    def gradient(y):
        y = np.atleast_2d(y)
        q = np.sqrt(np.clip(1 - (y * y * w).sum(1), 1e-300, None))
        return k * y * w / q[:, None]

    def conj(z):
        # sup_y z.y - value(y) over the ellipse, after y = A y'
        z = np.atleast_2d(z)
        za = np.c_[a * z[:, 0], b * z[:, 1]]
        return np.sqrt(k * k + (za * za).sum(1))

    f = GridFunction(domain, value(domain.nodes), np.zeros(len(domain.boundary_nodes)), True)
    y = domain.nodes
    q = 1 - (y * y * w).sum(1)
    # Hessian of -k sqrt(q): k (W / sqrt(q) + (W y)(W y)^T / q^(3/2))
    Wy = y * w
    hxx = k * (w[0] / np.sqrt(q) + Wy[:, 0] ** 2 / q**1.5)
    hyy = k * (w[1] / np.sqrt(q) + Wy[:, 1] ** 2 / q**1.5)
    hxy = k * Wy[:, 0] * Wy[:, 1] / q**1.5
    return make_gauge(f, value, gradient, conj, gradient(y), _min_eig(hxx, hyy, hxy), {"source": "closed form"})


# ---------------------------------------------------------------- solver

def _torsion(st: Stencil):
    Dxx, Dyy, _ = st.hessian_ops
    return spla.spsolve(-(Dxx + Dyy).tocsc(), np.ones(st.domain.size))


def solve_affine_sphere(omega_star: GridDomain, max_iter=60, tol=1e-3, monotone_iter=40, newton_tol=1e-11):
    """Solve det Hess w = (-w)^(-4), w = 0 on the boundary, on a planar polar section.

    Returns a validated GaugeFunction whose ``info`` holds the convergence log, the
    residual (max over nodes at distance >= 2h from the boundary) and timings.
    """
    import time

    dom = omega_star
    if dom.dim != 2:
        raise SolverError("solver handles d = 2 only")
    if dom.resolution < 33:
        raise SolverError("grid resolution must be at least 33")
    t0 = time.perf_counter()
    st = Stencil(dom)
    inner = dom.boundary_distance >= 2 * dom.h
    log: list = []

    # start from -c sqrt(torsion): negative, strictly convex, with the square-root
    # boundary layer of the solution (a plain -c dist is flat along inward normals,
    # where every pair product of the monotone operator vanishes)
    tau = _torsion(st)
    u1, mono_res = _monotone_stage(st, np.sqrt(tau), inner, monotone_iter, tol, log)
    if np.any(u1 >= 0):
        raise SolverError("monotone stage lost negativity", mono_res, log)
    t1 = time.perf_counter()

    c_fit = float((tau[inner] * u1[inner] ** 2).sum() / (tau[inner] ** 2).sum())

    def merit(c):
        g, parts = _phi_system(st, c * tau)
        return float(np.linalg.norm(g)) if _admissible(c * tau, parts) else np.inf

    r = minimize_scalar(merit, bounds=(0.5 * c_fit, 2.0 * c_fit), method="bounded", options={"xatol": 1e-4 * c_fit})
    c0 = float(r.x) if np.isfinite(r.fun) else c_fit
    phi, g, parts = _phi_stage(st, c0 * tau, max_iter, newton_tol, log, it0=len(log))
    if not _admissible(phi, parts):
        raise SolverError("lost admissibility", float(np.abs(g).max()), log)
    w = -np.sqrt(phi)
    if np.any(w >= 0):
        raise SolverError("loss of negativity", float(np.abs(g).max()), log)
    residual = float(np.abs(g[inner]).max()) if inner.any() else float(np.abs(g).max())
    if residual > tol:
        raise SolverError("no convergence within max_iter", residual, log)
    t2 = time.perf_counter()

    gx, gy, _, _, _, M11, M22, M12, _ = parts
    grad = -np.c_[gx, gy] / (2 * np.sqrt(phi))[:, None]
    hmin = _min_eig(M11, M22, M12) / (4 * phi ** 1.5)

    f = GridFunction(dom, w, np.zeros(len(dom.boundary_nodes)), True)
    info = {
        "log": log,
        "residual": residual,
        "monotone_residual": mono_res,
        "monotone_solution": u1,
        "scale_init": c0,
        "iterations": len(log),
        "seconds": {"monotone": t1 - t0, "newton": t2 - t1},
        "source": "solver",
    }
    value, gradient = _interpolants(dom, phi)
    gauge = make_gauge(f, value, gradient, None, grad, hmin, info, validate=False)
    if not gauge.report["pass"]:
        raise SolverError("solution fails the gauge axioms", residual, log)
    return gauge


def _interpolants(dom: GridDomain, phi):
    # C1 interpolation of phi = w^2, which stays smooth up to the boundary where it vanishes
    pts = np.vstack([dom.nodes, dom.boundary_nodes])
    interp = CloughTocher2DInterpolator(pts, np.r_[phi, np.zeros(len(dom.boundary_nodes))])

    def _phi(y):
        y = np.atleast_2d(y)
        return np.clip(np.nan_to_num(interp(y), nan=0.0), 0, None)

    def value(y):
        return -np.sqrt(_phi(y))

    def gradient(y, _e=1e-6):
        y = np.atleast_2d(y)
        gp = np.stack([(_phi(y + _e * u) - _phi(y - _e * u)) / (2 * _e) for u in np.eye(2)], 1)
        return -gp / (2 * np.sqrt(np.maximum(_phi(y), 1e-300)))[:, None]

    return value, gradient


def gauge_from_grid(omega: GridFunction, info=None, validate=True) -> GaugeFunction:
    """Gauge from grid samples (e.g. a saved solver output), interpolated through w^2."""
    if omega.boundary_values is None:
        omega = omega.with_values(omega.values, np.zeros(len(omega.domain.boundary_nodes)), omega.convexity_certified)
    value, gradient = _interpolants(omega.domain, omega.values ** 2)
    grad, hmin = _sample_derivatives(omega, 1e-7)
    return make_gauge(omega, value, gradient, None, grad, hmin, info or {"source": "grid"}, validate)


# ---------------------------------------------------------------- radial profile

def radial_profile(gauge: GaugeFunction, x, max_doublings=60, iters=200, method="brent") -> float:
    """w(x) = -1/t where t > 0 solves t = w*(t x): the height at which the ray through (x, 1)
    meets the graph of the conjugate gauge. The root is bracketed by doubling, then found
    by Brent's method (``method='brent'``) or plain bisection."""
    x = np.asarray(x, float).ravel()

    def h(t):
        return float(gauge.conjugate(t * x[None])[0]) - t

    lo = 0.0
    if h(lo) <= 0:
        raise GaugeError("gauge conjugate is not positive at the origin")
    hi = 1.0
    k = 0
    while h(hi) > 0:
        lo = hi
        hi *= 2.0
        k += 1
        if k > max_doublings:
            raise GaugeError("no bracketing interval: point too close to the section boundary")
    if method == "brent":
        if h(hi) == 0:
            return -1.0 / hi
        return -1.0 / brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=iters)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if h(mid) > 0:
            lo = mid
        else:
            hi = mid
    return -1.0 / (0.5 * (lo + hi))

"""Named invariant suites run by ``affspace verify <suite>``.

Each suite returns a report dict with a boolean ``pass`` and the measured quantities.
Randomness comes from a seeded generator (default seed 0).
"""
from __future__ import annotations

import time

import numpy as np

from . import cosmology as cos
from . import deformations as dfm
from .affine_sphere import minkowski_gauge, solve_affine_sphere
from .cone_model import ConeSpec, affine_support, support_from_points
from .convex_core import (GridDomain, conjugate_at, fenchel_gap, fenchel_tolerance, legendre_transform,
                          sample_function, subdifferential)
from .fixtures import octagon_group, octagon_splitting


def _disk_points(rng, n, r):
    th = rng.uniform(0, 2 * np.pi, n)
    rad = r * np.sqrt(rng.uniform(0, 1, n))
    return np.c_[rad * np.cos(th), rad * np.sin(th)]


def fenchel_functions(dom: GridDomain):
    """Five convex test functions on a planar grid."""
    return {
        "quadratic": sample_function(dom, lambda y: 0.5 * (y * y).sum(1), certify=True),
        "gauge": sample_function(dom, lambda y: -np.sqrt(np.clip(1 - (y * y).sum(1), 0, None)), certify=True),
        "affine": sample_function(dom, lambda y: y @ np.array([0.3, -0.2]) - 0.1, certify=True),
        "abs": sample_function(dom, lambda y: np.abs(y[:, 0]), certify=True),
        "logsumexp": sample_function(dom, lambda y: np.log(np.exp(2 * y[:, 0]) + np.exp(-y[:, 1]) + 1.0), certify=True),
    }


def fenchel(n=65, seed=0, pairs=10_000, window=2.0):
    rng = np.random.default_rng(seed)
    dom = GridDomain("disk", n)
    rep = {"functions": {}}
    ok = True
    per = pairs // 5
    for name, f in fenchel_functions(dom).items():
        eps = fenchel_tolerance(f)
        x = _disk_points(rng, per, 1 - 1.5 * dom.h)
        y = rng.uniform(-window, window, (per, 2))
        gap = fenchel_gap(f, x, y)
        # equality at subdifferential pairs, on a few nodes
        eq = 0.0
        for k in rng.choice(dom.size, 5, replace=False):
            Y, gaps = subdifferential(f, dom.nodes[k], window=window, dual_resolution=81)
            eq = max(eq, float(np.abs(fenchel_gap(f, np.repeat(dom.nodes[k][None], len(Y), 0), Y)).max()))
        good = bool(gap.min() >= -eps and eq <= eps)
        ok &= good
        rep["functions"][name] = {"min_gap": float(gap.min()), "eps_fen": eps, "max_equality_gap": eq, "pass": good}
    rep["pass"] = ok
    return rep


def sphere(n=101, tol=1e-3):
    t0 = time.perf_counter()
    om = solve_affine_sphere(GridDomain("disk", n), tol=tol)
    dt = time.perf_counter() - t0
    dom = om.domain
    inner = dom.boundary_distance >= 2 * dom.h
    exact = -np.sqrt(1 - (dom.nodes ** 2).sum(1))
    err = float(np.abs(om.omega.values - exact)[inner].max())
    return {"pass": bool(err <= 5e-3 and dt <= 120), "linf_error": err, "seconds": dt,
            "residual": om.info["residual"], "gauge_axioms": om.report["pass"]}


def conjugate(n=101, tol=1e-3):
    om = solve_affine_sphere(GridDomain("disk", n), tol=tol)
    g = legendre_transform(om.omega, 2.0, n)
    x = g.domain.nodes
    err = float(np.abs(g.values - np.sqrt(1 + (x * x).sum(1))).max())
    return {"pass": bool(err <= 1e-2), "linf_error": err}


def cosmo(n=65, seed=0, points=1000):
    rng = np.random.default_rng(seed)
    cone = ConeSpec.minkowski(n)
    om = minkowski_gauge(cone.omega_star)
    X0 = np.r_[rng.uniform(-0.3, 0.3, 2), rng.uniform(-0.5, 0.5)]
    s = affine_support(cone, X0)
    x = rng.uniform(-1, 1, (points, 2)) + X0[:2]
    lam = X0[2] + np.linalg.norm(x - X0[:2], axis=1) + rng.uniform(0.05, 2.0, points)
    X = np.c_[x, lam]
    charts = cos.cosmological_charts(s, om, X)
    T = np.array([c.T for c in charts])
    exact = np.sqrt((lam - X0[2]) ** 2 - ((x - X0[:2]) ** 2).sum(1))
    rec = np.array([abs(cos.reconstruction_residual(s, c)) for c in charts])
    eps = np.array([cos.reconstruction_tolerance(om, c.T) for c in charts])
    err = float(np.abs(T - exact).max())
    return {"pass": bool(err <= 1e-3 and np.all(rec <= eps)), "time_error": err,
            "max_reconstruction_ratio": float((rec / eps).max())}


def cocycle(seed=0, pairs=500, s=0.2):
    rng = np.random.default_rng(seed)
    rep = octagon_group()
    c = dfm.bend_translation(rep, octagon_splitting(rep, s))
    letters = "abcdABCD"
    worst = 0.0
    for _ in range(pairs):
        u = "".join(rng.choice(list(letters), rng.integers(1, 6)))
        v = "".join(rng.choice(list(letters), rng.integers(1, 6)))
        lhs = dfm.extend_cocycle(c, u + v)
        rhs = dfm.extend_cocycle(c, u) + rep.matrix(u) @ dfm.extend_cocycle(c, v)
        worst = max(worst, float(np.abs(lhs - rhs).max() / max(1.0, np.abs(lhs).max())))
    lam = float(np.abs(dfm.extend_cocycle(c, "abAB")).max())
    return {"pass": bool(worst <= 1e-9 and lam <= 1e-9), "max_relative_defect": worst, "lambda_translation": lam}


def equivariance(n=65, s=0.2, L=6, cap=200_000):
    cone = ConeSpec.minkowski(n)
    om = minkowski_gauge(cone.omega_star)
    rep = octagon_group()
    c = dfm.bend_translation(rep, octagon_splitting(rep, s))
    _, mats = rep.letter_matrices()
    trs = c.letter_translations()
    res = {}
    for LL in (L - 1, L):
        g = dfm.boundary_function(cone, rep, c, [0, 0, 1], LL, cap)
        sm = dfm.maximal_domain(g.values, cone).s_minus
        res[LL] = max(dfm.equivariance_residual(sm, mats[j], trs[j], om) for j in range(len(mats)))
    return {"pass": bool(res[L] <= 5e-2 and res[L] < res[L - 1]), "residual": {str(k): v for k, v in res.items()}}


def coboundary(n=65, seed=0, count=5, L=4):
    rng = np.random.default_rng(seed)
    cone = ConeSpec.minkowski(n)
    rep = octagon_group()
    worst = 0.0
    for _ in range(count):
        V = rng.uniform(-1, 1, 3)
        c = dfm.coboundary(rep, V)
        g = dfm.boundary_function(cone, rep, c, V, L)
        sm = dfm.maximal_domain(g.values, cone).s_minus
        y = cone.omega_star.nodes
        worst = max(worst, float(np.abs(sm.s.values - (y @ V[:2] - V[2])).max()))
    return {"pass": bool(worst <= 1e-3), "max_error": worst}


def order(n=65, L=5):
    cone = ConeSpec.minkowski(n)
    rep = octagon_group()
    out = {}
    ok = True
    rng = np.random.default_rng(0)
    cases = {"zero": (dfm.zero_cocycle(rep), np.zeros(3), True)}
    V = rng.uniform(-1, 1, 3)
    cases["coboundary"] = (dfm.coboundary(rep, V), V, True)
    for sv in (0.1, 0.2):
        cases[f"bend_{sv}"] = (dfm.bend_translation(rep, octagon_splitting(rep, sv)), np.array([0, 0, 1.0]), False)
    for name, (c, X0, is_cob) in cases.items():
        g = dfm.boundary_function(cone, rep, c, X0, L)
        md = dfm.maximal_domain(g.values, cone)
        gap = md.gap()
        good = bool(gap.min() >= -1e-9) and (bool(gap.max() <= 1e-6) == is_cob)
        ok &= good
        out[name] = {"min_gap": float(gap.min()), "max_gap": float(gap.max()), "pass": good}
    out["pass"] = ok
    return out


def foliation(n=65, seed=0, count=50, ts=(0.25, 0.5, 1.0, 2.0, 4.0)):
    rng = np.random.default_rng(seed)
    cone = ConeSpec.minkowski(n)
    om = minkowski_gauge(cone.omega_star)
    P = np.c_[rng.uniform(-0.5, 0.5, (20, 2)), rng.uniform(-0.5, 0.5, 20)]
    s = support_from_points(cone, P)
    x = rng.uniform(-1, 1, (count, 2))
    H = np.stack([cos.foliation_height(s, om, x, t) for t in ts])
    d = np.diff(H, axis=0)
    heur = 0.9 * np.diff(ts)[:, None] * om.min_abs
    return {"pass": bool(d.min() > 0), "min_increment": float(d.min()),
            "heuristic_margin_held": bool(np.all(d >= heur))}


def time_inequality(n=65, seed=0, count=1000):
    rng = np.random.default_rng(seed)
    cone = ConeSpec.minkowski(n)
    om = minkowski_gauge(cone.omega_star)
    worst_t, worst_c = -np.inf, -np.inf
    for _ in range(count):
        X1 = rng.normal(size=3)
        d1 = np.r_[_disk_points(rng, 1, 1)[0], 1.0] * rng.uniform(0.1, 2)
        d2 = np.r_[_disk_points(rng, 1, 1)[0], 1.0] * rng.uniform(0.1, 2)
        X2, X3 = X1 + d1, X1 + d1 + d2
        r12 = cos.causal_distance(om, X1, X2)
        r23 = cos.causal_distance(om, X2, X3)
        r13 = cos.causal_distance(om, X1, X3)
        worst_t = max(worst_t, r12 + r23 - r13)
    s = support_from_points(cone, np.c_[rng.uniform(-0.5, 0.5, (20, 2)), rng.uniform(-0.5, 0.5, 20)])
    f = lambda X: X[:, -1] - conjugate_at(s.s, X[:, :-1])
    A = np.c_[rng.uniform(-1, 1, (count, 2)), np.zeros(count)]
    B = np.c_[rng.uniform(-1, 1, (count, 2)), np.zeros(count)]
    A[:, 2] = conjugate_at(s.s, A[:, :2]) + rng.uniform(0.1, 2, count)
    B[:, 2] = conjugate_at(s.s, B[:, :2]) + rng.uniform(0.1, 2, count)
    assert np.all(f(A) > 0) and np.all(f(B) > 0)
    TA = cos.cosmological_time(s, om, A)
    TB = cos.cosmological_time(s, om, B)
    TM = cos.cosmological_time(s, om, 0.5 * (A + B))
    worst_c = float((0.5 * (TA + TB) - TM).max())
    eps = 1e-9
    return {"pass": bool(worst_t <= eps and worst_c <= eps), "time_inequality_excess": float(worst_t),
            "concavity_excess": worst_c, "eps": eps}


SUITES = {
    "fenchel": fenchel,
    "sphere": sphere,
    "conjugate": conjugate,
    "cosmo": cosmo,
    "cocycle": cocycle,
    "equivariance": equivariance,
    "coboundary": coboundary,
    "order": order,
    "foliation": foliation,
    "time": time_inequality,
}

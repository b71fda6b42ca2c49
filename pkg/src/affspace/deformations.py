"""Affine deformations of cone-preserving groups.

A group Gamma of linear maps preserving the cone C, together with a cocycle tau
(tau(ab) = tau(a) + a tau(b)), acts on R^3 by affine maps X -> gamma X + tau_gamma.
This module builds cocycles (coboundaries, bending), enumerates orbits, estimates the
boundary function g_tau from orbit hulls, and forms the two maximal invariant domains.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .affine_sphere import GaugeFunction
from .cone_model import ConeSpec, SupportFunction, cauchy_development_halfspaces, support_from_envelope
from .convex_core import GridFunction, envelope_from_boundary
from .shapes import Disk, Shape, make_shape


class GroupError(ValueError):
    pass


class OrbitCapError(GroupError):
    pass


# ---------------------------------------------------------------- words

_TOKEN = re.compile(r"([A-Za-z])(\^-1|\^\{-1\}|')?")


def parse_word(word):
    """Word as a list of (label, inverse) pairs.

    Strings use one letter per generator with upper case for inverses ("abAB"); "a^-1"
    and "a'" are also read as inverses. Lists of such tokens are accepted too.
    """
    if isinstance(word, (list, tuple)):
        out = []
        for t in word:
            out.extend(parse_word(t))
        return out
    text = re.sub(r"[\s*.,]", "", str(word))
    out = []
    pos = 0
    for m in _TOKEN.finditer(text):
        if m.start() != pos:
            raise GroupError(f"cannot parse word {word!r}")
        ch, inv = m.group(1), m.group(2)
        out.append((ch.lower(), ch.isupper() != bool(inv)))
        pos = m.end()
    if pos != len(text):
        raise GroupError(f"cannot parse word {word!r}")
    return out


def word_string(pairs):
    return "".join(l.upper() if inv else l for l, inv in pairs)


def inverse_word(word):
    return word_string([(l, not inv) for l, inv in reversed(parse_word(word))])


# ---------------------------------------------------------------- groups

def _cone_violation(g, section: Shape, m=64):
    """Largest amount by which g maps sampled rays (x, 1), x in the closed section, out of the cone."""
    b = section.boundary_samples(m)
    pts = np.vstack([np.zeros((1, 2)), 0.5 * b, b])
    V = np.c_[pts, np.ones(len(pts))] @ g.T
    nu = V[:, -1]
    if np.any(nu <= 0):
        return np.inf
    d = section.distance_to_boundary(V[:, :-1] / nu[:, None])
    return float(max(0.0, -d.min()))


@dataclass(frozen=True, eq=False)
class GroupRep:
    """Labeled generators (single lower-case letters), optional relator words and the
    cone section they are meant to preserve. Use ``make_group`` to validate."""

    generators: dict
    relators: tuple = ()
    section: Shape = field(default_factory=Disk)
    flags: dict = field(default_factory=dict)

    @property
    def dim(self):
        return next(iter(self.generators.values())).shape[0]

    @property
    def labels(self):
        return list(self.generators)

    def matrix(self, word):
        M = np.eye(self.dim)
        for l, inv in parse_word(word):
            if l not in self.generators:
                raise GroupError(f"unknown label {l!r}")
            M = M @ (self._inverse(l) if inv else self.generators[l])
        return M

    def _inverse(self, l):
        return self.flags.setdefault("_inv", {}).setdefault(l, np.linalg.inv(self.generators[l]))

    def letter_matrices(self):
        """Generators followed by their inverses, with labels 'a', ..., 'A', ..."""
        labs = self.labels + [l.upper() for l in self.labels]
        mats = [self.generators[l] for l in self.labels] + [self._inverse(l) for l in self.labels]
        return labs, np.array(mats)

    def validate(self, det_tol=1e-9, rel_tol=1e-6, cone_tol=1e-9) -> dict:
        rep = {"det": {}, "cone": {}, "relators": {}}
        for l, g in self.generators.items():
            rep["det"][l] = float(abs(np.linalg.det(g) - 1))
            rep["cone"][l] = _cone_violation(g, self.section)
        for w in self.relators:
            rep["relators"][w] = float(np.abs(self.matrix(w) - np.eye(self.dim)).max())
        rep["det_ok"] = all(v <= det_tol for v in rep["det"].values())
        rep["cone_ok"] = all(v <= cone_tol for v in rep["cone"].values())
        rep["relators_ok"] = all(v <= rel_tol for v in rep["relators"].values())
        rep["pass"] = rep["det_ok"] and rep["cone_ok"] and rep["relators_ok"]
        return rep

    def to_dict(self):
        return {"dim": self.dim, "generators": {l: g.tolist() for l, g in self.generators.items()},
                "relators": list(self.relators), "section": self.section.to_dict()}


def make_group(generators: dict, relators=(), section=None, strict_cone=True) -> GroupRep:
    """Validated group: unit determinants, relators trivial, generators preserve the cone.
    With ``strict_cone=False`` cone violations are recorded in ``flags`` instead of raised."""
    gens = {}
    for l, g in generators.items():
        if not (isinstance(l, str) and len(l) == 1 and l.islower()):
            raise GroupError(f"labels must be single lower-case letters, got {l!r}")
        g = np.asarray(g, float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise GroupError(f"generator {l!r} is not square")
        gens[l] = g
    if not gens:
        raise GroupError("no generators")
    dims = {g.shape[0] for g in gens.values()}
    if len(dims) != 1:
        raise GroupError("generators have different sizes")
    section = Disk() if section is None else make_shape(section)
    rels = tuple(word_string(parse_word(w)) for w in relators)
    rep = GroupRep(gens, rels, section, {})
    r = rep.validate()
    bad_det = [l for l, v in r["det"].items() if v > 1e-9]
    if bad_det:
        raise GroupError(f"generators {bad_det} do not have determinant 1")
    if not r["relators_ok"]:
        raise GroupError(f"relators not satisfied: {r['relators']}")
    if not r["cone_ok"]:
        bad = [l for l, v in r["cone"].items() if v > 1e-9]
        if strict_cone:
            raise GroupError(f"generators {bad} do not preserve the cone")
        rep.flags["cone_violations"] = {l: r["cone"][l] for l in bad}
    return rep


# ---------------------------------------------------------------- cocycles

@dataclass(frozen=True, eq=False)
class Cocycle:
    rep: GroupRep
    tau: dict

    def __add__(self, other: "Cocycle"):
        if other.rep is not self.rep:
            raise GroupError("cocycles over different groups")
        return Cocycle(self.rep, {l: self.tau[l] + other.tau[l] for l in self.tau})

    def __mul__(self, c):
        return Cocycle(self.rep, {l: c * v for l, v in self.tau.items()})

    __rmul__ = __mul__

    def letter_translations(self):
        """Translations for generators then inverses, matching GroupRep.letter_matrices."""
        fwd = [self.tau[l] for l in self.rep.labels]
        bwd = [-self.rep._inverse(l) @ self.tau[l] for l in self.rep.labels]
        return np.array(fwd + bwd)

    def relator_defects(self):
        return {w: float(np.abs(extend_cocycle(self, w)).max()) for w in self.rep.relators}

    def to_dict(self):
        return {l: v.tolist() for l, v in self.tau.items()}


def make_cocycle(rep: GroupRep, tau: dict, tol=1e-6) -> Cocycle:
    t = {}
    for l in rep.labels:
        if l not in tau:
            raise GroupError(f"missing translation for {l!r}")
        t[l] = np.asarray(tau[l], float).reshape(rep.dim)
    extra = set(tau) - set(rep.labels)
    if extra:
        raise GroupError(f"unknown labels {sorted(extra)}")
    c = Cocycle(rep, t)
    # relator consistency, relative to the size of the translations involved
    scale = 1.0 + max((np.abs(v).max() for v in t.values()), default=0.0)
    bad = {w: d for w, d in c.relator_defects().items() if d > tol * scale}
    if bad:
        raise GroupError(f"translations violate the cocycle rule on relators: {bad}")
    return c


def extend_cocycle(c: Cocycle, word):
    """Translation part of the affine map of a word: tau(ab) = tau(a) + a tau(b)."""
    rep = c.rep
    M = np.eye(rep.dim)
    t = np.zeros(rep.dim)
    for l, inv in parse_word(word):
        if l not in rep.generators:
            raise GroupError(f"unknown label {l!r}")
        if inv:
            gi = rep._inverse(l)
            t = t - M @ (gi @ c.tau[l])
            M = M @ gi
        else:
            t = t + M @ c.tau[l]
            M = M @ rep.generators[l]
    return t


def zero_cocycle(rep: GroupRep) -> Cocycle:
    return Cocycle(rep, {l: np.zeros(rep.dim) for l in rep.labels})


def coboundary(rep: GroupRep, V) -> Cocycle:
    """tau(gamma) = (I - gamma) V: conjugation of the linear action by the translation V."""
    V = np.asarray(V, float).reshape(rep.dim)
    return Cocycle(rep, {l: V - g @ V for l, g in rep.generators.items()})


# ---------------------------------------------------------------- splittings, bulging, bending

@dataclass(frozen=True, eq=False)
class Splitting:
    """Amalgam data: generator labels of the two factors, words generating the common
    subgroup, its fixed vector X, an optional complement H (rows) and the parameter s."""

    gens_A: tuple
    gens_B: tuple
    lambda_words: tuple
    X: np.ndarray
    H: np.ndarray | None = None
    s: float = 0.0

    def with_s(self, s):
        return Splitting(self.gens_A, self.gens_B, self.lambda_words, self.X, self.H, float(s))


def validate_splitting(rep: GroupRep, split: Splitting, tol=1e-6) -> dict:
    X = np.asarray(split.X, float)
    labels = set(rep.labels)
    A, B = set(split.gens_A), set(split.gens_B)
    if not A <= labels or not B <= labels or A & B or (A | B) != labels:
        raise GroupError("splitting labels must partition the generators")
    defects = {w: float(np.abs(rep.matrix(w) @ X - X).max()) for w in split.lambda_words}
    bad = {w: d for w, d in defects.items() if d > tol * max(1.0, np.abs(X).max())}
    if bad:
        raise GroupError(f"X is not fixed by the common subgroup: {bad}")
    return defects


def complement_basis(X, H=None):
    """Two rows spanning a plane complementary to X (standard orthogonal complement by default)."""
    X = np.asarray(X, float)
    if H is not None:
        H = np.asarray(H, float).reshape(2, 3)
    else:
        _, _, vt = np.linalg.svd(X[None])
        H = vt[1:]
    if abs(np.linalg.det(np.vstack([H, X]))) < 1e-12 * np.linalg.norm(X):
        raise GroupError("H is not complementary to X")
    return H


def bulge_matrix(split: Splitting, s=None):
    """A_s acting as e^s on H and e^(-2s) on X; determinant 1."""
    s = split.s if s is None else s
    H = complement_basis(split.X, split.H)
    Bm = np.c_[H[0], H[1], split.X]
    return Bm @ np.diag([np.exp(s), np.exp(s), np.exp(-2 * s)]) @ np.linalg.inv(Bm)


def bulge(rep0: GroupRep, split: Splitting) -> GroupRep:
    """Conjugate the second factor by A_s. The cone is kept fixed; generators that stop
    preserving it are recorded in ``flags['cone_violations']``."""
    validate_splitting(rep0, split)
    A = bulge_matrix(split)
    Ai = np.linalg.inv(A)
    gens = {l: (A @ g @ Ai if l in split.gens_B else g.copy()) for l, g in rep0.generators.items()}
    return make_group(gens, rep0.relators, rep0.section, strict_cone=False)


def bend_translation(rep: GroupRep, split: Splitting) -> Cocycle:
    """Bending cocycle: 0 on the first factor, s (X - gamma X) on the second."""
    validate_splitting(rep, split)
    X = np.asarray(split.X, float)
    tau = {l: (split.s * (X - g @ X) if l in split.gens_B else np.zeros(rep.dim)) for l, g in rep.generators.items()}
    return make_cocycle(rep, tau)


# ---------------------------------------------------------------- affine maps

def projective_embed(gamma, tau):
    """Block matrix [[gamma, tau], [0, 1]] of the affine map X -> gamma X + tau."""
    gamma = np.asarray(gamma, float)
    n = gamma.shape[0]
    M = np.eye(n + 1)
    M[:n, :n] = gamma
    M[:n, n] = np.asarray(tau, float).reshape(n)
    return M


def compose_affine(g1, t1, g2, t2):
    """(g1, t1) o (g2, t2) = (g1 g2, t1 + g1 t2)."""
    return g1 @ g2, t1 + g1 @ t2


# ---------------------------------------------------------------- orbits

def count_reduced_words(n_generators, L):
    k = 2 * n_generators
    return 1 + sum(k * (k - 1) ** (j - 1) for j in range(1, L + 1))


@dataclass(frozen=True)
class GroupElements:
    matrices: np.ndarray
    translations: np.ndarray
    lengths: np.ndarray
    last: np.ndarray  # index of the final letter, -1 for the empty word
    labels: list


def group_elements(rep: GroupRep, L: int, cocycle: Cocycle | None = None, cap=50_000) -> GroupElements:
    """Affine maps of all freely reduced words of length <= L, breadth first, in a fixed order."""
    if L < 0:
        raise GroupError("word length must be non-negative")
    total = count_reduced_words(len(rep.labels), L)
    if total > cap:
        raise OrbitCapError(f"{total} words of length <= {L} exceed the cap {cap}")
    labs, mats = rep.letter_matrices()
    k = len(rep.labels)
    inv_of = np.r_[np.arange(k, 2 * k), np.arange(k)]
    trs = cocycle.letter_translations() if cocycle is not None else np.zeros((2 * k, rep.dim))
    M = np.eye(rep.dim)[None]
    t = np.zeros((1, rep.dim))
    last = np.array([-1])
    out_M, out_t, out_len, out_last = [M], [t], [np.zeros(1, int)], [last]
    for n in range(1, L + 1):
        nm, nt, nl = [], [], []
        for j in range(2 * k):
            ok = last != inv_of[j]
            nm.append(M[ok] @ mats[j])
            nt.append(t[ok] + M[ok] @ trs[j])
            nl.append(np.full(ok.sum(), j))
        M, t, last = np.concatenate(nm), np.concatenate(nt), np.concatenate(nl)
        out_M.append(M)
        out_t.append(t)
        out_len.append(np.full(len(M), n))
        out_last.append(last)
    return GroupElements(np.concatenate(out_M), np.concatenate(out_t), np.concatenate(out_len),
                         np.concatenate(out_last), labs)


def _dedup(points, tol):
    q = np.round(points / tol).astype(np.int64) if tol > 0 else points
    _, first = np.unique(q, axis=0, return_index=True)
    return np.sort(first)


def orbit_points(rep: GroupRep, c: Cocycle, X0, L: int, cap=50_000, tol=1e-9, return_lengths=False):
    """{gamma_w X0 + tau_w : reduced words w, |w| <= L}, duplicates within tol removed
    (first occurrence in breadth-first order kept)."""
    X0 = np.asarray(X0, float).reshape(rep.dim)
    ge = group_elements(rep, L, c, cap)
    P = ge.matrices @ X0 + ge.translations
    keep = _dedup(P, tol)
    if return_lengths:
        return P[keep], ge.lengths[keep]
    return P[keep]


@dataclass(frozen=True)
class BoundaryEstimate:
    values: np.ndarray
    gap: float | None  # max |g_L - g_(L-1)| when the shorter truncation is available
    gap_per_node: np.ndarray | None = None


def estimate_boundary_function(orbit, boundary_nodes, lengths=None) -> BoundaryEstimate:
    """g(b) = max over orbit points X of X.(b, -1). With word lengths given, also report
    the gap to the estimate from words one letter shorter."""
    P = np.atleast_2d(np.asarray(orbit, float))
    if len(P) == 0:
        raise GroupError("empty orbit")
    b = np.atleast_2d(np.asarray(boundary_nodes, float))

    def trace(Q):
        out = np.full(len(b), -np.inf)
        for i in range(0, len(Q), 20_000):
            blk = Q[i:i + 20_000]
            out = np.maximum(out, (blk[:, :-1] @ b.T - blk[:, -1:]).max(0))
        return out

    g = trace(P)
    if lengths is None:
        return BoundaryEstimate(g, None)
    lengths = np.asarray(lengths)
    L = lengths.max()
    if L == 0:
        return BoundaryEstimate(g, 0.0, np.zeros(len(b)))
    g_prev = trace(P[lengths < L])
    d = g - g_prev
    return BoundaryEstimate(g, float(np.abs(d).max()), d)


def boundary_function(cone: ConeSpec, rep: GroupRep, c: Cocycle, X0, L, cap=50_000) -> BoundaryEstimate:
    P, lens = orbit_points(rep, c, X0, L, cap, return_lengths=True)
    return estimate_boundary_function(P, cone.omega_star.boundary_nodes, lens)


# ---------------------------------------------------------------- maximal domains

@dataclass(frozen=True, eq=False)
class MaximalDomains:
    s_minus: SupportFunction   # largest convex function with boundary values g: the future domain
    s_plus: GridFunction       # smallest concave function with boundary values g: the past domain
    halfspaces: object

    def gap(self):
        return self.s_plus.values - self.s_minus.s.values


def maximal_domain(g, cone: ConeSpec, method="hull") -> MaximalDomains:
    g = np.asarray(g, float).ravel()
    if not np.all(np.isfinite(g)):
        raise GroupError("boundary function must be finite")
    sm = support_from_envelope(cone, g, method)
    neg = envelope_from_boundary(-g, cone.omega_star, method)
    sp = GridFunction(cone.omega_star, -neg.values, g.copy(), False, {"planes": neg.meta.get("planes")})
    return MaximalDomains(sm, sp, cauchy_development_halfspaces(g, cone))


# ---------------------------------------------------------------- action on support functions

def dual_normal(gamma, y):
    """Write gamma^T (y, -1) = mu (y'', -1); returns (mu, y'')."""
    y = np.atleast_2d(np.asarray(y, float))
    Z = np.c_[y, -np.ones(len(y))] @ np.asarray(gamma, float)
    mu = -Z[:, -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        y2 = Z[:, :-1] / mu[:, None]
    return mu, y2


def act_on_support(s: SupportFunction, gamma, tau, omega: GaugeFunction | None = None, band=2.0) -> SupportFunction:
    """Support function of gamma K + tau: y -> mu s(y'') + tau.(y, -1) with
    gamma^T (y, -1) = mu (y'', -1).

    The grid values use that formula (exact evaluation of s when it has pieces or a closed
    form, otherwise interpolation). ``meta`` carries the node mask (y'' at least ``band``
    spacings inside the section), mu, and, given a gauge, the ratio w(y) / w(y'') that mu
    should equal.
    """
    gamma = np.asarray(gamma, float)
    tau = np.asarray(tau, float).ravel()
    cone = s.cone
    dom = cone.omega_star
    shape = dom.shape

    def value(y):
        mu, y2 = dual_normal(gamma, y)
        if np.any(mu <= 0):
            raise GroupError("gamma does not preserve the cone: normal leaves the chart")
        y = np.atleast_2d(y)
        return mu * s.value(y2) + np.c_[y, -np.ones(len(y))] @ tau

    mu, y2 = dual_normal(gamma, dom.nodes)
    if np.any(mu <= 0):
        raise GroupError("gamma does not preserve the cone: normal leaves the chart")
    depth = shape.distance_to_boundary(y2)
    mask = depth >= band * dom.h
    vals = np.full(dom.size, np.nan)
    ok = depth > 0 if s.kind == "grid" else np.ones(dom.size, bool)
    vals[ok] = mu[ok] * s.value(y2[ok]) + np.c_[dom.nodes[ok], -np.ones(ok.sum())] @ tau
    if (~ok).any():
        # interpolation cannot reach images outside the section; fall back to the nearest node value
        vals[~ok] = mu[~ok] * s.s.values[np.argmin(((y2[~ok, None] - dom.nodes[None]) ** 2).sum(-1), 1)] \
            + np.c_[dom.nodes[~ok], -np.ones((~ok).sum())] @ tau
    bvals = None
    if s.kind != "grid":
        bvals = value(dom.boundary_nodes)
    meta = {"mask": mask, "mu": mu, "image": y2}
    if omega is not None:
        inside = depth > 0
        ratio = np.full(dom.size, np.nan)
        ratio[inside] = omega.value(dom.nodes[inside]) / omega.value(y2[inside])
        meta["mu_ratio"] = ratio
        meta["mu_ratio_error"] = float(np.nanmax(np.abs(ratio[mask] - mu[mask]) / mu[mask])) if mask.any() else 0.0
    f = GridFunction(dom, vals, bvals, s.s.convexity_certified, meta)
    pieces = None
    exact = None
    if s.pieces is not None:
        # max of affine pieces transforms exactly as the points X_k = (B_k, -a_k)
        B, a = s.pieces
        X = np.c_[B, -a] @ gamma.T + tau
        pieces = (X[:, :-1], -X[:, -1])
    elif s.exact is not None:
        def gradient(y, _e=1e-7):
            y = np.atleast_2d(y)
            return np.stack([(value(y + _e * u) - value(y - _e * u)) / (2 * _e) for u in np.eye(2)], 1)
        exact = (value, gradient)
    return SupportFunction(cone, f, pieces, exact)


def equivariance_residual(s: SupportFunction, gamma, tau, omega=None, band=2.0):
    """max over masked nodes of |s - (gamma, tau) . s|."""
    t = act_on_support(s, gamma, tau, omega, band)
    m = t.s.meta["mask"]
    if not m.any():
        return 0.0
    return float(np.abs(t.s.values[m] - s.s.values[m]).max())


def dual_projective_action(gamma, tau, Y):
    """Action of the affine map on homogeneous dual coordinates: M^(-T) Y with M the
    projective embedding."""
    M = projective_embed(gamma, tau)
    return np.atleast_2d(Y) @ np.linalg.inv(M)


def _normalize_projective(V):
    V = V / np.linalg.norm(V, axis=1, keepdims=True)
    lead = np.argmax(np.abs(V) > 1e-15, axis=1)
    sgn = np.sign(V[np.arange(len(V)), lead])
    return V * sgn[:, None]


def limit_set_samples(g, boundary_nodes):
    """Points (y : -1 : -g(y)) over boundary normals, unit norm, first nonzero entry positive."""
    g = np.asarray(g, float).ravel()
    b = np.atleast_2d(np.asarray(boundary_nodes, float))
    if len(g) != len(b):
        raise GroupError("boundary values do not match boundary nodes")
    if not np.all(np.isfinite(g)):
        raise GroupError("boundary function must be finite")
    V = np.c_[b, -np.ones(len(b)), -g]
    return _normalize_projective(V)


def limit_set_chart(V):
    """Back to the chart: (y, g(y)) from homogeneous samples (y : -1 : -g)."""
    V = np.atleast_2d(V)
    c = -V[:, -2]
    return V[:, :-2] / c[:, None], -V[:, -1] / c

import numpy as np
import pytest
from hypothesis import given, strategies as st

from affspace.convex_core import (GridDomain, GridError, GridFunction, biconjugate, check_convexity, conjugate_at,
                                  envelope_from_boundary, fenchel_gap, fenchel_tolerance, legendre_transform,
                                  lipschitz_estimate, sample_function, subdifferential, window_domain)
from affspace.shapes import Box


def quad(y):
    return 0.5 * (y * y).sum(1)


# ---------------------------------------------------------------- domains

def test_nodes_strictly_inside_and_lexicographic(disk65):
    d = disk65
    assert np.all(d.shape.distance_to_boundary(d.nodes) > 0)
    order = np.lexsort((d.nodes[:, 1], d.nodes[:, 0]))
    assert np.array_equal(order, np.arange(d.size))
    assert len(d.boundary_nodes) == 4 * 65


def test_window_domain_closed_box():
    w = window_domain(2.0, 41)
    assert w.size == 41 * 41
    assert np.isclose(w.nodes.min(), -2) and np.isclose(w.nodes.max(), 2)


def test_nonfinite_values_rejected(disk65):
    v = np.zeros(disk65.size)
    v[3] = np.nan
    with pytest.raises(GridError):
        GridFunction(disk65, v)


# ---------------------------------------------------------------- legendre transform

def test_quadratic_self_dual():
    f = sample_function(GridDomain("disk:3", 121), quad)
    g = legendre_transform(f, 1.0, 41)
    x = g.domain.nodes
    assert np.abs(g.values - quad(x)).max() <= f.domain.h
    assert g.convexity_certified


def test_minkowski_gauge_conjugate_is_hyperboloid():
    f = sample_function(GridDomain("disk", 101), lambda y: -np.sqrt(np.clip(1 - (y * y).sum(1), 0, None)))
    g = legendre_transform(f, 2.0, 41)
    x = g.domain.nodes
    assert np.abs(g.values - np.sqrt(1 + (x * x).sum(1))).max() < 1e-2


def test_affine_conjugate_brute_force_oracle():
    # frozen from tests/oracles/make_oracles.py::conj_affine_disk
    q = np.array([[0.0, 0.0], [1.0, 1.0], [-0.5, 0.3], [1.5, -0.5]])
    oracle = np.array([1.0, 1.0, 1.5297050172096842, 0.7071067811865476])
    f = sample_function(GridDomain("disk", 101), lambda y: y @ np.array([1.0, 0.0]))
    got = conjugate_at(f, q)
    assert np.abs(got - oracle).max() < 1e-3


def test_conjugate_lipschitz_bounded_by_circumradius():
    f = sample_function(GridDomain("disk:1.5", 65), lambda y: np.abs(y[:, 0]) + y[:, 1] ** 2)
    g = legendre_transform(f, 2.0, 65)
    assert lipschitz_estimate(g) <= 1.5 + 1e-9
    assert g.meta["lipschitz_bound"] <= 1.5 + 1e-12


def test_tie_breaking_lowest_index():
    d = GridDomain("disk", 33)
    f = GridFunction(d, np.zeros(d.size))
    _, _, arg = conjugate_at(f, np.zeros((1, 2)), with_boundary=False, return_argmax=True)
    assert arg[0] == 0


def test_empty_domain_errors():
    d = GridDomain("disk:0.001", 3)
    assert d.size <= 1


# ---------------------------------------------------------------- biconjugate

def test_convex_fixed_point(disk65):
    f = sample_function(disk65, lambda y: np.log(np.exp(y[:, 0]) + np.exp(-y[:, 1])))
    ff = biconjugate(f, dual_resolution=161)
    assert np.abs(ff.values - f.values).max() <= 2 * lipschitz_estimate(f) * disk65.h


def test_biconjugate_of_concave_cone():
    # frozen from tests/oracles/make_oracles.py::biconj_neg_abs (LP lower envelope)
    d = GridDomain("disk", 65)
    f = sample_function(d, lambda y: -np.linalg.norm(y, axis=1))
    ff = biconjugate(f, dual_resolution=161)
    assert np.abs(ff.values - (-1.0)).max() < 2 * d.h
    assert np.all(ff.values <= f.values + 1e-12)


def test_biconjugate_convex_max():
    d = GridDomain("disk", 65)
    f = sample_function(d, lambda y: np.maximum(np.abs(y[:, 0]), 0.5))
    ff = biconjugate(f, dual_resolution=161)
    # 1-D hull along axis slices leaves a convex slice unchanged
    assert np.abs(ff.values - f.values).max() <= 2 * lipschitz_estimate(f) * d.h


# ---------------------------------------------------------------- subdifferentials

def test_subdifferential_quadratic(disk65):
    f = sample_function(disk65, quad, certify=True)
    x = disk65.nodes[disk65.locate([[0.3125, 0.0]])[0]]
    Y, gaps = subdifferential(f, x, window=1.0, dual_resolution=81)
    assert np.abs(Y - x).max() <= 2 * (disk65.h + 2 / 80)
    assert np.all(np.abs(gaps) <= fenchel_tolerance(f))


def test_subdifferential_affine(disk65):
    f = sample_function(disk65, lambda y: y @ np.array([0.25, -0.5]) - 0.1, certify=True)
    Y, _ = subdifferential(f, disk65.nodes[100], window=1.0, dual_resolution=81)
    assert np.abs(Y - [0.25, -0.5]).max() < 1e-12


def test_subdifferential_abs_segment():
    # frozen from tests/oracles/make_oracles.py::subdiff_abs_scan: segment t in [-1, 1] on the y1 axis
    d = GridDomain("disk", 81)
    f = sample_function(d, lambda y: np.abs(y[:, 0]), certify=True)
    x = np.array([0.0, 0.2])
    Y, _ = subdifferential(f, x, window=2.0, dual_resolution=81)
    assert np.abs(Y[:, 1]).max() < 1e-12
    assert np.isclose(Y[:, 0].min(), -1.0, atol=d.h) and np.isclose(Y[:, 0].max(), 1.0, atol=d.h)


def test_subdifferential_outside_domain_errors(disk65):
    f = sample_function(disk65, quad, certify=True)
    with pytest.raises(GridError):
        subdifferential(f, [2.0, 0.0])


# ---------------------------------------------------------------- fenchel gap

def test_fenchel_gap_examples(disk65):
    f = sample_function(GridDomain("disk:3", 121), quad)
    x = np.array([[0.2, -0.1]])
    assert abs(fenchel_gap(f, x, x)[0]) < f.domain.h
    assert abs(fenchel_gap(f, x, x + [1, 0])[0] - 0.5) < f.domain.h
    w = sample_function(disk65, lambda y: -np.sqrt(np.clip(1 - (y * y).sum(1), 0, None)))
    assert abs(fenchel_gap(w, [[0, 0]], [[0, 0]])[0]) < 1e-12


def test_fenchel_gap_window_error(disk65):
    f = sample_function(disk65, quad)
    with pytest.raises(GridError):
        fenchel_gap(f, [[0, 0]], [[3, 0]], window=2.0)


@given(st.lists(st.floats(-0.95, 0.95), min_size=4, max_size=4))
def test_fenchel_inequality_property(v):
    d = GridDomain("disk", 49)
    f = sample_function(d, lambda y: np.exp(y[:, 0]) + y[:, 1] ** 2)
    x = np.array([v[:2]]) * 0.9
    y = np.array([v[2:]]) * 2
    if not d.shape.contains(x)[0]:
        return
    assert fenchel_gap(f, x, y)[0] >= -fenchel_tolerance(f)


# ---------------------------------------------------------------- order reversal and triple conjugate

@given(st.floats(0.0, 1.0), st.floats(-1, 1))
def test_order_reversal(c, a):
    d = GridDomain("disk", 41)
    f = sample_function(d, lambda y: a * y[:, 0] + (y * y).sum(1))
    g = f.with_values(f.values + c + 0.1 * (d.nodes[:, 1] ** 2), f.boundary_values + c + 0.1 * d.boundary_nodes[:, 1] ** 2)
    fs, gs = legendre_transform(f, 2.0, 41), legendre_transform(g, 2.0, 41)
    assert np.all(gs.values <= fs.values)


def test_triple_conjugate(disk65):
    f = sample_function(disk65, lambda y: np.abs(y[:, 0] - 0.2) + 0.3 * y[:, 1] ** 2)
    win = Box([-2, -2], [2, 2])
    f1 = legendre_transform(f, win, 81)
    f2 = GridFunction(disk65, conjugate_at(f1, disk65.nodes, with_boundary=False),
                      conjugate_at(f1, disk65.boundary_nodes, with_boundary=False))
    f3 = legendre_transform(f2, win, 81)
    lip = lipschitz_estimate(f)
    assert np.abs(f1.values - f3.values).max() <= 2 * lip * disk65.h


def test_convexity_check(disk65):
    ok, _ = check_convexity(sample_function(disk65, quad))
    assert ok
    ok, node = check_convexity(sample_function(disk65, lambda y: -(y * y).sum(1)))
    assert not ok and node is not None


# ---------------------------------------------------------------- envelopes

def test_envelope_constant(disk65):
    e = envelope_from_boundary(np.full(len(disk65.boundary_nodes), 0.7), disk65)
    assert np.abs(e.values - 0.7).max() < 1e-12


def test_envelope_affine(disk65):
    b = disk65.boundary_nodes
    e = envelope_from_boundary(b @ [0.3, -0.4] - 0.2, disk65)
    assert np.abs(e.values - (disk65.nodes @ [0.3, -0.4] - 0.2)).max() < 1e-12


def test_envelope_random_minorant_oracle():
    # frozen from tests/oracles/make_oracles.py::envelope_abs_circle
    q = np.array([[0.0, 0.0], [0.5, 0.0], [0.2, 0.6]])
    oracle = np.array([0.0, 0.5, 0.2])
    d = GridDomain("disk", 81)
    g = np.abs(d.boundary_nodes[:, 0])
    for method in ("hull", "lp"):
        e = envelope_from_boundary(g, d, method)
        k = d.locate(q)
        assert np.all(k >= 0)
        assert np.abs(e.values[k] - oracle).max() < 1e-6


def test_envelope_hull_and_lp_agree(disk65, rng):
    g = rng.normal(size=len(disk65.boundary_nodes))
    a = envelope_from_boundary(g, disk65, "hull")
    b = envelope_from_boundary(g, disk65, "lp")
    assert np.abs(a.values - b.values).max() < 1e-8


@given(st.integers(0, 10_000))
def test_envelope_below_boundary_data(seed):
    d = GridDomain("disk", 41)
    g = np.random.default_rng(seed).normal(size=len(d.boundary_nodes))
    e = envelope_from_boundary(g, d)
    assert np.all(e.boundary_values <= g + 1e-12)
    ok, _ = check_convexity(e)
    assert ok


def test_envelope_errors(disk65):
    with pytest.raises(GridError):
        envelope_from_boundary(np.zeros(3), disk65)
    g = np.zeros(len(disk65.boundary_nodes))
    g[0] = np.inf
    with pytest.raises(GridError):
        envelope_from_boundary(g, disk65)

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from affspace import serialization as io
from affspace.convex_core import GridDomain, GridError, sample_function
from affspace.deformations import bend_translation, coboundary
from affspace.fixtures import octagon_group, octagon_splitting


def test_grid_function_round_trip_is_exact(tmp_path, disk65):
    f = sample_function(disk65, lambda y: np.exp(y[:, 0]) / 3 + np.pi * y[:, 1] ** 2, certify=True)
    p = io.write_grid_function(f, tmp_path / "f.csv")
    side = json.loads(io.sidecar_path(p).read_text())
    assert side["interior_rows"] == disk65.size and side["convexity_certified"]
    g = io.read_grid_function(p)
    assert np.array_equal(g.values, f.values) and np.array_equal(g.boundary_values, f.boundary_values)
    assert g.domain.to_dict() == disk65.to_dict()


def test_read_rejects_wrong_domain(tmp_path, disk65):
    f = sample_function(disk65, lambda y: y[:, 0])
    p = io.write_grid_function(f, tmp_path / "f.csv")
    with pytest.raises(GridError):
        io.read_grid_function(p, GridDomain("disk", 33))


@given(st.floats(allow_nan=False, allow_infinity=False, width=64))
def test_seventeen_digits_round_trip(x):
    assert float(io.fmt(x)) == x


def test_group_and_cocycle_json(tmp_path):
    rep = octagon_group()
    back = io.group_from_json(io.group_to_json(rep))
    assert all(np.array_equal(back.generators[l], rep.generators[l]) for l in rep.labels)
    assert back.relators == rep.relators
    flat = json.loads(io.group_to_json(rep))
    flat["generators"] = {l: np.ravel(m).tolist() for l, m in flat["generators"].items()}
    again = io.group_from_json(json.dumps(flat))
    assert all(np.array_equal(again.generators[l], rep.generators[l]) for l in rep.labels)
    for c in (bend_translation(rep, octagon_splitting(rep, 0.3)), coboundary(rep, [0.1, 0.2, 0.3])):
        d = io.cocycle_from_json(rep, io.cocycle_to_json(c))
        assert all(np.array_equal(d.tau[l], c.tau[l]) for l in rep.labels)


def test_jsonable_nonfinite():
    out = io.jsonable({"a": np.float64(np.inf), "b": np.arange(2), "c": np.bool_(True), "d": (1.5, -np.inf)})
    assert out == {"a": "inf", "b": [0, 1], "c": True, "d": [1.5, "-inf"]}
    json.dumps(out, allow_nan=False)


def test_sha256_stable(tmp_path):
    p = tmp_path / "x.txt"
    p.write_text("abc")
    assert io.sha256_file(p) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"

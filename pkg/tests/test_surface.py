import json
import math

import numpy as np
import pytest

from chebyshev_coords.errors import InvalidMesh, ParseError, UnknownVertex
from chebyshev_coords.surface import (ConeSurface, curvature_totals, gauss_bonnet_residual,
                                      load_surface, save_surface, surface_from_dict,
                                      surface_to_dict, validate_surface)
from oracles import defects_from_lengths, totals_from_lengths

# open square pyramid: base corners (+-1, +-1, 0), apex (0, 0, 1); each apex angle is acos(1/3)
PYRAMID_DEFECT = 1.359347637816487

TWO_PI = 2 * math.pi

PYRAMID_OBJ = """v 1 1 0
v -1 1 0
v -1 -1 0
v 1 -1 0
v 0 0 1
f 1 2 5
f 2 3 5
f 3 4 5
f 4 1 5
"""


def fan_surface(n=6, r=1.0, apex_angle=None):
    """``n`` isosceles triangles around one interior vertex."""
    a = TWO_PI / n if apex_angle is None else apex_angle
    side = 2 * r * math.sin(a / 2)
    faces = [[0, 1 + k, 1 + (k + 1) % n] for k in range(n)]
    lengths = [[r, side, r] for _ in range(n)]
    return ConeSurface(range(n + 1), [False] + [True] * n, faces, lengths)


def test_pyramid_defect_matches_hand_value(tmp_path):
    p = tmp_path / "pyr.obj"
    p.write_text(PYRAMID_OBJ)
    s = load_surface(p)
    apex = s.index_of(4)
    assert s.defect(apex) == pytest.approx(PYRAMID_DEFECT, abs=1e-12)
    assert TWO_PI - 4 * math.acos(1 / 3) == pytest.approx(PYRAMID_DEFECT, abs=1e-15)
    tot = curvature_totals(s)
    assert tot.total_pos == pytest.approx(PYRAMID_DEFECT, abs=1e-12)
    assert tot.total_neg == 0.0


def test_flat_fan_has_no_atoms():
    s = validate_surface(fan_surface(6))
    assert abs(s.defect(0)) < 1e-12
    assert curvature_totals(s).atoms == []


def test_cone_fan_defect():
    s = validate_surface(fan_surface(5, apex_angle=1.0))
    assert s.defect(0) == pytest.approx(TWO_PI - 5.0, abs=1e-12)


def test_defects_agree_with_law_of_cosines():
    from conftest import random_case

    for seed in (0, 1, 2):
        s = random_case(seed)[0].surface
        ref = defects_from_lengths(s)
        for v, d in ref.items():
            assert s.defect(v) == pytest.approx(d, abs=1e-10)
        pos, neg = totals_from_lengths(s)
        tot = curvature_totals(s)
        assert tot.total_pos == pytest.approx(pos, abs=1e-9)
        assert tot.total_neg == pytest.approx(neg, abs=1e-9)


def test_gauss_bonnet_on_generated_disk():
    from conftest import random_case

    s = random_case(4)[0].surface
    assert abs(gauss_bonnet_residual(s)) < 1e-9


def test_json_roundtrip(tmp_path):
    s = fan_surface(7, apex_angle=5.5)
    p = tmp_path / "fan.json"
    save_surface(s, p)
    t = load_surface(p)
    assert t.ids == s.ids
    assert np.allclose(t.lengths, s.lengths)
    assert surface_to_dict(t) == surface_to_dict(s)


def test_triangle_inequality_rejected():
    d = surface_to_dict(fan_surface(6))
    d["faces"][0]["lengths"] = [1.0, 3.0, 1.0]
    with pytest.raises(InvalidMesh, match="triangle inequality"):
        validate_surface(surface_from_dict(d))


def test_mismatched_shared_edge_rejected():
    d = surface_to_dict(fan_surface(6))
    d["faces"][0]["lengths"] = [1.1, 1.0, 1.0]
    with pytest.raises(InvalidMesh, match="shared edge lengths"):
        validate_surface(surface_from_dict(d))


def test_unknown_vertex_in_face():
    d = surface_to_dict(fan_surface(6))
    d["faces"][0]["v"][1] = 99
    with pytest.raises(InvalidMesh):
        surface_from_dict(d)


def test_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ParseError):
        load_surface(p)
    p.write_text(json.dumps([1, 2]))
    with pytest.raises(ParseError):
        load_surface(p)


def test_euler_characteristic_checked():
    # two fans sharing nothing: disconnected
    a = surface_to_dict(fan_surface(6))
    b = surface_to_dict(fan_surface(6))
    for v in b["vertices"]:
        v["id"] += 100
    for f in b["faces"]:
        f["v"] = [x + 100 for x in f["v"]]
    a["vertices"] += b["vertices"]
    a["faces"] += b["faces"]
    with pytest.raises(InvalidMesh):
        validate_surface(surface_from_dict(a))


def test_index_of_unknown():
    with pytest.raises(UnknownVertex):
        fan_surface(6).index_of(42)


def test_boundary_loop_is_single_cycle():
    s = fan_surface(8)
    loop = s.boundary_loop()
    assert len(loop) == 8

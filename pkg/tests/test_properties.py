import math

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from chebyshev_coords.chart import _motion, _move, local_positions
from chebyshev_coords.cross import biangle_alpha
from chebyshev_coords.geodesic import REACHED, trace_geodesic
from chebyshev_coords.net import condition_report
from chebyshev_coords.surface import TangentVector
from conftest import flat_case, single_cone
from oracles import local_angle, locate, unfold_straight_line, wrap

angles = st.floats(0.05, math.pi - 0.05)
slow = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@given(a1=angles, a2=st.floats(0.05, math.pi / 2 - 1e-9))
def test_biangle_alpha_lies_between_corners(a1, a2):
    # at most one corner of a biangle can be non-acute
    a = biangle_alpha(a1, a2)
    assert min(a1, a2) - 1e-12 <= a <= max(a1, a2) + 1e-12
    assert 0 < a < math.pi


@given(alpha=angles, p=st.floats(0, 2.0), n=st.floats(0, 2.0))
def test_condition_delta_sign_matches_pass(alpha, p, n):
    r = condition_report(alpha, p, n)
    if r.passed:
        assert r.delta > 0
    elif r.delta > 1e-11:
        pytest.fail("positive delta but failing report")


@given(x=st.floats(-3, 3), y=st.floats(-3, 3), d=st.floats(0, 2 * math.pi), L=st.floats(0.1, 3.0))
@slow
def test_flat_geodesics_are_straight(x, y, d, L):
    inst = flat_case()[0]
    sp = locate(inst, (x, y))
    tr = trace_geodesic(inst.surface, TangentVector(sp, local_angle(inst, sp.face, d)), L)
    assert tr.terminal == REACHED
    f, q, _ = tr.end_state()
    px, py = inst.planar_point(inst.surface.point_from_local(f, *q))
    assert math.hypot(px - x - L * math.cos(d), py - y - L * math.sin(d)) < 1e-9


@given(y=st.floats(0.2, 1.5), d=st.floats(-0.3, 0.3))
@slow
def test_cone_geodesic_matches_unfolding(y, d):
    inst = single_cone(0.4)
    sp = locate(inst, (-6.0, y))
    tr = trace_geodesic(inst.surface, TangentVector(sp, local_angle(inst, sp.face, d)), 9.0)
    f, q, ang = tr.end_state()
    p = inst.planar_point(inst.surface.point_from_local(f, *q))
    (ex, ey), ed = unfold_straight_line(inst, (-6.0, y), d, 9.0)
    if inst.piece[f] == 0:
        assert math.hypot(p[0] - ex, p[1] - ey) < 1e-8
        assert abs(wrap(inst.planar_direction(f, ang) - ed)) < 1e-8


@given(alpha=angles, t=st.floats(-math.pi, math.pi), sx=st.floats(-5, 5), sy=st.floats(-5, 5))
def test_motion_is_rigid(alpha, t, sx, sy):
    net = flat_case()[2][0]
    net.alpha, saved = alpha, net.alpha
    try:
        loc = local_positions(net, "affine")
    finally:
        net.alpha = saved
    p0, p1 = loc[(0, 0)], loc[(1, 1)]
    q0 = (sx, sy)
    r = math.dist(p0, p1)
    q1 = (sx + r * math.cos(t), sy + r * math.sin(t))
    M = _motion(p0, p1, q0, q1)
    a, b = _move(M, loc[(2, 3)]), _move(M, loc[(5, 1)])
    assert math.dist(a, b) == pytest.approx(math.dist(loc[(2, 3)], loc[(5, 1)]), abs=1e-9)
    assert math.dist(_move(M, p1), q1) < 1e-9

import json
import math

import pytest

from chebyshev_coords.cross import find_cross
from chebyshev_coords.errors import ConditionFailure, InvalidBranch
from chebyshev_coords.instances import cone_disk
from chebyshev_coords.net import (audit_all_patches, build_nets, check_bakelman_conditions,
                                  condition_report, corner_angle_bounds, dumps_net,
                                  edge_length_errors, hazzidakis_audit, net_angle_bounds, net_obj,
                                  net_report, node_angle_sums, propagate_net, sector_frames,
                                  validate_branched_net)
from chebyshev_coords.chart import local_positions
from conftest import flat_case, single_cone
from oracles import locate

TWO_PI = 2 * math.pi


def test_condition_report_examples():
    r = condition_report(math.pi / 2, 0.3, 0.0)
    assert r.passed
    assert r.delta == pytest.approx(math.pi / 2 - 0.3, abs=1e-15)
    assert r.delta == pytest.approx(1.2707963267948966, abs=1e-15)
    assert not condition_report(math.pi / 2, math.pi / 2, 0.0).passed
    assert not condition_report(1.0, 0.1, math.pi - 1.0).passed


def test_flat_net_is_square(flat):
    inst, fig, nets, reports = flat
    assert all(r.passed for r in reports)
    for net in nets:
        lo, hi = net_angle_bounds(net)
        assert lo == pytest.approx(math.pi / 2, abs=1e-9)
        assert hi == pytest.approx(math.pi / 2, abs=1e-9)
        clo, chi = corner_angle_bounds(net)
        assert clo == pytest.approx(math.pi / 2, abs=1e-9)
        assert chi == pytest.approx(math.pi / 2, abs=1e-9)
        assert edge_length_errors(inst.surface, net) < 1e-9
        assert net.h == 0.5 and net.meta["nudges"] == 0


def test_flat_net_node_positions_are_a_grid(flat):
    inst, _fig, nets, _ = flat
    net = nets[0]
    p00 = inst.planar_point(net.node_point(inst.surface, (0, 0)))
    p10 = inst.planar_point(net.node_point(inst.surface, (1, 0)))
    p01 = inst.planar_point(net.node_point(inst.surface, (0, 1)))
    e1 = ((p10[0] - p00[0]) / 0.5, (p10[1] - p00[1]) / 0.5)
    e2 = ((p01[0] - p00[0]) / 0.5, (p01[1] - p00[1]) / 0.5)
    for (i, j) in [(3, 2), (6, 6), (5, 1)]:
        p = inst.planar_point(net.node_point(inst.surface, (i, j)))
        x = p00[0] + 0.5 * (i * e1[0] + j * e2[0])
        y = p00[1] + 0.5 * (i * e1[1] + j * e2[1])
        assert math.hypot(p[0] - x, p[1] - y) < 1e-9


def _atom_net(h=0.4):
    # the cross runs through the origin atom; the one at (-1.5, 1) ends up inside a cell
    inst = cone_disk(atoms=[(0.0, 0.0, 0.3), (1.5, 1.5, 0.4), (-1.5, 1.0, 0.4)])
    s = inst.surface
    fig = find_cross(s, 0.1)
    nets, reports = build_nets(s, fig, h, (8, 8))
    return inst, fig, nets, reports


def test_cell_holding_a_cone_point():
    inst, fig, nets, _ = _atom_net()
    v = inst.atom_vertex(2)
    hits = [(net, ij, c) for net in nets for ij, c in net.cells.items() if v in c.atoms]
    assert len(hits) == 1
    net, (i, j), c = hits[0]
    assert c.defect == pytest.approx(0.4, abs=1e-9)
    assert c.holonomy == pytest.approx(0.4, abs=1e-9)
    assert c.angle_sum == pytest.approx(TWO_PI + 0.4, abs=1e-9)
    a = hazzidakis_audit(net, max(i - 3, 0), max(j - 3, 0), min(i + 2, 8), min(j + 2, 8))
    assert a.enclosed == pytest.approx(0.4, abs=1e-12)
    assert a.cellwise == pytest.approx(0.4, abs=1e-9)
    assert a.residual < 1e-9
    # a patch missing the cell does not see the atom
    if i > 1:
        b = hazzidakis_audit(net, 0, 0, i - 1, 8)
        assert b.cellwise == pytest.approx(b.enclosed, abs=1e-9)
        assert b.enclosed < 0.4 - 1e-9


def test_atom_net_audits_and_node_sums():
    inst, _fig, nets, reports = _atom_net()
    for net, rep in zip(nets, reports):
        out = audit_all_patches(net)
        assert out["patches"] == (8 * 9 // 2) ** 2
        assert out["max_residual"] < 1e-9
        for v in node_angle_sums(net).values():
            assert v == pytest.approx(TWO_PI, abs=1e-9)
        r = net_report(inst.surface, net, rep)
        assert r["cell_gauss_bonnet_error"] < 1e-9
        assert r["edge_length_error"] < 1e-9
        assert r["conditions"]["pass"]


def test_condition_failure_refuses():
    inst = single_cone(0.4)
    fig = find_cross(inst.surface, 0.1)
    frame = sector_frames(fig)[0]
    bad = condition_report(math.pi / 2, math.pi / 2, 0.0)
    with pytest.raises(ConditionFailure):
        propagate_net(inst.surface, frame, 0.5, (2, 2), report=bad)


def test_bakelman_report_from_records():
    inst = single_cone(0.4)
    s = inst.surface
    fig = find_cross(s, 0.1)
    reps = [check_bakelman_conditions(s, q, 0.1) for q in fig.sectors]
    assert all(r.passed for r in reps)
    for q, r in zip(fig.sectors, reps):
        assert r.delta == pytest.approx(min(q.alpha - r.omega_tilde_pos,
                                            math.pi - q.alpha - r.omega_tilde_neg))


def test_refinement_consistency_on_flat():
    inst, fig, coarse, _ = flat_case()
    fine, _ = build_nets(inst.surface, fig, 0.25, (12, 12))
    s = inst.surface
    for a, b in zip(coarse, fine):
        for (i, j) in [(1, 1), (3, 5), (6, 6)]:
            p = inst.planar_point(a.node_point(s, (i, j)))
            q = inst.planar_point(b.node_point(s, (2 * i, 2 * j)))
            assert math.dist(p, q) < 1e-9


def test_export_json_and_obj(flat):
    inst, _fig, nets, _ = flat
    text = dumps_net(inst.surface, nets[1])
    d = json.loads(text)
    assert d["h"] == 0.5 and d["window"] == [6, 6]
    assert len(d["nodes"]) == 49 and len(d["cells"]) == 36
    assert dumps_net(inst.surface, nets[1]) == text
    obj = net_obj(local_positions(nets[1], "affine"), nets[1].window)
    lines = obj.splitlines()
    assert sum(ln.startswith("v ") for ln in lines) == 49
    assert sum(ln.startswith("f ") for ln in lines) == 36


# branched nets -----------------------------------------------------------------

def _cone_point(inst, r, psi):
    """Point at radius ``r`` and cone angle ``psi`` about a single atom at the origin."""
    _v, w, _ = inst.atoms[0]
    th = inst.seam_angles[0]
    if w > 0:
        a, piece = th + w / 2.0 + psi, 0
    elif psi < TWO_PI:
        a, piece = th + psi, 0
    else:
        a, piece = th + psi - TWO_PI, 1
    return locate(inst, (r * math.cos(a), r * math.sin(a)), piece)


def rhombus_star(inst, valence, h, offset=0.3):
    """Rhombi of side ``h`` around the apex, split evenly in cone angle."""
    s = inst.surface
    theta = TWO_PI - inst.atoms[0][1]
    step = theta / valence
    centre = s.vertex_point(inst.atom_vertex(0))
    nodes = {"c": centre}
    cells = []
    for k in range(valence):
        psi = offset + k * step
        nodes[f"s{k}"] = _cone_point(inst, h, psi)
        nodes[f"o{k}"] = _cone_point(inst, 2 * h * math.cos(step / 2), psi + step / 2)
    for k in range(valence):
        cells.append(("c", f"s{k}", f"o{k}", f"s{(k + 1) % valence}"))
    return nodes, cells


def test_branched_net_at_negative_vertex():
    w = -2.5
    inst = cone_disk(atoms=[(0.0, 0.0, w)])
    nodes, cells = rhombus_star(inst, 6, 1.0)
    out = validate_branched_net(inst.surface, nodes, cells, 1.0)
    assert out["pass"], out
    (b,) = out["branch_vertices"]
    assert b["valence"] == 6
    assert b["angle_sum"] == pytest.approx(TWO_PI - w, abs=1e-8)


def test_valence_five_at_flat_vertex_is_invalid():
    inst = flat_case()[0]
    s = inst.surface
    v = min((u for u in range(s.n_vertices) if not s.boundary_flags[u]),
            key=lambda u: math.hypot(*inst.planar_point(s.vertex_point(u))))
    cx, cy = inst.planar_point(s.vertex_point(v))
    step = TWO_PI / 5
    nodes = {"c": s.vertex_point(v)}
    for k in range(5):
        a = 0.3 + k * step
        r = 2 * math.cos(step / 2)
        nodes[f"s{k}"] = locate(inst, (cx + math.cos(a), cy + math.sin(a)))
        nodes[f"o{k}"] = locate(inst, (cx + r * math.cos(a + step / 2), cy + r * math.sin(a + step / 2)))
    cells = [("c", f"s{k}", f"o{k}", f"s{(k + 1) % 5}") for k in range(5)]
    with pytest.raises(InvalidBranch, match="not at a cone vertex"):
        validate_branched_net(inst.surface, nodes, cells, 1.0)


def test_valence_five_at_positive_vertex_is_invalid():
    inst = single_cone(0.4)
    nodes, cells = rhombus_star(inst, 5, 1.0)
    with pytest.raises(InvalidBranch, match="positive"):
        validate_branched_net(inst.surface, nodes, cells, 1.0)

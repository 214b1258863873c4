"""Discrete Chebyshev nets in the sectors of a cross.

Row 0 and column 0 of a sector net are arclength samples of the two
bounding traces.  Every other node is the far corner of a geodesic
quadrilateral with all four sides of length ``h``.  It is found by shooting
geodesics of length ``h`` from its two known neighbours and solving for
the directions that make them meet.  A cell containing a cone point then
has angle sum ``2 pi + defect``.
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from collections import deque
from dataclasses import dataclass, field

from .errors import ConditionFailure, IncompleteDomain, InvalidBranch, NetDegenerate
from .geodesic import BOUNDARY, trace_geodesic
from .sides import LEFT, Curve
from .surface import TWO_PI, SurfacePoint, TangentVector, atom_vertices

_NEWTON_TOL = 1e-13
_NEWTON_STEPS = 40


# sector conditions ----------------------------------------------------------------

@dataclass
class SectorConditionReport:
    alpha: float
    omega_tilde_pos: float
    omega_tilde_neg: float
    delta: float
    passed: bool
    eps_quarter: float = None       # informative only

    def as_dict(self):
        return {"alpha": self.alpha, "omega_tilde_pos": self.omega_tilde_pos,
                "omega_tilde_neg": self.omega_tilde_neg, "delta": self.delta,
                "pass": self.passed, "eps_quarter": self.eps_quarter}


def condition_report(alpha, wt_pos, wt_neg, eps=None):
    delta = min(alpha - wt_pos, math.pi - alpha - wt_neg)
    ok = wt_pos < alpha - 1e-12 and wt_neg < math.pi - alpha - 1e-12
    return SectorConditionReport(alpha, wt_pos, wt_neg, delta, ok,
                                 None if eps is None else eps / 4)


def check_bakelman_conditions(s, sector, eps=None):
    """Curvature of the open sector plus the boundary turn seen from inside."""
    p = n = 0.0
    for v, share in sector.atoms.items():
        if share < 1.0 - 1e-12:
            continue                    # boundary atoms enter through the turn
        d = s.defect(v)
        if d > 0:
            p += d
        else:
            n -= d
    return condition_report(sector.alpha, p + sector.turn_plus, n + sector.turn_minus, eps)


# sector frames -----------------------------------------------------------------

@dataclass
class SectorFrame:
    """The two bounding traces of a sector, each starting at the corner."""

    index: int
    alpha: float
    u_trace: object
    u_t0: float
    v_trace: object
    v_t0: float
    record: object = None


def sector_frames(cross):
    g = cross.gamma1
    gr = g.reversed()
    r2, r3 = cross.gamma2, cross.gamma3
    q = cross.sectors
    return [
        SectorFrame(1, q[0].alpha, g, cross.o2, r2, 0.0, q[0]),
        SectorFrame(2, q[1].alpha, r2, 0.0, gr, -cross.o2, q[1]),
        SectorFrame(3, q[2].alpha, gr, -cross.o3, r3, 0.0, q[2]),
        SectorFrame(4, q[3].alpha, r3, 0.0, g, cross.o3, q[3]),
    ]


# frames and nodes ----------------------------------------------------------------

def _compose(t1, t2):
    """Transform applying ``t1`` then ``t2``."""
    c1, s1, x1, y1 = t1
    c2, s2, x2, y2 = t2
    return (c2 * c1 - s2 * s1, s2 * c1 + c2 * s1,
            c2 * x1 - s2 * y1 + x2, s2 * x1 + c2 * y1 + y2)


_IDENT = (1.0, 0.0, 0.0, 0.0)


def frame_transform(s, f_from, f_to, max_depth=8):
    """Rigid map from one face's frame to a nearby face's frame along a shortest face path."""
    if f_from == f_to:
        return _IDENT
    prev = {f_from: None}
    dq = deque([(f_from, 0)])
    while dq:
        f, d = dq.popleft()
        if d >= max_depth:
            continue
        for k in range(3):
            hit = s.nbr[f][k]
            if hit is None or hit[0] in prev:
                continue
            prev[hit[0]] = (f, k)
            if hit[0] == f_to:
                dq.clear()
                break
            dq.append((hit[0], d + 1))
    if f_to not in prev:
        raise NetDegenerate(f"faces {f_from} and {f_to} are not close")
    chain = []
    f = f_to
    while prev[f] is not None:
        chain.append(prev[f])
        f = prev[f][0]
    T = _IDENT
    for g, k in reversed(chain):
        T = _compose(T, s.xform[g][k])
    return T


def _apply(T, p):
    c, sn, tx, ty = T
    return (c * p[0] - sn * p[1] + tx, sn * p[0] + c * p[1] + ty)


def _rot(T):
    return math.atan2(T[1], T[0])


@dataclass
class NetNode:
    face: int
    xy: tuple
    dirs: dict = field(default_factory=dict)   # 'R', 'U', 'L', 'D' -> local angle

    def point(self, s):
        p = s.point_from_local(self.face, self.xy[0], self.xy[1])
        b = [min(1.0, max(0.0, c)) for c in p.bary]
        tot = sum(b)
        b = [c / tot for c in b]
        b[2] = 1.0 - b[0] - b[1]
        return SurfacePoint(self.face, tuple(b))


@dataclass
class NetCell:
    index: tuple
    angles: tuple                   # interior angles at A, B, C, D
    defect: float                   # atoms inside plus turn shares of atoms on its edges
    atoms: list
    holonomy: float = 0.0           # angle sum minus 2 pi

    @property
    def angle_sum(self):
        return sum(self.angles)

    def theta(self):
        """Alternating-form angles (A, B, C, D) measured from the row to the column direction."""
        a, b, c, d = self.angles
        return a, math.pi - b, math.pi - c, d


@dataclass
class SectorNet:
    index: int
    h: float
    window: tuple
    nodes: dict
    cells: dict
    alpha: float
    row_edges: dict = field(default_factory=dict)
    col_edges: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def node_point(self, s, ij):
        return self.nodes[ij].point(s)

    def net_angle(self, ij):
        """Angle from the outgoing row edge to the outgoing column edge at a node."""
        d = self.nodes[ij].dirs
        return (d["U"] - d["R"]) % TWO_PI


def _node_on_trace(s, trace, t):
    if t > trace.t_max + 1e-12 or t < trace.t_min - 1e-12:
        raise IncompleteDomain("net window runs past the end of a bounding trace")
    f, x, y, a = trace.local_at(t)
    return NetNode(f, (x, y), {}), a


def _near_cone_vertex(s, f, xy, tol):
    for k, v in enumerate(s.fverts[f]):
        if s.boundary_flags[v] or abs(s.defect(v)) <= 1e-9:
            continue
        P = s.layout[f][k]
        if math.hypot(P[0] - xy[0], P[1] - xy[1]) < tol:
            return v
    return None


class _Nudge(Exception):
    pass


@dataclass
class NetEdge:
    """Pieces of a net edge and the vertices it passes, as ``(v, left, right)`` angles."""

    pieces: list
    turns: list

    @property
    def length(self):
        return sum(p.length for p in self.pieces)


def _trace_edge(tr):
    hits = [(h.vertex, h.left, h.right) for h in tr.vertex_hits
            if tr.t_min + 1e-12 < h.t < tr.t_max - 1e-12]
    return NetEdge([tr], hits)


def _shoot(s, tv, h):
    tr = trace_geodesic(s, tv, h)
    if tr.terminal == BOUNDARY:
        raise IncompleteDomain("net edge reaches the mesh boundary")
    return tr


def _chain_maps(s, tr):
    """Per segment, the map from its face frame to the frame of the first face."""
    maps, M, prev = [], _IDENT, None
    for sg in tr.segments:
        if prev is not None and sg.face != prev:
            M = _compose(frame_transform(s, sg.face, prev), M)
        maps.append(M)
        prev = sg.face
    return maps


class _Edge:
    """An edge of length ``h`` leaving a node.

    Either a straight geodesic at angle ``ang`` or, when its end falls in the
    shadow of a saddle vertex, a straight run to that vertex followed by a
    second leg leaving at an angle that keeps at least pi on both sides.
    """

    def __init__(self, s, node, ang, h):
        self.s, self.node, self.h = s, node, h
        self.base = node.point(s)
        self.ang = ang
        self.via = None             # (v, r, phi_in, left angle, first leg)

    def run(self):
        s = self.s
        if self.via is None:
            tr = _shoot(s, TangentVector(self.base, self.ang), self.h)
            self.edge = _trace_edge(tr)
            self.scale = self.h
        else:
            v, r, phi_in, left, leg1 = self.via
            th = s.angle_sum[v]
            tr = _shoot(s, s.vertex_tangent(v, (phi_in - left) % th), self.h - r)
            e2 = _trace_edge(tr)
            self.edge = NetEdge([leg1, tr], [(v, left, th - left)] + e2.turns)
            self.scale = self.h - r
        return self.edge.pieces[-1].end_state()

    def _cone_between(self, old, new, sign):
        """Nearest cone vertex of the given defect sign swept when the angle moves."""
        s = self.s
        tr = self.edge.pieces[0]
        x0, y0 = self.node.xy
        best = None
        for sg, M in zip(tr.segments, _chain_maps(s, tr)):
            for k, v in enumerate(s.fverts[sg.face]):
                if s.boundary_flags[v] or s.defect(v) * sign <= 1e-9:
                    continue
                q = _apply(M, s.layout[sg.face][k])
                r = math.hypot(q[0] - x0, q[1] - y0)
                if not 1e-9 < r < self.h - 1e-9:
                    continue
                sv = math.atan2(q[1] - y0, q[0] - x0)
                sv = old + (sv - old + math.pi) % TWO_PI - math.pi
                if (sv - old) * (sv - new) < 0 and (best is None or abs(sv - old) < abs(best[1] - old)):
                    best = (v, sv, r)
        return best

    def step(self, d):
        s = self.s
        if self.via is None:
            new = self.ang + d
            cap = self._cone_between(self.ang, new, 1.0)
            if cap is not None:
                # beyond a positive vertex the end point folds back; stay on this side
                new = self.ang + 0.5 * (cap[1] - self.ang)
            hit = self._cone_between(self.ang, new, -1.0)
            if hit is None:
                self.ang = new
                return
            v, sv, r = hit
            leg1 = trace_geodesic(s, TangentVector(self.base, sv), r + 1e-7, strict=True)
            last = leg1.vertex_hits[-1] if leg1.vertex_hits else None
            if last is None or last.vertex != v:
                self.ang = new          # missed the vertex numerically; keep going straight
                return
            leg1 = leg1.sliced(leg1.t_min, last.t)
            th = s.angle_sum[v]
            # coming from the side with v on the left, the right angle starts at pi
            left = th - math.pi if d > 0 else math.pi
            self.ang = sv
            self.via = (v, last.t, last.phi_in, left, leg1)
            return
        v, r, phi_in, left, leg1 = self.via
        th = s.angle_sum[v]
        left -= d
        if left < math.pi:
            self.via = None
            self.ang += 1e-9 + (math.pi - left) * (self.h - r) / self.h
        elif left > th - math.pi:
            self.via = None
            self.ang -= 1e-9 + (left - th + math.pi) * (self.h - r) / self.h
        else:
            self.via = (v, r, phi_in, left, leg1)


def _unfold(s, face, xy, radius):
    """Positions of nearby cone vertices in ``face``'s frame, unfolding faces breadth first."""
    seen = {face: _IDENT}
    dq = deque([face])
    out = {}
    while dq:
        f = dq.popleft()
        M = seen[f]
        pts = [_apply(M, P) for P in s.layout[f]]
        for k, v in enumerate(s.fverts[f]):
            if v not in out and not s.boundary_flags[v] and abs(s.defect(v)) > 1e-9:
                out[v] = pts[k]
        if min(math.hypot(p[0] - xy[0], p[1] - xy[1]) for p in pts) > radius:
            continue
        for k in range(3):
            hit = s.nbr[f][k]
            if hit is None or hit[0] in seen:
                continue
            seen[hit[0]] = _compose(s.xform[hit[0]][hit[1]], M)
            dq.append(hit[0])
    return out


def _inside(poly, p):
    n = len(poly)
    inside = False
    for k in range(n):
        (x1, y1), (x2, y2) = poly[k], poly[(k + 1) % n]
        if (y1 > p[1]) != (y2 > p[1]):
            x = x1 + (p[1] - y1) * (x2 - x1) / (y2 - y1)
            if x > p[0]:
                inside = not inside
    return inside


def _turn_about(c, p, ang):
    ca, sa = math.cos(ang), math.sin(ang)
    dx, dy = p[0] - c[0], p[1] - c[1]
    return (c[0] + ca * dx - sa * dy, c[1] + sa * dx + ca * dy)


def _cone_guess(s, A, B, C, h):
    """Start directions at B and C from a cone model of the cell.

    Each cone vertex inside the flat guess is treated as an exact cone point
    with a cut running out through the fourth corner; rotating C about it by
    minus its defect turns the problem into a planar circle intersection.
    """
    x0, y0 = A.xy
    rA, uA = A.dirs["R"], A.dirs["U"]
    Bp = (x0 + h * math.cos(rA), y0 + h * math.sin(rA))
    Cp = (x0 + h * math.cos(uA), y0 + h * math.sin(uA))
    D0 = (Bp[0] + Cp[0] - x0, Bp[1] + Cp[1] - y0)
    quad = [(x0, y0), Bp, D0, Cp]
    cones = [(math.hypot(p[0] - x0, p[1] - y0), v, p)
             for v, p in _unfold(s, A.face, A.xy, 2.5 * h).items() if _inside(quad, p)]
    cones.sort()
    for use in (cones, [c for c in cones if s.defect(c[1]) > 0]):
        g = _cone_solve(s, A, B, C, h, Bp, Cp, use)
        if g is not None:
            return g
    return None


def _cone_solve(s, A, B, C, h, Bp, Cp, cones):
    rA, uA = A.dirs["R"], A.dirs["U"]
    Cq = Cp
    for _, v, p in cones:
        Cq = _turn_about(p, Cq, -s.defect(v))
    mx, my = 0.5 * (Bp[0] + Cq[0]), 0.5 * (Bp[1] + Cq[1])
    dx, dy = Cq[0] - Bp[0], Cq[1] - Bp[1]
    d = math.hypot(dx, dy)
    if not 1e-9 < d < 2.0 * h - 1e-9:
        return None
    k = math.sqrt(h * h - 0.25 * d * d) / d
    D1 = (mx + k * dy, my - k * dx)           # right of B -> C', away from A
    D2 = D1
    for _, v, p in reversed(cones):
        D2 = _turn_about(p, D2, s.defect(v))
    thB = math.atan2(D1[1] - Bp[1], D1[0] - Bp[0]) - (rA + math.pi) + B.dirs["L"]
    thC = math.atan2(D2[1] - Cp[1], D2[0] - Cp[0]) - (uA + math.pi) + C.dirs["D"]
    if not (_opens(B.dirs["L"] - thB) and _opens(thC - C.dirs["D"])):
        return None
    return thB, thC


def _opens(ang):
    return 1e-9 < ang % TWO_PI < math.pi


def _fourth(s, A, B, C, h, cell):
    a = (A.dirs["U"] - A.dirs["R"]) % TWO_PI
    diag = 2.0 * h * math.sin(0.5 * a)
    if diag >= 2.0 * h - 1e-9 or diag <= 1e-9:
        raise NetDegenerate(f"circles about the neighbours do not cross in cell {cell}", cell=cell)
    guess = _cone_guess(s, A, B, C, h)
    if guess is None:
        guess = (B.dirs["L"] - (math.pi - a), C.dirs["D"] + (math.pi - a))
    eB = _Edge(s, B, guess[0], h)
    eC = _Edge(s, C, guess[1], h)
    for _ in range(_NEWTON_STEPS):
        fB, pB, aB = eB.run()
        fC, pC, aC = eC.run()
        T = frame_transform(s, fB, fC)
        q = _apply(T, pB)
        aB2 = aB + _rot(T)
        rx, ry = q[0] - pC[0], q[1] - pC[1]
        if math.hypot(rx, ry) < _NEWTON_TOL:
            break
        # endpoints move perpendicular to their arrival directions
        j11, j21 = -eB.scale * math.sin(aB2), eB.scale * math.cos(aB2)
        j12, j22 = eC.scale * math.sin(aC), -eC.scale * math.cos(aC)
        det = j11 * j22 - j12 * j21
        if abs(det) < 1e-14:
            raise NetDegenerate(f"singular corner solve in cell {cell}", cell=cell)
        dB = (-rx * j22 + ry * j12) / det
        dC = (-j11 * ry + j21 * rx) / det
        m = max(abs(dB), abs(dC))
        if m > 0.2:
            dB, dC = dB * 0.2 / m, dC * 0.2 / m
        eB.step(dB)
        eC.step(dC)
    else:
        raise NetDegenerate(f"corner solve did not converge in cell {cell}", cell=cell)
    if not (_opens(B.dirs["L"] - eB.ang) and _opens(eC.ang - C.dirs["D"])):
        raise NetDegenerate(f"fourth corner folds back in cell {cell}", cell=cell)
    D = NetNode(fC, tuple(pC), {"L": aC + math.pi, "D": aB2 + math.pi})
    return D, eB, eC


def _cell_atoms(s, pieces, atoms):
    curve = Curve(s, pieces, closed=True)
    return [v for v in atoms if curve.side(v) == LEFT]


# which side of each bounding edge the cell lies on
_LEFT_SIDE, _RIGHT_SIDE = 1, 2


def _turn_share(edge, side):
    return sum(math.pi - t[side] for t in edge.turns)


def _build(s, frame, h, window, atoms, vertex_tol):
    imax, jmax = window
    nodes, row_edges, col_edges = {}, {}, {}
    for i in range(imax + 1):
        nd, a = _node_on_trace(s, frame.u_trace, frame.u_t0 + i * h)
        nd.dirs.update({"R": a, "L": a + math.pi})
        nodes[(i, 0)] = nd
        if i > 0:
            row_edges[(i, 0)] = _trace_edge(
                frame.u_trace.sliced(frame.u_t0 + (i - 1) * h, frame.u_t0 + i * h))
    for j in range(1, jmax + 1):
        nd, a = _node_on_trace(s, frame.v_trace, frame.v_t0 + j * h)
        nd.dirs.update({"U": a, "D": a + math.pi})
        nodes[(0, j)] = nd
        col_edges[(0, j)] = _trace_edge(
            frame.v_trace.sliced(frame.v_t0 + (j - 1) * h, frame.v_t0 + j * h))
    # corner: the column direction expressed in the row trace's face
    o = nodes[(0, 0)]
    fv, _, _, av = frame.v_trace.local_at(frame.v_t0)
    o.dirs["U"] = av + _rot(frame_transform(s, fv, o.face))
    o.dirs["D"] = o.dirs["U"] + math.pi
    for key, nd in nodes.items():
        if key != (0, 0) and _near_cone_vertex(s, nd.face, nd.xy, vertex_tol) is not None:
            raise _Nudge()
    for i in range(1, imax + 1):
        for j in range(1, jmax + 1):
            A, B, C = nodes[(i - 1, j - 1)], nodes[(i, j - 1)], nodes[(i - 1, j)]
            D, eB, eC = _fourth(s, A, B, C, h, (i, j))
            if _near_cone_vertex(s, D.face, D.xy, vertex_tol) is not None:
                raise _Nudge()
            B.dirs["U"] = eB.ang
            C.dirs["R"] = eC.ang
            nodes[(i, j)] = D
            row_edges[(i, j)] = eC.edge
            col_edges[(i, j)] = eB.edge
    cells = {}
    for i in range(1, imax + 1):
        for j in range(1, jmax + 1):
            A, B = nodes[(i - 1, j - 1)], nodes[(i, j - 1)]
            C, D = nodes[(i - 1, j)], nodes[(i, j)]
            ang = ((A.dirs["U"] - A.dirs["R"]) % TWO_PI,
                   (B.dirs["L"] - B.dirs["U"]) % TWO_PI,
                   (C.dirs["R"] - C.dirs["D"]) % TWO_PI,
                   (D.dirs["D"] - D.dirs["L"]) % TWO_PI)
            bottom, right = row_edges[(i, j - 1)], col_edges[(i, j)]
            top, left = row_edges[(i, j)], col_edges[(i - 1, j)]
            pieces = bottom.pieces + right.pieces + top.pieces + left.pieces
            inside = _cell_atoms(s, pieces, atoms)
            kappa = sum(s.defect(v) for v in inside)
            kappa += (_turn_share(bottom, _LEFT_SIDE) + _turn_share(right, _LEFT_SIDE)
                      + _turn_share(top, _RIGHT_SIDE) + _turn_share(left, _RIGHT_SIDE))
            cells[(i, j)] = NetCell((i, j), ang, kappa, [s.ids[v] for v in inside],
                                    sum(ang) - TWO_PI)
    return nodes, cells, row_edges, col_edges


def propagate_net(s, frame, h, window, vertex_tol=1e-9, max_nudges=4, report=None):
    """Chebyshev net with step ``h`` on a ``window = (imax, jmax)`` block of cells.

    When a node lands on a cone vertex, or a cell cannot be closed, the step
    is shrunk by a factor 6/7 and the net is rebuilt.
    """
    if not h > 0:
        raise ValueError("step must be positive")
    if report is not None and not report.passed:
        raise ConditionFailure("sector conditions fail; refusing to build the net")
    atoms = atom_vertices(s)
    step = h
    for k in range(max_nudges + 1):
        try:
            nodes, cells, rows, cols = _build(s, frame, step, window, atoms, vertex_tol)
        except (_Nudge, NetDegenerate) as e:
            last = e
            step *= 6.0 / 7.0
            continue
        net = SectorNet(frame.index, step, tuple(window), nodes, cells, frame.alpha, rows, cols)
        net.meta = {"nudges": k, "requested_h": h}
        return net
    if isinstance(last, NetDegenerate):
        raise last
    raise NetDegenerate("nodes keep landing on cone vertices")


def _propagate_star(a):
    return propagate_net(*a)


def build_nets(s, cross, h, window, eps=None, vertex_tol=1e-9, max_nudges=4, jobs=1):
    """The four sector nets of a cross, all with one common step.

    Returns ``(nets, reports)``.  If any sector had to shrink its step, all
    four are rebuilt with the smallest step found.  ``jobs > 1`` builds the
    sectors in worker processes.
    """
    eps = cross.eps if eps is None else eps
    frames = sector_frames(cross)
    reports = [check_bakelman_conditions(s, fr.record, eps) for fr in frames]
    for fr, rep in zip(frames, reports):
        if not rep.passed:
            raise ConditionFailure(f"sector {fr.index} fails its curvature conditions")
    step = h
    for _ in range(max_nudges + 1):
        args = [(s, fr, step, window, vertex_tol, max_nudges, rep)
                for fr, rep in zip(frames, reports)]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=min(jobs, 4)) as ex:
                nets = list(ex.map(_propagate_star, args))
        else:
            nets = [_propagate_star(a) for a in args]
        hmin = min(n.h for n in nets)
        if all(n.h == hmin for n in nets):
            for n in nets:
                n.meta["requested_h"] = h
            return nets, reports
        step = hmin
    raise NetDegenerate("sector nets do not settle on a common step")


# audits --------------------------------------------------------------------------

def net_angle_bounds(net):
    """Extremes of the net angle at every node with an outgoing row and column edge."""
    vals = [net.net_angle((i, j)) for i in range(net.window[0]) for j in range(net.window[1])]
    return min(vals), max(vals)


def corner_angle_bounds(net):
    """Extremes of all interior cell angles (cells with cone points included)."""
    vals = [a for c in net.cells.values() for a in c.angles]
    return min(vals), max(vals)


def edge_length_errors(s, net):
    """Largest deviation of a net edge length from the step."""
    worst = 0.0
    for tr in list(net.row_edges.values()) + list(net.col_edges.values()):
        worst = max(worst, abs(tr.length - net.h))
    return worst


def node_angle_sums(net):
    """Sum of incident cell angles at each interior node."""
    out = {}
    imax, jmax = net.window
    for i in range(1, imax):
        for j in range(1, jmax):
            a = net.cells[(i + 1, j + 1)].angles[0]
            b = net.cells[(i, j + 1)].angles[1]
            c = net.cells[(i + 1, j)].angles[2]
            d = net.cells[(i, j)].angles[3]
            out[(i, j)] = a + b + c + d
    return out


@dataclass
class PatchAudit:
    patch: tuple
    enclosed: float                 # curvature of atoms inside the patch cells
    cellwise: float                 # sum over cells of theta_A - theta_B - theta_C + theta_D
    corners: float                  # the same alternating sum at the patch corners only
    node_terms: float               # interior node corrections
    edge_terms: float               # boundary node corrections

    @property
    def residual(self):
        return abs(self.corners + self.node_terms + self.edge_terms - self.enclosed)

    def as_dict(self):
        return {"patch": list(self.patch), "enclosed": self.enclosed, "cellwise": self.cellwise,
                "corners": self.corners, "node_terms": self.node_terms,
                "edge_terms": self.edge_terms, "residual": self.residual}


def hazzidakis_audit(net, i1, j1, i2, j2):
    """Discrete Hazzidakis bookkeeping for the cells between node indices ``(i1,j1)``-``(i2,j2)``."""
    if not (0 <= i1 < i2 <= net.window[0] and 0 <= j1 < j2 <= net.window[1]):
        raise ValueError("patch outside the window")
    C = net.cells
    enclosed = cellwise = 0.0
    for i in range(i1 + 1, i2 + 1):
        for j in range(j1 + 1, j2 + 1):
            ta, tb, tc, td = C[(i, j)].theta()
            enclosed += C[(i, j)].defect
            cellwise += ta - tb - tc + td
    corners = (C[(i1 + 1, j1 + 1)].theta()[0] - C[(i2, j1 + 1)].theta()[1]
               - C[(i1 + 1, j2)].theta()[2] + C[(i2, j2)].theta()[3])
    node_terms = 0.0
    for i in range(i1 + 1, i2):
        for j in range(j1 + 1, j2):
            node_terms += (C[(i + 1, j + 1)].theta()[0] - C[(i, j + 1)].theta()[1]
                           - C[(i + 1, j)].theta()[2] + C[(i, j)].theta()[3])
    edge_terms = 0.0
    for i in range(i1 + 1, i2):
        edge_terms += C[(i + 1, j1 + 1)].theta()[0] - C[(i, j1 + 1)].theta()[1]
        edge_terms += C[(i, j2)].theta()[3] - C[(i + 1, j2)].theta()[2]
    for j in range(j1 + 1, j2):
        edge_terms += C[(i1 + 1, j + 1)].theta()[0] - C[(i1 + 1, j)].theta()[2]
        edge_terms += C[(i2, j)].theta()[3] - C[(i2, j + 1)].theta()[1]
    return PatchAudit((i1, j1, i2, j2), enclosed, cellwise, corners, node_terms, edge_terms)


def audit_all_patches(net, imax=None, jmax=None):
    """Worst residuals over every rectangular sub-patch of the window."""
    imax = net.window[0] if imax is None else imax
    jmax = net.window[1] if jmax is None else jmax
    worst_total = worst_cell = 0.0
    count = 0
    for i1 in range(imax):
        for i2 in range(i1 + 1, imax + 1):
            for j1 in range(jmax):
                for j2 in range(j1 + 1, jmax + 1):
                    a = hazzidakis_audit(net, i1, j1, i2, j2)
                    worst_total = max(worst_total, a.residual)
                    worst_cell = max(worst_cell, abs(a.cellwise - a.enclosed))
                    count += 1
    return {"patches": count, "max_residual": worst_total, "max_cellwise_residual": worst_cell}


def net_report(s, net, report=None):
    lo, hi = net_angle_bounds(net)
    clo, chi = corner_angle_bounds(net)
    sums = node_angle_sums(net)
    flat_err = max((max(abs(c.angles[0] - c.angles[3]), abs(c.angles[1] - c.angles[2]))
                    for c in net.cells.values() if c.defect == 0.0), default=0.0)
    gb_err = max(abs(c.holonomy - c.defect) for c in net.cells.values())
    out = {
        "sector": net.index, "h": net.h, "window": list(net.window),
        "theta_min": lo, "theta_max": hi, "corner_min": clo, "corner_max": chi,
        "edge_length_error": edge_length_errors(s, net),
        "node_sum_error": max((abs(v - TWO_PI) for v in sums.values()), default=0.0),
        "flat_cell_error": flat_err, "cell_gauss_bonnet_error": gb_err,
        "atoms_in_cells": {f"{i},{j}": c.atoms for (i, j), c in sorted(net.cells.items()) if c.atoms},
        "meta": net.meta,
    }
    if report is not None:
        out["conditions"] = report.as_dict()
    return out


# branched nets ---------------------------------------------------------------------

@dataclass
class BranchVertex:
    node: object
    valence: int
    angle_sum: float


def _corner_dirs(s, p, neighbours):
    """Directions at ``p`` toward each neighbour, as fan angles when ``p`` is a vertex."""
    from .distance import geodesic_between

    v = s.vertex_at(p)
    out = []
    for q in neighbours:
        _, (f, ang) = geodesic_between(s, q, p)
        if v is not None:
            out.append(s.fan_angle(v, f, ang))
        else:
            T = frame_transform(s, f, p.face)
            out.append(ang + _rot(T))
    return v, out


def validate_branched_net(s, nodes, cells, h, tol=1e-8):
    """Check a supplied net that may have nodes with more than four cells.

    ``nodes`` maps ids to :class:`SurfacePoint`; ``cells`` lists node-id
    quadruples in counterclockwise order.
    """
    from .distance import distance

    worst_len = 0.0
    for cell in cells:
        for k in range(4):
            d = distance(s, nodes[cell[k]], nodes[cell[(k + 1) % 4]])
            worst_len = max(worst_len, abs(d - h))
    incident = {}
    for ci, cell in enumerate(cells):
        for k in range(4):
            incident.setdefault(cell[k], []).append((ci, k))
    corner = {}
    node_info = {}
    for nid, inc in incident.items():
        nbrs = []
        for ci, k in inc:
            cell = cells[ci]
            nbrs.extend([cell[(k + 1) % 4], cell[(k - 1) % 4]])
        uniq = sorted(set(nbrs), key=nbrs.index)
        v, dirs = _corner_dirs(s, nodes[nid], [nodes[q] for q in uniq])
        full = s.angle_sum[v] if v is not None else TWO_PI
        dmap = dict(zip(uniq, dirs))
        for ci, k in inc:
            cell = cells[ci]
            nxt, prv = cell[(k + 1) % 4], cell[(k - 1) % 4]
            corner[(ci, k)] = (dmap[prv] - dmap[nxt]) % full
        node_info[nid] = (v, full, len(inc))
    branches = []
    worst_node = 0.0
    for nid, (v, full, val) in node_info.items():
        total = sum(corner[(ci, k)] for ci, k in incident[nid])
        interior = all(not s.boundary_flags[w] for w in ([v] if v is not None else []))
        if val == 4 or val > 4:
            if val >= 4 and len(incident[nid]) == val and interior and _closed_star(cells, nid):
                worst_node = max(worst_node, abs(total - full))
        if val > 4:
            if v is None or abs(s.defect(v)) <= 1e-9:
                raise InvalidBranch(f"node {nid} has {val} cells but is not at a cone vertex")
            if s.defect(v) > 0:
                raise InvalidBranch(f"node {nid} has {val} cells at a positive-defect vertex")
            branches.append(BranchVertex(nid, val, total))
    return {"cells": len(cells), "max_edge_error": worst_len, "max_node_sum_error": worst_node,
            "branch_vertices": [{"node": b.node, "valence": b.valence, "angle_sum": b.angle_sum}
                                for b in branches],
            "pass": worst_len <= tol and worst_node <= tol}


def _closed_star(cells, nid):
    """True if the cells around a node close up into a full disk."""
    nxt = {}
    for cell in cells:
        if nid in cell:
            k = cell.index(nid)
            nxt[cell[(k + 1) % 4]] = cell[(k - 1) % 4]
    if not nxt:
        return False
    start = next(iter(nxt))
    cur, seen = start, 0
    while True:
        if cur not in nxt:
            return False
        cur = nxt[cur]
        seen += 1
        if cur == start:
            return seen == len(nxt)
        if seen > len(nxt):
            return False


# export --------------------------------------------------------------------------

def net_to_dict(s, net):
    nodes = []
    for (i, j), nd in sorted(net.nodes.items()):
        p = nd.point(s)
        nodes.append({"i": i, "j": j, "face": p.face, "bary": list(p.bary)})
    cells = []
    for (i, j), c in sorted(net.cells.items()):
        cells.append({"i": i, "j": j, "angles": list(c.angles), "defect": c.defect,
                      "atoms": c.atoms})
    return {"sector": net.index, "h": net.h, "window": list(net.window), "alpha": net.alpha,
            "nodes": nodes, "cells": cells}


def dumps_net(s, net):
    return json.dumps(net_to_dict(s, net), sort_keys=True, indent=1)


def net_obj(positions, window):
    """OBJ text of a quad mesh from planar node positions ``{(i, j): (x, y)}``."""
    imax, jmax = window
    index = {}
    lines = []
    for j in range(jmax + 1):
        for i in range(imax + 1):
            x, y = positions[(i, j)]
            index[(i, j)] = len(index) + 1
            lines.append(f"v {x:.12g} {y:.12g} 0")
    for j in range(1, jmax + 1):
        for i in range(1, imax + 1):
            a, b = index[(i - 1, j - 1)], index[(i, j - 1)]
            c, d = index[(i, j)], index[(i - 1, j)]
            lines.append(f"f {a} {b} {c} {d}")
    return "\n".join(lines) + "\n"

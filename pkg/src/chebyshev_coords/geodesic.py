"""Straightest geodesics traced by unfolding faces one at a time.

Inside a face the path is a straight segment of the face's local layout.
Crossing an edge applies the rigid edge transform.  At a cone vertex the
path leaves so that the cone angle is split equally between its two
sides, which keeps the turn on each side at most pi.
"""

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field

from .errors import IncompleteDomain, OverlapDetected
from .surface import SurfacePoint, TangentVector, TWO_PI

REACHED = "ReachedLength"
BOUNDARY = "HitBoundary"
STOPPED = "HitVertexStopped"

VERTEX_TOL = 1e-10
_MAX_STEPS = 1_000_000


@dataclass
class Segment:
    face: int
    p0: tuple
    p1: tuple
    t0: float
    t1: float
    angle: float          # direction in the face's local frame

    def at(self, t):
        if self.t1 <= self.t0:
            return self.p0
        lam = (t - self.t0) / (self.t1 - self.t0)
        return (self.p0[0] + lam * (self.p1[0] - self.p0[0]),
                self.p0[1] + lam * (self.p1[1] - self.p0[1]))


@dataclass
class VertexHit:
    t: float
    vertex: int
    left: float = None
    right: float = None
    phi_in: float = None      # fan angle of the direction we came from
    phi_out: float = None     # fan angle of the direction we leave along


@dataclass
class EdgeCrossing:
    t: float
    face: int                 # the crossed edge, named by one incident face
    edge: int


@dataclass
class TurnMeasure:
    atoms: list
    pos_left: float
    neg_left: float
    pos_right: float
    neg_right: float

    @property
    def left(self):
        return self.pos_left - self.neg_left

    @property
    def right(self):
        return self.pos_right - self.neg_right


@dataclass
class Intersection:
    ta: float
    tb: float
    angle: float              # CCW angle from a's forward direction to b's
    vertex: int = None

    @property
    def sign(self):
        """+1 when b crosses a from right to left."""
        return 1 if 0.0 < self.angle < math.pi else -1


@dataclass
class GeodesicTrace:
    """A traced straightest geodesic parametrized by arclength on [t_min, t_max]."""

    start: TangentVector
    segments: list
    vertex_hits: list
    crossings: list
    terminal: str
    t_min: float = 0.0
    t_max: float = 0.0
    terminal_back: str = None
    meta: dict = field(default_factory=dict)

    @property
    def length(self):
        return self.t_max - self.t_min

    def _seg_index(self, t):
        starts = [sg.t0 for sg in self.segments]
        i = bisect_right(starts, t) - 1
        return min(max(i, 0), len(self.segments) - 1)

    def local_at(self, t):
        """``(face, x, y, angle)`` at parameter ``t``."""
        sg = self.segments[self._seg_index(t)]
        x, y = sg.at(t)
        return sg.face, x, y, sg.angle

    def point_at(self, s, t):
        f, x, y, _ = self.local_at(t)
        p = s.point_from_local(f, x, y)
        b = [min(1.0, max(0.0, c)) for c in p.bary]
        tot = sum(b)
        b = [c / tot for c in b]
        b[2] = 1.0 - b[0] - b[1]
        return SurfacePoint(f, tuple(b))

    def tangent_at(self, s, t):
        f, x, y, a = self.local_at(t)
        return TangentVector(self.point_at(s, t), a)

    def end_state(self):
        sg = self.segments[-1]
        return sg.face, sg.p1, sg.angle

    def hits_between(self, lo, hi, tol=1e-12):
        return [h for h in self.vertex_hits if lo + tol < h.t < hi - tol]

    def vertex_at_param(self, t, tol=1e-9):
        for h in self.vertex_hits:
            if abs(h.t - t) <= tol:
                return h
        return None

    def reversed(self):
        segs = [Segment(sg.face, sg.p1, sg.p0, -sg.t1, -sg.t0, sg.angle + math.pi)
                for sg in reversed(self.segments)]
        hits = [VertexHit(-h.t, h.vertex, h.right, h.left, h.phi_out, h.phi_in)
                for h in reversed(self.vertex_hits)]
        cr = [EdgeCrossing(-c.t, c.face, c.edge) for c in reversed(self.crossings)]
        return GeodesicTrace(self.start, segs, hits, cr, self.terminal_back or BOUNDARY,
                             -self.t_max, -self.t_min, self.terminal, dict(self.meta))

    def sliced(self, lo, hi):
        lo = max(lo, self.t_min)
        hi = min(hi, self.t_max)
        segs = []
        for sg in self.segments:
            if sg.t1 < lo - 1e-15 or sg.t0 > hi + 1e-15:
                continue
            a, b = max(sg.t0, lo), min(sg.t1, hi)
            segs.append(Segment(sg.face, sg.at(a), sg.at(b), a, b, sg.angle))
        segs = [sg for sg in segs if sg.t1 > sg.t0] or segs[:1]
        hits = [h for h in self.vertex_hits if lo - 1e-12 <= h.t <= hi + 1e-12]
        cr = [c for c in self.crossings if lo <= c.t <= hi]
        return GeodesicTrace(self.start, segs, hits, cr,
                             self.terminal if hi >= self.t_max else REACHED,
                             lo, hi, self.terminal_back if lo <= self.t_min else REACHED, dict(self.meta))

    def to_jsonl(self, s):
        """One JSON object per line: a header, then one line per segment."""
        head = {
            "terminal": self.terminal, "t_min": self.t_min, "t_max": self.t_max,
            "vertex_hits": [
                {"t": h.t, "vertex": s.ids[h.vertex], "left": h.left, "right": h.right}
                for h in self.vertex_hits
            ],
        }
        lines = [json.dumps(head, sort_keys=True)]
        for sg in self.segments:
            lines.append(json.dumps({
                "face": sg.face, "entry": list(sg.p0), "exit": list(sg.p1),
                "t0": sg.t0, "t1": sg.t1,
            }, sort_keys=True))
        return "\n".join(lines) + "\n"


# tracing ----------------------------------------------------------------------

def _vertex_phi(s, v, f, psi):
    """Fan coordinate of a local direction at a vertex, not clamped to the corner."""
    out, _ = s.fan(v)
    for face, k, start in out:
        if face == f:
            rel = (psi - s.corner_base_angle(f, k)) % TWO_PI
            if rel > TWO_PI - 1e-9:
                rel -= TWO_PI
            phi = start + rel
            if not s.boundary_flags[v]:
                phi %= s.angle_sum[v]
            return phi
    raise ValueError(f"face {f} not incident to vertex {v}")


def _start_state(s, tv):
    p = tv.base
    v = s.vertex_at(p)
    if v is None:
        x, y = s.local_position(p)
        return p.face, x, y, tv.direction, None, None
    phi = _vertex_phi(s, v, p.face, tv.direction)
    return None, None, None, None, v, phi


def _leave_vertex(s, v, phi):
    g, psi = s.fan_direction(v, phi)
    kv = s.fverts[g].index(v)
    x, y = s.layout[g][kv]
    return g, x, y, psi


def _run(s, f, x, y, ang, max_len, strict, t0=0.0, entry=None):
    """Trace from a face-interior state; returns (segments, hits, crossings, terminal)."""
    segs, hits, cross = [], [], []
    t = t0
    end = t0 + max_len
    layout, nbr, xform, fverts, lengths = s.layout, s.nbr, s.xform, s.fverts, s.lengths
    for _ in range(_MAX_STEPS):
        P = layout[f]
        dx, dy = math.cos(ang), math.sin(ang)
        best, bk = math.inf, -1
        for k in range(3):
            if k == entry:
                continue
            ax, ay = P[k]
            bx, by = P[(k + 1) % 3]
            ex, ey = bx - ax, by - ay
            den = dx * ey - dy * ex
            if den <= 1e-14:
                continue
            tt = ((ax - x) * ey - (ay - y) * ex) / den
            if tt < best:
                best, bk = tt, k
        if bk < 0:
            raise IncompleteDomain("lost the exit edge while tracing")
        best = max(best, 0.0)
        if t + best >= end:
            L = end - t
            q = (x + L * dx, y + L * dy)
            segs.append(Segment(f, (x, y), q, t, end, ang))
            return segs, hits, cross, REACHED
        q = (x + best * dx, y + best * dy)
        A, B = P[bk], P[(bk + 1) % 3]
        le = float(lengths[f][bk])
        u = ((q[0] - A[0]) * (B[0] - A[0]) + (q[1] - A[1]) * (B[1] - A[1])) / (le * le)
        t_hit = t + best
        vtx = None
        if u * le < VERTEX_TOL:
            vtx, q = fverts[f][bk], A
        elif (1.0 - u) * le < VERTEX_TOL:
            vtx, q = fverts[f][(bk + 1) % 3], B
        segs.append(Segment(f, (x, y), q, t, t_hit, ang))
        t = t_hit
        if vtx is not None:
            if s.boundary_flags[vtx]:
                hits.append(VertexHit(t, vtx))
                return segs, hits, cross, BOUNDARY
            theta = s.angle_sum[vtx]
            phi_back = s.fan_angle(vtx, f, ang + math.pi)
            if strict:
                hits.append(VertexHit(t, vtx, None, None, phi_back, None))
                return segs, hits, cross, STOPPED
            phi_out = (phi_back + 0.5 * theta) % theta
            hits.append(VertexHit(t, vtx, 0.5 * theta, 0.5 * theta, phi_back, phi_out))
            f, x, y, ang = _leave_vertex(s, vtx, phi_out)
            entry = None
            continue
        hit = nbr[f][bk]
        if hit is None:
            return segs, hits, cross, BOUNDARY
        cross.append(EdgeCrossing(t, f, bk))
        c, sn, tx, ty = xform[f][bk]
        g, m = hit
        x, y = c * q[0] - sn * q[1] + tx, sn * q[0] + c * q[1] + ty
        ang = ang + math.atan2(sn, c)
        f, entry = g, m
    raise IncompleteDomain("trace did not terminate")


def _trace_from(s, tv, max_len, strict, vertex_phi=None):
    f, x, y, ang, v, phi = _start_state(s, tv)
    if vertex_phi is not None:
        phi = vertex_phi
    hits = []
    if v is not None:
        if s.boundary_flags[v]:
            if not (-1e-12 <= phi <= s.angle_sum[v] + 1e-12):
                q = s.layout[tv.base.face][s.fverts[tv.base.face].index(v)]
                return [Segment(tv.base.face, q, q, 0.0, 0.0, tv.direction)], [], [], BOUNDARY
            phi = min(max(phi, 0.0), s.angle_sum[v])
        f, x, y, ang = _leave_vertex(s, v, phi)
    segs, h2, cross, term = _run(s, f, x, y, ang, max_len, strict)
    return segs, hits + h2, cross, term


def trace_geodesic(s, v, max_length, strict=False, require_complete=False):
    """Trace the straightest geodesic leaving ``v`` for at most ``max_length``."""
    if not max_length > 0:
        raise ValueError("max_length must be positive")
    segs, hits, cross, term = _trace_from(s, v, max_length, strict)
    t_max = segs[-1].t1
    if require_complete and term == BOUNDARY:
        raise IncompleteDomain(f"boundary reached at t={t_max:.6g} before max_length")
    return GeodesicTrace(v, segs, hits, cross, term, 0.0, t_max, None)


def trace_line(s, v, max_length, strict=False):
    """Two-sided geodesic through ``v``: parameter 0 at the base, forward along ``v``."""
    base_vertex = s.vertex_at(v.base)
    if base_vertex is not None and not s.boundary_flags[base_vertex]:
        theta = s.angle_sum[base_vertex]
        phi = _vertex_phi(s, base_vertex, v.base.face, v.direction)
        back_phi = (phi + 0.5 * theta) % theta
        fw = _trace_from(s, v, max_length, strict, vertex_phi=phi)
        bw = _trace_from(s, v, max_length, strict, vertex_phi=back_phi)
        mid = [VertexHit(0.0, base_vertex, 0.5 * theta, 0.5 * theta, back_phi, phi)]
    else:
        fw = _trace_from(s, v, max_length, strict)
        bw = _trace_from(s, TangentVector(v.base, v.direction + math.pi), max_length, strict)
        mid = []
    back = GeodesicTrace(v, bw[0], bw[1], bw[2], bw[3], 0.0, bw[0][-1].t1).reversed()
    segs = [sg for sg in back.segments if sg.t1 > sg.t0] + [sg for sg in fw[0] if sg.t1 > sg.t0]
    if not segs:
        segs = fw[0][:1]
    hits = back.vertex_hits + mid + fw[1]
    cross = back.crossings + fw[2]
    return GeodesicTrace(v, segs, hits, cross, fw[3], back.t_min, fw[0][-1].t1, bw[3])


def extend_trace(s, trace, extra, strict=False):
    """Continue a forward trace by ``extra`` from its end state."""
    f, q, ang = trace.end_state()
    segs, hits, cross, term = _run(s, f, q[0], q[1], ang, extra, strict, t0=trace.t_max)
    return GeodesicTrace(trace.start, trace.segments + segs, trace.vertex_hits + hits,
                         trace.crossings + cross, term, trace.t_min, segs[-1].t1, trace.terminal_back)


# turns ------------------------------------------------------------------------

def turn_along_curve(s, trace, lo=None, hi=None):
    """Turn atoms ``pi - side angle`` at vertex hits with ``lo < t < hi``."""
    lo = trace.t_min - 1.0 if lo is None else lo
    hi = trace.t_max + 1.0 if hi is None else hi
    atoms = []
    pl = nl = pr = nr = 0.0
    for h in trace.vertex_hits:
        if not (lo + 1e-12 < h.t < hi - 1e-12) or h.left is None:
            continue
        tl, tr = math.pi - h.left, math.pi - h.right
        atoms.append((h.t, tl, tr))
        if tl >= 0:
            pl += tl
        else:
            nl -= tl
        if tr >= 0:
            pr += tr
        else:
            nr -= tr
    return TurnMeasure(atoms, pl, nl, pr, nr)


# intersections ----------------------------------------------------------------

def _on_arc(phi, a, b, theta, tol=1e-12):
    """True if ``phi`` is strictly inside the CCW fan arc from a to b."""
    span = (b - a) % theta
    rel = (phi - a) % theta
    return tol < rel < span - tol


def intersect_traces(s, a, b, tol=1e-9):
    """Transversal crossings of two traces, sorted by the parameter of ``a``."""
    by_face = {}
    for j, sg in enumerate(b.segments):
        by_face.setdefault(sg.face, []).append(sg)
    found = []
    for sa in a.segments:
        for sb in by_face.get(sa.face, ()):
            r = _seg_cross(s, sa, sb, tol)
            if r is not None:
                found.append(r)
    bh = {}
    for h in b.vertex_hits:
        bh.setdefault(h.vertex, []).append(h)
    for ha in a.vertex_hits:
        for hb in bh.get(ha.vertex, ()):
            if ha.phi_out is None or hb.phi_out is None or ha.phi_in is None or hb.phi_in is None:
                continue
            th = s.angle_sum[ha.vertex]
            for d in (hb.phi_in, hb.phi_out):
                for e in (ha.phi_in, ha.phi_out):
                    if abs((d - e + 0.5 * th) % th - 0.5 * th) < 1e-12:
                        raise OverlapDetected(f"traces share a segment at vertex {s.ids[ha.vertex]}")
            in_left = _on_arc(hb.phi_in, ha.phi_out, ha.phi_in, th)
            out_left = _on_arc(hb.phi_out, ha.phi_out, ha.phi_in, th)
            if in_left != out_left:
                ang = (hb.phi_out - ha.phi_out) % th
                found.append(Intersection(ha.t, hb.t, ang, ha.vertex))
    found.sort(key=lambda r: (r.ta, r.tb))
    out = []
    for r in found:
        if out and abs(out[-1].ta - r.ta) < tol and abs(out[-1].tb - r.tb) < tol:
            continue
        out.append(r)
    return out


def _seg_cross(s, sa, sb, tol):
    ax, ay = sa.p0
    bx, by = sb.p0
    dax, day = sa.p1[0] - ax, sa.p1[1] - ay
    dbx, dby = sb.p1[0] - bx, sb.p1[1] - by
    la = math.hypot(dax, day)
    lb = math.hypot(dbx, dby)
    if la < 1e-15 or lb < 1e-15:
        return None
    den = dax * dby - day * dbx
    wx, wy = bx - ax, by - ay
    if abs(den) < 1e-13 * la * lb:
        # parallel: overlap if collinear with a common stretch
        if abs(wx * day - wy * dax) / la < 1e-10:
            p = (wx * dax + wy * day) / la
            q = ((sb.p1[0] - ax) * dax + (sb.p1[1] - ay) * day) / la
            lo, hi = max(0.0, min(p, q)), min(la, max(p, q))
            if hi - lo > 1e-9:
                raise OverlapDetected("traces share a segment")
        return None
    lam = (wx * dby - wy * dbx) / den
    mu = (wx * day - wy * dax) / den
    e = 1e-12
    if not (-e <= lam <= 1 + e and -e <= mu <= 1 + e):
        return None
    px, py = ax + lam * dax, ay + lam * day
    for V in s.layout[sa.face]:
        if math.hypot(px - V[0], py - V[1]) < tol:
            return None
    ta = sa.t0 + lam * (sa.t1 - sa.t0)
    tb = sb.t0 + mu * (sb.t1 - sb.t0)
    ang = (sb.angle - sa.angle) % TWO_PI
    return Intersection(ta, tb, ang)


# metric checks -----------------------------------------------------------------

@dataclass
class ChordArcReport:
    min_ratio: float
    witness: tuple
    pairs: int
    threshold: float
    passed: bool
    exact: bool = True        # False: min_ratio is only a certified lower bound

    def as_dict(self):
        return {"min_ratio": self.min_ratio, "witness": list(self.witness), "pairs": self.pairs,
                "threshold": self.threshold, "pass": self.passed, "exact": self.exact}


def chord_arc_check(s, trace, eps, samples=100, t_range=None, exact=True):
    """Check ``|t - t'| sin(eps) <= d(trace(t), trace(t'))`` on sampled pairs.

    With ``exact=False`` each distance computation stops once it has shown
    ``d >= |t - t'| sin(eps)``; the reported ratio is then a lower bound
    that is exact wherever it falls below the threshold.
    """
    from .distance import distances

    if not 0 < eps < math.pi / 2:
        raise ValueError("eps must lie in (0, pi/2)")
    if samples < 2:
        raise ValueError("need at least two samples")
    lo, hi = t_range if t_range is not None else (trace.t_min, trace.t_max)
    n = 2
    while n * (n - 1) // 2 < samples:
        n += 1
    ts = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
    pts = [trace.point_at(s, t) for t in ts]
    thr = math.sin(eps)
    best, wit, count = math.inf, (ts[0], ts[-1]), 0
    for i in range(n - 1):
        bound = math.inf
        if not exact:
            bound = (ts[-1] - ts[i]) * thr * (1.0 + 1e-9) + 1e-12
        ds = distances(s, pts[i], pts[i + 1:], bound=bound, allow_boundary=True)
        for j, d in enumerate(ds, start=i + 1):
            gap = abs(ts[j] - ts[i])
            if gap <= 0:
                continue
            count += 1
            r = min(d, bound) / gap
            if r < best:
                best, wit = r, (ts[i], ts[j])
    return ChordArcReport(best, wit, count, thr, best >= thr - 1e-9, exact)

"""Which side of a traced curve a vertex lies on.

A curve here is a chain of trace pieces, each walked in increasing
parameter.  It either runs from boundary to boundary or closes up.  Sides
are decided by parity: walk a spanning-tree path of mesh edges from the
vertex to a boundary root whose side is known and count how often the
curve crosses those edges.
"""

import math
from collections import deque

from .errors import DegenerateTangency

LEFT, RIGHT, ON = 1, -1, 0

_N_ROOTS = 4


def _adjacency(s):
    adj = getattr(s, "_adj_cache", None)
    if adj is None:
        adj = [s.neighbors(v) for v in range(s.n_vertices)]
        s._adj_cache = adj
    return adj


def _loop_data(s):
    data = getattr(s, "_loop_cache", None)
    if data is None:
        loop = s.boundary_loop()
        index = {he: i for i, he in enumerate(loop)}
        vpos = {s.fverts[f][k]: i for i, (f, k) in enumerate(loop)}
        data = (loop, index, vpos)
        s._loop_cache = data
    return data


def _trees(s):
    """Parent pointers of BFS trees rooted at a few spread-out boundary vertices."""
    trees = getattr(s, "_tree_cache", None)
    if trees is not None:
        return trees
    loop, _, _ = _loop_data(s)
    adj = _adjacency(s)
    n = len(loop)
    trees = []
    for j in range(min(_N_ROOTS, n)):
        f, k = loop[(j * n) // _N_ROOTS]
        r = s.fverts[f][k]
        parent = {r: None}
        dq = deque([r])
        while dq:
            u = dq.popleft()
            for w in adj[u]:
                if w not in parent:
                    parent[w] = u
                    dq.append(w)
        trees.append((r, parent))
    s._tree_cache = trees
    return trees


def _edge_of(s, f, k):
    vs = s.fverts[f]
    return s.edge_key(vs[k], vs[(k + 1) % 3])


class Curve:
    """A chain of trace pieces; ``closed`` when it does not meet the boundary."""

    def __init__(self, s, pieces, closed=False):
        self.s = s
        self.pieces = [p for p in pieces if p.t_max > p.t_min]
        self.closed = closed
        self.crossed = {}
        self.on = set()
        for p in self.pieces:
            for c in p.crossings:
                if p.t_min < c.t < p.t_max:
                    e = _edge_of(s, c.face, c.edge)
                    self.crossed[e] = self.crossed.get(e, 0) + 1
            for h in p.vertex_hits:
                if p.t_min - 1e-12 <= h.t <= p.t_max + 1e-12:
                    self.on.add(h.vertex)
        self.face_segments = {}
        for i, p in enumerate(self.pieces):
            for sg in p.segments:
                if sg.t1 > sg.t0:
                    self.face_segments.setdefault(sg.face, []).append(sg)
        self._left_arc = None if closed else self._boundary_split()

    # boundary bookkeeping ---------------------------------------------------

    def _boundary_pos(self, face, q):
        """Loop position ``i + u`` of a boundary point given in a face's frame."""
        s = self.s
        _, index, vpos = _loop_data(s)
        P = s.layout[face]
        best = None
        for k in range(3):
            if s.nbr[face][k] is not None:
                continue
            A, B = P[k], P[(k + 1) % 3]
            ex, ey = B[0] - A[0], B[1] - A[1]
            le2 = ex * ex + ey * ey
            u = ((q[0] - A[0]) * ex + (q[1] - A[1]) * ey) / le2
            d = abs((q[0] - A[0]) * ey - (q[1] - A[1]) * ex) / math.sqrt(le2)
            if best is None or d < best[0]:
                best = (d, index[(face, k)] + min(max(u, 0.0), 1.0), k)
        if best is None or best[0] > 1e-7:
            raise DegenerateTangency("curve end is not on the boundary")
        # the curve ends inside this boundary edge, so paths along it cross the curve
        e = _edge_of(s, face, best[2])
        self.crossed[e] = self.crossed.get(e, 0) + 1
        return best[1]

    def _end_vertex(self, piece, t):
        for h in piece.vertex_hits:
            if abs(h.t - t) < 1e-9 and self.s.boundary_flags[h.vertex]:
                return _loop_data(self.s)[2][h.vertex]
        return None

    def _boundary_split(self):
        first, last = self.pieces[0], self.pieces[-1]
        sg0, sg1 = first.segments[0], last.segments[-1]
        entry = self._end_vertex(first, first.t_min)
        if entry is None:
            entry = self._boundary_pos(sg0.face, sg0.p0)
        exit_ = self._end_vertex(last, last.t_max)
        if exit_ is None:
            exit_ = self._boundary_pos(sg1.face, sg1.p1)
        return exit_, entry

    def _boundary_side(self, v):
        """Side of a boundary vertex from its loop position."""
        _, _, vpos = _loop_data(self.s)
        n = len(_loop_data(self.s)[0])
        a, b = self._left_arc
        x = vpos[v]
        span = (b - a) % n
        rel = (x - a) % n
        if min(abs(rel), abs(n - rel), abs(rel - span)) < 1e-9:
            return ON
        return LEFT if rel < span else RIGHT

    # classification ---------------------------------------------------------

    def _root_side(self, r):
        if r in self.on:
            return ON
        if self.closed:
            return RIGHT          # outside a closed curve
        return self._boundary_side(r)

    def side(self, v):
        """LEFT, RIGHT or ON.  For closed curves LEFT means the bounded side."""
        if v in self.on:
            return ON
        for r, parent in _trees(self.s):
            base = self._root_side(r)
            if base == ON:
                continue
            par = 0
            u, ok = v, True
            while parent[u] is not None:
                w = parent[u]
                if w in self.on:
                    ok = False
                    break
                par += self.crossed.get(self.s.edge_key(u, w), 0)
                u = w
            if ok:
                return base if par % 2 == 0 else -base
        raise DegenerateTangency(f"cannot decide the side of vertex {self.s.ids[v]}")

    def inside_closed(self, v):
        """Closed curves: True inside, False outside, None on the curve."""
        sd = self.side(v)
        return None if sd == ON else sd == LEFT

    def point_side(self, p):
        """Side of a surface point; ON only if no decision is possible."""
        s = self.s
        f = p.face
        segs = self.face_segments.get(f, [])
        for v in s.fverts[f]:
            if v in self.on:
                continue
            sv = self.side(v)
            if not segs:
                return sv
            if len(segs) > 1:
                break
            sg = segs[0]
            x, y = s.local_position(p)
            V = s.layout[f][s.fverts[f].index(v)]
            dx, dy = sg.p1[0] - sg.p0[0], sg.p1[1] - sg.p0[1]
            cp = dx * (y - sg.p0[1]) - dy * (x - sg.p0[0])
            cv = dx * (V[1] - sg.p0[1]) - dy * (V[0] - sg.p0[0])
            if abs(cp) < 1e-12 * math.hypot(dx, dy):
                return ON
            return sv if (cp > 0) == (cv > 0) else -sv
        return ON


def side_counts(curve, vertices):
    """Split ``vertices`` into left, right and on lists."""
    out = {LEFT: [], RIGHT: [], ON: []}
    for v in vertices:
        out[curve.side(v)].append(v)
    return out[LEFT], out[RIGHT], out[ON]

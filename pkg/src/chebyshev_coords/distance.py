"""Exact intrinsic distances by best-first window propagation.

A window is an interval of a mesh edge together with the planar image of
a (pseudo-)source that sees the whole interval through a chain of unfolded
faces.  Shortest paths only bend at saddle vertices (cone angle above
``2 pi``) and at reflex boundary vertices; those become new pseudo-sources.
Windows are trimmed against the best known vertex distances, which keeps
the window count close to linear in practice.
"""

import heapq
import math

from .errors import IncompleteDomain, RefinementExhausted
from .surface import SurfacePoint, TWO_PI

INF = float("inf")
_MAX_WINDOWS = 2_000_000


def _faces_containing(s, p, tol=1e-12):
    """All ``(face, (x, y))`` whose closure contains ``p``."""
    out = [(p.face, s.local_position(p))]
    v = s.vertex_at(p, tol)
    if v is not None:
        for f, k, _ in s.fan(v)[0]:
            if f != p.face:
                out.append((f, s.layout[f][k]))
        return out, v
    for k in range(3):
        if p.bary[(k + 2) % 3] < tol:
            # the point sits on local edge k (between corners k and k+1)
            hit = s.nbr[p.face][k]
            if hit is not None:
                c, sn, tx, ty = s.xform[p.face][k]
                x, y = out[0][1]
                out.append((hit[0], (c * x - sn * y + tx, sn * x + c * y + ty)))
    return out, None


class _Propagation:
    def __init__(self, s, source, bound=INF, use_boundary=True):
        self.s = s
        self.bound = bound
        self.use_boundary = use_boundary
        n = s.n_vertices
        self.dv = [INF] * n
        self.dv_via = [False] * n
        self.dv_src = [None] * n           # (image x, y, face, sigma, via) for the vertex path
        self.heap = []
        self.count = 0
        self.windows_made = 0
        self.targets = []                  # list of [(face, x, y)], best, via, info
        self.t_face = {}
        self.t_vert = {}
        self.boundary_best = INF
        self.src_faces, self.src_vertex = _faces_containing(s, source)
        self.saddle = [self._is_pseudo(v) for v in range(n)]

    def _is_pseudo(self, v):
        s = self.s
        if s.boundary_flags[v]:
            return self.use_boundary and s.angle_sum[v] > math.pi + 1e-9
        return s.angle_sum[v] > TWO_PI + 1e-9

    # targets ---------------------------------------------------------------

    def add_target(self, p):
        locs, v = _faces_containing(self.s, p)
        k = len(self.targets)
        self.targets.append({"locs": locs, "best": INF, "via": False, "info": None, "vertex": v})
        for f, xy in locs:
            self.t_face.setdefault(f, []).append((k, xy))
            for w in self.s.fverts[f]:
                self.t_vert.setdefault(w, []).append((k, f, xy))
        return k

    def _offer(self, k, d, via, info):
        t = self.targets[k]
        if d < t["best"] - 1e-15 or (abs(d - t["best"]) <= 1e-15 and t["via"] and not via):
            t["best"], t["via"], t["info"] = d, via, info

    # vertices --------------------------------------------------------------

    def _update_vertex(self, v, d, via, src):
        if d < self.dv[v] - 1e-13:
            self.dv[v] = d
            self.dv_via[v] = via
            self.dv_src[v] = src
            for k, f, xy in self.t_vert.get(v, ()):
                P = self.s.layout[f][self.s.fverts[f].index(v)]
                self._offer(k, d + math.hypot(xy[0] - P[0], xy[1] - P[1]), via, ("vertex", v, f))
            if self.s.boundary_flags[v]:
                self.boundary_best = min(self.boundary_best, d)
            if self.saddle[v]:
                self.count += 1
                heapq.heappush(self.heap, (d, self.count, "v", v))

    def _expand_vertex(self, v, sigma, via):
        s = self.s
        via = via or s.boundary_flags[v]
        for f, k, _ in s.fan(v)[0]:
            e = (k + 1) % 3
            hit = s.nbr[f][e]
            P = s.layout[f][k]
            for w in (s.fverts[f][(k + 1) % 3], s.fverts[f][(k + 2) % 3]):
                Q = s.layout[f][s.fverts[f].index(w)]
                self._update_vertex(w, sigma + math.hypot(Q[0] - P[0], Q[1] - P[1]), via, ("vertex", v))
            if hit is None:
                self._boundary_window(f, e, P[0], P[1], 0.0, 1.0, sigma)
                continue
            g, m = hit
            c, sn, tx, ty = s.xform[f][e]
            sx, sy = c * P[0] - sn * P[1] + tx, sn * P[0] + c * P[1] + ty
            # edge e of f is edge m of g traversed backwards
            self._push(g, m, sx, sy, 0.0, 1.0, sigma, via)

    # windows ---------------------------------------------------------------

    def _boundary_window(self, f, e, sx, sy, l0, l1, sigma):
        P = self.s.layout[f]
        A, B = P[e], P[(e + 1) % 3]
        d = sigma + _seg_dist(sx, sy, A, B, l0, l1)
        if d < self.boundary_best:
            self.boundary_best = d

    def _trim(self, g, m, sx, sy, l0, l1, sigma):
        s = self.s
        P = s.layout[g]
        A, B = P[m], P[(m + 1) % 3]
        L = float(s.lengths[g][m])
        ux, uy = (B[0] - A[0]) / L, (B[1] - A[1]) / L
        a = (sx - A[0]) * ux + (sy - A[1]) * uy
        b2 = (sx - A[0]) ** 2 + (sy - A[1]) ** 2 - a * a
        b2 = max(b2, 0.0)
        va, vb = s.fverts[g][m], s.fverts[g][(m + 1) % 3]
        dA, dB = self.dv[va], self.dv[vb]
        x0, x1 = l0 * L, l1 * L
        tol = 1e-10

        def f(x, dV, xV):
            return sigma + math.sqrt((x - a) ** 2 + b2) - dV - abs(x - xV)

        if dA < INF:
            # useful only far from A
            if f(x1, dA, 0.0) > tol:
                return None
            if f(x0, dA, 0.0) > tol:
                x0 = min(x1, max(x0, _crossing(a, b2, dA - sigma + tol)))
        if dB < INF:
            if f(x0, dB, L) > tol:
                return None
            if f(x1, dB, L) > tol:
                x1 = max(x0, min(x1, L - _crossing(L - a, b2, dB - sigma + tol)))
        if x1 - x0 < 1e-13:
            return None
        return x0 / L, x1 / L

    def _push(self, g, m, sx, sy, l0, l1, sigma, via):
        tr = self._trim(g, m, sx, sy, l0, l1, sigma)
        if tr is None:
            return
        l0, l1 = tr
        P = self.s.layout[g]
        key = sigma + _seg_dist(sx, sy, P[m], P[(m + 1) % 3], l0, l1)
        if key > self.bound:
            return
        self.windows_made += 1
        if self.windows_made > _MAX_WINDOWS:
            raise RefinementExhausted("window propagation exceeded its budget")
        self.count += 1
        heapq.heappush(self.heap, (key, self.count, "w", (g, m, sx, sy, l0, l1, sigma, via)))

    def _process(self, w):
        g, m, sx, sy, l0, l1, sigma, via = w
        s = self.s
        tr = self._trim(g, m, sx, sy, l0, l1, sigma)
        if tr is None:
            return
        l0, l1 = tr
        P = s.layout[g]
        A, B, C = P[m], P[(m + 1) % 3], P[(m + 2) % 3]
        w0 = (A[0] + l0 * (B[0] - A[0]), A[1] + l0 * (B[1] - A[1]))
        w1 = (A[0] + l1 * (B[0] - A[0]), A[1] + l1 * (B[1] - A[1]))
        v0 = (w0[0] - sx, w0[1] - sy)
        v1 = (w1[0] - sx, w1[1] - sy)
        va, vb, vc = s.fverts[g][m], s.fverts[g][(m + 1) % 3], s.fverts[g][(m + 2) % 3]
        src = (sx, sy, g, sigma, via)
        if l0 <= 1e-12:
            self._update_vertex(va, sigma + math.hypot(A[0] - sx, A[1] - sy), via, src)
        if l1 >= 1.0 - 1e-12:
            self._update_vertex(vb, sigma + math.hypot(B[0] - sx, B[1] - sy), via, src)

        def inside(q, tol=1e-12):
            qx, qy = q[0] - sx, q[1] - sy
            return v0[0] * qy - v0[1] * qx <= tol and v1[0] * qy - v1[1] * qx >= -tol

        if inside(C):
            self._update_vertex(vc, sigma + math.hypot(C[0] - sx, C[1] - sy), via, src)
        for k, (x, y) in self.t_face.get(g, ()):
            if inside((x, y), 1e-10):
                self._offer(k, sigma + math.hypot(x - sx, y - sy), via, ("window", g, sx, sy, sigma))
        for e in ((m + 1) % 3, (m + 2) % 3):
            E0, E1 = P[e], P[(e + 1) % 3]
            iv = _clip(v0, v1, sx, sy, E0, E1)
            if iv is None:
                continue
            mu0, mu1 = iv
            hit = s.nbr[g][e]
            if hit is None:
                self._boundary_window(g, e, sx, sy, mu0, mu1, sigma)
                continue
            h, n = hit
            c, sn, tx, ty = s.xform[g][e]
            nx, ny = c * sx - sn * sy + tx, sn * sx + c * sy + ty
            # edge e of g runs E0 -> E1; edge n of h runs E1 -> E0
            self._push(h, n, nx, ny, 1.0 - mu1, 1.0 - mu0, sigma, via)

    # driver -------------------------------------------------------------------

    def start(self):
        s = self.s
        if self.src_vertex is not None:
            v = self.src_vertex
            self.dv[v] = 0.0
            self.dv_src[v] = ("source",)
            for k, f, xy in self.t_vert.get(v, ()):
                P = s.layout[f][s.fverts[f].index(v)]
                self._offer(k, math.hypot(xy[0] - P[0], xy[1] - P[1]), False, ("vertex", v, f))
            if s.boundary_flags[v]:
                self.boundary_best = 0.0
            self._expand_vertex(v, 0.0, False)
            return
        for f, (x, y) in self.src_faces:
            P = s.layout[f]
            for k, xy in self.t_face.get(f, ()):
                self._offer(k, math.hypot(xy[0] - x, xy[1] - y), False, ("window", f, x, y, 0.0))
            for j in range(3):
                w = s.fverts[f][j]
                self._update_vertex(w, math.hypot(P[j][0] - x, P[j][1] - y), False, (x, y, f, 0.0, False))
            for e in range(3):
                A, B = P[e], P[(e + 1) % 3]
                cr = (B[0] - A[0]) * (y - A[1]) - (B[1] - A[1]) * (x - A[0])
                if cr <= 1e-12 * float(s.lengths[f][e]):
                    continue       # the source lies on this edge
                hit = s.nbr[f][e]
                if hit is None:
                    self._boundary_window(f, e, x, y, 0.0, 1.0, 0.0)
                    continue
                g, m = hit
                c, sn, tx, ty = s.xform[f][e]
                self._push(g, m, c * x - sn * y + tx, sn * x + c * y + ty, 0.0, 1.0, 0.0, False)

    def run(self, stop):
        while self.heap:
            key = self.heap[0][0]
            if key > self.bound or stop(key):
                return
            key, _, kind, item = heapq.heappop(self.heap)
            if kind == "v":
                if item is not None and self.dv[item] == key:
                    self._expand_vertex(item, key, self.dv_via[item])
            else:
                self._process(item)


def _crossing(a, b2, c):
    """Solve ``sqrt((x - a)^2 + b2) = x + c`` for x (the unique crossing)."""
    den = 2.0 * (a + c)
    if abs(den) < 1e-300:
        return 0.0
    return (a * a + b2 - c * c) / den


def _seg_dist(px, py, A, B, l0, l1):
    ax, ay = A[0] + l0 * (B[0] - A[0]), A[1] + l0 * (B[1] - A[1])
    bx, by = A[0] + l1 * (B[0] - A[0]), A[1] + l1 * (B[1] - A[1])
    dx, dy = bx - ax, by - ay
    den = dx * dx + dy * dy
    t = 0.0 if den == 0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / den))
    return math.hypot(ax + t * dx - px, ay + t * dy - py)


def _clip(v0, v1, sx, sy, E0, E1):
    """Sub-interval of edge E0->E1 seen inside the wedge spanned by v0, v1 from s."""
    def g(v, q):
        return v[0] * (q[1] - sy) - v[1] * (q[0] - sx)

    lo, hi = 0.0, 1.0
    # need g(v0, q) <= 0
    a0, a1 = g(v0, E0), g(v0, E1)
    lo, hi = _halfline(a0, a1, lo, hi, sign=-1)
    if lo is None:
        return None
    b0, b1 = g(v1, E0), g(v1, E1)
    lo, hi = _halfline(b0, b1, lo, hi, sign=1)
    if lo is None or hi - lo < 1e-13:
        return None
    return lo, hi


def _halfline(f0, f1, lo, hi, sign):
    """Restrict [lo, hi] to where sign * (f0 + mu (f1 - f0)) >= 0."""
    f0, f1 = sign * f0, sign * f1
    tol = 1e-13
    if f0 >= -tol and f1 >= -tol:
        return lo, hi
    if f0 < -tol and f1 < -tol:
        return None, None
    mu = f0 / (f0 - f1)
    if f1 > f0:
        lo = max(lo, mu)
    else:
        hi = min(hi, mu)
    if hi < lo:
        return None, None
    return lo, hi


# public API -----------------------------------------------------------------

def distances(s, source, targets, bound=INF, allow_boundary=False):
    """Geodesic distances from ``source`` to each point in ``targets``.

    Raises :class:`IncompleteDomain` when an optimal path has to run along
    the mesh boundary (unless ``allow_boundary``).
    """
    prop = _Propagation(s, source, bound=bound)
    ids = [prop.add_target(t) for t in targets]
    prop.start()
    tg = prop.targets
    prop.run(lambda key: all(t["best"] <= key for t in tg))
    out = []
    for k in ids:
        t = tg[k]
        if t["via"] and not allow_boundary and t["best"] < INF:
            raise IncompleteDomain("shortest path reaches the mesh boundary")
        out.append(t["best"])
    return out


def distance(s, p, q, bound=INF):
    return distances(s, p, [q], bound=bound)[0]


def distance_to_boundary(s, p, bound=INF):
    """Intrinsic distance from ``p`` to the boundary (capped at ``bound``)."""
    prop = _Propagation(s, p, bound=bound, use_boundary=False)
    prop.start()
    prop.run(lambda key: prop.boundary_best <= key)
    return min(prop.boundary_best, bound)


def vertex_distances(s, p, bound=INF):
    """Distances from ``p`` to every vertex (``inf`` beyond ``bound``)."""
    prop = _Propagation(s, p, bound=bound)
    prop.start()
    prop.run(lambda key: False)
    return list(prop.dv)


def _arrival_at_vertex(s, prop, v):
    src = prop.dv_src[v]
    if src[0] == "source":
        raise ValueError("source and target coincide")
    if src[0] == "vertex":
        u = src[1]
        for f in range(s.n_faces):
            fv = s.fverts[f]
            if u in fv and v in fv:
                P, Q = s.layout[f][fv.index(v)], s.layout[f][fv.index(u)]
                return f, math.atan2(Q[1] - P[1], Q[0] - P[0])
        raise ValueError("no face holds the last path edge")
    sx, sy, f = src[0], src[1], src[2]
    P = s.layout[f][s.fverts[f].index(v)]
    return f, math.atan2(sy - P[1], sx - P[0])


def geodesic_between(s, p, q):
    """Distance from ``p`` to ``q`` and the unit direction at ``q`` pointing back along the path.

    The direction is a :class:`TangentVector`-style pair ``(face, local angle)``
    in a face containing ``q``.
    """
    prop = _Propagation(s, p)
    k = prop.add_target(q)
    prop.start()
    t = prop.targets[k]
    prop.run(lambda key: t["best"] <= key)
    if t["via"]:
        raise IncompleteDomain("shortest path reaches the mesh boundary")
    info = t["info"]
    loc = dict(t["locs"])
    if info[0] == "vertex" and info[1] == t["vertex"]:
        # the target is a mesh vertex; use how the vertex itself was reached
        return t["best"], _arrival_at_vertex(s, prop, info[1])
    if info[0] == "window":
        _, f, sx, sy, _sig = info
    else:
        _, v, f = info
        sx, sy = s.layout[f][s.fverts[f].index(v)]
    x, y = loc[f]
    return t["best"], (f, math.atan2(sy - y, sx - x))


def point_distance_matrix(s, points, bound=INF):
    """Symmetric matrix of pairwise distances (one propagation per row)."""
    n = len(points)
    D = [[0.0] * n for _ in range(n)]
    for i in range(n - 1):
        row = distances(s, points[i], points[i + 1:], bound=bound)
        for j, d in enumerate(row, start=i + 1):
            D[i][j] = D[j][i] = d
    return D


def graph_distances(s, sources):
    """Dijkstra over mesh edges from vertex indices (hop-length upper bounds)."""
    dist = [INF] * s.n_vertices
    heap = []
    for v in sources:
        dist[v] = 0.0
        heap.append((0.0, v))
    heapq.heapify(heap)
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for w in s.neighbors(v):
            nd = d + s.edge_length(v, w)
            if nd < dist[w]:
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    return dist


__all__ = ["distance", "distances", "distance_to_boundary", "vertex_distances",
           "geodesic_between", "point_distance_matrix", "graph_distances", "SurfacePoint"]

"""Reference computations that share no code with the library.

They work from the planar picture of a generated instance (``face_xy``),
the raw edge lengths, or the raw segment lists of traces.
"""

import math
from collections import deque

import numpy as np

from chebyshev_coords.surface import SurfacePoint

TWO_PI = 2 * math.pi


# curvature ----------------------------------------------------------------------

def defects_from_lengths(s):
    """Angle defect of every interior vertex from the law of cosines."""
    total = np.zeros(s.n_vertices)
    for f, (a, b, c) in enumerate(s.fverts):
        l0, l1, l2 = (float(x) for x in s.lengths[f])   # ab, bc, ca
        for v, opp, x, y in ((a, l1, l0, l2), (b, l2, l0, l1), (c, l0, l1, l2)):
            total[v] += math.acos(max(-1.0, min(1.0, (x * x + y * y - opp * opp) / (2 * x * y))))
    return {v: TWO_PI - total[v] for v in range(s.n_vertices) if not s.boundary_flags[v]}


def totals_from_lengths(s, tol=1e-9):
    d = defects_from_lengths(s)
    pos = sum(x for x in d.values() if x > tol)
    neg = -sum(x for x in d.values() if x < -tol)
    return pos, neg


# planar picture of a single-atom instance ----------------------------------------

def locate(inst, xy, piece=0):
    """Surface point over a planar point, in faces of the given piece."""
    Q = inst.face_xy
    for f in range(len(Q)):
        if inst.piece is not None and inst.piece[f] != piece:
            continue
        A, B, C = (np.asarray(q, float) for q in Q[f])
        T = np.column_stack([B - A, C - A])
        l1, l2 = np.linalg.solve(T, np.asarray(xy, float) - A)
        l0 = 1.0 - l1 - l2
        if min(l0, l1, l2) >= -1e-12:
            b = (l0, l1, 1.0 - l0 - l1)
            return SurfacePoint(f, b)
    raise ValueError(f"no face over {xy}")


def local_angle(inst, face, planar):
    """Inverse of ``Instance.planar_direction``."""
    P = inst.surface.layout[face]
    Q = inst.face_xy[face]
    a_loc = math.atan2(P[1][1] - P[0][1], P[1][0] - P[0][0])
    a_pl = math.atan2(Q[1][1] - Q[0][1], Q[1][0] - Q[0][0])
    return planar + a_loc - a_pl


def _cone_angle(inst, xy):
    """Cone polar angle of a main-piece planar point about atom 0."""
    _v, w, (ax, ay) = inst.atoms[0]
    th = inst.seam_angles[0]
    a = math.atan2(xy[1] - ay, xy[0] - ax)
    return (a - (th + w / 2.0 if w > 0 else th)) % TWO_PI


def _planar_angle(inst, psi):
    _v, w, _ = inst.atoms[0]
    th = inst.seam_angles[0]
    return psi + (th + w / 2.0 if w > 0 else th)


def unfold_straight_line(inst, xy, direction, length):
    """End point and planar direction of a geodesic that misses the apex.

    The cone is developed around the apex; a straight segment there
    sweeps less than ``pi`` of cone angle, so no wrapping choice arises.
    Start and end must lie in the main piece.
    """
    _v, w, (ax, ay) = inst.atoms[0]
    theta = TWO_PI - w
    r0 = math.hypot(xy[0] - ax, xy[1] - ay)
    psi0 = _cone_angle(inst, xy)
    a0 = _planar_angle(inst, psi0)
    d_dev = direction - a0 + psi0
    X0 = np.array([r0 * math.cos(psi0), r0 * math.sin(psi0)])
    X1 = X0 + length * np.array([math.cos(d_dev), math.sin(d_dev)])
    sweep = math.atan2(X0[0] * X1[1] - X0[1] * X1[0], X0 @ X1)
    psi1 = psi0 + sweep
    r1 = float(np.hypot(*X1))
    psi1m = psi1 % theta
    if w < 0 and psi1m >= TWO_PI:
        raise ValueError("end point lies in the glued sector")
    a1 = _planar_angle(inst, psi1m)
    end = (ax + r1 * math.cos(a1), ay + r1 * math.sin(a1))
    d_end = d_dev - psi1 + a1
    return end, d_end


def cone_distance(inst, p, q):
    """Intrinsic distance of two main-piece points about a single cone."""
    _v, w, (ax, ay) = inst.atoms[0]
    theta = TWO_PI - w
    r1 = math.hypot(p[0] - ax, p[1] - ay)
    r2 = math.hypot(q[0] - ax, q[1] - ay)
    d = abs(_cone_angle(inst, p) - _cone_angle(inst, q)) % theta
    d = min(d, theta - d, math.pi)
    return math.sqrt(max(0.0, r1 * r1 + r2 * r2 - 2 * r1 * r2 * math.cos(d)))


def wrap(a):
    return (a + math.pi) % TWO_PI - math.pi


# sector membership by flood fill ----------------------------------------------

def _edge(s, u, v):
    return (u, v) if u < v else (v, u)


def _cuts(s, pieces):
    """Mesh edges crossed by the given ``(trace, lo, hi)`` pieces, and the curve vertices."""
    cut, on = {}, set()
    for tr, lo, hi, label in pieces:
        for c in tr.crossings:
            if lo < c.t < hi:
                vs = s.fverts[c.face]
                cut[_edge(s, vs[c.edge], vs[(c.edge + 1) % 3])] = (tr, c, label)
        for h in tr.vertex_hits:
            if lo - 1e-12 <= h.t <= hi + 1e-12:
                on.add(h.vertex)
        # the exits through the mesh boundary are not listed as crossings
        for sg, q in ((tr.segments[0], tr.segments[0].p0), (tr.segments[-1], tr.segments[-1].p1)):
            e = _boundary_edge_at(s, sg.face, q)
            if e is not None:
                cut[e] = None
    return cut, on


def _boundary_edge_at(s, f, q, tol=1e-7):
    P = s.layout[f]
    vs = s.fverts[f]
    for k in range(3):
        if s.nbr[f][k] is not None:
            continue
        A, B = np.asarray(P[k]), np.asarray(P[(k + 1) % 3])
        d = B - A
        dist = abs(d[0] * (q[1] - A[1]) - d[1] * (q[0] - A[0])) / np.hypot(*d)
        if dist < tol:
            return _edge(s, vs[k], vs[(k + 1) % 3])
    return None


def sector_of_vertices(s, cross):
    """Label every vertex off the cross with its sector number.

    Components of the mesh graph minus crossed edges are labelled from the
    sides of crossed edges next to each curve.  Returns ``(labels, on)``.
    """
    g, r2, r3 = cross.gamma1, cross.gamma2, cross.gamma3
    big = 1e9
    pieces = [(g, -big, big, "g"), (r2, r2.t_min, big, "r2"), (r3, r3.t_min, big, "r3")]
    cut, on = _cuts(s, pieces)
    adj = {v: [] for v in range(s.n_vertices)}
    for a, b, c in s.fverts:
        for u, v in ((a, b), (b, c), (c, a)):
            adj[u].append(v)
    comp = {}
    k = 0
    for v0 in range(s.n_vertices):
        if v0 in comp or v0 in on:
            continue
        comp[v0] = k
        dq = deque([v0])
        while dq:
            u = dq.popleft()
            for w in adj[u]:
                if w in comp or w in on or _edge(s, u, w) in cut:
                    continue
                comp[w] = k
                dq.append(w)
        k += 1
    votes = {}
    for (u, v), item in cut.items():
        if item is None:
            continue
        tr, c, label = item
        f, e = c.face, c.edge
        P = s.layout[f]
        vs = s.fverts[f]
        sg = next(x for x in tr.segments if x.face == f and x.t0 - 1e-12 <= c.t <= x.t1 + 1e-12)
        dx, dy = sg.p1[0] - sg.p0[0], sg.p1[1] - sg.p0[1]
        for j in (e, (e + 1) % 3):
            vx = vs[j]
            if vx in on:
                continue
            cx, cy = P[j][0] - sg.p0[0], P[j][1] - sg.p0[1]
            left = dx * cy - dy * cx > 0
            if label == "g":
                if left:
                    lab = 1 if c.t > cross.o2 else 2
                else:
                    lab = 3 if c.t < cross.o3 else 4
            elif label == "r2":
                lab = 2 if left else 1
            else:
                lab = 4 if left else 3
            votes.setdefault(comp[vx], set()).add(lab)
    labels = {}
    for v, cpt in comp.items():
        vs = votes.get(cpt, set())
        labels[v] = min(vs) if len(vs) == 1 else None
    return labels, on


def sector_totals(s, cross):
    """``(w+, w-)`` per sector from the flood fill; on-curve atoms are left out."""
    labels, on = sector_of_vertices(s, cross)
    d = defects_from_lengths(s)
    out = {i: [0.0, 0.0] for i in (1, 2, 3, 4)}
    skipped = []
    for v, w in d.items():
        if abs(w) < 1e-9:
            continue
        if v in on or labels.get(v) is None:
            skipped.append(v)
            continue
        out[labels[v]][0 if w > 0 else 1] += abs(w)
    return out, skipped

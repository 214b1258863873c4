"""Intrinsic cone-metric surfaces.

A :class:`ConeSurface` is a triangulated disk described only by its
combinatorics and edge lengths.  Every face gets a local planar layout
(first vertex at the origin, second on the positive x axis) and all
geometric queries are phrased in those local frames.
"""

import json
import math
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidMesh, ParseError, UnknownVertex

TWO_PI = 2.0 * math.pi
ATOM_TOL = 1e-9


@dataclass(frozen=True)
class Vertex:
    id: int
    boundary: bool


@dataclass(frozen=True)
class SurfacePoint:
    face: int
    bary: tuple

    def __post_init__(self):
        if abs(sum(self.bary) - 1.0) > 1e-12:
            raise ValueError(f"barycentric coordinates must sum to 1, got {self.bary}")


@dataclass(frozen=True)
class TangentVector:
    """Base point plus a direction angle in the local frame of ``base.face``."""

    base: SurfacePoint
    direction: float


@dataclass
class CurvatureMeasure:
    atoms: list
    total_pos: float
    total_neg: float

    def as_dict(self):
        return {v: d for v, d in self.atoms}


def _corner_angle(adj1, adj2, opp):
    c = (adj1 * adj1 + adj2 * adj2 - opp * opp) / (2.0 * adj1 * adj2)
    return math.acos(min(1.0, max(-1.0, c)))


class ConeSurface:
    """Immutable intrinsic triangulated disk with a cone metric.

    ``faces`` holds vertex indices (0..n-1); ``ids`` maps indices back to the
    vertex ids used in files.  ``lengths[f]`` lists the lengths of the edges
    ``(f0,f1), (f1,f2), (f2,f0)``.
    """

    def __init__(self, ids, boundary_flags, faces, lengths, margin_width=0.0):
        self.ids = tuple(int(i) for i in ids)
        self.boundary_flags = tuple(bool(b) for b in boundary_flags)
        self.faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        self.lengths = np.asarray(lengths, dtype=float).reshape(-1, 3)
        self.margin_width = float(margin_width)
        self.faces.setflags(write=False)
        self.lengths.setflags(write=False)
        self._index = {vid: k for k, vid in enumerate(self.ids)}
        self._build()

    # construction -----------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.ids)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def vertices(self):
        return [Vertex(i, b) for i, b in zip(self.ids, self.boundary_flags)]

    def index_of(self, vid):
        try:
            return self._index[vid]
        except KeyError:
            raise UnknownVertex(f"unknown vertex id {vid}") from None

    def _build(self):
        F = self.n_faces
        self.fverts = [tuple(int(x) for x in f) for f in self.faces]
        self.layout = []
        self.corner = []
        for f in range(F):
            l01, l12, l20 = (float(x) for x in self.lengths[f])
            x = (l01 * l01 + l20 * l20 - l12 * l12) / (2.0 * l01)
            y = math.sqrt(max(l20 * l20 - x * x, 0.0))
            self.layout.append(((0.0, 0.0), (l01, 0.0), (x, y)))
            self.corner.append((
                _corner_angle(l01, l20, l12),
                _corner_angle(l01, l12, l20),
                _corner_angle(l12, l20, l01),
            ))

        self.half = {}
        for f, (a, b, c) in enumerate(self.fverts):
            for k, (u, v) in enumerate(((a, b), (b, c), (c, a))):
                self.half[(u, v)] = (f, k)
        self.nbr = []
        self.xform = []
        for f, vs in enumerate(self.fverts):
            row, xrow = [], []
            for k in range(3):
                u, v = vs[k], vs[(k + 1) % 3]
                hit = self.half.get((v, u))
                row.append(hit)
                xrow.append(self._edge_xform(f, k, hit) if hit is not None else None)
            self.nbr.append(tuple(row))
            self.xform.append(tuple(xrow))

        n = self.n_vertices
        self.angle_sum = [0.0] * n
        for f, vs in enumerate(self.fverts):
            for k in range(3):
                self.angle_sum[vs[k]] += self.corner[f][k]
        self._vertex_faces = [[] for _ in range(n)]
        for f, vs in enumerate(self.fverts):
            for k in range(3):
                self._vertex_faces[vs[k]].append((f, k))
        self._fans = {}

    def _edge_xform(self, f, k, hit):
        g, m = hit
        P = self.layout[f]
        Q = self.layout[g]
        A, B = P[k], P[(k + 1) % 3]
        A2, B2 = Q[(m + 1) % 3], Q[m]
        ang = math.atan2(B2[1] - A2[1], B2[0] - A2[0]) - math.atan2(B[1] - A[1], B[0] - A[0])
        c, s = math.cos(ang), math.sin(ang)
        tx = A2[0] - (c * A[0] - s * A[1])
        ty = A2[1] - (s * A[0] + c * A[1])
        return (c, s, tx, ty)

    # basic geometry ---------------------------------------------------

    def is_boundary_vertex(self, v):
        return self.boundary_flags[v]

    def is_boundary_edge(self, f, k):
        return self.nbr[f][k] is None

    def cone_angle(self, v):
        return self.angle_sum[v]

    def defect(self, v):
        """Angle defect of an interior vertex (zero for boundary vertices)."""
        if self.boundary_flags[v]:
            return 0.0
        return TWO_PI - self.angle_sum[v]

    def boundary_turn(self, v):
        return math.pi - self.angle_sum[v]

    def local_position(self, p):
        P = self.layout[p.face]
        b0, b1, b2 = p.bary
        return (b0 * P[0][0] + b1 * P[1][0] + b2 * P[2][0],
                b0 * P[0][1] + b1 * P[1][1] + b2 * P[2][1])

    def point_from_local(self, f, x, y):
        """Surface point of face ``f`` at local coordinates ``(x, y)``."""
        P = self.layout[f]
        (x0, y0), (x1, y1), (x2, y2) = P
        det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        b1 = ((x - x0) * (y2 - y0) - (x2 - x0) * (y - y0)) / det
        b2 = ((x1 - x0) * (y - y0) - (x - x0) * (y1 - y0)) / det
        b0 = 1.0 - b1 - b2
        return SurfacePoint(f, (b0, b1, b2))

    def vertex_point(self, v):
        f, k = self._vertex_faces[v][0]
        bary = [0.0, 0.0, 0.0]
        bary[k] = 1.0
        return SurfacePoint(f, tuple(bary))

    def face_centroid(self, f):
        return SurfacePoint(f, (1.0 / 3.0, 1.0 - 2.0 / 3.0, 1.0 / 3.0))

    def vertex_at(self, p, tol=1e-12):
        """Vertex index if ``p`` sits on a vertex, else ``None``."""
        for k in range(3):
            if p.bary[k] > 1.0 - tol:
                return self.fverts[p.face][k]
        return None

    def edge_key(self, u, v):
        return (u, v) if u < v else (v, u)

    # fans ---------------------------------------------------------------

    def fan(self, v):
        """Corners around ``v`` in counterclockwise order.

        Returns a list of ``(face, corner, start)`` where ``start`` is the
        cumulative angle of the corner's first edge ``v -> f[corner+1]``.
        """
        cached = self._fans.get(v)
        if cached is not None:
            return cached
        corners = self._vertex_faces[v]
        if not corners:
            raise UnknownVertex(f"vertex {v} has no faces")
        f, k = corners[0]
        if self.boundary_flags[v]:
            # rotate clockwise until the first edge v -> f[k+1] is a boundary edge
            for _ in range(len(corners) + 1):
                if self.nbr[f][k] is None:
                    break
                g, m = self.nbr[f][k]
                f, k = g, (m + 1) % 3
        out = []
        acc = 0.0
        for _ in range(len(corners)):
            out.append((f, k, acc))
            acc += self.corner[f][k]
            e = (k + 2) % 3
            hit = self.nbr[f][e]
            if hit is None:
                break
            g, m = hit
            f, k = g, m
            if (f, k) == (out[0][0], out[0][1]):
                break
        starts = [c[2] for c in out]
        self._fans[v] = (out, starts)
        return self._fans[v]

    def corner_base_angle(self, f, k):
        P = self.layout[f]
        a, b = P[k], P[(k + 1) % 3]
        return math.atan2(b[1] - a[1], b[0] - a[0])

    def fan_angle(self, v, f, psi):
        """Fan coordinate of local direction ``psi`` (face ``f``) at vertex ``v``."""
        out, _ = self.fan(v)
        for face, k, start in out:
            if face == f:
                rel = (psi - self.corner_base_angle(f, k)) % TWO_PI
                width = self.corner[f][k]
                if rel > width + 1e-9 and rel > TWO_PI - 1e-9:
                    rel = 0.0
                return start + min(rel, width)
        raise ValueError(f"face {f} not incident to vertex {v}")

    def fan_direction(self, v, phi):
        """Inverse of :meth:`fan_angle`: returns ``(face, local angle)``."""
        out, starts = self.fan(v)
        total = self.angle_sum[v]
        if not self.boundary_flags[v]:
            phi = phi % total
        i = max(0, bisect_right(starts, phi) - 1)
        f, k, start = out[i]
        return f, self.corner_base_angle(f, k) + (phi - start)

    def edge_fan_angle(self, v, w):
        """Fan coordinate of the edge direction ``v -> w``."""
        out, _ = self.fan(v)
        for f, k, start in out:
            vs = self.fverts[f]
            if vs[(k + 1) % 3] == w:
                return start
            if vs[(k + 2) % 3] == w:
                return start + self.corner[f][k]
        raise ValueError(f"{v} and {w} are not adjacent")

    def vertex_tangent(self, v, phi):
        f, psi = self.fan_direction(v, phi)
        k = self.fverts[f].index(v)
        bary = [0.0, 0.0, 0.0]
        bary[k] = 1.0
        return TangentVector(SurfacePoint(f, tuple(bary)), psi)

    def neighbors(self, v):
        seen = []
        for f, k in self._vertex_faces[v]:
            vs = self.fverts[f]
            for w in (vs[(k + 1) % 3], vs[(k + 2) % 3]):
                if w not in seen:
                    seen.append(w)
        return seen

    def edges(self):
        es = set()
        for a, b, c in self.fverts:
            for u, v in ((a, b), (b, c), (c, a)):
                es.add(self.edge_key(u, v))
        return sorted(es)

    def edge_length(self, u, v):
        hit = self.half.get((u, v)) or self.half.get((v, u))
        if hit is None:
            raise ValueError(f"no edge {u}-{v}")
        f, k = hit
        return float(self.lengths[f][k])

    def boundary_loop(self):
        """Boundary half-edges in order, as ``(face, local edge)`` pairs."""
        start = None
        for f in range(self.n_faces):
            for k in range(3):
                if self.nbr[f][k] is None:
                    start = (f, k)
                    break
            if start:
                break
        if start is None:
            return []
        loop = [start]
        while True:
            f, k = loop[-1]
            v = self.fverts[f][(k + 1) % 3]
            # next boundary half-edge starts at v: walk around v
            out, _ = self.fan(v)
            g, m, _s = out[0]
            nxt = (g, m)
            if nxt == start:
                break
            loop.append(nxt)
            if len(loop) > 4 * self.n_faces:
                raise InvalidMesh("single boundary loop", detail="boundary walk did not close")
        return loop

    # curvature ---------------------------------------------------------

    def curvature(self):
        return curvature_totals(self)


def curvature_totals(s):
    atoms = []
    pos = neg = 0.0
    for v in range(s.n_vertices):
        if s.boundary_flags[v]:
            continue
        d = s.defect(v)
        if abs(d) > ATOM_TOL:
            atoms.append((s.ids[v], d))
            if d > 0:
                pos += d
            else:
                neg -= d
    return CurvatureMeasure(atoms, pos, neg)


def curvature_in_region(s, region):
    """Positive and negative curvature carried by a set of interior vertex ids."""
    pos = neg = 0.0
    for vid in region:
        v = s.index_of(vid)
        if s.boundary_flags[v]:
            raise UnknownVertex(f"vertex {vid} is a boundary vertex")
        d = s.defect(v)
        if abs(d) <= ATOM_TOL:
            continue
        if d > 0:
            pos += d
        else:
            neg -= d
    return pos, neg


def gauss_bonnet_residual(s):
    """Interior defects plus boundary turns minus 2*pi (zero on a disk)."""
    total = 0.0
    for v in range(s.n_vertices):
        total += s.boundary_turn(v) if s.boundary_flags[v] else s.defect(v)
    return total - TWO_PI


def atom_vertices(s):
    """Indices of interior vertices carrying curvature."""
    return [v for v in range(s.n_vertices)
            if not s.boundary_flags[v] and abs(s.defect(v)) > ATOM_TOL]


# validation ------------------------------------------------------------

def validate_surface(s, check_margin=True):
    """Check every structural invariant; raises :class:`InvalidMesh`."""
    F = s.n_faces
    if F == 0:
        raise InvalidMesh("triangulated disk", detail="no faces")
    for f in range(F):
        l = s.lengths[f]
        if not np.all(np.isfinite(l)) or np.any(l <= 0):
            raise InvalidMesh("positive edge lengths", f)
        a, b, c = (float(x) for x in l)
        if not (a < b + c and b < a + c and c < a + b):
            raise InvalidMesh("strict triangle inequality", f)
        if len(set(s.fverts[f])) != 3:
            raise InvalidMesh("distinct face vertices", f)
    directed = {}
    for f, (a, b, c) in enumerate(s.fverts):
        for k, (u, v) in enumerate(((a, b), (b, c), (c, a))):
            if (u, v) in directed:
                raise InvalidMesh("orientable manifold", f, f"directed edge {s.ids[u]}->{s.ids[v]} repeated")
            directed[(u, v)] = (f, k)
    for (u, v), (f, k) in directed.items():
        other = directed.get((v, u))
        if other is not None:
            g, m = other
            la, lb = float(s.lengths[f][k]), float(s.lengths[g][m])
            if abs(la - lb) > 1e-9 * max(1.0, la):
                raise InvalidMesh("shared edge lengths agree", f, f"edge {s.ids[u]}-{s.ids[v]}: {la} vs {lb}")
    used = set(v for vs in s.fverts for v in vs)
    if len(used) != s.n_vertices:
        missing = sorted(set(range(s.n_vertices)) - used)
        raise InvalidMesh("triangulated disk", s.ids[missing[0]], "isolated vertex")
    # boundary flags and vertex manifoldness
    boundary = [False] * s.n_vertices
    for (u, v) in directed:
        if (v, u) not in directed:
            boundary[u] = boundary[v] = True
    for v in range(s.n_vertices):
        if boundary[v] != s.boundary_flags[v]:
            raise InvalidMesh("boundary flags match topology", s.ids[v])
        out, _ = s.fan(v)
        if len(out) != len(s._vertex_faces[v]):
            raise InvalidMesh("manifold vertex", s.ids[v], "faces do not form a single fan")
    # connectivity
    adj = [[] for _ in range(F)]
    for f in range(F):
        for hit in s.nbr[f]:
            if hit is not None:
                adj[f].append(hit[0])
    seen = {0}
    stack = [0]
    while stack:
        f = stack.pop()
        for g in adj[f]:
            if g not in seen:
                seen.add(g)
                stack.append(g)
    if len(seen) != F:
        raise InvalidMesh("connected", None, f"{F - len(seen)} faces unreachable")
    E = len(s.edges())
    chi = s.n_vertices - E + F
    if chi != 1:
        raise InvalidMesh("Euler characteristic 1", None, f"chi={chi}")
    loop = s.boundary_loop()
    n_bedges = sum(1 for (u, v) in directed if (v, u) not in directed)
    if len(loop) != n_bedges:
        raise InvalidMesh("single boundary loop", None, f"{len(loop)} of {n_bedges} boundary edges in first loop")
    if check_margin and s.margin_width > 0:
        from .distance import distance_to_boundary
        for v in atom_vertices(s):
            d = distance_to_boundary(s, s.vertex_point(v), bound=s.margin_width)
            if d < s.margin_width - 1e-9:
                raise InvalidMesh("atoms keep the margin width from the boundary", s.ids[v],
                                  f"distance {d:.6g} < {s.margin_width}")
    return s


# file formats ------------------------------------------------------------

def surface_from_dict(data):
    try:
        verts = data["vertices"]
        ids = [int(v["id"]) for v in verts]
        flags = [bool(v["boundary"]) for v in verts]
        index = {vid: k for k, vid in enumerate(ids)}
        if len(index) != len(ids):
            raise InvalidMesh("unique vertex ids")
        faces, lengths = [], []
        for fi, f in enumerate(data["faces"]):
            vv = f["v"]
            ll = f["lengths"]
            if len(vv) != 3 or len(ll) != 3:
                raise ParseError(f"face {fi} must have three vertices and three lengths")
            try:
                faces.append([index[int(x)] for x in vv])
            except KeyError as e:
                raise InvalidMesh("face references known vertices", fi, f"unknown id {e.args[0]}") from None
            lengths.append([float(x) for x in ll])
        margin = float(data.get("margin_width", 0.0))
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"malformed mesh data: {e!r}") from None
    return ConeSurface(ids, flags, faces, lengths, margin)


def surface_to_dict(s):
    return {
        "vertices": [{"id": i, "boundary": b} for i, b in zip(s.ids, s.boundary_flags)],
        "faces": [
            {"v": [s.ids[x] for x in f], "lengths": [float(x) for x in l]}
            for f, l in zip(s.fverts, s.lengths)
        ],
        "margin_width": s.margin_width,
    }


def dumps_surface(s):
    return json.dumps(surface_to_dict(s), separators=(",", ":")) + "\n"


def save_surface(s, path):
    Path(path).write_text(dumps_surface(s))


def _load_obj(text):
    pos, faces = [], []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            pos.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = [int(p.split("/")[0]) for p in parts[1:]]
            idx = [i - 1 if i > 0 else len(pos) + i for i in idx]
            for j in range(1, len(idx) - 1):
                faces.append([idx[0], idx[j], idx[j + 1]])
    if not pos or not faces:
        raise ParseError("OBJ file has no vertices or faces")
    P = np.array(pos, dtype=float)
    if P.shape[1] == 2:
        P = np.column_stack([P, np.zeros(len(P))])
    F = np.array(faces, dtype=np.int64)
    L = np.stack([
        np.linalg.norm(P[F[:, 1]] - P[F[:, 0]], axis=1),
        np.linalg.norm(P[F[:, 2]] - P[F[:, 1]], axis=1),
        np.linalg.norm(P[F[:, 0]] - P[F[:, 2]], axis=1),
    ], axis=1)
    directed = set()
    for a, b, c in F:
        directed.update({(a, b), (b, c), (c, a)})
    flags = [False] * len(P)
    for u, v in directed:
        if (v, u) not in directed:
            flags[u] = flags[v] = True
    return ConeSurface(range(len(P)), flags, F, L, 0.0)


def load_surface(path, check_margin=True):
    """Load and validate a JSON (or OBJ) mesh."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from None
    if path.suffix.lower() == ".obj":
        s = _load_obj(text)
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: {e}") from None
        if not isinstance(data, dict):
            raise ParseError(f"{path}: top level must be an object")
        s = surface_from_dict(data)
    return validate_surface(s, check_margin=check_margin)

"""Generators for test surfaces with prescribed cone points.

Each cone point of defect ``w`` is produced by cut-and-glue on a planar
disk: for ``w > 0`` a wedge of angle ``w`` with apex at the atom is removed
and its two rays are identified; for ``w < 0`` the disk is slit along a ray
and a planar sector of angle ``|w|`` is glued into the slit.  The planar
coordinates of every face (in the frame of the piece it came from) are kept
on the returned :class:`Instance`; after construction the surface itself is
purely intrinsic.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay

from .errors import InvalidMesh
from .surface import ConeSurface, validate_surface


@dataclass
class Seam:
    """Two glued ray copies: crossing from ``src`` frame rotates by ``angle``."""

    apex: tuple
    angle: float


@dataclass
class Instance:
    surface: ConeSurface
    face_xy: np.ndarray
    atoms: list = field(default_factory=list)   # (vertex index, defect, (x, y))
    radius: float = 0.0
    center: tuple = (0.0, 0.0)
    piece: np.ndarray = None       # 0 for the main disk, k + 1 for the sector glued at atom k
    seam_angles: list = field(default_factory=list)

    def atom_vertex(self, k):
        return self.atoms[k][0]

    def planar_direction(self, face, local_angle):
        """Direction of a local tangent angle in the planar frame of its piece."""
        s = self.surface
        P = s.layout[face]
        Q = self.face_xy[face]
        a_loc = math.atan2(P[1][1] - P[0][1], P[1][0] - P[0][0])
        a_pl = math.atan2(Q[1][1] - Q[0][1], Q[1][0] - Q[0][0])
        return local_angle - a_loc + a_pl

    def planar_point(self, p):
        Q = self.face_xy[p.face]
        return tuple(float(sum(p.bary[k] * Q[k][j] for k in range(3))) for j in range(2))

    def cone_polar(self, p, k=0):
        """Polar coordinates ``(r, phi)`` about atom ``k`` measured in its cone.

        ``phi`` runs over ``[0, 2 pi - w)`` starting at the glued seam; only
        meaningful when the seam of atom ``k`` is the only one the point
        relation crosses (single-atom instances).
        """
        _v, w, (ax, ay) = self.atoms[k]
        x, y = self.planar_point(p)
        r = math.hypot(x - ax, y - ay)
        a = math.atan2(y - ay, x - ax)
        th = self.seam_angles[k]
        if w > 0:
            return r, (a - (th + w / 2.0)) % (2 * math.pi)
        rel = (a - th) % (2 * math.pi)
        if self.piece[p.face] == k + 1:
            return r, 2 * math.pi + rel
        return r, rel


def _spacing(d, h0, grow, hmax):
    return min(hmax, h0 * (1.0 + grow * d))


def _ray_distances(length, h0, grow, hmax):
    ds = [0.0]
    while True:
        step = _spacing(ds[-1], h0, grow, hmax)
        nxt = ds[-1] + step
        if nxt >= length - 0.3 * step:
            break
        ds.append(nxt)
    if length - ds[-1] < 0.45 * _spacing(ds[-1], h0, grow, hmax) and len(ds) > 1:
        ds.pop()
    ds.append(length)
    return ds


def _circle_exit(p, theta, R, center):
    """Distance from ``p`` along direction ``theta`` to the circle."""
    dx, dy = math.cos(theta), math.sin(theta)
    ox, oy = p[0] - center[0], p[1] - center[1]
    b = ox * dx + oy * dy
    c = ox * ox + oy * oy - R * R
    return -b + math.sqrt(b * b - c)


def _seg_intersect(p1, p2, q1, q2):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def _greedy_fill(candidates, fixed, spacing_fn, reject_fn, cell):
    """Greedy blue-noise thinning of ``candidates`` around ``fixed`` points."""
    grid = {}
    pts = []

    def key(x, y):
        return (int(math.floor(x / cell)), int(math.floor(y / cell)))

    def add(x, y):
        grid.setdefault(key(x, y), []).append((x, y))

    def clear(x, y, r):
        kx, ky = key(x, y)
        reach = int(math.ceil(r / cell))
        r2 = r * r
        for i in range(kx - reach, kx + reach + 1):
            for j in range(ky - reach, ky + reach + 1):
                for (a, b) in grid.get((i, j), ()):
                    if (a - x) ** 2 + (b - y) ** 2 < r2:
                        return False
        return True

    for x, y in fixed:
        add(x, y)
    for x, y in candidates:
        if reject_fn(x, y):
            continue
        if clear(x, y, 0.85 * spacing_fn(x, y)):
            add(x, y)
            pts.append((x, y))
    return pts


def _hex_candidates(center, R, h0, rng, jitter=0.15):
    dy = h0 * math.sqrt(3) / 2
    out = []
    ny = int(R / dy) + 1
    nx = int(R / h0) + 1
    for j in range(-ny, ny + 1):
        for i in range(-nx, nx + 1):
            x = center[0] + (i + 0.5 * (j % 2)) * h0
            y = center[1] + j * dy
            if rng is not None:
                x += rng.uniform(-jitter, jitter) * h0
                y += rng.uniform(-jitter, jitter) * h0
            out.append((x, y))
    return out


class _Piece:
    """A planar point set with triangle filter and ray bookkeeping."""

    def __init__(self):
        self.points = []
        self.rays = {}       # name -> list of point indices ordered by distance from apex

    def add(self, xy):
        self.points.append((float(xy[0]), float(xy[1])))
        return len(self.points) - 1


def _triangulate(points, keep_fn):
    P = np.asarray(points, dtype=float)
    tri = Delaunay(P, qhull_options="QJ Pp" if False else "Qbb Qc Qz")
    out = []
    for a, b, c in tri.simplices:
        A, B, C = P[a], P[b], P[c]
        area = (B[0] - A[0]) * (C[1] - A[1]) - (B[1] - A[1]) * (C[0] - A[0])
        if abs(area) < 1e-14:
            continue
        if area < 0:
            b, c = c, b
        cen = (P[a] + P[b] + P[c]) / 3.0
        if keep_fn(cen[0], cen[1]):
            out.append((int(a), int(b), int(c)))
    return out


def _check_ray_edges(faces, ray):
    edges = set()
    for a, b, c in faces:
        for u, v in ((a, b), (b, c), (c, a)):
            edges.add((min(u, v), max(u, v)))
    for u, v in zip(ray[:-1], ray[1:]):
        if (min(u, v), max(u, v)) not in edges:
            raise ValueError("seam ray is not resolved by the triangulation")


def cone_disk(atoms=(), radius=10.0, h0=0.45, grow=0.18, hmax=1.6, margin_width=0.0,
              seed=0, directions=None, center=None):
    """Planar-disk surface with cone points ``atoms = [(x, y, defect), ...]``.

    Wedges and slits run from each atom radially away from the atom
    centroid (or along ``directions`` when given).
    """
    rng = np.random.default_rng(seed)
    atoms = [(float(x), float(y), float(w)) for x, y, w in atoms]
    if center is None:
        center = (float(np.mean([a[0] for a in atoms])), float(np.mean([a[1] for a in atoms]))) if atoms else (0.0, 0.0)
    cx, cy = center
    R = float(radius)

    # seam geometry -----------------------------------------------------
    specs = []
    for i, (x, y, w) in enumerate(atoms):
        if directions is not None:
            th = float(directions[i])
        else:
            dx, dy = x - cx, y - cy
            th = math.atan2(dy, dx) if math.hypot(dx, dy) > 1e-6 else 0.3 + 2.1 * i
        if w > 0:
            if w >= 2 * math.pi - 0.4:
                raise ValueError("positive defects above 2*pi - 0.4 are not generated")
            angs = (th - w / 2.0, th + w / 2.0)
        else:
            angs = (th,)
        rays = []
        for a in angs:
            L = _circle_exit((x, y), a, R, center)
            rays.append((a, L))
        specs.append(dict(p=(x, y), w=w, theta=th, rays=rays))

    segs = []
    for i, sp in enumerate(specs):
        for a, L in sp["rays"]:
            segs.append((i, sp["p"], (sp["p"][0] + L * math.cos(a), sp["p"][1] + L * math.sin(a))))
    for i in range(len(segs)):
        for j in range(i + 1, len(segs)):
            if segs[i][0] != segs[j][0] and _seg_intersect(segs[i][1], segs[i][2], segs[j][1], segs[j][2]):
                raise ValueError("seams of different atoms intersect")
    for i, sp in enumerate(specs):
        for j, (x, y, _w) in enumerate(atoms):
            if i != j and _in_wedge(sp, (x, y), pad=h0):
                raise ValueError("an atom lies inside another atom's wedge")
            if i != j and math.hypot(x - sp["p"][0], y - sp["p"][1]) < 2 * h0:
                raise ValueError("atoms too close")
        if math.hypot(sp["p"][0] - cx, sp["p"][1] - cy) > R - 2 * h0:
            raise ValueError("atom outside the disk")

    def spacing_at(x, y):
        d = min((math.hypot(x - a[0], y - a[1]) for a in atoms), default=math.hypot(x - cx, y - cy))
        return _spacing(d, h0, grow, hmax)

    # main piece --------------------------------------------------------
    main = _Piece()
    fixed = []
    ray_lines = []   # (p, angle, length) for clearance
    for i, sp in enumerate(specs):
        p = sp["p"]
        apex = main.add(p)
        fixed.append(p)
        sp["apex"] = apex
        if sp["w"] > 0:
            (a1, L1), (a2, L2) = sp["rays"]
            Lmin = min(L1, L2)
            ds = _ray_distances(Lmin, h0, grow, hmax)
            sp["ds"] = ds
            for name, (a, L) in (("lo", (a1, L1)), ("hi", (a2, L2))):
                idx = [apex]
                dd = list(ds[1:])
                if L > Lmin + 1e-9:
                    extra = _ray_distances(L - Lmin, _spacing(Lmin, h0, grow, hmax), 0.0, hmax)
                    dd += [Lmin + e for e in extra[1:]]
                for d in dd:
                    q = (p[0] + d * math.cos(a), p[1] + d * math.sin(a))
                    idx.append(main.add(q))
                    fixed.append(q)
                main.rays[(i, name)] = idx
                ray_lines.append((p, a, L))
        else:
            (a, L), = sp["rays"]
            ds = _ray_distances(L, h0, grow, hmax)
            sp["ds"] = ds
            idx = [apex]
            for d in ds[1:]:
                q = (p[0] + d * math.cos(a), p[1] + d * math.sin(a))
                idx.append(main.add(q))
                fixed.append(q)
            main.rays[(i, "slit")] = idx
            ray_lines.append((p, a, L))

    def in_removed(x, y):
        return any(sp["w"] > 0 and _in_wedge(sp, (x, y)) for sp in specs)

    # a narrow remaining cone gets radial spokes so no triangle joins two glued copies
    for i, sp in enumerate(specs):
        rem = 2 * math.pi - sp["w"]
        if sp["w"] <= 0:
            continue
        p = sp["p"]
        a_hi = sp["rays"][1][0]
        m = max(3, int(math.ceil(rem / 0.7)))
        own = set()
        for name in ("lo", "hi"):
            own.update(main.points[v] for v in main.rays[(i, name)])
        for j in range(1, m):
            a = a_hi + j * rem / m
            for k, d in enumerate(sp["ds"][1:], start=1):
                q = (p[0] + d * math.cos(a), p[1] + d * math.sin(a))
                hq = _spacing(d, h0, grow, hmax)
                if k > 3 and 2 * d * math.sin(min(rem, math.pi) / 2) > 3 * hq:
                    break
                if (q[0] - cx) ** 2 + (q[1] - cy) ** 2 > (R - 0.6 * hq) ** 2:
                    break
                if in_removed(*q) or any(math.hypot(q[0] - f[0], q[1] - f[1]) < 0.5 * hq
                                         for f in fixed if f not in own):
                    continue
                clash = False
                for (pp, aa, LL) in ray_lines:
                    if pp == p:
                        continue
                    dx, dy = q[0] - pp[0], q[1] - pp[1]
                    along = dx * math.cos(aa) + dy * math.sin(aa)
                    if -0.6 * h0 <= along <= LL + 0.6 * h0 and \
                            abs(-dx * math.sin(aa) + dy * math.cos(aa)) < 0.6 * _spacing(max(along, 0.0), h0, grow, hmax):
                        clash = True
                        break
                if not clash:
                    main.add(q)
                    fixed.append(q)
                    own.add(q)

    # boundary circle
    t = 0.0
    circle_pts = []
    while t < 2 * math.pi - 1e-9:
        q = (cx + R * math.cos(t), cy + R * math.sin(t))
        step = spacing_at(*q) / R
        if not in_removed(*q) and all(math.hypot(q[0] - f[0], q[1] - f[1]) > 0.5 * spacing_at(*q) for f in fixed):
            circle_pts.append(q)
        t += step
    for q in circle_pts:
        main.add(q)
        fixed.append(q)

    def near_ray(x, y, extra=0.6):
        for p, a, L in ray_lines:
            dx, dy = x - p[0], y - p[1]
            along = dx * math.cos(a) + dy * math.sin(a)
            if -0.6 * h0 <= along <= L + 0.6 * h0:
                perp = abs(-dx * math.sin(a) + dy * math.cos(a))
                if perp < extra * _spacing(max(along, 0.0), h0, grow, hmax):
                    return True
        return False

    def reject_main(x, y):
        if (x - cx) ** 2 + (y - cy) ** 2 > (R - 0.5 * spacing_at(x, y)) ** 2:
            return True
        return in_removed(x, y) or near_ray(x, y)

    cands = _hex_candidates(center, R, h0, rng)
    cands.sort(key=lambda q: spacing_at(*q))
    for q in _greedy_fill(cands, fixed, spacing_at, reject_main, cell=h0):
        main.add(q)

    def keep_main(x, y):
        return (x - cx) ** 2 + (y - cy) ** 2 < R * R and not in_removed(x, y)

    main_faces = _triangulate(main.points, keep_main)
    for rk, ray in main.rays.items():
        _check_ray_edges(main_faces, ray)

    # assemble global vertex table ------------------------------------------
    coords = list(main.points)
    face_list = [(f, [main.points[v] for v in f], 0) for f in main_faces]
    parent = list(range(len(coords)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for i, sp in enumerate(specs):
        if sp["w"] > 0:
            lo, hi = main.rays[(i, "lo")], main.rays[(i, "hi")]
            n = len(sp["ds"])
            for k in range(1, n):
                union(lo[k], hi[k])
        else:
            slit = main.rays[(i, "slit")]
            p, a = sp["p"], sp["theta"]
            copies = {}
            for v in slit[1:]:
                coords.append(coords[v])
                parent.append(len(parent))
                copies[v] = len(coords) - 1
            new_faces = []
            for f, xy, pc in face_list:
                if any(v in copies for v in f):
                    cen = np.mean(xy, axis=0)
                    side = math.cos(a) * (cen[1] - p[1]) - math.sin(a) * (cen[0] - p[0])
                    if side > 0:
                        f = tuple(copies.get(v, v) for v in f)
                new_faces.append((f, xy, pc))
            face_list = new_faces
            # the inserted sector piece, in its own planar frame
            wabs = -sp["w"]
            ds = sp["ds"]
            L = ds[-1]
            sec = _Piece()
            sec_apex = sec.add(p)
            r0, r1 = [sec_apex], [sec_apex]
            sec_fixed = [p]
            for d in ds[1:]:
                q0 = (p[0] + d * math.cos(a), p[1] + d * math.sin(a))
                q1 = (p[0] + d * math.cos(a + wabs), p[1] + d * math.sin(a + wabs))
                r0.append(sec.add(q0))
                r1.append(sec.add(q1))
                sec_fixed += [q0, q1]
            tt = a
            arc = []
            while True:
                tt += _spacing(L, h0, grow, hmax) / L
                if tt >= a + wabs - 0.5 * _spacing(L, h0, grow, hmax) / L:
                    break
                arc.append((p[0] + L * math.cos(tt), p[1] + L * math.sin(tt)))
            for q in arc:
                sec.add(q)
                sec_fixed.append(q)

            def in_sector(x, y, p=p, a=a, wabs=wabs, L=L):
                dx, dy = x - p[0], y - p[1]
                r = math.hypot(dx, dy)
                ang = (math.atan2(dy, dx) - a) % (2 * math.pi)
                return r < L and 0.0 < ang < wabs

            def sec_spacing(x, y, p=p):
                return _spacing(math.hypot(x - p[0], y - p[1]), h0, grow, hmax)

            sec_rays = [(p, a, L), (p, a + wabs, L)]

            def reject_sec(x, y):
                if not in_sector(x, y):
                    return True
                dx, dy = x - p[0], y - p[1]
                if math.hypot(dx, dy) > L - 0.5 * sec_spacing(x, y):
                    return True
                for (pp, aa, LL) in sec_rays:
                    along = dx * math.cos(aa) + dy * math.sin(aa)
                    perp = abs(-dx * math.sin(aa) + dy * math.cos(aa))
                    if along > -0.6 * h0 and perp < 0.6 * _spacing(max(along, 0.0), h0, grow, hmax):
                        return True
                return False

            sc = _hex_candidates(p, L, h0, rng)
            sc.sort(key=lambda q: sec_spacing(*q))
            for q in _greedy_fill(sc, sec_fixed, sec_spacing, reject_sec, cell=h0):
                sec.add(q)
            sfaces = _triangulate(sec.points, lambda x, y: in_sector(x, y))
            _check_ray_edges(sfaces, r0)
            _check_ray_edges(sfaces, r1)
            offset = len(coords)
            coords.extend(sec.points)
            parent.extend(range(offset, offset + len(sec.points)))
            for f in sfaces:
                face_list.append((tuple(offset + v for v in f), [sec.points[v] for v in f], i + 1))
            union(offset + sec_apex, sp["apex"])
            for k in range(1, len(ds)):
                union(offset + r0[k], slit[k])
                union(offset + r1[k], copies[slit[k]])

    roots = sorted(set(find(v) for f, _, _ in face_list for v in f))
    relabel = {r: k for k, r in enumerate(roots)}
    faces = []
    face_xy = []
    lengths = []
    pieces = []
    for f, xy, pc in face_list:
        pieces.append(pc)
        ff = [relabel[find(v)] for v in f]
        faces.append(ff)
        face_xy.append(xy)
        A, B, C = (np.asarray(q) for q in xy)
        lengths.append([float(np.linalg.norm(B - A)), float(np.linalg.norm(C - B)), float(np.linalg.norm(A - C))])
    directed = set()
    for a, b, c in faces:
        directed.update({(a, b), (b, c), (c, a)})
    flags = [False] * len(roots)
    for u, v in directed:
        if (v, u) not in directed:
            flags[u] = flags[v] = True
    s = ConeSurface(range(len(roots)), flags, faces, lengths, margin_width)
    try:
        validate_surface(s, check_margin=margin_width > 0)
    except InvalidMesh as e:
        raise ValueError(f"generated mesh rejected: {e}") from None
    atom_list = [(relabel[find(sp["apex"])], sp["w"], sp["p"]) for sp in specs]
    return Instance(s, np.asarray(face_xy, dtype=float), atom_list, R, center, np.asarray(pieces),
                    [sp["theta"] for sp in specs])


def _in_wedge(sp, q, pad=0.0):
    if sp["w"] <= 0:
        return False
    p = sp["p"]
    dx, dy = q[0] - p[0], q[1] - p[1]
    r = math.hypot(dx, dy)
    if r < 1e-12:
        return False
    ang = (math.atan2(dy, dx) - sp["rays"][0][0]) % (2 * math.pi)
    lim = sp["w"]
    if pad > 0:
        da = math.asin(min(1.0, pad / r))
        return -da <= ang <= lim + da or ang >= 2 * math.pi - da
    return 0.0 < ang < lim


def flat_disk(radius=8.0, h0=0.8, seed=0, margin_width=0.0):
    """Flat triangulated disk (no cone points)."""
    return cone_disk((), radius=radius, h0=h0, grow=0.0, hmax=h0, seed=seed, margin_width=margin_width)


def square_grid(n=8, size=1.0):
    """Regular triangulation of an ``n x n`` square of cells, flat."""
    ids = []
    flags = []
    for j in range(n + 1):
        for i in range(n + 1):
            ids.append(j * (n + 1) + i)
            flags.append(i in (0, n) or j in (0, n))
    faces, lengths, face_xy = [], [], []
    d = math.hypot(size, size)
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            b, c, e = a + 1, a + n + 2, a + n + 1
            faces += [[a, b, c], [a, c, e]]
            lengths += [[size, size, d], [d, size, size]]
            x, y = i * size, j * size
            face_xy += [[(x, y), (x + size, y), (x + size, y + size)],
                        [(x, y), (x + size, y + size), (x, y + size)]]
    s = ConeSurface(ids, flags, faces, lengths, 0.0)
    validate_surface(s)
    return Instance(s, np.asarray(face_xy, dtype=float), [], n * size / 2.0, (n * size / 2.0,) * 2,
                    np.zeros(len(faces), dtype=int))


def random_instance(seed, eps, n_atoms=None, spread=3.2, radius=11.0, h0=0.5, **kw):
    """Random cone surface with 2-8 atoms satisfying ``w+ , w- < 2 pi - 4 eps``."""
    rng = np.random.default_rng(seed)
    budget = 2 * math.pi - 4 * eps - 0.05
    for attempt in range(200):
        n = int(n_atoms) if n_atoms is not None else int(rng.integers(2, 9))
        pts = []
        while len(pts) < n:
            r = spread * math.sqrt(rng.uniform())
            t = rng.uniform(0, 2 * math.pi)
            q = (r * math.cos(t), r * math.sin(t))
            if all(math.hypot(q[0] - a[0], q[1] - a[1]) > 1.3 for a in pts):
                pts.append(q)
            if len(pts) < n and rng.uniform() < 0.002:
                pts = []
        ws = []
        for _ in range(n):
            sign = 1.0 if rng.uniform() < 0.5 else -1.0
            ws.append(sign * rng.uniform(0.15, 1.6))
        pos = sum(w for w in ws if w > 0)
        neg = -sum(w for w in ws if w < 0)
        if pos > budget or neg > budget:
            continue
        try:
            return cone_disk([(x, y, w) for (x, y), w in zip(pts, ws)], radius=radius, h0=h0,
                             seed=int(rng.integers(1 << 30)), **kw)
        except ValueError:
            continue
    raise RuntimeError("could not generate a random instance")

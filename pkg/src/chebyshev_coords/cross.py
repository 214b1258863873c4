"""Crosses: a line and two rays cutting a disk into four sectors.

The sectors must satisfy ``w+(Q) <= alpha - eps`` and ``w-(Q) <= pi - alpha - eps``
where ``alpha`` is the sector angle.  The search runs in two steps.  First
a line splitting the curvature roughly in half is found.  Then, in each
half-plane, a ray leaving the line is chosen.  The angle function, the
normalized measures and the map ``phi`` are implemented alongside, together
with a winding number for loops of tangent vectors.
"""

import math
from dataclasses import dataclass, field

from .distance import graph_distances
from .errors import (DegenerateTangency, IncompleteDomain, OverlapDetected, PreconditionViolated,
                     RefinementExhausted, SearchExhausted, ZeroOnLoop)
from .geodesic import (BOUNDARY, Intersection, _seg_cross, chord_arc_check, intersect_traces,
                       trace_geodesic, trace_line, turn_along_curve)
from .sides import LEFT, ON, RIGHT, Curve, _loop_data
from .surface import TWO_PI, SurfacePoint, TangentVector, atom_vertices, curvature_totals

HALF_PI = 0.5 * math.pi

STRIP = "Strip"
HALF_PLANE = "HalfPlane"
SECTOR = "Sector"
BIANGLE = "Biangle"
COMPLEMENT = "BiangleComplement"

_T_TOL = 1e-9


def _reach(s):
    """A length no straightest line inside the disk can exceed: the boundary perimeter."""
    r = getattr(s, "_reach_cache", None)
    if r is None:
        loop, _, _ = _loop_data(s)
        r = float(sum(s.lengths[f][k] for f, k in loop))
        s._reach_cache = r
    return r


def is_simple(s, trace):
    """False if the trace meets itself, through a face or through a vertex."""
    seen = set()
    for h in trace.vertex_hits:
        if h.vertex in seen:
            return False
        seen.add(h.vertex)
    by_face = {}
    for i, sg in enumerate(trace.segments):
        by_face.setdefault(sg.face, []).append((i, sg))
    for segs in by_face.values():
        for a in range(len(segs)):
            for b in range(a + 1, len(segs)):
                i, sa = segs[a]
                j, sb = segs[b]
                if j == i + 1:
                    continue
                try:
                    if _seg_cross(s, sa, sb, 1e-12) is not None:
                        return False
                except OverlapDetected:
                    return False
    return True


@dataclass
class Region:
    """``U(v)``: the part of the half-plane on the side ``v`` points to."""

    kind: str
    atoms: dict                     # atom vertex index -> share of the atom inside
    corners: list
    ref: float = 0.0                # share of the reference point inside
    crossings: tuple = ()           # gamma1 parameters of the corners
    sigma: object = None
    clean: bool = True

    def atom_ids(self, s):
        return sorted(s.ids[v] for v, w in self.atoms.items() if w > 0)


@dataclass
class PhiValue:
    x: float
    y: float

    def __iter__(self):
        return iter((self.x, self.y))

    @property
    def norm(self):
        return math.hypot(self.x, self.y)


@dataclass
class LineVector:
    """Tangent vector based at ``gamma1(t)``, at angle ``psi`` from the line's forward direction."""

    t: float
    psi: float


def biangle_alpha(a1, a2):
    """Angle function of a biangle with corner angles ``a1``, ``a2``."""
    a1, a2 = max(a1, a2), min(a1, a2)
    if a1 < HALF_PI:
        tot = a1 + a2
        return (a1 * a1 + a2 * a2) / tot if tot > 0 else 0.0
    return (math.pi ** 2 / 4 + a2 * a2) / (HALF_PI + a2) + a1 - HALF_PI


def angle_function(region):
    k = region.kind
    if k == STRIP:
        return 0.0
    if k == HALF_PLANE:
        return math.pi
    if k == SECTOR:
        return region.corners[0]
    if k == BIANGLE:
        return biangle_alpha(*region.corners)
    if k == COMPLEMENT:
        return math.pi - biangle_alpha(*region.corners)
    raise ValueError(f"unknown region kind {k!r}")


def _in_interval(t, iv):
    lo, hi, inside = iv
    if abs(t - lo) < _T_TOL or abs(t - hi) < _T_TOL:
        return 0.5
    hit = lo < t < hi
    return 1.0 if hit == inside else 0.0


class HalfPlane:
    """The closed side to the left of ``gamma1`` together with its atoms.

    Atoms strictly left of the line count fully, atoms on it count half.
    """

    def __init__(self, s, gamma1, atoms=None):
        self.s = s
        self.g = gamma1
        self.curve = Curve(s, [gamma1])
        self.hit_t = {h.vertex: h.t for h in gamma1.vertex_hits}
        atoms = atom_vertices(s) if atoms is None else atoms
        self.weight = {}
        for v in atoms:
            sd = self.curve.side(v)
            if sd == LEFT:
                self.weight[v] = 1.0
            elif sd == ON:
                self.weight[v] = 0.5
        self.defect = {v: s.defect(v) for v in self.weight}
        self.pos = sum(w * max(self.defect[v], 0.0) for v, w in self.weight.items())
        self.neg = sum(w * max(-self.defect[v], 0.0) for v, w in self.weight.items())
        self.ref, self.outside = self._reference_vertices()

    def _reference_vertices(self):
        s = self.s
        near = set(self.curve.on)
        for sg in self.g.segments:
            near.update(s.fverts[sg.face])
        near.update(v for v in range(s.n_vertices) if s.boundary_flags[v])
        dist = graph_distances(s, sorted(near))
        best, ref, out = -1.0, None, None
        for v in range(s.n_vertices):
            if v in near or v in self.defect:
                continue
            sd = self.curve.side(v)
            if sd == LEFT and dist[v] > best:
                best, ref = dist[v], v
            elif sd == RIGHT and out is None:
                out = v
        if ref is None or out is None:
            raise DegenerateTangency("the line leaves no interior vertex on one side")
        return ref, out

    # measures ---------------------------------------------------------------

    def measures(self, region):
        """Raw ``(w+, w-)`` of a region, counting shares."""
        p = n = 0.0
        for v, f in region.atoms.items():
            c = f * self.weight[v] * self.defect[v]
            if c > 0:
                p += c
            else:
                n -= c
        return p, n

    def normalized(self, region, eps):
        """``(W+, W-)`` scaled so the whole half-plane carries ``pi - 2 eps``.

        When one sign carries no curvature at all, the reference point stands
        in for it as a unit mass.
        """
        k = math.pi - 2.0 * eps
        p, n = self.measures(region)
        wp = k * p / self.pos if self.pos > 0 else k * region.ref
        wn = k * n / self.neg if self.neg > 0 else k * region.ref
        return wp, wn

    # geometry helpers ---------------------------------------------------------

    def _corner(self, sig, inter, leaving):
        """Angle of the region left of ``sig`` at a crossing with the line."""
        if inter.vertex is None:
            a = inter.angle - math.pi if leaving else math.pi - inter.angle
            return a, 0.0 < a < math.pi
        ha = self.g.vertex_at_param(inter.ta)
        hb = sig.vertex_at_param(inter.tb)
        th = self.s.angle_sum[inter.vertex]
        if leaving:
            a = (hb.phi_in - ha.phi_out) % th
        else:
            a = (ha.phi_in - hb.phi_out) % th
        return a, False

    def _share(self, v, sig_hits, curve, iv, closed_inside=None):
        if v in sig_hits:
            return 0.5
        t = self.hit_t.get(v)
        if t is not None:
            return _in_interval(t, iv)
        sd = curve.side(v)
        if sd == ON:
            return 0.5
        if closed_inside is None:
            return 1.0 if sd == LEFT else 0.0
        return 1.0 if (sd == LEFT) == closed_inside else 0.0

    def _build(self, sig, lo, hi):
        """Region left of ``sig`` (its part inside the half-plane).

        ``lo``/``hi`` are the crossings with the line at the start and end of
        ``sig`` (``None`` where ``sig`` runs into the mesh boundary instead).
        """
        g = self.g
        sig_hits = {h.vertex for h in sig.vertex_hits
                    if sig.t_min - 1e-12 <= h.t <= sig.t_max + 1e-12}
        inf = math.inf
        clean = True
        closed_inside = None
        if lo is None and hi is None:
            curve = Curve(self.s, [sig])
            strip = curve.side(self.outside) == LEFT
            kind = STRIP if strip else HALF_PLANE
            iv = (-inf, inf, strip)
            corners, xs = [], ()
        elif lo is None or hi is None:
            inter = hi if lo is None else lo
            a, clean = self._corner(sig, inter, lo is None)
            if lo is None:
                curve = Curve(self.s, [sig, g.sliced(g.t_min, inter.ta).reversed()])
                iv = (inter.ta, inf, True)
            else:
                curve = Curve(self.s, [g.sliced(g.t_min, inter.ta), sig])
                iv = (-inf, inter.ta, True)
            kind, corners, xs = SECTOR, [a], (inter.ta,)
        else:
            a1, c1 = self._corner(sig, lo, False)
            a2, c2 = self._corner(sig, hi, True)
            clean = c1 and c2
            t1, t2 = lo.ta, hi.ta
            curve = Curve(self.s, [sig, g.sliced(min(t1, t2), max(t1, t2))], closed=True)
            inside = t1 > t2
            closed_inside = inside
            iv = (min(t1, t2), max(t1, t2), inside)
            if inside:
                kind, corners = BIANGLE, [a1, a2]
            else:
                kind = COMPLEMENT
                corners = [self._side_angle(lo) - a1, self._side_angle(hi) - a2]
            xs = (t1, t2)
        shares = {v: self._share(v, sig_hits, curve, iv, closed_inside) for v in self.weight}
        ref = self._share(self.ref, sig_hits, curve, iv, closed_inside)
        return Region(kind, shares, corners, ref, xs, sig, clean)

    def _side_angle(self, inter):
        if inter.vertex is None:
            return math.pi
        return 0.5 * self.s.angle_sum[inter.vertex]

    # classification ----------------------------------------------------------

    def line_state(self, t):
        """``(point, face, local forward angle)`` of the line at ``t``."""
        f, x, y, a = self.g.local_at(t)
        return self.g.point_at(self.s, t), f, a

    def classify_at(self, t, psi):
        """Classify ``U(v)`` for ``v`` based on the line at ``t`` (not a vertex)."""
        s, g = self.s, self.g
        if g.vertex_at_param(t, tol=1e-9) is not None:
            raise DegenerateTangency("base point is a vertex of the line")
        rel = (psi - HALF_PI) % TWO_PI          # sigma direction measured from the line
        if min(rel, TWO_PI - rel) < 1e-12:
            return Region(HALF_PLANE, {v: 1.0 for v in self.weight}, [], 1.0, (), None, True)
        if abs(rel - math.pi) < 1e-12:
            return Region(STRIP, {v: 0.0 for v in self.weight}, [], 0.0, (), None, True)
        p, f, a = self.line_state(t)
        forward = rel < math.pi
        ray_dir = a + (rel if forward else rel - math.pi)
        ray = trace_geodesic(s, TangentVector(p, ray_dir), _reach(s))
        if ray.terminal != BOUNDARY:
            raise IncompleteDomain("ray did not reach the boundary")
        again = [r for r in intersect_traces(s, g, ray) if r.tb > _T_TOL]
        x2 = min(again, key=lambda r: r.tb) if again else None
        if forward:
            sig = ray.sliced(0.0, x2.tb) if x2 else ray
            lo = Intersection(t, 0.0, rel)
            hi = x2
        else:
            sig = (ray.sliced(0.0, x2.tb) if x2 else ray).reversed()
            hi = Intersection(t, 0.0, rel)
            lo = None
            if x2 is not None:
                hb = x2.tb
                lo = Intersection(x2.ta, -hb, (x2.angle + math.pi) % TWO_PI, x2.vertex)
        return self._build(sig, lo, hi)

    def classify(self, v):
        """Classify ``U(v)`` for ``v`` based strictly inside the half-plane."""
        s, g = self.s, self.g
        if self.curve.point_side(v.base) != LEFT:
            raise DegenerateTangency("base point is not inside the half-plane")
        sigma = trace_line(s, TangentVector(v.base, v.direction - HALF_PI), _reach(s))
        if sigma.terminal != BOUNDARY or (sigma.terminal_back or BOUNDARY) != BOUNDARY:
            raise IncompleteDomain("sigma did not reach the boundary")
        xs = intersect_traces(s, g, sigma)
        pos = [r for r in xs if r.tb > _T_TOL]
        neg = [r for r in xs if r.tb < -_T_TOL]
        if len(pos) + len(neg) < len(xs):
            raise DegenerateTangency("sigma meets the line at its base point")
        hi = min(pos, key=lambda r: r.tb) if pos else None
        lo = max(neg, key=lambda r: r.tb) if neg else None
        a = lo.tb if lo else sigma.t_min
        b = hi.tb if hi else sigma.t_max
        return self._build(sigma.sliced(a, b), lo, hi)

    def region(self, v):
        if isinstance(v, LineVector):
            return self.classify_at(v.t, v.psi)
        return self.classify(v)


def classify_region(s, halfplane, v):
    return halfplane.region(v)


def phi_map(s, halfplane, v, eps):
    """``phi(v) = (W+(U) - alpha + eps, W-(U) - (pi - alpha) + eps)``."""
    region = halfplane.region(v)
    alpha = angle_function(region)
    wp, wn = halfplane.normalized(region, eps)
    return PhiValue(wp - alpha + eps, wn - (math.pi - alpha) + eps)


# loops ------------------------------------------------------------------------

def rotation_loop(t, n=720):
    """Loop turning ``v`` once around ``gamma1(t)``, starting at the inward normal."""
    return [LineVector(t, HALF_PI + TWO_PI * k / n) for k in range(n)]


def _rotation_fn(t):
    return lambda u: LineVector(t, HALF_PI + TWO_PI * u)


def boundary_loop(s, halfplane, n=720, inset=1e-6):
    """Inward normals along the boundary of the closed half-plane.

    The walk runs along the line, then back along the mesh boundary.
    """
    g = halfplane.g
    m_line = max(2, n // 2)
    lo, hi = g.t_min, g.t_max
    hits = [h.t for h in g.vertex_hits]
    out = []
    for k in range(m_line):
        t = lo + (hi - lo) * (k + 0.5) / m_line
        while any(abs(t - ht) < 1e-6 for ht in hits):
            t += 1e-5
        out.append(LineVector(t, HALF_PI))
    loop, _, _ = _loop_data(s)
    curve = halfplane.curve
    arc = []
    for f, k in loop:
        vs = s.fverts[f]
        if curve.side(vs[k]) == LEFT and curve.side(vs[(k + 1) % 3]) == LEFT:
            arc.append((f, k))
    if arc:
        exit_pos = curve._left_arc[0]
        idx = {he: i for i, he in enumerate(loop)}
        N = len(loop)
        arc.sort(key=lambda he: (idx[he] - exit_pos) % N)
        per = max(1, (n - m_line) // len(arc))
        for f, k in arc:
            P = s.layout[f]
            A, B = P[k], P[(k + 1) % 3]
            ang = math.atan2(B[1] - A[1], B[0] - A[0])
            nx, ny = -math.sin(ang), math.cos(ang)
            for j in range(per):
                u = (j + 0.5) / per
                x = A[0] + u * (B[0] - A[0]) + inset * nx
                y = A[1] + u * (B[1] - A[1]) + inset * ny
                out.append(TangentVector(s.point_from_local(f, x, y), ang + HALF_PI))
    return out


def _angle_between(p, q):
    return math.atan2(p.x * q.y - p.y * q.x, p.x * q.x + p.y * q.y)


def winding_certificate(s, halfplane, loop, eps, max_depth=12, zero_tol=1e-9):
    """Winding number of ``phi`` along a closed loop about the origin.

    ``loop`` is a list of samples or a callable ``u -> sample`` on ``[0, 1)``.
    With a callable, arcs whose images subtend more than ``pi/2`` are
    bisected; an arc still too wide after ``max_depth`` halvings is a jump
    of the piecewise constant measures and is closed by a straight chord.
    """
    if callable(loop):
        fn = loop
        n0 = 64
        us = [k / n0 for k in range(n0)]
    else:
        fn = None
        us = list(range(len(loop)))
    cache = {}

    def val(u):
        if u not in cache:
            v = fn(u) if fn else loop[u]
            ph = phi_map(s, halfplane, v, eps)
            if ph.norm <= zero_tol:
                raise ZeroOnLoop("phi vanishes on the loop", index=u)
            cache[u] = ph
        return cache[u]

    total = 0.0
    n = len(us)
    for i in range(n):
        a = us[i]
        b = us[(i + 1) % n] if i + 1 < n else (1.0 if fn else us[0])
        stack = [(a, b, 0)]
        while stack:
            x, y, depth = stack.pop()
            pa = val(x % 1.0 if fn else x)
            pb = val(y % 1.0 if fn else y)
            d = _angle_between(pa, pb)
            if abs(d) > HALF_PI and fn and depth < max_depth:
                m = 0.5 * (x + y)
                stack.append((m, y, depth + 1))
                stack.append((x, m, depth + 1))
                continue
            if abs(abs(d) - math.pi) < 1e-9:
                raise RefinementExhausted("a jump of phi passes through the origin")
            total += d
    w = total / TWO_PI
    r = round(w)
    if abs(w - r) > 1e-6:
        raise RefinementExhausted("winding sum is not an integer")
    return int(r)


def rotation_certificate(s, halfplane, t, eps, max_depth=12):
    return winding_certificate(s, halfplane, _rotation_fn(t), eps, max_depth)


# step 1: the line ------------------------------------------------------------

def _side_totals(s, line, atoms):
    curve = Curve(s, [line])
    tot = [0.0, 0.0, 0.0, 0.0]          # left +, left -, right +, right -
    for v in atoms:
        d = s.defect(v)
        sd = curve.side(v)
        wl = 1.0 if sd == LEFT else 0.5 if sd == ON else 0.0
        j = 0 if d > 0 else 1
        tot[j] += wl * abs(d)
        tot[2 + j] += (1.0 - wl) * abs(d)
    return tot


def _base_vertices(s, atoms):
    """Deterministic list of interior vertices to try as line base points."""
    interior = [v for v in range(s.n_vertices) if not s.boundary_flags[v]]
    bnd = [v for v in range(s.n_vertices) if s.boundary_flags[v]]
    db = graph_distances(s, bnd)
    if not atoms:
        return [max(interior, key=lambda v: (db[v], -v))]
    ds = [graph_distances(s, [a]) for a in atoms]
    center = min(interior, key=lambda v: (max(d[v] for d in ds), v))
    out = [center]
    for i in range(len(atoms)):
        for j in range(i + 1, len(atoms)):
            mid = min(interior, key=lambda v: (max(ds[i][v], ds[j][v]), v))
            out.append(mid)
    out.extend(atoms)
    ring = sorted(interior, key=lambda v: (sum(abs(s.defect(a)) * ds[k][v]
                                               for k, a in enumerate(atoms)), v))
    out.extend(ring[:40])
    seen, uniq = set(), []
    for v in out:
        if v not in seen:
            seen.add(v)
            uniq.append(v)
    return uniq


def _check_precondition(s, eps):
    if not 0 < eps < math.pi / 4:
        raise PreconditionViolated("eps must lie in (0, pi/4)")
    cm = curvature_totals(s)
    lim = TWO_PI - 4 * eps
    if not (cm.total_pos < lim and cm.total_neg < lim):
        raise PreconditionViolated(
            f"curvature totals ({cm.total_pos:.6g}, {cm.total_neg:.6g}) not below 2pi - 4eps = {lim:.6g}")


def find_bisecting_geodesic(s, eps, budget=600, directions=18, chord_samples=100,
                           min_bases=6, good=0.25):
    """A line whose sides each carry less than ``pi - 2 eps`` of either sign.

    Candidates are lines through a list of base vertices at evenly spaced
    angles.  After ``min_bases`` base vertices the best line so far is taken
    once its score (the smallest margin to ``pi - 2 eps``) reaches
    ``good * (pi - 2 eps)``; otherwise the search continues up to ``budget``.
    """
    _check_precondition(s, eps)
    atoms = atom_vertices(s)
    lim = math.pi - 2 * eps
    tried = 0
    pool = []
    rejected = set()

    def pick(threshold):
        for score, key, b, line, tot in sorted(pool, key=lambda r: (-r[0], r[1])):
            if score < threshold:
                return None
            if key in rejected:
                continue
            rep = chord_arc_check(s, line, eps, samples=chord_samples, exact=False)
            if rep.passed:
                line.meta.update({"score": score, "sides": tot, "chord": rep.as_dict(),
                                  "base": s.ids[b], "tried": tried})
                return line
            rejected.add(key)
        return None

    for nb, b in enumerate(_base_vertices(s, atoms)):
        th = s.angle_sum[b]
        for k in range(directions):
            if tried >= budget:
                break
            tried += 1
            phi = 0.5 * th * k / directions
            line = trace_line(s, s.vertex_tangent(b, phi), _reach(s))
            if line.terminal != BOUNDARY or (line.terminal_back or BOUNDARY) != BOUNDARY:
                continue
            if not is_simple(s, line):
                continue
            tot = _side_totals(s, line, atoms)
            pool.append((lim - max(tot), (nb, k), b, line, tot))
        if nb + 1 >= min_bases:
            found = pick(good * lim)
            if found is not None:
                return found
        if tried >= budget:
            break
    found = pick(1e-12)
    if found is not None:
        return found
    best = max(pool, key=lambda r: r[0], default=None)
    raise SearchExhausted(f"no admissible line among {tried} candidates",
                          best=None if best is None else (best[0], best[4]))


# step 2: the rays --------------------------------------------------------------

@dataclass
class SectorRecord:
    index: int
    alpha: float
    atoms: dict                     # vertex index -> share
    omega_plus: float
    omega_minus: float
    turn_plus: float = 0.0          # positive boundary turn seen from inside the sector
    turn_minus: float = 0.0

    @property
    def slack_plus(self):
        return self.alpha - self.omega_plus

    @property
    def slack_minus(self):
        return math.pi - self.alpha - self.omega_minus

    def slack(self, eps):
        return min(self.slack_plus, self.slack_minus) - eps

    def as_dict(self, s, eps):
        return {
            "index": self.index, "alpha": self.alpha,
            "atoms": {str(s.ids[v]): w for v, w in sorted(self.atoms.items()) if w > 0},
            "omega_plus": self.omega_plus, "omega_minus": self.omega_minus,
            "turn_plus": self.turn_plus, "turn_minus": self.turn_minus,
            "slack": self.slack(eps),
        }


@dataclass
class HalfSplit:
    t: float
    beta: float
    ray: object
    q_fwd: Region
    q_back: Region
    slack: float


def _split(hp, t, beta, eps):
    """Ray from ``gamma1(t)`` at angle ``beta``; ``None`` if it does not make two sectors."""
    try:
        r1 = hp.classify_at(t, beta - HALF_PI)
    except (DegenerateTangency, IncompleteDomain, OverlapDetected):
        return None
    if r1.kind != SECTOR or not r1.clean:
        return None
    shares2 = {v: 1.0 - w for v, w in r1.atoms.items()}
    r2 = Region(SECTOR, shares2, [math.pi - beta], 1.0 - r1.ref, r1.crossings, r1.sigma, True)
    p1, n1 = hp.measures(r1)
    p2, n2 = hp.measures(r2)
    sl = min(beta - eps - p1, math.pi - beta - eps - n1,
             math.pi - beta - eps - p2, beta - eps - n2)
    ray = r1.sigma.reversed()
    return HalfSplit(t, beta, ray, r1, r2, sl)


def _scan_half(s, hp, eps, budget, chord_samples, passes=((15, 24), (41, 64))):
    g = hp.g
    span = g.t_max - g.t_min
    hits = [h.t for h in g.vertex_hits]
    tried = 0
    best = None
    rejected = set()
    for nt, nb in passes:
        lo, hi = g.t_min + 0.05 * span, g.t_max - 0.05 * span
        ts = [lo + (hi - lo) * (i + 0.5) / nt for i in range(nt)]
        ts.sort(key=lambda t: (abs(t), t))           # the line's base point first
        betas = [eps + (math.pi - 2 * eps) * (j + 0.5) / nb for j in range(nb)]
        for t in ts:
            if any(abs(t - ht) < 1e-6 for ht in hits):
                t += 1e-4
            cands = []
            for b in betas:
                if tried >= budget:
                    break
                tried += 1
                sp = _split(hp, t, b, eps)
                if sp is not None:
                    cands.append(sp)
            cands.sort(key=lambda c: (-c.slack, c.beta))
            for c in cands[:2]:
                if best is None or c.slack > best.slack:
                    best = c
                if c.slack < -0.05:
                    break
                c = _refine(hp, c, eps, dt=(hi - lo) / nt)
                if c.slack < -1e-9 or (c.t, c.beta) in rejected:
                    continue
                if not is_simple(s, c.ray):
                    rejected.add((c.t, c.beta))
                    continue
                rep = chord_arc_check(s, c.ray, eps, samples=chord_samples, exact=False)
                if rep.passed:
                    c.ray.meta["chord"] = rep.as_dict()
                    return c, tried
                rejected.add((c.t, c.beta))
            if tried >= budget:
                break
    raise SearchExhausted(f"no admissible ray among {tried} candidates",
                          best=None if best is None else (best.t, best.beta, best.slack))


def _refine(hp, c, eps, dt, steps=16):
    """Pattern search on ``(t, beta)`` keeping the best slack."""
    best = c
    hb = (math.pi - 2 * eps) / 48
    ht = 0.5 * dt
    for _ in range(steps):
        improved = False
        for t, b in ((best.t, best.beta - hb), (best.t, best.beta + hb),
                     (best.t - ht, best.beta), (best.t + ht, best.beta)):
            if not eps <= b <= math.pi - eps:
                continue
            sp = _split(hp, t, b, eps)
            if sp is not None and sp.slack > best.slack + 1e-12:
                best, improved = sp, True
        if not improved:
            hb *= 0.5
            ht *= 0.5
    return best


@dataclass
class CrossFigure:
    gamma1: object
    gamma2: object
    gamma3: object
    o2: float                       # gamma1 parameter where gamma2 starts
    o3: float
    sectors: list
    eps: float
    meta: dict = field(default_factory=dict)

    def min_slack(self):
        return min(q.slack(self.eps) for q in self.sectors)

    def as_dict(self, s):
        def trace_summary(tr):
            return {
                "t_min": tr.t_min, "t_max": tr.t_max, "terminal": tr.terminal,
                "vertex_hits": [[h.t, s.ids[h.vertex]] for h in tr.vertex_hits],
                "points": [[sg.face, list(sg.p0), list(sg.p1)] for sg in tr.segments],
            }
        return {
            "eps": self.eps, "o2": self.o2, "o3": self.o3,
            "gamma1": trace_summary(self.gamma1),
            "gamma2": trace_summary(self.gamma2),
            "gamma3": trace_summary(self.gamma3),
            "sectors": [q.as_dict(s, self.eps) for q in self.sectors],
            "min_slack": self.min_slack(),
            "meta": self.meta,
        }


def _turns(curves):
    """Sum positive and negative turns over ``(trace, lo, hi, side)`` pieces."""
    tp = tn = 0.0
    for tr, lo, hi, side in curves:
        tm = turn_along_curve(None, tr, lo, hi)
        if side == "left":
            tp += tm.pos_left
            tn += tm.neg_left
        else:
            tp += tm.pos_right
            tn += tm.neg_right
    return tp, tn


def _sector(hp, idx, region, alpha, curves):
    p, n = hp.measures(region)
    shares = {v: w * hp.weight[v] for v, w in region.atoms.items() if w > 0}
    tp, tn = _turns(curves)
    return SectorRecord(idx, alpha, shares, p, n, tp, tn)


def find_cross(s, eps, budget=2000, chord_samples=100, line=None):
    """Line plus two rays whose four sectors meet the curvature bounds."""
    _check_precondition(s, eps)
    if line is None:
        line = find_bisecting_geodesic(s, eps, budget=min(budget, 600), chord_samples=chord_samples)
    left = HalfPlane(s, line)
    right = HalfPlane(s, line.reversed())
    a, tried_a = _scan_half(s, left, eps, budget, chord_samples)
    b, tried_b = _scan_half(s, right, eps, budget, chord_samples)
    g, gr = line, right.g
    q1 = _sector(left, 1, a.q_fwd, a.beta,
                 [(g, a.t, g.t_max + 1, "left"), (a.ray, a.ray.t_min, a.ray.t_max + 1, "right")])
    q2 = _sector(left, 2, a.q_back, math.pi - a.beta,
                 [(g, g.t_min - 1, a.t, "left"), (a.ray, a.ray.t_min, a.ray.t_max + 1, "left")])
    q3 = _sector(right, 3, b.q_fwd, b.beta,
                 [(gr, b.t, gr.t_max + 1, "left"), (b.ray, b.ray.t_min, b.ray.t_max + 1, "right")])
    q4 = _sector(right, 4, b.q_back, math.pi - b.beta,
                 [(gr, gr.t_min - 1, b.t, "left"), (b.ray, b.ray.t_min, b.ray.t_max + 1, "left")])
    fig = CrossFigure(line, a.ray, b.ray, a.t, -b.t, [q1, q2, q3, q4], eps)
    fig.meta = {"rays_tried": [tried_a, tried_b], "line": {k: v for k, v in line.meta.items()
                                                           if k in ("score", "sides", "base")}}
    return fig

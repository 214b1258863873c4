"""Planar charts assembled from the four sector nets of a cross.

Two flattenings are offered.  ``"affine"`` sends node ``(i, j)`` of a sector
to ``i h e1 + j h e2`` where the angle between ``e1`` and ``e2`` is the
sector's corner angle, so a flat sector is reproduced isometrically.
``"straight"`` uses squares instead (the uv-straightening); its distortion
is controlled by the net angles alone.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .distance import distances
from .errors import GluingMismatch, PreconditionViolated
from .net import net_angle_bounds
from .surface import TWO_PI, curvature_totals

MODES = ("affine", "straight")


@dataclass
class SectorChart:
    index: int
    alpha: float
    window: tuple
    local: dict                     # (i, j) -> planar point before gluing
    points: dict = field(default_factory=dict)
    motion: tuple = (1.0, 0.0, 0.0, 0.0)
    surface: dict = field(default_factory=dict)
    cell_angles: dict = field(default_factory=dict)


@dataclass
class PlanarChart:
    mode: str
    h: float
    sectors: list
    origin_shift: float             # gamma1 parameter of the plane origin
    meta: dict = field(default_factory=dict)

    def nodes(self):
        """Distinct chart nodes as ``(xy, surface point)``; shared boundary nodes once."""
        seen = {}
        for sc in self.sectors:
            for ij, xy in sorted(sc.points.items()):
                key = (round(xy[0], 9) + 0.0, round(xy[1], 9) + 0.0)
                if key not in seen:
                    seen[key] = (xy, sc.surface[ij])
        return [seen[k] for k in sorted(seen)]

    def cell(self, k, i, j):
        """Corners A, B, C, D of cell ``(i, j)`` in sector ``k`` (numbered 1 to 4)."""
        P = self.sectors[k - 1].points
        return [P[(i - 1, j - 1)], P[(i, j - 1)], P[(i, j)], P[(i - 1, j)]]


def _frame(mode, alpha):
    if mode == "affine":
        return (1.0, 0.0), (math.cos(alpha), math.sin(alpha))
    if mode == "straight":
        return (1.0, 0.0), (0.0, 1.0)
    raise ValueError(f"unknown chart mode {mode!r}")


def local_positions(net, mode):
    e1, e2 = _frame(mode, net.alpha)
    h = net.h
    return {(i, j): (h * (i * e1[0] + j * e2[0]), h * (i * e1[1] + j * e2[1]))
            for (i, j) in net.nodes}


def _motion(p0, p1, q0, q1):
    """Rotation plus translation taking ``p0, p1`` to ``q0, q1``."""
    a = math.atan2(p1[1] - p0[1], p1[0] - p0[0])
    b = math.atan2(q1[1] - q0[1], q1[0] - q0[0])
    c, sn = math.cos(b - a), math.sin(b - a)
    tx = q0[0] - (c * p0[0] - sn * p0[1])
    ty = q0[1] - (sn * p0[0] + c * p0[1])
    return c, sn, tx, ty


def _move(M, p):
    c, sn, tx, ty = M
    return (c * p[0] - sn * p[1] + tx, sn * p[0] + c * p[1] + ty)


def glue(locals_, nets, cross, mode, tol=1e-6):
    """Place sector charts counterclockwise from sector 1 and check shared nodes."""
    h = nets[0].h
    d = cross.o3 - cross.o2
    on_axis = lambda t: (t - cross.o2, 0.0)       # noqa: E731  gamma1 as the x-axis
    charts = [SectorChart(n.index, n.alpha, n.window, loc) for n, loc in zip(nets, locals_)]
    s1, s2, s3, s4 = charts
    s1.motion = _motion(s1.local[(0, 0)], s1.local[(1, 0)], (0.0, 0.0), (h, 0.0))
    s1.points = {k: _move(s1.motion, p) for k, p in s1.local.items()}
    s2.motion = _motion(s2.local[(1, 0)], s2.local[(2, 0)], s1.points[(0, 1)], s1.points[(0, 2)])
    s2.points = {k: _move(s2.motion, p) for k, p in s2.local.items()}
    s3.motion = _motion(s3.local[(0, 0)], s3.local[(1, 0)], (d, 0.0), (d - h, 0.0))
    s3.points = {k: _move(s3.motion, p) for k, p in s3.local.items()}
    s4.motion = _motion(s4.local[(1, 0)], s4.local[(2, 0)], s3.points[(0, 1)], s3.points[(0, 2)])
    s4.points = {k: _move(s4.motion, p) for k, p in s4.local.items()}
    # shared boundary nodes
    worst = 0.0
    pairs = []
    for j in range(min(s1.window[1], s2.window[0]) + 1):
        pairs.append((s1.points[(0, j)], s2.points[(j, 0)]))
    for j in range(min(s3.window[1], s4.window[0]) + 1):
        pairs.append((s3.points[(0, j)], s4.points[(j, 0)]))
    for i in range(s1.window[0] + 1):
        pairs.append((s1.points[(i, 0)], on_axis(cross.o2 + i * h)))
    for j in range(s2.window[1] + 1):
        pairs.append((s2.points[(0, j)], on_axis(cross.o2 - j * h)))
    for i in range(s3.window[0] + 1):
        pairs.append((s3.points[(i, 0)], on_axis(cross.o3 - i * h)))
    for j in range(s4.window[1] + 1):
        pairs.append((s4.points[(0, j)], on_axis(cross.o3 + j * h)))
    for p, q in pairs:
        worst = max(worst, math.hypot(p[0] - q[0], p[1] - q[1]))
    if worst > tol:
        raise GluingMismatch(f"shared chart nodes disagree by {worst:.3g}")
    return charts, worst


def flatten_net(s, nets, cross, mode="affine", tol=1e-6):
    """Glue the four sector nets into one planar chart.

    The plane origin is the start of the left ray on the first trace, and
    sector 1's first boundary runs along the positive x-axis.
    """
    if len(nets) != 4:
        raise PreconditionViolated("need the four sector nets of a cross")
    hs = {n.h for n in nets}
    if len(hs) != 1:
        raise PreconditionViolated("sector nets use different steps")
    locals_ = [local_positions(n, mode) for n in nets]
    charts, worst = glue(locals_, nets, cross, mode, tol)
    for sc, n in zip(charts, nets):
        sc.surface = {ij: nd.point(s) for ij, nd in n.nodes.items()}
        sc.cell_angles = {ij: c.angles for ij, c in n.cells.items()}
    chart = PlanarChart(mode, nets[0].h, charts, cross.o2)
    chart.meta = {"gluing_residual": worst,
                  "delta": min(_delta(n) for n in nets)}
    return chart


def _delta(net):
    lo, hi = net_angle_bounds(net)
    return min(lo, math.pi - hi)


def straighten(s, nets, cross, tol=1e-6):
    """The uv-straightening: every cell becomes an h-by-h square."""
    return flatten_net(s, nets, cross, mode="straight", tol=tol)


# checks -------------------------------------------------------------------------

def parallelogram_error(chart):
    """Largest deviation from a parallelogram with sides h over all planar cells."""
    worst = 0.0
    for k, sc in enumerate(chart.sectors, start=1):
        for (i, j) in sc.cell_angles:
            a, b, c, d = chart.cell(k, i, j)
            worst = max(worst, math.hypot(a[0] + c[0] - b[0] - d[0], a[1] + c[1] - b[1] - d[1]))
            for p, q in ((a, b), (b, c), (c, d), (d, a)):
                worst = max(worst, abs(math.hypot(q[0] - p[0], q[1] - p[1]) - chart.h))
    return worst


def planar_cell_angle(chart, k, i, j):
    a, b, _, d = chart.cell(k, i, j)
    return (math.atan2(d[1] - a[1], d[0] - a[0]) - math.atan2(b[1] - a[1], b[0] - a[0])) % TWO_PI


def min_node_separation(chart, k):
    pts = np.array(list(chart.sectors[k - 1].points.values()))
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    np.fill_diagonal(dist, np.inf)
    return float(dist.min())


# distortion ----------------------------------------------------------------------

@dataclass
class LipschitzReport:
    L_fwd: float
    L_inv: float
    pairs: int
    witness_fwd: tuple
    witness_inv: tuple
    cot_bound: float = None         # derived angle bound for the straightened chart
    bonk_lang: float = None         # reference constant, see chart_report
    params: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.L_fwd, self.L_inv))

    def as_dict(self):
        return {"L_fwd": self.L_fwd, "L_inv": self.L_inv, "pairs": self.pairs,
                "product": self.L_fwd * self.L_inv,
                "witness_fwd": list(self.witness_fwd), "witness_inv": list(self.witness_inv),
                "cot_half_delta": self.cot_bound, "bonk_lang_reference": self.bonk_lang,
                "params": self.params}


def bonk_lang_constant(eps, C):
    """The reference constant eps^(-1/2) (2 pi + C)^(1/2)."""
    return math.sqrt((TWO_PI + C) / eps)


def lipschitz_estimate(s, chart, sample_pairs=200, seed=0, eps=None):
    """Sampled distortion of the chart between node pairs.

    Surface distances come from exact propagation; paths may follow the
    mesh boundary.
    """
    nodes = chart.nodes()
    n = len(nodes)
    if n < 2:
        raise PreconditionViolated("chart has fewer than two nodes")
    rng = np.random.default_rng(seed)
    per = 10
    n_src = max(1, min(n, -(-sample_pairs // per)))
    srcs = sorted(rng.choice(n, size=n_src, replace=False).tolist())
    fwd, inv = (0.0, None), (0.0, None)
    count = 0
    for a in srcs:
        want = min(per, sample_pairs - count, n - 1)
        if want <= 0:
            break
        others = [b for b in range(n) if b != a]
        tg = sorted(rng.choice(len(others), size=want, replace=False).tolist())
        tg = [others[k] for k in tg]
        ds = distances(s, nodes[a][1], [nodes[b][1] for b in tg], allow_boundary=True)
        pa = nodes[a][0]
        for b, dsurf in zip(tg, ds):
            pb = nodes[b][0]
            dp = math.hypot(pa[0] - pb[0], pa[1] - pb[1])
            if dsurf <= 1e-12 or dp <= 1e-12:
                continue
            count += 1
            if dp / dsurf > fwd[0]:
                fwd = (dp / dsurf, (a, b))
            if dsurf / dp > inv[0]:
                inv = (dsurf / dp, (a, b))
    delta = chart.meta.get("delta")
    cot = 1.0 / math.tan(0.5 * delta) if delta and delta > 0 else None
    params = {}
    bl = None
    if eps is not None:
        tot = curvature_totals(s)
        params = {"eps": eps, "C": tot.total_neg}
        bl = bonk_lang_constant(eps, tot.total_neg)
    return LipschitzReport(fwd[0], inv[0], count, fwd[1] or (), inv[1] or (),
                           cot if chart.mode == "straight" else None, bl, params)


# output ----------------------------------------------------------------------------

def chart_to_dict(chart):
    out = {"mode": chart.mode, "h": chart.h, "origin_shift": chart.origin_shift,
           "meta": chart.meta, "sectors": []}
    for sc in chart.sectors:
        out["sectors"].append({
            "index": sc.index, "alpha": sc.alpha, "window": list(sc.window),
            "motion": list(sc.motion),
            "nodes": [{"i": i, "j": j, "x": p[0], "y": p[1]} for (i, j), p in sorted(sc.points.items())],
            "cells": [{"i": i, "j": j, "angles": list(a)} for (i, j), a in sorted(sc.cell_angles.items())],
        })
    return out


def dumps_chart(chart):
    return json.dumps(chart_to_dict(chart), sort_keys=True, indent=1)


def save_chart_svg(chart, path, title=None):
    """Cells as polygons colored by their angle at the first corner."""
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "chebnet"
    import matplotlib.pyplot as plt
    from matplotlib.collections import PolyCollection

    polys, vals = [], []
    for k, sc in enumerate(chart.sectors, start=1):
        for (i, j), ang in sorted(sc.cell_angles.items()):
            polys.append(chart.cell(k, i, j))
            vals.append(ang[0])
    fig, ax = plt.subplots(figsize=(6, 6))
    pc = PolyCollection(polys, array=np.array(vals), cmap="coolwarm", edgecolors="k",
                        linewidths=0.3)
    pc.set_clim(0.0, math.pi)
    ax.add_collection(pc)
    ax.autoscale_view()
    ax.set_aspect("equal")
    fig.colorbar(pc, ax=ax, shrink=0.7, label="cell angle")
    ax.set_title(title or f"{chart.mode} chart, h={chart.h:g}")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)

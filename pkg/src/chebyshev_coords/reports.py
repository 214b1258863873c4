"""Tables and figures written by the command line tools."""

import csv
import math

import numpy as np

from .cross import HalfPlane, boundary_loop, phi_map, rotation_loop


def write_table(path, rows, columns, sep=","):
    """Rows of dicts to CSV (``sep=","``) or TSV (``sep="\\t"``)."""
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, delimiter=sep, lineterminator="\n",
                           extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in columns})


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return "" if x is None else x


def sector_rows(s, cross, reports=None):
    rows = []
    for k, q in enumerate(cross.sectors):
        r = {"sector": q.index, "alpha": q.alpha, "omega_plus": q.omega_plus,
             "omega_minus": q.omega_minus, "turn_plus": q.turn_plus, "turn_minus": q.turn_minus,
             "slack": q.slack(cross.eps), "atoms": len(q.atoms)}
        if reports is not None:
            rep = reports[k]
            r.update(delta=rep.delta, omega_tilde_pos=rep.omega_tilde_pos,
                     omega_tilde_neg=rep.omega_tilde_neg, passed=rep.passed)
        rows.append(r)
    return rows


SECTOR_COLUMNS = ["sector", "alpha", "omega_plus", "omega_minus", "turn_plus", "turn_minus",
                  "slack", "atoms", "omega_tilde_pos", "omega_tilde_neg", "delta", "passed"]


def cell_rows(net):
    rows = []
    for (i, j), c in sorted(net.cells.items()):
        a, b, cc, d = c.angles
        rows.append({"sector": net.index, "i": i, "j": j, "a": a, "b": b, "c": cc, "d": d,
                     "holonomy": c.holonomy, "defect": c.defect, "atoms": " ".join(map(str, c.atoms))})
    return rows


CELL_COLUMNS = ["sector", "i", "j", "a", "b", "c", "d", "holonomy", "defect", "atoms"]


def phi_images(s, cross, n=360):
    """Images of the boundary loop and the rotation loop at the ray base, per half."""
    out = []
    halves = ((HalfPlane(s, cross.gamma1), cross.o2),
              (HalfPlane(s, cross.gamma1.reversed()), -cross.o3))
    for hp, t in halves:
        loops = {}
        for name, loop in (("boundary", boundary_loop(s, hp, n)), ("rotation", rotation_loop(t, n))):
            loops[name] = np.array([tuple(phi_map(s, hp, v, cross.eps)) for v in loop])
        out.append(loops)
    return out


def save_phi_svg(s, cross, path, n=360):
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "chebnet"
    import matplotlib.pyplot as plt

    imgs = phi_images(s, cross, n)
    fig, axes = plt.subplots(1, 2, figsize=(10, 5))
    line = math.pi - 2 * cross.eps
    for ax, loops, name in zip(axes, imgs, ("left half", "right half")):
        for key, style in (("boundary", "-"), ("rotation", "--")):
            P = loops[key]
            ax.plot(np.append(P[:, 0], P[0, 0]), np.append(P[:, 1], P[0, 1]), style, lw=0.8,
                    label=key)
        lim = ax.get_xlim()
        xs = np.linspace(lim[0], lim[1], 2)
        ax.plot(xs, line - xs, ":", color="grey", lw=0.6, label="x+y=pi-2eps")
        ax.plot([0], [0], "k+", ms=10)
        ax.set_title(name)
        ax.set_aspect("equal", adjustable="datalim")
        ax.legend(fontsize=7)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)

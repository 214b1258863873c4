"""Command line entry point: ``chebnet COMMAND INPUT [options]``.

``INPUT`` is a mesh file (JSON or OBJ) or a generated instance:
``flat``, ``cone:W`` (one atom of defect ``W`` at the centre),
``cones:W1,W2,...`` (atoms spaced on a circle of radius 2) or ``random:SEED``.
"""

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from .chart import dumps_chart, flatten_net, lipschitz_estimate, save_chart_svg
from .cross import find_cross
from .errors import ChebError, ParseError, PreconditionViolated
from .geodesic import chord_arc_check, trace_geodesic
from .net import audit_all_patches, build_nets, dumps_net, net_obj, net_report
from .reports import (CELL_COLUMNS, SECTOR_COLUMNS, cell_rows, save_phi_svg, sector_rows,
                      write_table)
from .surface import TWO_PI, TangentVector, curvature_totals, load_surface, save_surface


@dataclass
class RunConfig:
    input: str
    eps: float = 0.1
    h: float = 0.5
    window: tuple = (6, 6)
    seed: int = 0
    out: str = "out"
    jobs: int = 1
    strict_vertex: bool = False
    budget: int = 2000
    pairs: int = 200

    def __post_init__(self):
        if not 0 < self.eps < math.pi / 4:
            raise PreconditionViolated("eps must lie in (0, pi/4)")
        if not self.h > 0:
            raise PreconditionViolated("step must be positive")
        if min(self.window) < 1:
            raise PreconditionViolated("window needs at least one cell each way")

    def outdir(self):
        p = Path(self.out)
        p.mkdir(parents=True, exist_ok=True)
        return p


def load_input(cfg):
    from .instances import cone_disk, flat_disk, random_instance

    name = cfg.input
    if name == "flat":
        return flat_disk(seed=cfg.seed).surface
    if name.startswith("cone:"):
        try:
            w = float(name[5:])
        except ValueError:
            raise ParseError(f"bad cone defect in {name!r}") from None
        return _generated(cone_disk, atoms=[(0.0, 0.0, w)], seed=cfg.seed)
    if name.startswith("cones:"):
        try:
            ws = [float(x) for x in name[6:].split(",")]
        except ValueError:
            raise ParseError(f"bad defects in {name!r}") from None
        n = len(ws)
        atoms = [(2 * math.cos(TWO_PI * k / n), 2 * math.sin(TWO_PI * k / n), w)
                 for k, w in enumerate(ws)]
        return _generated(cone_disk, atoms=atoms, seed=cfg.seed, center=(0.0, 0.0))
    if name.startswith("random:"):
        try:
            seed = int(name[7:])
        except ValueError:
            raise ParseError(f"bad seed in {name!r}") from None
        return random_instance(seed, cfg.eps).surface
    return load_surface(name)


def _generated(fn, **kw):
    try:
        return fn(**kw).surface
    except ValueError as e:
        raise ParseError(f"cannot generate instance: {e}") from None


def _dump(path, obj):
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def _say(*a):
    print(*a, flush=True)


# commands ---------------------------------------------------------------------

def cmd_validate(cfg):
    s = load_input(cfg)
    tot = curvature_totals(s)
    lim = TWO_PI - 4 * cfg.eps
    _say(f"vertices={s.n_vertices} faces={s.n_faces} atoms={len(tot.atoms)}")
    _say(f"omega+={tot.total_pos:.12g} omega-={tot.total_neg:.12g}")
    ok = tot.total_pos < lim and tot.total_neg < lim
    _say(f"omega+ < 2pi-4eps = {lim:.12g}: {'yes' if tot.total_pos < lim else 'NO'}")
    _say(f"omega- < 2pi-4eps = {lim:.12g}: {'yes' if tot.total_neg < lim else 'NO'}")
    if not ok:
        raise PreconditionViolated("curvature totals exceed 2pi - 4eps")
    return 0


def cmd_trace(cfg, face=0, angle=0.0, length=10.0):
    s = load_input(cfg)
    if not 0 <= face < s.n_faces:
        raise PreconditionViolated(f"face {face} out of range")
    tv = TangentVector(s.face_centroid(face), angle)
    tr = trace_geodesic(s, tv, length, strict=cfg.strict_vertex)
    out = cfg.outdir() / "trace.jsonl"
    out.write_text(tr.to_jsonl(s))
    _say(f"terminal={tr.terminal} length={tr.length:.12g} vertex_hits={len(tr.vertex_hits)}")
    _say(f"wrote {out}")
    return 0


def _cross(cfg, s):
    return find_cross(s, cfg.eps, budget=cfg.budget)


def cmd_cross(cfg):
    s = load_input(cfg)
    fig = _cross(cfg, s)
    d = cfg.outdir()
    doc = fig.as_dict(s)
    doc["chord_arc"] = [chord_arc_check(s, tr, cfg.eps).as_dict()
                        for tr in (fig.gamma1, fig.gamma2, fig.gamma3)]
    _dump(d / "cross.json", doc)
    write_table(d / "sectors.csv", sector_rows(s, fig), SECTOR_COLUMNS[:8])
    save_phi_svg(s, fig, d / "phi.svg")
    for q in fig.sectors:
        _say(f"sector {q.index}: alpha={q.alpha:.9f} omega+={q.omega_plus:.6g} "
             f"omega-={q.omega_minus:.6g} slack={q.slack(cfg.eps):.6g}")
    _say(f"wrote {d / 'cross.json'}")
    return 0


def _nets(cfg, s):
    fig = _cross(cfg, s)
    nets, reports = build_nets(s, fig, cfg.h, cfg.window, eps=cfg.eps, jobs=cfg.jobs)
    return fig, nets, reports


def cmd_net(cfg):
    from .chart import local_positions

    s = load_input(cfg)
    fig, nets, reports = _nets(cfg, s)
    d = cfg.outdir()
    summary = []
    rows = []
    for net, rep in zip(nets, reports):
        r = net_report(s, net, rep)
        r["hazzidakis"] = audit_all_patches(net)
        r["conditions"] = rep.as_dict()
        summary.append(r)
        rows += cell_rows(net)
        (d / f"net{net.index}.json").write_text(dumps_net(s, net) + "\n")
        (d / f"net{net.index}.obj").write_text(net_obj(local_positions(net, "affine"), net.window))
        _say(f"sector {net.index}: h={net.h:.9g} delta={rep.delta:.6g} "
             f"theta=[{r['theta_min']:.9f}, {r['theta_max']:.9f}] "
             f"hazzidakis={r['hazzidakis']['max_residual']:.2e}")
    _dump(d / "net_report.json", summary)
    write_table(d / "cells.tsv", rows, CELL_COLUMNS, sep="\t")
    write_table(d / "sectors.csv", sector_rows(s, fig, reports), SECTOR_COLUMNS)
    _say(f"wrote {d / 'net_report.json'}")
    return 0


def cmd_flatten(cfg):
    s = load_input(cfg)
    fig, nets, _ = _nets(cfg, s)
    d = cfg.outdir()
    out = {}
    for mode in ("affine", "straight"):
        ch = flatten_net(s, nets, fig, mode)
        L = lipschitz_estimate(s, ch, cfg.pairs, cfg.seed, cfg.eps)
        out[mode] = L.as_dict()
        (d / f"chart_{mode}.json").write_text(dumps_chart(ch) + "\n")
        save_chart_svg(ch, d / f"chart_{mode}.svg")
        _say(f"{mode}: L_fwd={L.L_fwd:.9f} L_inv={L.L_inv:.9f} pairs={L.pairs}")
    _dump(d / "lipschitz.json", out)
    _say("cot(delta/2) is a derived reference for the straightened chart; "
         "the eps/C constant is reported for comparison only")
    return 0


def cmd_report(cfg):
    """Whole pipeline, one summary file."""
    s = load_input(cfg)
    fig, nets, reports = _nets(cfg, s)
    tot = curvature_totals(s)
    doc = {"config": asdict(cfg), "omega_plus": tot.total_pos, "omega_minus": tot.total_neg,
           "cross": {"o2": fig.o2, "o3": fig.o3, "min_slack": fig.min_slack(),
                     "sectors": [q.as_dict(s, cfg.eps) for q in fig.sectors]},
           "nets": [], "charts": {}}
    for net, rep in zip(nets, reports):
        r = net_report(s, net, rep)
        r["hazzidakis"] = audit_all_patches(net)
        doc["nets"].append(r)
    for mode in ("affine", "straight"):
        ch = flatten_net(s, nets, fig, mode)
        doc["charts"][mode] = lipschitz_estimate(s, ch, cfg.pairs, cfg.seed, cfg.eps).as_dict()
    d = cfg.outdir()
    _dump(d / "report.json", doc)
    write_table(d / "sectors.csv", sector_rows(s, fig, reports), SECTOR_COLUMNS)
    _say(f"wrote {d / 'report.json'}")
    return 0


def cmd_export(cfg):
    s = load_input(cfg)
    path = cfg.outdir() / "surface.json"
    save_surface(s, path)
    _say(f"wrote {path}")
    return 0


# parsing ----------------------------------------------------------------------

def _window(text):
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError("window must look like 6x6") from None


def build_parser():
    p = argparse.ArgumentParser(prog="chebnet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="mesh file, or flat | cone:W | cones:W1,W2,... | random:SEED")
    common.add_argument("--eps", type=float, default=0.1)
    common.add_argument("--step", type=float, default=0.5, help="net edge length h")
    common.add_argument("--window", type=_window, default=(6, 6), metavar="WxH")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--out", default="out", metavar="DIR")
    common.add_argument("--strict-vertex", action="store_true",
                        help="stop geodesics at cone vertices instead of splitting the angle")
    common.add_argument("--budget", type=int, default=2000, help="ray candidates per half")
    common.add_argument("--pairs", type=int, default=200, help="node pairs for the Lipschitz estimate")
    for name in ("validate", "cross", "net", "flatten", "report", "export"):
        sub.add_parser(name, parents=[common])
    t = sub.add_parser("trace", parents=[common])
    t.add_argument("--face", type=int, default=0)
    t.add_argument("--angle", type=float, default=0.0)
    t.add_argument("--length", type=float, default=10.0)
    return p


COMMANDS = {"validate": cmd_validate, "cross": cmd_cross, "net": cmd_net,
            "flatten": cmd_flatten, "report": cmd_report, "export": cmd_export}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(args.input, args.eps, args.step, tuple(args.window), args.seed, args.out,
                        args.jobs, args.strict_vertex, args.budget, args.pairs)
        if args.command == "trace":
            return cmd_trace(cfg, args.face, args.angle, args.length)
        return COMMANDS[args.command](cfg)
    except ChebError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

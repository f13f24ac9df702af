"""Command-line interface: ``hypertess {sample,tessellate,kernel,audit,walk,render}``.

Exit codes: 0 success, 1 runtime failure (diagnostic on stderr), 2 invalid
arguments. Every JSON output embeds the resolved run configuration; seeded
runs are byte-for-byte reproducible.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import __version__
from .io import SCHEMA_VERSION, RunConfig, read_configuration, write_csv, write_json

logger = logging.getLogger("hypertess")


# ---------------------------------------------------------------------------
# argument types


def _num(kind, cond, msg):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}") from None
        if kind is float and not math.isfinite(v):
            raise argparse.ArgumentTypeError(f"{text!r} is not finite")
        if not cond(v):
            raise argparse.ArgumentTypeError(f"{text!r}: {msg}")
        return v

    return parse


pos_float = _num(float, lambda v: v > 0, "must be > 0")
nonneg_float = _num(float, lambda v: v >= 0, "must be >= 0")
prob = _num(float, lambda v: 0 <= v <= 1, "must lie in [0, 1]")
pos_int = _num(int, lambda v: v > 0, "must be > 0")
nonneg_int = _num(int, lambda v: v >= 0, "must be >= 0")
dim = _num(int, lambda v: v >= 2, "dimension must be >= 2")


def _float_list(text):
    return [pos_float(t) for t in text.split(",") if t.strip()]


def _base(cmd, args, **fields) -> RunConfig:
    outputs = {k: getattr(args, k) for k in ("out", "csv", "edges_csv", "simplices_csv") if getattr(args, k, None)}
    return RunConfig(command=cmd, outputs=outputs, version=__version__, **fields)


def _envelope(kind: str, rc: RunConfig, **payload) -> dict:
    return {"schema": f"hypertess.{kind}", "schema_version": SCHEMA_VERSION, "run_config": rc.to_dict(), **payload}


def _emit(args, doc):
    from .io import dumps

    if getattr(args, "out", None):
        write_json(args.out, doc)
    else:
        sys.stdout.write(dumps(doc))


def _config_or_poisson(args):
    """Load --input, or draw a Poisson sample from --lambda/--window/--seed."""
    from .samplers import sample_poisson

    if args.input:
        return read_configuration(args.input)
    if args.seed is None:
        _usage_error(args, "--seed is required when sampling (no --input given)")
    return sample_poisson(args.lam, args.window, args.d, np.random.default_rng(args.seed))


def _usage_error(args, msg):
    args._parser.error(msg)  # exits with status 2


# ---------------------------------------------------------------------------
# subcommands


def cmd_sample(args):
    from .samplers import BerezinDPP, sample_poisson, sample_uniform, thin, translated_lattice
    from .tessellation import build_net

    rng = np.random.default_rng(args.seed)
    extra = {}
    if args.process == "poisson":
        cfg = sample_poisson(args.lam, args.window, args.d, rng)
    elif args.process == "uniform":
        if args.n is None:
            _usage_error(args, "--n is required for --process uniform")
        cfg = sample_uniform(args.n, args.window, args.d, rng)
    elif args.process == "berezin":
        dpp = BerezinDPP(args.d, args.s, args.window, args.n_seeds, args.normalization, rng).fit()
        cfg = dpp.sample()
        extra = {"normalization": dpp.kernel_.normalization, "n_seeds": args.n_seeds}
    else:  # lattice
        net = build_net(args.window, args.separation, rng=rng, d=args.d)
        cfg = translated_lattice(net, args.noise, args.tail, rng)
        extra = {"n_cells": net.n_cells_, "noise": args.noise, "tail": args.tail}
    if args.thin:
        cfg = thin(cfg, args.thin, rng)
    rc = _base("sample", args, seed=args.seed, d=args.d, s=args.s if args.process == "berezin" else None,
               lam=args.lam if args.process == "poisson" else None, window_radius=args.window,
               separation=args.separation if args.process == "lattice" else None,
               overrides={"process": args.process, "thin": args.thin, **extra})
    _emit(args, _envelope("configuration", rc, configuration=cfg.to_dict(), n_points=len(cfg)))
    return 0


def cmd_tessellate(args):
    from .tessellation import delaunay_graph

    cfg = _config_or_poisson(args)
    G = delaunay_graph(cfg)
    rc = _base("tessellate", args, seed=args.seed, d=cfg.d, window_radius=cfg.window_radius,
               lam=None if args.input else args.lam, overrides={"input": args.input})
    if args.edges_csv:
        write_csv(args.edges_csv, ({"i": int(i), "j": int(j)} for i, j in G.edges), ["i", "j"])
    if args.simplices_csv:
        cols = [f"v{k}" for k in range(cfg.d + 1)]
        write_csv(args.simplices_csv, ({c: int(v) for c, v in zip(cols, row)} for row in G.simplices), cols)
    doc = _envelope("delaunay", rc, n_vertices=G.n, edges=G.edges, simplices=G.simplices,
                    voronoi_boundary=G.voronoi_boundary, mean_degree=float(G.degrees().mean()) if G.n else 0.0)
    _emit(args, doc)
    return 0


def cmd_kernel(args):
    from .berezin import (KernelSpec, best_norm_bounds, conjectured_norm, estimate_norm_discrete,
                          reproducing_constant, series_truncation_error)

    spec = KernelSpec(args.d, args.s, args.normalization)
    out = {"sigma": spec.sigma, "exponent": spec.exponent}
    if args.sweep:
        rows = []
        for sv in args.sweep:
            bb = best_norm_bounds(sv, args.d)
            rows.append({"s": sv, "d": args.d, "upper": bb["upper"], "beta_upper": bb["beta_upper"],
                         "lower": bb["lower"], "beta_lower": bb["beta_lower"],
                         "conjectured": conjectured_norm(sv) if args.d == 2 else float("nan")})
        if args.csv:
            write_csv(args.csv, rows, ["s", "d", "upper", "beta_upper", "lower", "beta_lower", "conjectured"])
        out["sweep"] = rows
    b = best_norm_bounds(args.s, args.d)
    out["bounds"] = b
    out["conjectured_norm"] = conjectured_norm(args.s) if args.d == 2 and args.s > 0 else None
    out["default_normalization"] = spec.default_normalization()
    if args.s * (args.d - 1) > 0 and spec.sigma * (args.s - 1) > 0:
        out["reproducing_constant"] = {"exact": reproducing_constant(args.s, args.d, "exact"),
                                       "printed": reproducing_constant(args.s, args.d, "printed")}
    if args.series_M is not None:
        rng = np.random.default_rng(0 if args.seed is None else args.seed)
        from .samplers import sample_directions

        r = 0.9 * rng.random((200, 2)) ** 0.5
        u = sample_directions(400, args.d, rng)
        pairs = zip(u[:200] * r[:, :1], u[200:] * r[:, 1:])
        tr = series_truncation_error(spec, args.series_M, pairs)
        out["series_error"] = {"M": tr.M, "max_error": tr.achieved_error, "pairs": 200, "max_norm": 0.9}
    if args.estimate:
        if args.seed is None:
            _usage_error(args, "--seed is required with --estimate")
        out["discrete_estimate"] = {
            "window": args.window, "n_seeds": args.n_seeds,
            "value": estimate_norm_discrete(spec, args.window, args.n_seeds, np.random.default_rng(args.seed)),
        }
    rc = _base("kernel", args, seed=args.seed, d=args.d, s=args.s,
               window_radius=args.window if args.estimate else None,
               overrides={"series_M": args.series_M, "n_seeds": args.n_seeds if args.estimate else None,
                          "normalization": args.normalization})
    _emit(args, _envelope("kernel", rc, **out))
    return 0


def cmd_audit(args):
    from .audit import audit_animals, expansion_scan
    from .geometry import distance_from_origin
    from .tessellation import build_net, delaunay_graph, nearest_index

    cfg = _config_or_poisson(args)
    net = build_net(cfg.window_radius, args.separation, rng=np.random.default_rng(args.net_seed), d=cfg.d)
    rng = np.random.default_rng(0 if args.seed is None else args.seed)
    stats = audit_animals(cfg, net, args.animals, args.max_size, args.M, args.p, args.q, rng,
                          core_margin=args.core_margin, intensity=None if args.input else args.lam)
    M = stats[0].M
    rows = [s.row() for s in stats]
    if args.csv:
        write_csv(args.csv, rows, ["size", "density_ratio", "vacancy_ratio", "p_density", "q_vacancy",
                                   "boundary_ratio", "seed"])
    G = delaunay_graph(cfg)
    anchor = int(nearest_index(cfg.points, np.zeros((1, cfg.d)))[0])
    core = set(np.flatnonzero(distance_from_origin(cfg.points) <= cfg.window_radius - args.core_margin).tolist())
    prof = expansion_scan(G, anchor, args.scan_size, args.scan_trials, rng, allowed=core)
    dens = np.array([s.density_ratio for s in stats])
    vac = np.array([s.vacancy_ratio for s in stats])
    rc = _base("audit", args, seed=args.seed, d=cfg.d, lam=None if args.input else args.lam,
               window_radius=cfg.window_radius, separation=args.separation,
               overrides={"net_seed": args.net_seed, "animals": args.animals, "max_size": args.max_size, "M": M,
                          "p": args.p, "q": args.q, "core_margin": args.core_margin,
                          "scan_size": args.scan_size, "scan_trials": args.scan_trials, "input": args.input})
    doc = _envelope(
        "audit", rc,
        note="randomized search: all extrema are one-sided empirical bounds",
        n_points=len(cfg), n_cells=net.n_cells_, covering_radius=net.covering_radius_,
        density_ratio={"min": float(dens.min()), "max": float(dens.max()), "mean": float(dens.mean())},
        vacancy_ratio={"min": float(np.nanmin(vac)), "max": float(np.nanmax(vac)), "mean": float(np.nanmean(vac))},
        flagged=int(sum(s.flagged for s in stats)),
        expansion=prof.to_dict(),
    )
    _emit(args, doc)
    return 0


def cmd_walk(args):
    from .tessellation import delaunay_graph, nearest_index
    from .walk import _adjacency, bootstrap_speed, speed_estimates, walk

    cfg = _config_or_poisson(args)
    if args.seed is None:
        _usage_error(args, "--seed is required for walk")
    G = delaunay_graph(cfg)
    start = int(nearest_index(cfg.points, np.zeros((1, cfg.d)))[0])
    core = cfg.window_radius - args.core_margin
    adj = _adjacency(G)
    rng = np.random.default_rng(args.seed)
    traces = [walk(G, start, args.steps, rng, core_radius=core, _adj=adj) for _ in range(args.walks)]
    if args.csv:
        rows = ({"walk": w, **r} for w, t in enumerate(traces) for r in t.rows())
        write_csv(args.csv, rows, ["walk", "step", "vertex", "hyperbolic_displacement", "graph_distance"])
    per = []
    for t in traces:
        if t.steps > 0:
            e = speed_estimates(t)
            per.append({"steps": t.steps, "truncated": t.truncated, "hyperbolic": e.hyperbolic, "graph": e.graph})
    summary = bootstrap_speed(traces, args.confidence, rng=np.random.default_rng(args.seed)) if len(per) >= 2 else None
    rc = _base("walk", args, seed=args.seed, d=cfg.d, lam=None if args.input else args.lam,
               window_radius=cfg.window_radius,
               overrides={"walks": args.walks, "steps": args.steps, "core_margin": args.core_margin,
                          "confidence": args.confidence, "input": args.input})
    _emit(args, _envelope("walk", rc, start=start, walks=per, speed=summary))
    return 0


def cmd_render(args):
    from .berezin import KernelSpec
    from .render import render_svg
    from .samplers import BerezinDPP, sample_poisson
    from .tessellation import delaunay_graph

    if args.input:
        cfg = read_configuration(args.input)
    else:
        if args.seed is None:
            _usage_error(args, "--seed is required for --recipe")
        R = 2.0 * math.atanh(0.99)
        rng = np.random.default_rng(args.seed)
        if args.process == "berezin":
            cfg = BerezinDPP(2, args.s, R, args.n_seeds, None, rng).fit().sample()
        else:
            lam = args.lam
            if lam is None:
                lam = 1.0 / KernelSpec(2, args.s).default_normalization()
            cfg = sample_poisson(lam, R, 2, rng)
    G = delaunay_graph(cfg) if len(cfg) >= 2 else None
    svg = render_svg(cfg, G)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hypertess", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, sampling=True, window=6.0):
        sp.add_argument("--seed", type=nonneg_int, default=None)
        sp.add_argument("--out", default=None, help="output path (stdout if omitted)")
        if sampling:
            sp.add_argument("--input", default=None, help="configuration JSON (otherwise a Poisson sample)")
            sp.add_argument("--d", type=dim, default=2)
            sp.add_argument("--lambda", dest="lam", type=pos_float, default=1.0)
            sp.add_argument("--window", type=pos_float, default=window)

    sp = sub.add_parser("sample", help="draw a point configuration")
    sp.add_argument("--process", choices=["poisson", "uniform", "berezin", "lattice"], default="poisson")
    sp.add_argument("--d", type=dim, default=2)
    sp.add_argument("--lambda", dest="lam", type=pos_float, default=1.0)
    sp.add_argument("--window", type=pos_float, default=6.0)
    sp.add_argument("--seed", type=nonneg_int, required=True)
    sp.add_argument("--n", type=pos_int, default=None)
    sp.add_argument("--s", type=nonneg_float, default=3.0)
    sp.add_argument("--n-seeds", type=pos_int, default=4000)
    sp.add_argument("--normalization", type=pos_float, default=None)
    sp.add_argument("--separation", type=pos_float, default=0.7)
    sp.add_argument("--noise", type=nonneg_float, default=0.3)
    sp.add_argument("--tail", type=pos_float, default=1.0)
    sp.add_argument("--thin", type=prob, default=0.0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("tessellate", help="hyperbolic Delaunay graph and Voronoi boundary")
    common(sp)
    sp.add_argument("--edges-csv", default=None)
    sp.add_argument("--simplices-csv", default=None)
    sp.set_defaults(func=cmd_tessellate)

    sp = sub.add_parser("kernel", help="Berezin kernel bounds, constants and estimates")
    sp.add_argument("--d", type=dim, default=2)
    sp.add_argument("--s", type=pos_float, required=True)
    sp.add_argument("--normalization", type=pos_float, default=None)
    sp.add_argument("--series-M", type=nonneg_int, default=None, help="report series truncation error at this M")
    sp.add_argument("--estimate", action="store_true", help="discrete top-eigenvalue estimate")
    sp.add_argument("--window", type=pos_float, default=4.0)
    sp.add_argument("--n-seeds", type=_num(int, lambda v: v >= 100, "must be >= 100"), default=4000)
    sp.add_argument("--sweep", type=_float_list, default=None, help="comma-separated s values for a bound table")
    sp.add_argument("--csv", default=None, help="CSV path for the --sweep table")
    sp.add_argument("--seed", type=nonneg_int, default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_kernel)

    sp = sub.add_parser("audit", help="anchored density/vacancy audit and expansion scan")
    common(sp, window=8.0)
    sp.add_argument("--separation", type=pos_float, default=0.7)
    sp.add_argument("--net-seed", type=nonneg_int, default=0)
    sp.add_argument("--animals", type=pos_int, default=100)
    sp.add_argument("--max-size", type=pos_int, default=40)
    sp.add_argument("--M", type=nonneg_int, default=None)
    sp.add_argument("--p", type=_num(float, lambda v: v >= 1, "must be >= 1"), default=1.0)
    sp.add_argument("--q", type=pos_float, default=1.0)
    sp.add_argument("--core-margin", type=nonneg_float, default=2.0)
    sp.add_argument("--scan-size", type=pos_int, default=200)
    sp.add_argument("--scan-trials", type=pos_int, default=20)
    sp.add_argument("--csv", default=None)
    sp.set_defaults(func=cmd_audit)

    sp = sub.add_parser("walk", help="simple random walks and speed estimates")
    common(sp, window=10.0)
    sp.add_argument("--walks", type=pos_int, default=50)
    sp.add_argument("--steps", type=nonneg_int, default=2000)
    sp.add_argument("--core-margin", type=nonneg_float, default=2.0)
    sp.add_argument("--confidence", type=_num(float, lambda v: 0 < v < 1, "must lie in (0, 1)"), default=0.99)
    sp.add_argument("--csv", default=None)
    sp.set_defaults(func=cmd_walk)

    sp = sub.add_parser("render", help="SVG of Voronoi (red) and Delaunay (blue)")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", default=None)
    src.add_argument("--recipe", choices=["figure1"], default=None,
                     help="sample in the Euclidean ball of radius 0.99")
    sp.add_argument("--process", choices=["poisson", "berezin"], default="poisson")
    sp.add_argument("--s", type=pos_float, default=1.0)
    sp.add_argument("--lambda", dest="lam", type=pos_float, default=None,
                    help="Poisson intensity (default: the Berezin intensity 1/normalization)")
    sp.add_argument("--n-seeds", type=pos_int, default=4000)
    sp.add_argument("--seed", type=nonneg_int, default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._parser = parser
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return int(args.func(args) or 0)
    except SystemExit:
        raise
    except (ValueError, OSError, KeyError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"hypertess {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

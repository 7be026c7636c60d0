"""Command-line front end.

Exit codes: 0 success (and, for `experiment`, all checks passed),
1 computational failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from . import limitfield as lf
from . import meansolver as ms
from .experiments import ConfigError, ExperimentConfig, run_experiment
from .geometry import QueryRect
from .kdtree import HORIZONTAL, VERTICAL, KdTree
from .quadtree import Quadtree, load_points_csv


class UsageError(Exception):
    pass


def _tree_from_args(args):
    if args.points_file:
        pts = load_points_csv(args.points_file)
    elif args.n is not None:
        rng = np.random.Generator(np.random.Philox(key=np.uint64(args.seed)))
        pts = rng.random((args.n, 2))
    else:
        raise UsageError("provide --points-file or --n (with --seed)")
    if args.tree == "quadtree":
        return Quadtree(pts, rng_seed=args.seed)
    axis = HORIZONTAL if args.tree == "kd-h" else VERTICAL
    return KdTree(pts, root_axis=axis, rng_seed=args.seed)


def _query_from_args(args) -> QueryRect:
    try:
        return QueryRect(*args.query)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_cost(args) -> int:
    tree = _tree_from_args(args)
    q = _query_from_args(args)
    bd = tree.decompose(q)
    print(f"n: {tree.n}")
    print(f"O: {bd.o}")
    print(f"N: {bd.n_inside}")
    for name in ("y_ge_bd", "y_ge_bc", "y_lt_ad", "y_lt_ac",
                 "ybar_ge_db", "ybar_ge_da", "ybar_lt_cb", "ybar_lt_ca",
                 "d1", "d2", "d3", "d4"):
        print(f"{name}: {getattr(bd, name)}")
    ok = bd.identity_holds
    print(f"decomposition_ok: {'true' if ok else 'false'}")
    return 0 if ok else 1


def cmd_decomp(args) -> int:
    rc = cmd_cost(args)
    tree = _tree_from_args(args)
    q = _query_from_args(args)
    if isinstance(tree, Quadtree):
        residual = tree.placeholder_identity_residual(q)
        print(f"placeholder_identity_ok: {'true' if residual == 0 else 'false'}")
        if residual != 0:
            return 1
    return rc


def cmd_g_table(args) -> int:
    try:
        table = ms.solve_g(m=args.grid, tol=args.tol, max_iter=args.max_iter)
    except ms.SolverError as exc:
        print(f"g solver failed: {exc} (residual {exc.residual:.3e})", file=sys.stderr)
        return 1
    print(f"iterations: {table.iterations}")
    print(f"residual: {table.residual:.6e}")
    print(f"g(0.5): {table(0.5):.12f}")
    if args.out:
        table.to_csv(args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_limit(args) -> int:
    ncols = {"z": 1, "y": 2, "o": 4}[args.kind]
    pts = np.loadtxt(args.points_file, delimiter=",", skiprows=1, ndmin=2, dtype=float)
    if pts.shape[1] != ncols:
        raise UsageError(f"kind {args.kind!r} expects {ncols} coordinate column(s)")
    fam = lf.SplitFamily(args.seed)
    if args.kind == "z":
        values = lf.z_eval_grid(fam, args.depth, pts[:, 0])
    elif args.kind == "y":
        values, _, _ = lf.yz_eval(fam, args.depth, pts)
    else:
        values = np.array([lf.o_eval(fam, args.depth, QueryRect(*row)) for row in pts])
    lf.write_field_csv(args.out, args.kind, args.seed, args.depth, pts, values)
    print(f"wrote {args.out} ({len(values)} samples)")
    return 0


def cmd_experiment(args) -> int:
    try:
        cfg = ExperimentConfig.from_json(args.config)
        if args.trials is not None:
            data = cfg.to_dict()
            data["trials"] = args.trials
            cfg = ExperimentConfig.from_dict(data)
    except ConfigError:
        raise
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    result = run_experiment(cfg)
    paths = result.write(args.out)
    for p in paths:
        print(f"wrote {p}")
    for name, ok in sorted(result.checks.items()):
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"all_pass: {'true' if result.all_pass else 'false'}")
    return 0 if result.all_pass else 1


def cmd_constants(args) -> int:
    table = ms.CONSTANTS.asdict()
    print(json.dumps({k: float(f"{v:.17g}") for k, v in table.items()}, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rangefield",
        description="Instrumented range-query costs in random spatial search trees.",
    )
    parser.add_argument("--version", action="version", version=f"rangefield {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_tree_flags(p):
        p.add_argument("--points-file", help="CSV of points with header x,y")
        p.add_argument("--n", type=int, help="number of random uniform points")
        p.add_argument("--seed", type=int, default=0, help="stream seed")
        p.add_argument("--tree", choices=("quadtree", "kd-h", "kd-v"), default="quadtree")
        p.add_argument("--query", type=float, nargs=4, required=True,
                       metavar=("A", "B", "C", "D"))

    p_cost = sub.add_parser("cost", help="query cost and its exact decomposition")
    add_tree_flags(p_cost)
    p_cost.set_defaults(fn=cmd_cost)

    p_dec = sub.add_parser("decomp", help="decomposition plus the placeholder identity")
    add_tree_flags(p_dec)
    p_dec.set_defaults(fn=cmd_decomp)

    p_g = sub.add_parser("g-table", help="solve the constrained-mean fixed point")
    p_g.add_argument("--grid", type=int, default=4097)
    p_g.add_argument("--tol", type=float, default=1e-10)
    p_g.add_argument("--max-iter", type=int, default=80)
    p_g.add_argument("--out", help="CSV output path (header s,g)")
    p_g.set_defaults(fn=cmd_g_table)

    p_l = sub.add_parser("limit", help="evaluate a limit-field iterate at points")
    p_l.add_argument("--seed", type=int, default=0)
    p_l.add_argument("--depth", type=int, default=30)
    p_l.add_argument("--kind", choices=("z", "y", "o"), required=True)
    p_l.add_argument("--points-file", required=True,
                     help="CSV with header; 1 column for z (t), 2 for y (t,s), 4 for o (a,b,c,d)")
    p_l.add_argument("--out", required=True)
    p_l.set_defaults(fn=cmd_limit)

    p_e = sub.add_parser("experiment", help="run a Monte Carlo experiment from a JSON config")
    p_e.add_argument("--config", required=True)
    p_e.add_argument("--out", required=True, help="output directory")
    p_e.set_defaults(fn=cmd_experiment)

    p_c = sub.add_parser("constants", help="print every named constant as JSON")
    p_c.set_defaults(fn=cmd_constants)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

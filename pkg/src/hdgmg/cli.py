"""Command line interface: ``hdgmg {solve,table1,table2,dump}``."""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys

from .driver import NonConvergenceError, RunConfig, run, tau_value
from .mesh import build_hierarchy, write_mesh
from .skeleton import assemble, write_matrix

__all__ = ["main", "build_parser", "format_table1", "format_table2"]

log = logging.getLogger("hdgmg")


def _tau(text: str):
    if text == "one_over_h":
        return "one_over_h"
    if text.startswith("const:"):
        try:
            value = float(text[6:])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad tau constant in {text!r}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError("tau must be positive")
        return value
    raise argparse.ArgumentTypeError("tau must be 'one_over_h' or 'const:FLOAT'")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=_positive_int, help="polynomial degree")
    common.add_argument("--tau", type=_tau, help="one_over_h or const:FLOAT")
    common.add_argument("--levels", type=_nonneg_int, help="finest mesh level")
    common.add_argument("--smooth", type=_positive_int, help="pre- and post-smoothing steps")
    common.add_argument("--tol", type=_positive_float, help="relative residual tolerance")
    common.add_argument("--rhs", choices=["one", "manufactured"])
    common.add_argument("--mode", choices=["stationary", "pcg"], default="stationary")
    common.add_argument("--format", choices=["md", "csv"], default="md")
    common.add_argument("--dump-mesh", metavar="PATH")
    common.add_argument("--dump-matrix", metavar="PATH")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="hdgmg", description="HDG Poisson solver with homogeneous multigrid")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="run one configuration")
    sub.add_parser("table1", parents=[common], help="iteration counts, f = 1")
    sub.add_parser("table2", parents=[common], help="convergence orders, manufactured solution")
    sub.add_parser("dump", parents=[common], help="write mesh and matrix of the finest level")
    return parser


def _tau_label(rule) -> str:
    return "1/h" if rule == "one_over_h" else f"{float(rule):g}"


def format_table1(rows, levels, fmt="md") -> str:
    """``rows`` maps (p, tau, m) to a RunReport."""
    out = io.StringIO()
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["p", "tau", "m", "level", "dofs", "iterations", "residual"])
        for (p, tau, m), rep in rows.items():
            for r in rep.levels:
                if r.level in levels:
                    w.writerow([p, _tau_label(tau), m, r.level, r.dofs, r.iterations, f"{r.residual:.3e}"])
        return out.getvalue()
    out.write("| p | tau | m | " + " | ".join(f"level {l}" for l in levels) + " |\n")
    out.write("|---|---|---|" + "---|" * len(levels) + "\n")
    for (p, tau, m), rep in rows.items():
        counts = {r.level: r.iterations for r in rep.levels}
        out.write(f"| {p} | {_tau_label(tau)} | {m} | " + " | ".join(str(counts[l]) for l in levels) + " |\n")
    return out.getvalue()


def _eoc(v) -> str:
    return "-" if v is None else f"{v:.1f}"


def format_table2(rows, levels, fmt="md") -> str:
    """``rows`` maps (p, tau) to a RunReport with error records."""
    out = io.StringIO()
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["p", "tau", "level", "err_u", "err_q", "eoc_u", "eoc_q"])
        for (p, tau), rep in rows.items():
            for r in rep.levels:
                if r.level in levels:
                    w.writerow([p, _tau_label(tau), r.level, f"{r.e_u:.6e}", f"{r.e_q:.6e}", _eoc(r.eoc_u), _eoc(r.eoc_q)])
        return out.getvalue()
    out.write("| p | tau | " + " | ".join(f"u {l} | q {l}" for l in levels) + " |\n")
    out.write("|---|---|" + "---|---|" * len(levels) + "\n")
    for (p, tau), rep in rows.items():
        recs = {r.level: r for r in rep.levels}
        cells = " | ".join(f"{_eoc(recs[l].eoc_u)} | {_eoc(recs[l].eoc_q)}" for l in levels)
        out.write(f"| {p} | {_tau_label(tau)} | {cells} |\n")
    return out.getvalue()


def _config(args, **defaults) -> RunConfig:
    return RunConfig(
        p=args.p if args.p is not None else defaults.get("p", 1),
        tau=args.tau if args.tau is not None else defaults.get("tau", "one_over_h"),
        levels=args.levels if args.levels is not None else defaults.get("levels", 6),
        smooth=args.smooth if args.smooth is not None else defaults.get("smooth", 1),
        tol=args.tol if args.tol is not None else defaults.get("tol", 1e-6),
        rhs=args.rhs if args.rhs is not None else defaults.get("rhs", "one"),
        mode=args.mode,
    )


def _dump(args, cfg: RunConfig) -> None:
    if not (args.dump_mesh or args.dump_matrix):
        return
    mesh = build_hierarchy(cfg.levels)[cfg.levels]
    if args.dump_mesh:
        write_mesh(mesh, args.dump_mesh)
    if args.dump_matrix:
        write_matrix(assemble(mesh, cfg.p, tau_value(cfg.tau, mesh.h)).matrix, args.dump_matrix)


def _solve(args) -> str:
    cfg = _config(args)
    _dump(args, cfg)
    rep = run(cfg)
    out = io.StringIO()
    manufactured = cfg.rhs == "manufactured"
    if args.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        head = ["level", "dofs", "iterations", "residual"]
        w.writerow(head + (["err_u", "err_q", "eoc_u", "eoc_q"] if manufactured else []))
        for r in rep.levels:
            row = [r.level, r.dofs, r.iterations, f"{r.residual:.3e}"]
            if manufactured:
                row += [f"{r.e_u:.6e}", f"{r.e_q:.6e}", _eoc(r.eoc_u), _eoc(r.eoc_q)]
            w.writerow(row)
    else:
        extra = " err_u | err_q | eoc_u | eoc_q |" if manufactured else ""
        out.write("| level | dofs | iterations | residual |" + extra + "\n")
        out.write("|---|---|---|---|" + ("---|" * 4 if manufactured else "") + "\n")
        for r in rep.levels:
            line = f"| {r.level} | {r.dofs} | {r.iterations} | {r.residual:.3e} |"
            if manufactured:
                line += f" {r.e_u:.6e} | {r.e_q:.6e} | {_eoc(r.eoc_u)} | {_eoc(r.eoc_q)} |"
            out.write(line + "\n")
    return out.getvalue()


def _table1(args) -> str:
    L = args.levels if args.levels is not None else 6
    ps = [args.p] if args.p is not None else [1, 2, 3]
    taus = [args.tau] if args.tau is not None else ["one_over_h", 1.0]
    ms = [args.smooth] if args.smooth is not None else [1, 2]
    rows = {}
    for p in ps:
        for tau in taus:
            for m in ms:
                cfg = RunConfig(p=p, tau=tau, levels=L, smooth=m, tol=args.tol or 1e-6, rhs="one", mode=args.mode)
                rows[(p, tau, m)] = run(cfg)
    return format_table1(rows, list(range(1, L + 1)) or [0], args.format)


def _table2(args) -> str:
    L = args.levels if args.levels is not None else 7
    if L < 2:
        raise ValueError("table2 needs --levels >= 2")
    ps = [args.p] if args.p is not None else [1, 2, 3]
    taus = [args.tau] if args.tau is not None else ["one_over_h", 1.0]
    m = args.smooth or 1
    rows = {}
    for p in ps:
        for tau in taus:
            # algebraic error must stay below the discretization error on the finest level
            cfg = RunConfig(p=p, tau=tau, levels=L, smooth=m, tol=args.tol or 1e-10, rhs="manufactured", mode=args.mode)
            rows[(p, tau)] = run(cfg)
    return format_table2(rows, list(range(2, L + 1)), args.format)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "solve":
            text = _solve(args)
        elif args.command == "table1":
            text = _table1(args)
        elif args.command == "table2":
            text = _table2(args)
        else:
            cfg = _config(args, levels=0)
            if not (args.dump_mesh or args.dump_matrix):
                raise ValueError("dump needs --dump-mesh and/or --dump-matrix")
            _dump(args, cfg)
            text = ""
    except NonConvergenceError as exc:
        print(f"hdgmg: {exc}", file=sys.stderr)
        return 1
    except (ValueError, MemoryError) as exc:
        print(f"hdgmg: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: convergence tables, property suites and mesh export."""
from __future__ import annotations

import argparse
import contextlib
import logging
import os
import sys

from .exceptions import ConfigurationError, InvalidArgumentError, SfwgError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_PROPERTY = 4

log = logging.getLogger("sfwg")


def build_parser():
    p = argparse.ArgumentParser(prog="sfwg", description="Stabilizer-free weak Galerkin biharmonic solver.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run a convergence study and write the error table")
    s.add_argument("--family", choices=["triangle", "pentagon"], required=True)
    s.add_argument("--levels", required=True, help="inclusive level range A..B")
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--j", type=int, default=None, help="weak Laplacian degree (default k+2 triangles, k+3 pentagons)")
    s.add_argument("--solution", default="exp_xy")
    s.add_argument("--solver", choices=["cholesky", "cg"], default="cholesky")
    s.add_argument("--tol", type=float, default=1e-12, help="CG relative tolerance")
    s.add_argument("--maxiter", type=int, default=20000, help="CG iteration cap")
    s.add_argument("--condense", action="store_true", help="eliminate cell-interior unknowns first")
    s.add_argument("--alpha", type=float, default=None, help="pentagon offset")
    s.add_argument("--format", choices=["csv", "md"], default="csv")
    s.add_argument("--out", default="-", help="output path, '-' for stdout")

    c = sub.add_parser("check", help="run the property suites")
    c.add_argument("--suite", action="append", choices=["commuting_identity", "norm_equivalence", "spd", "kernel"],
                   help="run only this suite (repeatable)")
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--fault-injection", action="store_true",
                   help="ignore the n_e . n sign in the lifting; the kernel suite must then fail")
    c.add_argument("--exploratory", action="store_true", help="also report j = k+1 behaviour")
    c.add_argument("--json", default=None, help="write the machine-readable summary here")

    m = sub.add_parser("mesh", help="mesh utilities")
    msub = m.add_subparsers(dest="mesh_command", required=True)
    e = msub.add_parser("emit", help="write a generated mesh")
    e.add_argument("--family", choices=["triangle", "pentagon"], required=True)
    e.add_argument("--level", type=int, required=True)
    e.add_argument("--alpha", type=float, default=None)
    e.add_argument("--out", default="-")
    return p


@contextlib.contextmanager
def _output(path):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _thread_limit():
    n = os.environ.get("SFWG_THREADS")
    if not n:
        return contextlib.nullcontext()
    try:
        n = int(n)
        if n < 1:
            raise ValueError
    except ValueError:
        raise ConfigurationError(f"SFWG_THREADS must be a positive integer, got {n!r}") from None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def cmd_solve(args):
    from .mesh import DEFAULT_ALPHA
    from .solver import SolverConfig
    from .study import RunConfig, render, run_convergence

    solver = SolverConfig(method=args.solver, tol=args.tol, maxiter=args.maxiter, condense=args.condense)
    cfg = RunConfig(
        family=args.family, levels=args.levels, k=args.k, j=args.j, solution=args.solution,
        solver=solver, format=args.format, out=args.out,
        alpha=DEFAULT_ALPHA if args.alpha is None else args.alpha,
    )
    report = run_convergence(cfg)
    with _output(args.out) as fh:
        fh.write(render(report, args.format))
    if report.failure:
        print(f"sfwg: solver failure at {report.failure}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_check(args):
    from .properties import PropertyConfig, run_properties

    kw = {"flip_sign_fault": args.fault_injection, "exploratory": args.exploratory}
    if args.seed is not None:
        kw["seed"] = args.seed
    report = run_properties(PropertyConfig(**kw), only=args.suite)
    print(report.summary())
    if args.json:
        with _output(args.json) as fh:
            fh.write(report.to_json() + "\n")
    if not report.passed:
        print("sfwg: failing invariant(s): " + ", ".join(report.failing()), file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


def cmd_mesh(args):
    from .mesh import DEFAULT_ALPHA, GridFamily, generate, write_mesh

    fam = GridFamily(args.family, args.level, DEFAULT_ALPHA if args.alpha is None else args.alpha)
    with _output(args.out) as fh:
        fh.write(write_mesh(generate(fam)))
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "check": cmd_check, "mesh": cmd_mesh}


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit():
            return COMMANDS[args.command](args)
    except (ConfigurationError, InvalidArgumentError) as exc:
        print(f"sfwg: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SfwgError as exc:
        print(f"sfwg: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"sfwg: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

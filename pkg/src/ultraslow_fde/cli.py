"""Command line front end: ``ultraslow-fde {solve1d|solve2d|converge|kernels|selftest}``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import temporal_kernels as tk
from .errors import ArgumentError, SolverError
from .harness import (
    emit_report,
    example1_problem,
    example2_problem,
    read_study_config,
    run_convergence,
    study_from_mapping,
)
from .properties import run_selftest
from .solver_1d import Problem1D, solve_1d
from .solver_2d import H_REF_DEFAULT, Problem2D, solve_2d
from .spatial_kernels import fcd_coeffs_2d, riesz_stencil


def _open_out(path):
    if path in (None, "-"):
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", newline="")


def _custom_1d(args):
    # zero data: the trajectory is identically zero, useful for smoke runs
    return Problem1D(
        args.alpha, args.beta, args.atilde, args.T, args.a, args.b,
        u0=lambda x: np.zeros_like(x), f=lambda x, t: np.zeros_like(x),
    )


def _custom_2d(args):
    return Problem2D(
        args.alpha, args.beta, args.atilde, args.T, args.L,
        u0=lambda X, Y: np.zeros_like(X), source=lambda X, Y, t: np.zeros_like(X),
    )


def _check_example_args(args, a_tilde=1.0, T=2.0):
    if args.atilde != a_tilde or args.T != T:
        raise ArgumentError(f"{args.problem} is posed with a_tilde={a_tilde}, T={T}")


def cmd_solve1d(args):
    if args.problem == "example1":
        _check_example_args(args)
        if (args.a, args.b) != (0.0, 1.0):
            raise ArgumentError("example1 is posed on [0, 1]")
        prob = example1_problem(args.alpha, args.beta)
    else:
        prob = _custom_1d(args)
    traj = solve_1d(prob, args.M, args.N, args.scheme, method=args.method, tol=args.tol)
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "j", "x", "t", "U"])
        for n, t in enumerate(traj.t):
            for j, x in enumerate(traj.x):
                w.writerow([n, j, repr(float(x)), repr(float(t)), repr(float(traj.U[n, j]))])
    return 0


def cmd_solve2d(args):
    if args.problem == "example2":
        _check_example_args(args)
        if args.L != 1.0:
            raise ArgumentError("example2 is posed on (-1, 1)^2")
        prob = example2_problem(args.alpha, args.beta, args.h_ref)
    else:
        prob = _custom_2d(args)
    traj = solve_2d(prob, args.M, args.N, args.scheme, tol=args.tol)
    x = traj.x
    fields = np.array([traj.padded(n) for n in range(traj.N + 1)])
    if args.format == "binary":
        if args.out in (None, "-"):
            raise ArgumentError("binary output needs --out FILE")
        header = {
            "dims": [traj.N + 1, traj.M + 1, traj.M + 1],
            "dtype": "<f8",
            "scheme": args.scheme,
            "alpha": args.alpha,
            "beta": args.beta,
            "a_tilde": args.atilde,
            "T": args.T,
            "L": args.L,
            "M": args.M,
            "N": args.N,
        }
        with open(args.out, "wb") as fh:
            fh.write((json.dumps(header) + "\n").encode())
            fh.write(fields.astype("<f8").tobytes())
        return 0
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "j", "k", "x", "y", "t", "U"])
        for n, t in enumerate(traj.t):
            for j in range(traj.M + 1):
                for k in range(traj.M + 1):
                    w.writerow([n, j, k, repr(float(x[j])), repr(float(x[k])), repr(float(t)), repr(float(fields[n, j, k]))])
    return 0


def read_binary_trajectory(path):
    """Inverse of ``solve2d --format binary``: returns ``(header, array)``."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        data = np.frombuffer(fh.read(), dtype="<f8")
    return header, data.reshape(header["dims"])


def cmd_converge(args):
    values = read_study_config(Path(args.spec).read_text()) if args.spec else {}
    for key in ("dimension", "scheme", "alpha", "beta", "vary", "fixed", "ladder", "problem", "tol", "method", "h_ref"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = str(v)
    spec = study_from_mapping(values)
    report = run_convergence(spec)
    text = emit_report(report, args.format)
    with _open_out(args.out) as fh:
        fh.write(text)
    return 0


def cmd_kernels(args):
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        if args.kind == "temporal":
            grid = tk.TemporalGrid(args.atilde, args.T, args.N, args.alpha)
            row = tk.kernel_row(args.scheme, grid, args.k)
            w.writerow(["i", "c_i"])
            for i, c in enumerate(row.coeffs, start=1):
                w.writerow([i, repr(float(c))])
        elif args.kind == "riesz":
            st = riesz_stencil(args.beta, args.M)
            w.writerow(["k", "r_k"])
            for k, r in enumerate(st.r):
                w.writerow([k, repr(float(r))])
        else:
            st = fcd_coeffs_2d(args.beta, args.M, args.oversample)
            R = args.M - 2
            w.writerow(["j", "k", "a_jk"])
            for j in range(-R, R + 1):
                for k in range(-R, R + 1):
                    w.writerow([j, k, repr(st.a(j, k))])
    return 0


def cmd_selftest(args):
    ok = run_selftest(seed=args.seed, quick=args.quick)
    print("selftest: " + ("all properties hold" if ok else "FAILED"))
    return 0 if ok else 1


def _common_solve(p, problems):
    p.add_argument("--scheme", choices=tk.SCHEMES, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--atilde", type=float, default=1.0)
    p.add_argument("--T", type=float, default=2.0)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--problem", choices=problems, default=problems[0])
    p.add_argument("--tol", type=float, default=1e-13)
    p.add_argument("--out", default="-")


def build_parser():
    parser = argparse.ArgumentParser(prog="ultraslow-fde", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve1d", help="solve the 1D problem and write the trajectory as CSV")
    _common_solve(p, ("example1", "custom"))
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--method", choices=("auto", "dense", "cg", "pcg"), default="auto")
    p.set_defaults(func=cmd_solve1d)

    p = sub.add_parser("solve2d", help="solve the 2D problem on (-L, L)^2")
    _common_solve(p, ("example2", "custom"))
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--h-ref", dest="h_ref", type=float, default=H_REF_DEFAULT)
    p.add_argument("--format", choices=("csv", "binary"), default="csv")
    p.set_defaults(func=cmd_solve2d)

    p = sub.add_parser("converge", help="run a convergence study from a key=value config")
    p.add_argument("--spec", help="study config file; command line flags override it")
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.add_argument("--out", default="-")
    p.add_argument("--dimension", type=int)
    p.add_argument("--scheme", choices=tk.SCHEMES)
    p.add_argument("--alpha", help="comma separated list")
    p.add_argument("--beta", help="comma separated list")
    p.add_argument("--vary", choices=("h", "tau"))
    p.add_argument("--fixed")
    p.add_argument("--ladder", help="comma separated, e.g. 1/8,1/16,1/32")
    p.add_argument("--problem")
    p.add_argument("--tol")
    p.add_argument("--method", choices=("auto", "dense", "cg", "pcg"))
    p.add_argument("--h-ref", dest="h_ref")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("kernels", help="dump weights as CSV")
    p.add_argument("kind", choices=("temporal", "riesz", "laplacian"))
    p.add_argument("--scheme", choices=tk.SCHEMES, default=tk.L2SIGMA)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--atilde", type=float, default=1.0)
    p.add_argument("--T", type=float, default=2.0)
    p.add_argument("--N", type=int, default=10)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--beta", type=float, default=1.5)
    p.add_argument("--M", type=int, default=8)
    p.add_argument("--oversample", type=int)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_kernels)

    p = sub.add_parser("selftest", help="run the property suite")
    p.add_argument("--seed", type=int, default=20240611)
    p.add_argument("--quick", action="store_true")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except (ArgumentError, SolverError) as exc:
        print(f"ultraslow-fde: error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, ArgumentError) else 3


if __name__ == "__main__":
    sys.exit(main())

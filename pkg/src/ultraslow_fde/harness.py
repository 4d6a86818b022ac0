"""Example problems, convergence studies and report output."""

from __future__ import annotations

import configparser
import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import temporal_kernels as tk
from .errors import ArgumentError, SolverError
from .linalg import DEFAULT_CG_TOL
from .solver_1d import Problem1D, error_norm_1d, solve_1d
from .solver_2d import H_REF_DEFAULT, DiscreteSource, Problem2D, error_E_h, error_F_tau, solve_2d
from .spatial_kernels import psi_beta

THREADS_ENV = "ULTRASLOW_FDE_THREADS"
PROBLEMS = {1: ("example1",), 2: ("example2",)}


# --- problems ------------------------------------------------------------------


def _example1_source(alpha, beta):
    g_t = 6.0 / math.gamma(4.0 - alpha)
    psi = psi_beta(beta)
    # binomial expansion of x^4 (1-x)^4 = sum_l C(4,l) (-1)^l x^(4+l), each term
    # differentiated with the Riemann-Liouville power rule from both ends
    coef = [
        (-1) ** l * math.comb(4, l) * math.factorial(4 + l) / math.gamma(5 + l - beta)
        for l in range(5)
    ]
    pw = [4 + l - beta for l in range(5)]

    def f(x, t):
        x = np.asarray(x, dtype=float)
        w = math.log(t)
        temporal = g_t * w ** (3.0 - alpha) * x**4 * (1 - x) ** 4 if w > 0 else np.zeros_like(x)
        spatial = sum(c * (x**p + (1 - x) ** p) for c, p in zip(coef, pw))
        return temporal + w**3 * psi * spatial

    return f


def example1_problem(alpha: float, beta: float) -> Problem1D:
    """``u = (log t)^3 x^4 (1-x)^4`` on [0, 1] x [1, 2] with zero initial data."""
    return Problem1D(
        alpha,
        beta,
        1.0,
        2.0,
        0.0,
        1.0,
        u0=lambda x: np.zeros_like(x),
        f=_example1_source(alpha, beta),
        exact=lambda x, t: math.log(t) ** 3 * np.asarray(x) ** 4 * (1 - np.asarray(x)) ** 4,
        name="example1",
    )


def _example2_profile(X, Y):
    return (1 - X**2) ** 4 * (1 - Y**2) ** 4


def example2_problem(alpha: float, beta: float, h_ref: float = H_REF_DEFAULT) -> Problem2D:
    """``u = (log t)^3 (1-x^2)^4 (1-y^2)^4`` on (-1, 1)^2 x [1, 2], source from a fine mesh."""
    return Problem2D(
        alpha,
        beta,
        1.0,
        2.0,
        1.0,
        u0=lambda X, Y: np.zeros_like(X),
        source=DiscreteSource(_example2_profile, 3.0, h_ref, key="example2"),
        exact=lambda X, Y, t: math.log(t) ** 3 * _example2_profile(X, Y),
        name="example2",
    )


# --- studies -------------------------------------------------------------------


@dataclass(frozen=True)
class StudySpec:
    """One convergence table: every (alpha, beta) pair run over a ladder.

    ``vary`` is ``"h"`` or ``"tau"``; ``fixed`` is the other mesh parameter and
    ``ladder`` the varying one, halving from rung to rung. In 2D each rung ``m``
    reports the self-convergence error between ``2m`` and ``m``.
    """

    dimension: int
    scheme: str
    alphas: tuple
    betas: tuple
    vary: str
    fixed: float
    ladder: tuple
    problem: str = ""
    tol: float = DEFAULT_CG_TOL
    method: str = "auto"
    h_ref: float = H_REF_DEFAULT

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ArgumentError(f"dimension must be 1 or 2, got {self.dimension}")
        if self.scheme not in tk.SCHEMES:
            raise ArgumentError(f"scheme must be one of {tk.SCHEMES}, got {self.scheme!r}")
        if self.vary not in ("h", "tau"):
            raise ArgumentError(f"vary must be 'h' or 'tau', got {self.vary!r}")
        if not self.alphas or not self.betas or not self.ladder:
            raise ArgumentError("alpha, beta and ladder lists must be nonempty")
        problem = self.problem or PROBLEMS[self.dimension][0]
        if problem not in PROBLEMS[self.dimension]:
            raise ArgumentError(f"problem {problem!r} is not available in {self.dimension}D")
        object.__setattr__(self, "problem", problem)
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "ladder", tuple(float(v) for v in self.ladder))
        for a, b in zip(self.ladder, self.ladder[1:]):
            if not math.isclose(a, 2 * b, rel_tol=1e-12):
                raise ArgumentError(f"ladder must halve at each rung, got {a} then {b}")
        if not self.fixed > 0:
            raise ArgumentError(f"fixed mesh parameter must be positive, got {self.fixed}")


@dataclass
class ReportRow:
    mesh: float
    error: float
    order: float | None = None


@dataclass
class ConvergenceBlock:
    alpha: float
    beta: float
    rows: list = field(default_factory=list)
    runtime: float = 0.0
    max_iterations: int = 0


@dataclass
class ConvergenceReport:
    spec: StudySpec
    blocks: list = field(default_factory=list)

    def block(self, alpha, beta) -> ConvergenceBlock:
        for b in self.blocks:
            if math.isclose(b.alpha, alpha) and math.isclose(b.beta, beta):
                return b
        raise KeyError((alpha, beta))


def observed_order(coarse_error: float, fine_error: float) -> float:
    return math.log2(coarse_error / fine_error)


def _count(length, step, what):
    n = length / step
    k = int(round(n))
    if k < 1 or abs(n - k) > 1e-9 * n:
        raise ArgumentError(f"{what}={step} does not divide the interval of length {length}")
    return k


def _make_problem(spec, alpha, beta):
    if spec.problem == "example1":
        return example1_problem(alpha, beta)
    return example2_problem(alpha, beta, spec.h_ref)


def _solve_task(task):
    """One solve; module-level so worker processes can run it."""
    spec, alpha, beta, M, N = task
    prob = _make_problem(spec, alpha, beta)
    try:
        if spec.dimension == 1:
            traj = solve_1d(prob, M, N, spec.scheme, method=spec.method, tol=spec.tol)
            err = error_norm_1d(traj.final, prob.exact(traj.x, prob.T), traj.h)
            return err, max(traj.iterations, default=0)
        traj = solve_2d(prob, M, N, spec.scheme, tol=spec.tol)
        return traj, max(traj.iterations, default=0)
    except SolverError as exc:
        raise SolverError(
            f"alpha={alpha}, beta={beta}, M={M}, N={N}: {exc}", residual=exc.residual, step=exc.step
        ) from exc


def _tasks_for(spec, alpha, beta):
    """Solves needed for one block, keyed by (M, N)."""
    if spec.dimension == 1:
        length, T = 1.0, 1.0  # example1: [0, 1] x [1, 2]
    else:
        length, T = 2.0, 1.0  # example2: (-1, 1)^2 x [1, 2]
    keys = []
    for m in spec.ladder:
        h, tau = (m, spec.fixed) if spec.vary == "h" else (spec.fixed, m)
        M, N = _count(length, h, "h"), _count(T, tau, "tau")
        if spec.dimension == 1:
            keys.append([(M, N)])
        elif spec.vary == "h":
            keys.append([(_count(length, 2 * h, "2h"), N), (M, N)])
        else:
            keys.append([(M, _count(T, 2 * tau, "2tau")), (M, N)])
    return keys


def thread_cap() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ArgumentError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from exc
        if n < 1:
            raise ArgumentError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


def run_convergence(spec: StudySpec, workers: int | None = None) -> ConvergenceReport:
    """Run every (alpha, beta, rung) solve of a study and assemble the report.

    Independent solves run in up to ``workers`` processes (default: the
    ``ULTRASLOW_FDE_THREADS`` cap, else the CPU count).
    """
    workers = thread_cap() if workers is None else max(1, int(workers))
    blocks = [(a, b) for a in spec.alphas for b in spec.betas]
    plan = {ab: _tasks_for(spec, *ab) for ab in blocks}
    unique = []
    for ab, rungs in plan.items():
        for rung in rungs:
            for key in rung:
                task = (spec,) + ab + key
                if task not in unique:
                    unique.append(task)

    results, timings = {}, {}
    if workers > 1 and len(unique) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            t0 = time.perf_counter()
            for task, out in zip(unique, pool.map(_solve_task, unique)):
                results[task] = out
            elapsed = time.perf_counter() - t0
            timings = {task: elapsed / len(unique) for task in unique}
    else:
        for task in unique:
            t0 = time.perf_counter()
            results[task] = _solve_task(task)
            timings[task] = time.perf_counter() - t0

    report = ConvergenceReport(spec)
    for ab, rungs in plan.items():
        block = ConvergenceBlock(*ab)
        for m, rung in zip(spec.ladder, rungs):
            outs = [results[(spec,) + ab + key] for key in rung]
            block.runtime += sum(timings[(spec,) + ab + key] for key in rung)
            block.max_iterations = max([block.max_iterations] + [o[1] for o in outs])
            if spec.dimension == 1:
                err = outs[0][0]
            elif spec.vary == "h":
                err = error_E_h(outs[0][0], outs[1][0])
            else:
                err = error_F_tau(outs[0][0], outs[1][0])
            order = observed_order(block.rows[-1].error, err) if block.rows else None
            block.rows.append(ReportRow(m, err, order))
        report.blocks.append(block)
    return report


# --- output ----------------------------------------------------------------------

CSV_FIELDS = ("alpha", "beta", "mesh", "error", "order")


def _mesh_label(v):
    k = math.log2(v)
    if math.isclose(k, round(k), abs_tol=1e-9):
        return f"1/2^{-round(k)}" if k < 0 else f"2^{round(k)}"
    return f"{v:g}"


def emit_report(report: ConvergenceReport, fmt: str = "csv") -> str:
    """CSV (full precision, blank order on the first rung) or a markdown table.

    The markdown layout puts each block under a heading with columns
    mesh | error | order, errors to 3 significant digits.
    """
    if not report.blocks or not any(b.rows for b in report.blocks):
        raise ArgumentError("report is empty")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for b in report.blocks:
            for r in b.rows:
                w.writerow(
                    [repr(b.alpha), repr(b.beta), repr(r.mesh), repr(r.error), "" if r.order is None else repr(r.order)]
                )
        return buf.getvalue()
    if fmt == "markdown":
        spec = report.spec
        err_name = "Error" if spec.dimension == 1 else ("E(h)" if spec.vary == "h" else "F(tau)")
        fixed_name = "tau" if spec.vary == "h" else "h"
        lines = [
            f"{spec.dimension}D {spec.scheme}, {spec.problem}, {fixed_name} = {spec.fixed:g}",
            "",
        ]
        for b in report.blocks:
            lines += [
                f"alpha = {b.alpha:g}, beta = {b.beta:g}",
                "",
                f"| {spec.vary} | {err_name} | Order |",
                "|---|---|---|",
            ]
            for r in b.rows:
                order = "-" if r.order is None else f"{r.order:.2f}"
                lines.append(f"| {_mesh_label(r.mesh)} | {r.error:.2e} | {order} |")
            lines.append("")
        return "\n".join(lines)
    raise ArgumentError(f"unknown format {fmt!r}; expected csv or markdown")


def parse_report_csv(text: str) -> list:
    """Rows of an emitted CSV as ``(alpha, beta, mesh, error, order-or-None)`` tuples."""
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append(
            (
                float(rec["alpha"]),
                float(rec["beta"]),
                float(rec["mesh"]),
                float(rec["error"]),
                float(rec["order"]) if rec["order"] else None,
            )
        )
    return rows


# --- configuration -----------------------------------------------------------------


def parse_number(text: str) -> float:
    """Accepts ``0.001``, ``1/8`` and ``2^-3``."""
    s = text.strip()
    if "^" in s:
        base, exp = s.split("^", 1)
        return float(base) ** float(exp)
    try:
        return float(Fraction(s))
    except (ValueError, ZeroDivisionError) as exc:
        raise ArgumentError(f"cannot parse number {text!r}") from exc


def parse_list(text: str) -> tuple:
    return tuple(parse_number(v) for v in text.replace(";", ",").split(",") if v.strip())


STUDY_KEYS = {"dimension", "scheme", "alpha", "beta", "vary", "fixed", "ladder", "problem", "tol", "method", "h_ref"}


def read_study_config(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        cp.read_string("[study]\n" + text)
    except configparser.Error as exc:
        raise ArgumentError(f"malformed study config: {exc}") from exc
    values = dict(cp["study"])
    unknown = set(values) - STUDY_KEYS
    if unknown:
        raise ArgumentError(f"unknown config keys: {sorted(unknown)}")
    return values


def study_from_mapping(values: dict) -> StudySpec:
    missing = {"dimension", "scheme", "alpha", "beta", "vary", "fixed", "ladder"} - set(values)
    if missing:
        raise ArgumentError(f"study is missing keys: {sorted(missing)}")
    try:
        dimension = int(values["dimension"])
    except ValueError as exc:
        raise ArgumentError(f"dimension must be 1 or 2, got {values['dimension']!r}") from exc
    kwargs = dict(
        dimension=dimension,
        scheme=str(values["scheme"]),
        alphas=parse_list(str(values["alpha"])),
        betas=parse_list(str(values["beta"])),
        vary=str(values["vary"]),
        fixed=parse_number(str(values["fixed"])),
        ladder=parse_list(str(values["ladder"])),
        problem=str(values.get("problem", "") or ""),
    )
    if values.get("tol"):
        kwargs["tol"] = parse_number(str(values["tol"]))
    if values.get("method"):
        kwargs["method"] = str(values["method"])
    if values.get("h_ref"):
        kwargs["h_ref"] = parse_number(str(values["h_ref"]))
    return StudySpec(**kwargs)


def with_overrides(spec: StudySpec, **changes) -> StudySpec:
    return replace(spec, **{k: v for k, v in changes.items() if v is not None})

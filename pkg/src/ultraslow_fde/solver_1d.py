"""Implicit schemes for the 1D ultra-slow diffusion equation

    CH_D^alpha u - RZ_D^beta u = f   on (a, b) x (a_tilde, T],
    u(a, t) = u(b, t) = 0,  u(x, a_tilde) = u0(x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import temporal_kernels as tk
from ._stepping import CGStepSolver, DenseStepSolver, march
from .errors import ArgumentError
from .linalg import DEFAULT_CG_TOL, DENSE_CAP
from .spatial_kernels import SpatialGrid1D, riesz_lower_constant, riesz_stencil


@dataclass(frozen=True)
class Problem1D:
    alpha: float
    beta: float
    a_tilde: float
    T: float
    a: float
    b: float
    u0: Callable[[np.ndarray], np.ndarray]
    f: Callable[[np.ndarray, float], np.ndarray]
    exact: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    name: str = "custom"

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ArgumentError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 1 < self.beta < 2:
            raise ArgumentError(f"beta must lie in (1, 2), got {self.beta}")
        if not self.a_tilde > 0 or not self.T > self.a_tilde:
            raise ArgumentError("need 0 < a_tilde < T")
        if not self.b > self.a:
            raise ArgumentError("need a < b")


@dataclass
class Trajectory1D:
    scheme: str
    x: np.ndarray
    t: np.ndarray
    U: np.ndarray = field(repr=False)  # (N+1, M+1) including the zero end nodes
    iterations: list = field(default_factory=list, repr=False)
    residuals: list = field(default_factory=list, repr=False)
    warnings: list = field(default_factory=list)

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def final(self) -> np.ndarray:
        return self.U[-1]

    def norms(self) -> np.ndarray:
        """Discrete L2 norm ``||U^n||_h`` for every step."""
        return np.sqrt(self.h * np.sum(self.U[:, 1:-1] ** 2, axis=1))


def _solve(problem, M, N, scheme, method, tol):
    tgrid = tk.TemporalGrid(problem.a_tilde, problem.T, N, problem.alpha)
    sgrid = SpatialGrid1D(problem.a, problem.b, M)
    stencil = riesz_stencil(problem.beta, M)
    x = sgrid.x
    xi = x[1:-1]
    theta = tgrid.sigma if scheme == tk.L2SIGMA else 1.0

    if method == "auto":
        method = "dense" if M - 1 <= DENSE_CAP else "pcg"
    if method in ("cg", "pcg"):
        step_solver = CGStepSolver(
            stencil.operator(sgrid.h, scale=theta), tol=tol, precondition=method == "pcg"
        )
    elif method == "dense":
        step_solver = DenseStepSolver(theta * sgrid.h ** (-problem.beta) * stencil.matrix())
    else:
        raise ArgumentError(f"unknown linear solver {method!r}")

    u0 = np.asarray(problem.u0(xi), dtype=float) * np.ones_like(xi)
    U, its, res, notes = march(
        scheme,
        tgrid,
        u0,
        lambda t: np.asarray(problem.f(xi, t), dtype=float) * np.ones_like(xi),
        stencil.operator(sgrid.h),
        step_solver,
    )
    full = np.zeros((N + 1, M + 1))
    full[:, 1:-1] = U
    return Trajectory1D(scheme, x, tgrid.nodes, full, its, res, notes)


def solve_l2sigma_1d(problem: Problem1D, M: int, N: int, method: str = "auto", tol: float = DEFAULT_CG_TOL):
    """L2-1sigma scheme: each step is centred at ``t_{n+sigma}``.

    ``method`` picks the step solver: ``"cg"`` (FFT matvec), ``"pcg"`` (the
    same with a circulant preconditioner), ``"dense"`` (one eigendecomposition
    reused by all steps) or ``"auto"`` (dense while the interior has at most
    2048 nodes, pcg beyond).
    """
    return _solve(problem, M, N, tk.L2SIGMA, method, tol)


def solve_l12_1d(problem: Problem1D, M: int, N: int, method: str = "auto", tol: float = DEFAULT_CG_TOL):
    """L1-2 scheme at the grid points ``t_n``; warns when alpha >= 0.3738."""
    return _solve(problem, M, N, tk.L12, method, tol)


def solve_1d(problem, M, N, scheme, method="auto", tol=DEFAULT_CG_TOL) -> Trajectory1D:
    if scheme not in tk.SCHEMES:
        raise ArgumentError(f"unknown scheme {scheme!r}")
    return _solve(problem, M, N, scheme, method, tol)


def error_norm_1d(U_final, exact_final, h: float) -> float:
    """``sqrt(h * sum_{j=1}^{M-1} |U_j - u_j|^2)`` over the interior nodes."""
    U = np.asarray(U_final, dtype=float)
    u = np.asarray(exact_final, dtype=float)
    if U.shape != u.shape or U.ndim != 1 or U.size < 3:
        raise ArgumentError(f"field shapes {U.shape} and {u.shape} do not match")
    diff = U[1:-1] - u[1:-1]
    return math.sqrt(h * float(np.sum(diff**2)))


def apriori_bound_l2sigma(problem: Problem1D, traj: Trajectory1D) -> np.ndarray:
    """Right-hand side of the L2-1sigma energy estimate for ``||U^n||_h^2``, n = 0..N."""
    N = len(traj.t) - 1
    tgrid = tk.TemporalGrid(problem.a_tilde, problem.T, N, problem.alpha)
    xi = traj.x[1:-1]
    h = traj.h
    const = (
        (problem.b - problem.a) ** problem.beta
        * math.gamma(1 - problem.alpha)
        / (riesz_lower_constant(problem.beta) * problem.a_tilde**problem.alpha)
    )
    terms = []
    for k in range(N):
        tk_s = float(tgrid.t(k + tgrid.sigma))
        fk = np.asarray(problem.f(xi, tk_s), dtype=float) * np.ones_like(xi)
        terms.append(((k + tgrid.sigma) * tgrid.tau) ** problem.alpha * h * np.sum(fk**2))
    u0sq = h * np.sum(traj.U[0, 1:-1] ** 2)
    running = np.maximum.accumulate(np.array(terms)) if terms else np.array([])
    return np.concatenate([[u0sq], u0sq + const * running])


def l12_constant(alpha: float, a_tilde: float) -> float:
    """``C = max(6 Gamma(1-alpha), 3 Gamma(2-alpha)/alpha) / a_tilde**alpha``."""
    return max(6 * math.gamma(1 - alpha), 3 * math.gamma(2 - alpha) / alpha) / a_tilde**alpha


def apriori_bound_l12(problem: Problem1D, traj: Trajectory1D) -> np.ndarray:
    """Right-hand side of the L1-2 estimate for ``||U^n||_h``, n = 0..N."""
    N = len(traj.t) - 1
    tgrid = tk.TemporalGrid(problem.a_tilde, problem.T, N, problem.alpha)
    xi = traj.x[1:-1]
    h = traj.h
    C = l12_constant(problem.alpha, problem.a_tilde)
    terms = []
    for k in range(1, N + 1):
        fk = np.asarray(problem.f(xi, float(tgrid.t(k))), dtype=float) * np.ones_like(xi)
        terms.append((k * tgrid.tau) ** problem.alpha * math.sqrt(h * np.sum(fk**2)))
    u0 = math.sqrt(h * np.sum(traj.U[0, 1:-1] ** 2))
    return np.concatenate([[u0], u0 + C * np.maximum.accumulate(np.array(terms))])

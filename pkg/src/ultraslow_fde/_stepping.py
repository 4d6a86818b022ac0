"""Time marching shared by the 1D and 2D solvers.

Both schemes reduce each step to ``(c*I + theta*K) U_new = rhs`` where ``K`` is
the fixed spatial stiffness operator (``h**-beta`` times the Toeplitz or BTTB
matrix), ``c`` is the last weight of the current kernel row and ``theta`` is
``sigma`` (L2-1sigma) or 1 (L1-2). Only ``c`` changes from step to step.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np

from . import temporal_kernels as tk
from .errors import ArgumentError, SolverError
from .linalg import DEFAULT_CG_TOL, ShiftedSymmetricSolver, cg_solve

logger = logging.getLogger(__name__)


class StabilityWarning(UserWarning):
    """L1-2 run outside the alpha range covered by the stability theory."""


class CGStepSolver:
    """CG on ``shift*I + op`` where ``op`` already carries the ``theta`` factor."""

    def __init__(self, scaled_stiffness, tol=DEFAULT_CG_TOL, maxit=None, precondition=False):
        self._op = scaled_stiffness
        self.tol = tol
        self.maxit = maxit
        self.precondition = precondition

    def __call__(self, shift, rhs, x0):
        op = self._op.with_shift(shift)
        pc = op.circulant_preconditioner() if self.precondition else None
        res = cg_solve(op, rhs, tol=self.tol, maxit=self.maxit, x0=x0, precond=pc)
        return res.solution, res.iterations, res.residual


class DenseStepSolver:
    """Eigendecomposition of the scaled stiffness matrix, reused for every shift."""

    def __init__(self, scaled_stiffness_matrix):
        self._eig = ShiftedSymmetricSolver(scaled_stiffness_matrix)

    def __call__(self, shift, rhs, x0):
        x = self._eig.solve(shift, 1.0, rhs.ravel()).reshape(rhs.shape)
        return x, 0, 0.0


def march(scheme, tgrid, u0, source, stiffness, step_solver):
    """Run a scheme from ``u0`` over all ``N`` steps of ``tgrid``.

    ``source(t)`` returns the source field at time ``t``; ``stiffness.matvec``
    applies ``K`` to a field. Returns ``(U, iterations, residuals, warnings)``
    with ``U`` of shape ``(N+1,) + u0.shape``.
    """
    N = tgrid.N
    shape = u0.shape
    U = np.zeros((N + 1,) + shape)
    U[0] = u0
    # D[i] = U^i - U^{i-1}, flattened for the history contraction
    D = np.zeros((N + 1, u0.size))
    iterations, residuals, notes = [], [], []

    if scheme == tk.L12 and tgrid.alpha >= tk.L12_ALPHA_LIMIT:
        msg = (
            f"L1-2 with alpha={tgrid.alpha} >= {tk.L12_ALPHA_LIMIT}: "
            "stability is not covered by theory"
        )
        warnings.warn(msg, StabilityWarning, stacklevel=3)
        notes.append(msg)

    if scheme == tk.L2SIGMA:
        sigma = tgrid.sigma
        for n in range(N):
            c = tk.l2sigma_row(tgrid, n).coeffs
            rhs = source(float(tgrid.t(n + sigma))) + c[-1] * U[n]
            if n:
                rhs -= (c[:-1] @ D[1 : n + 1]).reshape(shape)
            rhs -= (1.0 - sigma) * stiffness.matvec(U[n])
            x0 = 2.0 * U[n] - U[n - 1] if n else U[n]
            U[n + 1], its, res = _solve(step_solver, c[-1], rhs, x0, n + 1)
            D[n + 1] = (U[n + 1] - U[n]).ravel()
            iterations.append(its)
            residuals.append(res)
    elif scheme == tk.L12:
        for n in range(1, N + 1):
            c = tk.l12_row(tgrid, n).coeffs
            rhs = source(float(tgrid.t(n))) + c[-1] * U[n - 1]
            if n > 1:
                rhs -= (c[:-1] @ D[1:n]).reshape(shape)
            x0 = 2.0 * U[n - 1] - U[n - 2] if n > 1 else U[n - 1]
            U[n], its, res = _solve(step_solver, c[-1], rhs, x0, n)
            D[n] = (U[n] - U[n - 1]).ravel()
            iterations.append(its)
            residuals.append(res)
    else:
        raise ArgumentError(f"unknown scheme {scheme!r}; expected one of {tk.SCHEMES}")
    return U, iterations, residuals, notes


def _solve(step_solver, shift, rhs, x0, step):
    try:
        return step_solver(shift, rhs, x0)
    except SolverError as exc:
        raise SolverError(f"step {step}: {exc}", residual=exc.residual, step=step) from exc

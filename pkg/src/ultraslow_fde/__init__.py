"""Finite difference solvers for ultra-slow diffusion with a Caputo-Hadamard time derivative.

The time derivative is discretized with the L2-1sigma or L1-2 weights; the
space operator is the Riesz derivative (1D, weighted and shifted
Grunwald-Letnikov stencil) or the fractional Laplacian (2D, fractional
centered differences). Linear systems are Toeplitz / BTTB and are solved with
FFT-based conjugate gradients or a reused dense eigendecomposition.
"""

from ._stepping import StabilityWarning
from .errors import ArgumentError, SolverError
from .harness import (
    ConvergenceReport,
    StudySpec,
    emit_report,
    example1_problem,
    example2_problem,
    run_convergence,
)
from .solver_1d import Problem1D, Trajectory1D, error_norm_1d, solve_1d, solve_l12_1d, solve_l2sigma_1d
from .solver_2d import (
    DiscreteSource,
    Problem2D,
    Trajectory2D,
    compute_source_fh,
    error_E_h,
    error_F_tau,
    solve_2d,
    solve_l12_2d,
    solve_l2sigma_2d,
)
from .temporal_kernels import L12, L2SIGMA, TemporalGrid, apply_row, ch_derivative_logpower, kernel_row

__version__ = "0.1.0"

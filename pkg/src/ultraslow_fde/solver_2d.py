"""Implicit schemes for the 2D ultra-slow diffusion equation

    CH_D^alpha u + (-Delta)^(beta/2) u = f   on (-L, L)^2 x (a_tilde, T],

with ``u = 0`` outside the square. Fields are stored on the ``(M-1) x (M-1)``
interior nodes, row index along x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import temporal_kernels as tk
from ._stepping import CGStepSolver, march
from .errors import ArgumentError
from .linalg import DEFAULT_CG_TOL
from .spatial_kernels import SpatialGrid2D, fcd_coeffs_2d

H_REF_DEFAULT = 2.0**-8


@dataclass(frozen=True)
class DiscreteSource:
    """Source built from a separable exact solution ``(log(t/a_tilde))**p * profile(x, y)``.

    The temporal part is differentiated in closed form; the spatial part is the
    discrete fractional Laplacian of ``profile`` on a mesh of width ``h_ref``.
    """

    profile: Callable[[np.ndarray, np.ndarray], np.ndarray]
    power: float = 3.0
    h_ref: float = H_REF_DEFAULT
    key: str = ""  # cache key for the fine-mesh evaluation; empty disables caching


@dataclass(frozen=True)
class Problem2D:
    alpha: float
    beta: float
    a_tilde: float
    T: float
    L: float
    u0: Callable[[np.ndarray, np.ndarray], np.ndarray]
    source: object  # f(x, y, t) or DiscreteSource
    exact: Optional[Callable[[np.ndarray, np.ndarray, float], np.ndarray]] = None
    name: str = "custom"

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ArgumentError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 1 < self.beta < 2:
            raise ArgumentError(f"beta must lie in (1, 2), got {self.beta}")
        if not self.a_tilde > 0 or not self.T > self.a_tilde:
            raise ArgumentError("need 0 < a_tilde < T")
        if not self.L > 0:
            raise ArgumentError(f"L must be positive, got {self.L}")


@dataclass
class Trajectory2D:
    scheme: str
    L: float
    M: int
    t: np.ndarray
    U: np.ndarray = field(repr=False)  # (N+1, M-1, M-1)
    iterations: list = field(default_factory=list, repr=False)
    residuals: list = field(default_factory=list, repr=False)
    warnings: list = field(default_factory=list)

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.M

    @property
    def x(self) -> np.ndarray:
        return -self.L + np.arange(self.M + 1) * self.h

    @property
    def N(self) -> int:
        return len(self.t) - 1

    def padded(self, n: int = -1) -> np.ndarray:
        """Step ``n`` on all ``(M+1)^2`` nodes, boundary entries zero."""
        out = np.zeros((self.M + 1, self.M + 1))
        out[1:-1, 1:-1] = self.U[n]
        return out

    def norms(self) -> np.ndarray:
        return self.h * np.sqrt(np.sum(self.U**2, axis=(1, 2)))


def _ratio(h_coarse, h_fine):
    r = h_coarse / h_fine
    k = int(round(r))
    if k < 1 or abs(r - k) > 1e-9 * r:
        raise ArgumentError(f"mesh width {h_coarse} is not an integer multiple of {h_fine}")
    return k


@lru_cache(maxsize=32)
def _fine_laplacian(key, beta, L, h_ref):
    return _fine_laplacian_uncached(_PROFILES[key], beta, L, h_ref)


_PROFILES: dict = {}


def _fine_laplacian_uncached(profile, beta, L, h_ref):
    M_ref = _ratio(2.0 * L, h_ref)
    grid = SpatialGrid2D(L, M_ref)
    X, Y = grid.interior_mesh()
    v = np.asarray(profile(X, Y), dtype=float)
    out = np.zeros((M_ref + 1, M_ref + 1))
    out[1:-1, 1:-1] = fcd_coeffs_2d(beta, M_ref).operator(grid.h).matvec(v)
    out.setflags(write=False)
    return out


def spatial_source(src: DiscreteSource, beta: float, L: float, M: int) -> np.ndarray:
    """``(-Delta_{h_ref})^(beta/2) profile`` restricted to the interior nodes of an M-mesh."""
    h = 2.0 * L / M
    step = _ratio(h, src.h_ref)
    if src.key:
        _PROFILES.setdefault(src.key, src.profile)
        fine = _fine_laplacian(src.key, float(beta), float(L), float(src.h_ref))
    else:
        fine = _fine_laplacian_uncached(src.profile, beta, L, src.h_ref)
    return fine[::step, ::step][1:-1, 1:-1]


def _interior_mesh(L, M):
    h = 2.0 * L / M
    xi = -L + np.arange(1, M) * h
    return np.meshgrid(xi, xi, indexing="ij")


def _discrete_source(src: DiscreteSource, alpha, beta, a_tilde, L, M):
    X, Y = _interior_mesh(L, M)
    spatial = spatial_source(src, beta, L, M)
    prof = np.asarray(src.profile(X, Y), dtype=float)

    def f(t):
        w = math.log(t / a_tilde)
        # the temporal factor and its derivative both vanish at t = a_tilde
        dt = tk.ch_derivative_logpower(src.power, alpha, a_tilde, t) if w > 0 else 0.0
        return dt * prof + w**src.power * spatial

    return f


def compute_source_fh(src: DiscreteSource, alpha, beta, a_tilde, L, M, times) -> np.ndarray:
    """``f_h`` at the interior nodes of an M-mesh for each time in ``times``.

    Returns shape ``(len(times), M-1, M-1)``.
    """
    f = _discrete_source(src, alpha, beta, a_tilde, L, M)
    return np.array([f(float(t)) for t in np.atleast_1d(times)])


def _source_fn(problem, M):
    X, Y = _interior_mesh(problem.L, M)
    src = problem.source
    if isinstance(src, DiscreteSource):
        f = _discrete_source(src, problem.alpha, problem.beta, problem.a_tilde, problem.L, M)
        return X, Y, f
    if callable(src):
        return X, Y, lambda t: np.asarray(src(X, Y, t), dtype=float) * np.ones_like(X)
    raise ArgumentError("source must be callable or a DiscreteSource")


def _solve(problem, M, N, scheme, tol, maxit=None):
    if scheme not in tk.SCHEMES:
        raise ArgumentError(f"unknown scheme {scheme!r}")
    tgrid = tk.TemporalGrid(problem.a_tilde, problem.T, N, problem.alpha)
    sgrid = SpatialGrid2D(problem.L, M)
    stencil = fcd_coeffs_2d(problem.beta, M)
    theta = tgrid.sigma if scheme == tk.L2SIGMA else 1.0
    X, Y, f = _source_fn(problem, M)
    u0 = np.asarray(problem.u0(X, Y), dtype=float) * np.ones_like(X)
    U, its, res, notes = march(
        scheme,
        tgrid,
        u0,
        f,
        stencil.operator(sgrid.h),
        CGStepSolver(stencil.operator(sgrid.h, scale=theta), tol=tol, maxit=maxit),
    )
    return Trajectory2D(scheme, problem.L, M, tgrid.nodes, U, its, res, notes)


def solve_l2sigma_2d(problem: Problem2D, M: int, N: int, tol: float = DEFAULT_CG_TOL, maxit=None):
    """L2-1sigma scheme with BTTB-CG at every step."""
    return _solve(problem, M, N, tk.L2SIGMA, tol, maxit)


def solve_l12_2d(problem: Problem2D, M: int, N: int, tol: float = DEFAULT_CG_TOL, maxit=None):
    """L1-2 scheme with BTTB-CG at every step; warns when alpha >= 0.3738."""
    return _solve(problem, M, N, tk.L12, tol, maxit)


def solve_2d(problem, M, N, scheme, tol=DEFAULT_CG_TOL, maxit=None) -> Trajectory2D:
    return _solve(problem, M, N, scheme, tol, maxit)


def error_E_h(coarse: Trajectory2D, fine: Trajectory2D) -> float:
    """Spatial self-convergence error between meshes ``h`` and ``h/2`` at the final time."""
    if fine.M != 2 * coarse.M or not math.isclose(fine.L, coarse.L):
        raise ArgumentError(f"fine mesh M={fine.M} does not halve coarse mesh M={coarse.M}")
    if not math.isclose(fine.t[-1], coarse.t[-1]):
        raise ArgumentError("final times differ")
    diff = coarse.padded() - fine.padded()[::2, ::2]
    return coarse.h * math.sqrt(float(np.sum(diff**2)))


def error_F_tau(coarse: Trajectory2D, fine: Trajectory2D) -> float:
    """Temporal self-convergence error between steps ``tau`` and ``tau/2`` at the final time."""
    if fine.M != coarse.M or not math.isclose(fine.L, coarse.L):
        raise ArgumentError("trajectories use different spatial meshes")
    if not math.isclose(fine.t[-1], coarse.t[-1]):
        raise ArgumentError("final times differ")
    diff = coarse.padded() - fine.padded()
    return coarse.h * math.sqrt(float(np.sum(diff**2)))

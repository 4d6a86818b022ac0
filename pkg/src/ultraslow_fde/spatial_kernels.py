"""Spatial stencils: the 1D Riesz derivative and the 2D fractional Laplacian.

1D: the weighted and shifted Grunwald-Letnikov formula with shifts (1, 0)
collapses to a symmetric stencil ``r_k``; ``h**-beta * sum_k r_{j-k} v_k``
approximates *minus* the Riesz derivative to second order.

2D: the fractional centered difference with weights ``a_{j,k}``, the Fourier
coefficients of ``[4 sin^2(x/2) + 4 sin^2(y/2)]**(beta/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .linalg import BTTBOperator, SymmetricToeplitzOperator


def _check_beta(beta):
    if not 1 < beta < 2:
        raise ArgumentError(f"beta must lie in (1, 2), got {beta}")


def psi_beta(beta: float) -> float:
    return 1.0 / (2.0 * math.cos(math.pi * beta / 2.0))


def riesz_lower_constant(beta: float) -> float:
    """``c_*`` in the partial-sum bound ``sum_{|k|<m} r_k > c_* / m**beta``."""
    _check_beta(beta)
    return (
        (1 - beta) * (2 - beta) * (3 - beta) * 4.0**beta * math.exp(-9.0 / 4.0) * psi_beta(beta) / 3.0
    )


@dataclass(frozen=True)
class SpatialGrid1D:
    a: float
    b: float
    M: int

    def __post_init__(self):
        if not self.b > self.a:
            raise ArgumentError(f"need b > a, got a={self.a}, b={self.b}")
        if int(self.M) != self.M or self.M < 2:
            raise ArgumentError(f"M must be an integer >= 2, got {self.M}")
        object.__setattr__(self, "M", int(self.M))

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.M

    @property
    def x(self) -> np.ndarray:
        return self.a + np.arange(self.M + 1) * self.h


@dataclass(frozen=True)
class SpatialGrid2D:
    """Square ``(-L, L)^2`` with ``M`` cells per axis."""

    L: float
    M: int

    def __post_init__(self):
        if not self.L > 0:
            raise ArgumentError(f"L must be positive, got {self.L}")
        if int(self.M) != self.M or self.M < 2:
            raise ArgumentError(f"M must be an integer >= 2, got {self.M}")
        object.__setattr__(self, "M", int(self.M))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.M

    @property
    def x(self) -> np.ndarray:
        return -self.L + np.arange(self.M + 1) * self.h

    def interior_mesh(self):
        xi = self.x[1:-1]
        return np.meshgrid(xi, xi, indexing="ij")


def gl_weights(beta: float, n: int) -> np.ndarray:
    """Grunwald-Letnikov weights ``g_0..g_n`` of order beta."""
    _check_beta(beta)
    if n < 0:
        raise ArgumentError(f"n must be nonnegative, got {n}")
    factors = np.ones(n + 1)
    k = np.arange(1, n + 1)
    factors[1:] = (k - 1.0 - beta) / k
    return np.cumprod(factors)


@dataclass(frozen=True)
class RieszStencil:
    beta: float
    M: int
    r: np.ndarray = field(repr=False)

    @property
    def psi_beta(self) -> float:
        return psi_beta(self.beta)

    def operator(self, h: float, diagonal_shift: float = 0.0, scale: float = 1.0):
        """``shift*I + scale*h**-beta*R`` on the ``M-1`` interior nodes."""
        col = self.r[: self.M - 1] * (scale * h ** (-self.beta))
        return SymmetricToeplitzOperator(col, diagonal_shift)

    def matrix(self) -> np.ndarray:
        idx = np.arange(self.M - 1)
        return self.r[np.abs(idx[:, None] - idx[None, :])]


def riesz_stencil(beta: float, M: int) -> RieszStencil:
    _check_beta(beta)
    if int(M) != M or M < 2:
        raise ArgumentError(f"M must be an integer >= 2, got {M}")
    M = int(M)
    g = gl_weights(beta, M + 1)
    psi = psi_beta(beta)
    w1, w2 = beta / 2.0, (2.0 - beta) / 2.0
    r = np.empty(M + 1)
    r[0] = 2.0 * psi * (w1 * g[1] + w2 * g[0])
    r[1] = psi * (w1 * g[0] + w2 * g[1] + w1 * g[2])
    r[2:] = psi * (w1 * g[3 : M + 2] + w2 * g[2 : M + 1])
    r.setflags(write=False)
    return RieszStencil(beta, M, r)


def riesz_apply(stencil: RieszStencil, grid: SpatialGrid1D, v, method: str = "fft") -> np.ndarray:
    """``w_j = h**-beta * sum_{k=0}^{M} r_{j-k} v_k`` for the interior nodes ``j = 1..M-1``.

    ``v`` holds all ``M+1`` nodal values with zero end entries.
    """
    v = np.asarray(v, dtype=float)
    if grid.M != stencil.M or v.shape != (grid.M + 1,):
        raise ArgumentError(
            f"field of shape {v.shape} does not match grid M={grid.M} / stencil M={stencil.M}"
        )
    if v[0] != 0 or v[-1] != 0:
        raise ArgumentError("boundary entries must be zero")
    inner = v[1:-1]
    if method == "fft":
        return stencil.operator(grid.h).matvec(inner)
    if method == "direct":
        return grid.h ** (-stencil.beta) * (stencil.matrix() @ inner)
    raise ArgumentError(f"unknown method {method!r}")


@dataclass(frozen=True)
class LaplacianStencil2D:
    """Weights ``a_{j,k}`` for ``|j|, |k| <= M-2``; ``table[M-2+j, M-2+k] = a_{j,k}``."""

    beta: float
    M: int
    oversample: int
    table: np.ndarray = field(repr=False)

    def a(self, j: int, k: int) -> float:
        R = self.M - 2
        return float(self.table[R + j, R + k])

    def operator(self, h: float, diagonal_shift: float = 0.0, scale: float = 1.0) -> BTTBOperator:
        """``shift*I + scale*h**-beta*A`` on the ``(M-1)^2`` interior nodes."""
        return BTTBOperator(self.table, scale * h ** (-self.beta), diagonal_shift)


def default_oversample(M: int) -> int:
    # the aliasing error grows with R/K; 16M keeps K -> 2K changes near 1e-12
    need = max(1024, 16 * int(M))
    return 1 << (need - 1).bit_length()


def _sampled_fourier_coeffs(beta, K, R):
    eta = 2.0 * np.pi * np.fft.fftfreq(K)
    eta_half = eta[: K // 2 + 1].copy()
    eta_half[-1] = np.pi
    s1 = 4.0 * np.sin(eta / 2.0) ** 2
    s2 = 4.0 * np.sin(eta_half / 2.0) ** 2
    symbol = (s1[:, None] + s2[None, :]) ** (beta / 2.0)
    # symbol is real and even, so its inverse DFT is real and equals the forward one
    coeffs = np.fft.irfft2(symbol, s=(K, K))
    idx = np.arange(-R, R + 1) % K
    return coeffs[np.ix_(idx, idx)]


def fcd_coeffs_2d(beta: float, M: int, oversample: int | None = None) -> LaplacianStencil2D:
    """Fractional centered difference weights from a K x K sampling of the symbol.

    The plain DFT of the symbol aliases as ``K**-(2+beta)`` because of the
    ``|eta|**beta`` cusp at the origin; one Richardson step against the K/2
    sampling removes that leading term.
    """
    _check_beta(beta)
    if int(M) != M or M < 2:
        raise ArgumentError(f"M must be an integer >= 2, got {M}")
    M = int(M)
    K = default_oversample(M) if oversample is None else int(oversample)
    if K & (K - 1) or K < max(512, 4 * M):
        raise ArgumentError(
            f"oversample K={K} must be a power of two >= max(512, 4M) = {max(512, 4 * M)}"
        )
    R = max(M - 2, 0)
    fine = _sampled_fourier_coeffs(beta, K, R)
    coarse = _sampled_fourier_coeffs(beta, K // 2, R)
    table = fine + (fine - coarse) / (2.0 ** (2.0 + beta) - 1.0)
    # enforce a_{j,k} = a_{k,j} = a_{-j,k} = a_{j,-k} exactly by mirroring one quadrant
    q = table[R:, R:]
    q = (q + q.T) / 2.0
    idx = np.abs(np.arange(-R, R + 1))
    table = q[np.ix_(idx, idx)]
    table.setflags(write=False)
    return LaplacianStencil2D(beta, M, K, table)


def frac_laplacian_apply_2d(stencil: LaplacianStencil2D, grid: SpatialGrid2D, v, method: str = "fft"):
    """``h**-beta * (A v)`` for an interior field ``v`` of shape ``(M-1, M-1)``.

    Values outside the interior are taken to be zero.
    """
    v = np.asarray(v, dtype=float)
    n = grid.M - 1
    if grid.M != stencil.M or v.shape != (n, n):
        raise ArgumentError(
            f"field of shape {v.shape} does not match grid M={grid.M} / stencil M={stencil.M}"
        )
    if method == "fft":
        return stencil.operator(grid.h).matvec(v)
    if method == "direct":
        return grid.h ** (-stencil.beta) * (bttb_dense(stencil.table, n) @ v.ravel()).reshape(n, n)
    raise ArgumentError(f"unknown method {method!r}")


def bttb_dense(table: np.ndarray, n: int) -> np.ndarray:
    """Dense ``n^2 x n^2`` BTTB matrix with entries ``a_{j1-j2, k1-k2}`` (row-major fields)."""
    R = (table.shape[0] - 1) // 2
    idx = np.arange(n)
    dj = idx[:, None] - idx[None, :]
    big = table[R + dj[:, None, :, None], R + dj[None, :, None, :]]
    return big.reshape(n * n, n * n)

"""Convolution weights for the Caputo-Hadamard derivative of order 0 < alpha < 1.

Two discretizations on the uniform grid ``t_k = a_tilde + k*tau`` are provided:

* ``l2sigma_row`` -- the L2-1sigma weights, which evaluate the derivative at the
  offset point ``t_{k+sigma}`` with ``sigma = 1 - alpha/2``;
* ``l12_row`` -- the L1-2 weights, which evaluate it at the grid point ``t_k``.

Both produce a row ``c_1..c_m`` such that the derivative is approximated by
``sum_i c_i * (phi(t_i) - phi(t_{i-1}))`` (see :func:`apply_row`).

All logarithms of time ratios go through ``log1p`` and all differences of
powers of nearby logarithms are evaluated in a cancellation-free form, so the
weights keep close to full double precision even for N in the thousands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError

L2SIGMA = "l2sigma"
L12 = "l12"
SCHEMES = (L2SIGMA, L12)

# Alpha above which the L1-2 stability analysis no longer applies.
L12_ALPHA_LIMIT = 0.3738

_SERIES_SWITCH = 0.25
_SERIES_TERMS = 40


@dataclass(frozen=True)
class TemporalGrid:
    """Uniform time grid on ``[a_tilde, T]`` together with the derivative order."""

    a_tilde: float
    T: float
    N: int
    alpha: float

    def __post_init__(self):
        if not self.a_tilde > 0:
            raise ArgumentError(f"a_tilde must be positive, got {self.a_tilde}")
        if not self.T > self.a_tilde:
            raise ArgumentError(f"T must exceed a_tilde, got T={self.T}, a_tilde={self.a_tilde}")
        if int(self.N) != self.N or self.N < 1:
            raise ArgumentError(f"N must be a positive integer, got {self.N}")
        if not 0 < self.alpha < 1:
            raise ArgumentError(f"alpha must lie in (0, 1), got {self.alpha}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def tau(self) -> float:
        return (self.T - self.a_tilde) / self.N

    @property
    def sigma(self) -> float:
        return 1.0 - self.alpha / 2.0

    def t(self, k):
        """Node ``t_k``; ``k`` may be fractional (``t(k + sigma)``) or an array."""
        return self.a_tilde + np.asarray(k, dtype=float) * self.tau

    @property
    def nodes(self) -> np.ndarray:
        return self.t(np.arange(self.N + 1))


@dataclass(frozen=True)
class KernelRow:
    scheme: str
    k: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __len__(self):
        return len(self.coeffs)


def _pow(x, p):
    """``x**p`` through ``exp(p*log(x))``; zero maps to zero (p > 0)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(p * np.log(x[pos]))
    return out


def _pow_diff(x, y, d, p):
    """``x**p - y**p`` for ``x = y + d`` with ``d > 0``, without cancellation."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = np.asarray(d, dtype=float)
    out = _pow(x, p)
    pos = y > 0
    out[pos] = _pow(y[pos], p) * np.expm1(p * np.log1p(d[pos] / y[pos]))
    return out


def _defect_series_coeffs(alpha):
    # phi(eps) = sum_{n>=3} (2-n)/n * binom(1-alpha, n-1) * eps**n
    q = 1.0 - alpha
    coeffs = np.zeros(_SERIES_TERMS + 1)
    binom = 1.0  # binom(q, 0)
    for m in range(1, _SERIES_TERMS):
        binom *= (q - m + 1) / m
        n = m + 1
        if n >= 3:
            coeffs[n] = (2.0 - n) / n * binom
    return coeffs


def _trapezoid_defect(x, y, d, alpha):
    """``2/(2-a)*(x^(2-a) - y^(2-a)) - d*(x^(1-a) + y^(1-a))`` with ``x = y + d``.

    This is twice the trapezoid-rule defect of ``s**(1-alpha)`` on ``[y, x]``
    and is O(d**3); for ``d << y`` it is summed from its binomial series.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = np.asarray(d, dtype=float)
    out = 2.0 / (2.0 - alpha) * _pow_diff(x, y, d, 2.0 - alpha) - d * (
        _pow(x, 1.0 - alpha) + _pow(y, 1.0 - alpha)
    )
    safe_y = np.where(y > 0, y, 1.0)
    eps = np.where(y > 0, d / safe_y, np.inf)
    small = eps < _SERIES_SWITCH
    if np.any(small):
        coeffs = _defect_series_coeffs(alpha)
        e = eps[small]
        # Horner from the top term down
        acc = np.zeros_like(e)
        for c in coeffs[::-1]:
            acc = acc * e + c
        out[small] = _pow(y[small], 2.0 - alpha) * acc
    return out


def _check_grid(grid):
    if not isinstance(grid, TemporalGrid):
        raise ArgumentError("grid must be a TemporalGrid")


def _log_steps(grid, upto):
    """``log(t_i / t_{i-1})`` for i = 1..upto, indexed so that ``d[i]`` is step i."""
    t = grid.t(np.arange(upto + 1))
    d = np.empty(upto + 1)
    d[0] = np.nan
    d[1:] = np.log1p(grid.tau / t[:-1])
    return t, d


def l2sigma_row(grid: TemporalGrid, k: int) -> KernelRow:
    """L2-1sigma weights ``c_{1,k} .. c_{k+1,k}`` for the derivative at ``t_{k+sigma}``."""
    _check_grid(grid)
    if int(k) != k or not 0 <= k <= grid.N - 1:
        raise ArgumentError(f"step index k={k} outside [0, {grid.N - 1}]")
    k = int(k)
    alpha, tau, sigma = grid.alpha, grid.tau, grid.sigma
    g = math.gamma(2.0 - alpha)
    t, d = _log_steps(grid, k + 1)

    i = np.arange(k + 1)
    # log(t_{k+sigma} / t_i), i = 0..k
    ell = np.log1p((k + sigma - i) * tau / t[: k + 1])

    if k == 0:
        return KernelRow(L2SIGMA, 0, [_pow(ell[0], 1.0 - alpha) / (g * d[1])])

    ii = np.arange(1, k + 1)
    a = _pow_diff(ell[ii - 1], ell[ii], d[ii], 1.0 - alpha)
    b = _trapezoid_defect(ell[ii - 1], ell[ii], d[ii], alpha) / np.log1p(2.0 * tau / t[ii - 1])

    c = np.empty(k + 1)
    c[0] = (a[0] - b[0]) / (g * d[1])
    if k >= 2:
        c[1:k] = (a[1:] + b[:-1] - b[1:]) / (g * d[2 : k + 1])
    c[k] = (b[-1] + _pow(ell[k], 1.0 - alpha)) / (g * d[k + 1])
    return KernelRow(L2SIGMA, k, c)


def l12_row(grid: TemporalGrid, k: int) -> KernelRow:
    """L1-2 weights ``c_{1,k} .. c_{k,k}`` for the derivative at ``t_k``.

    Rows are produced for every alpha in (0, 1); positivity and monotonicity are
    only guaranteed for alpha below :data:`L12_ALPHA_LIMIT`.
    """
    _check_grid(grid)
    if int(k) != k or not 1 <= k <= grid.N:
        raise ArgumentError(f"step index k={k} outside [1, {grid.N}] (L1-2 starts at step 1)")
    k = int(k)
    alpha, tau = grid.alpha, grid.tau
    g = math.gamma(2.0 - alpha)
    t, d = _log_steps(grid, k)

    i = np.arange(k + 1)
    # log(t_k / t_i), i = 0..k; the last entry is exactly zero
    ell = np.log1p((k - i) * tau / t)

    ii = np.arange(1, k + 1)
    a = _pow_diff(ell[ii - 1], ell[ii], d[ii], 1.0 - alpha)
    if k == 1:
        return KernelRow(L12, 1, [a[0] / (g * d[1])])

    # b_i for i = 2..k, stored at position i - 2
    jj = np.arange(2, k + 1)
    b = -_trapezoid_defect(ell[jj - 1], ell[jj], d[jj], alpha) / np.log1p(2.0 * tau / t[jj - 2])

    c = np.empty(k)
    c[0] = (a[0] + b[0]) / (g * d[1])
    if k >= 3:
        c[1 : k - 1] = (a[1 : k - 1] - b[:-1] + b[1:]) / (g * d[2:k])
    c[k - 1] = (a[k - 1] - b[-1]) / (g * d[k])
    return KernelRow(L12, k, c)


def kernel_row(scheme: str, grid: TemporalGrid, k: int) -> KernelRow:
    if scheme == L2SIGMA:
        return l2sigma_row(grid, k)
    if scheme == L12:
        return l12_row(grid, k)
    raise ArgumentError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def apply_row(row: KernelRow, history) -> float:
    """Discrete derivative ``sum_i c_i (phi_i - phi_{i-1})`` from ``phi_0..phi_m``.

    ``history`` may carry trailing field dimensions (shape ``(m+1, ...)``), in
    which case the result has the field shape.
    """
    h = np.asarray(history, dtype=float)
    if h.shape[0] != len(row) + 1:
        raise ArgumentError(
            f"history has {h.shape[0]} entries, row of length {len(row)} needs {len(row) + 1}"
        )
    return np.tensordot(row.coeffs, np.diff(h, axis=0), axes=1)


def ch_derivative_logpower(p, alpha, a_tilde, t):
    """Exact Caputo-Hadamard derivative of ``(log(t/a_tilde))**p`` (p >= 1).

    Equals ``Gamma(p+1)/Gamma(p+1-alpha) * (log(t/a_tilde))**(p-alpha)``.
    """
    if p < 1:
        raise ArgumentError(f"p must be >= 1, got {p}")
    if not 0 < alpha < 1:
        raise ArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    tt = np.asarray(t, dtype=float)
    if np.any(tt <= a_tilde):
        raise ArgumentError("t must exceed a_tilde")
    w = np.log(tt / a_tilde)
    val = math.gamma(p + 1) / math.gamma(p + 1 - alpha) * w ** (p - alpha)
    return float(val) if np.ndim(val) == 0 else val


def sigma_interp_weights(sigma: float):
    """Weights ``(1 - sigma, sigma)`` of the two-point value at ``t_{k+sigma}``."""
    return (1.0 - sigma, sigma)

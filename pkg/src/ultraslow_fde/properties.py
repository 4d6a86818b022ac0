"""Property checks on the kernels and operators, runnable without pytest.

Each ``check_*`` predicate tests one instance and returns ``None`` on success
or a short message describing the violation. The ``suite_*`` functions sample
instances from a seeded generator and collect the violations; ``run_selftest``
runs them all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import temporal_kernels as tk
from .linalg import BTTBOperator, SymmetricToeplitzOperator
from .spatial_kernels import (
    SpatialGrid1D,
    SpatialGrid2D,
    bttb_dense,
    fcd_coeffs_2d,
    frac_laplacian_apply_2d,
    gl_weights,
    riesz_apply,
    riesz_lower_constant,
    riesz_stencil,
)

# "sufficiently small tau" for the coefficient inequalities
SMALL_TAU_RATIO = 1.0 / 64.0
# L1-2 sampling stays a little below the 0.3738 threshold
L12_SAMPLE_ALPHA_MAX = 0.37
BETAS = (1.1, 1.3, 1.5, 1.7, 1.9)


@dataclass
class PropertyResult:
    name: str
    samples: int
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        msg = f"[{status}] {self.name} ({self.samples} samples)"
        if self.failures:
            msg += f": {len(self.failures)} violations, first: {self.failures[0]}"
        return msg


def _strictly_increasing_positive(c):
    c = np.asarray(c)
    if c[0] <= 0:
        return f"first weight {c[0]:.3e} is not positive"
    bad = np.nonzero(np.diff(c) <= 0)[0]
    if bad.size:
        i = bad[0]
        return f"c[{i + 1}]={c[i]:.6e} >= c[{i + 2}]={c[i + 1]:.6e}"
    return None


def sample_grid(rng, alpha_lo=0.01, alpha_hi=0.99, max_N=300):
    """Random ``(grid, k_frac)`` with ``tau <= a_tilde/64``; k is drawn by the caller."""
    alpha = float(rng.uniform(alpha_lo, alpha_hi))
    a_tilde = float(rng.uniform(0.5, 2.0))
    tau = a_tilde * SMALL_TAU_RATIO * float(rng.uniform(0.02, 1.0))
    N = int(rng.integers(4, max_N + 1))
    return tk.TemporalGrid(a_tilde, a_tilde + N * tau, N, alpha)


# --- L2-1sigma ---------------------------------------------------------------


def check_l2sigma_monotone(grid, k):
    return _strictly_increasing_positive(tk.l2sigma_row(grid, k).coeffs)


def check_l2sigma_last_ratio(grid, k):
    """``(2 sigma - 1) c_{k+1,k} > sigma c_{k,k}`` for k >= 1."""
    c = tk.l2sigma_row(grid, k).coeffs
    s = grid.sigma
    if not (2 * s - 1) * c[-1] > s * c[-2]:
        return f"(2s-1)c_last={(2 * s - 1) * c[-1]:.6e} <= s*c_prev={s * c[-2]:.6e}"
    return None


def check_l2sigma_first_bound(grid, k):
    """``1/c_{1,k} < 2 Gamma(1-alpha) ((k+sigma) tau)^alpha / a_tilde^alpha``."""
    c1 = tk.l2sigma_row(grid, k).coeffs[0]
    a = grid.alpha
    bound = 2 * math.gamma(1 - a) * ((k + grid.sigma) * grid.tau) ** a / grid.a_tilde**a
    if not 1.0 / c1 < bound:
        return f"1/c1={1 / c1:.6e} >= {bound:.6e}"
    return None


# --- L1-2 --------------------------------------------------------------------


def check_l12_dominance(grid, k):
    """Items valid for every alpha: last weight dominates, lower weights ordered."""
    c = tk.l12_row(grid, k).coeffs
    if k >= 2 and not c[-1] > abs(c[-2]):
        return f"c_kk={c[-1]:.6e} <= |c_k-1,k|={abs(c[-2]):.6e}"
    if k == 2 and not c[1] > 0:
        return f"c_22={c[1]:.6e} is not positive"
    if k == 3 and not c[2] > c[0] > 0:
        return f"c_33 > c_13 > 0 fails: {c[2]:.6e}, {c[0]:.6e}"
    if k >= 4:
        lower = np.concatenate([c[: k - 2], [c[-1]]])
        msg = _strictly_increasing_positive(lower)
        if msg:
            return "c_kk > c_k-2,k > ... > c_1k > 0 fails: " + msg
    return None


def check_l12_monotone(grid, k):
    return _strictly_increasing_positive(tk.l12_row(grid, k).coeffs)


def l12_first_bound_constant(alpha, a_tilde):
    return max(6 * math.gamma(1 - alpha), 3 * math.gamma(2 - alpha) / alpha) / a_tilde**alpha


def check_l12_first_bound(grid, k):
    c1 = tk.l12_row(grid, k).coeffs[0]
    bound = l12_first_bound_constant(grid.alpha, grid.a_tilde) * (k * grid.tau) ** grid.alpha
    if not 1.0 / c1 < bound:
        return f"1/c1={1 / c1:.6e} >= {bound:.6e}"
    return None


# --- spatial -------------------------------------------------------------------


def check_gl_weights(beta, m):
    g = gl_weights(beta, m)
    if g[0] != 1.0 or g[1] != -beta:
        return f"g0={g[0]}, g1={g[1]}"
    tail = g[2:]
    if np.any(tail < 0) or np.any(tail > 1) or np.any(np.diff(tail) > 0):
        return "tail g_2, g_3, ... is not a nonincreasing sequence in [0, 1]"
    partial = np.cumsum(g)[1:]
    if np.any(partial >= 0):
        i = int(np.nonzero(partial >= 0)[0][0]) + 1
        return f"partial sum up to m={i} is {partial[i - 1]:.3e} >= 0"
    return None


def check_riesz_partial_sums(beta, m_max):
    """Both partial-sum statements on the stencil for every 2 <= m <= m_max."""
    r = riesz_stencil(beta, m_max).r
    if np.any(r[1:] >= 0) or r[0] <= 0:
        return "sign pattern r_0 > 0 > r_k (k >= 1) fails"
    S = np.cumsum(r)  # S[n] = r_0 + ... + r_n
    cstar = riesz_lower_constant(beta)
    m = np.arange(2, m_max + 1)
    sym = 2 * S[m - 1] - r[0]
    bad = np.nonzero(sym <= cstar / m**beta)[0]
    if bad.size:
        mm = m[bad[0]]
        return f"symmetric partial sum at m={mm} is {sym[bad[0]]:.3e} <= c*/m^beta"
    # sum_{k=0}^{m} r_{j-k} = S[j] + S[m-j] - r_0, for 1 <= j <= m-1
    for mm in range(2, m_max + 1):
        j = np.arange(1, mm)
        vals = S[j] + S[mm - j] - r[0]
        if np.any(vals <= 0):
            return f"row sum at m={mm}, j={int(j[np.argmin(vals)])} is {vals.min():.3e} <= 0"
    return None


def check_riesz_quadratic_form(beta, M, length, v):
    """Lower bound ``c*/(b-a)^beta ||v||^2`` and upper bound ``2 r_0 h^-beta ||v||^2``."""
    grid = SpatialGrid1D(0.0, length, M)
    st = riesz_stencil(beta, M)
    full = np.zeros(M + 1)
    full[1:-1] = v
    h = grid.h
    q = h * float(np.dot(riesz_apply(st, grid, full), v))
    norm2 = h * float(np.dot(v, v))
    lo = riesz_lower_constant(beta) / length**beta * norm2
    hi = 2 * st.r[0] * h ** (-beta) * norm2
    if not lo <= q * (1 + 1e-12):
        return f"form {q:.6e} below lower bound {lo:.6e}"
    if not q <= hi * (1 + 1e-12):
        return f"form {q:.6e} above upper bound {hi:.6e}"
    return None


def check_laplacian_quadratic_form(stencil, L, v):
    """``0 < (A_h v, v) <= 2^(beta/2) pi^beta h^-beta ||v||^2`` in the h^2-weighted product."""
    grid = SpatialGrid2D(L, stencil.M)
    h = grid.h
    q = h * h * float(np.sum(frac_laplacian_apply_2d(stencil, grid, v) * v))
    norm2 = h * h * float(np.sum(v * v))
    hi = 2 ** (stencil.beta / 2) * math.pi**stencil.beta * h ** (-stencil.beta) * norm2
    if not q > 0:
        return f"form {q:.6e} is not positive"
    if not q <= hi:
        return f"form {q:.6e} above upper bound {hi:.6e}"
    return None


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def check_fft_direct(rng, n, beta, tol=1e-12):
    """FFT-based matvecs against explicit matrices of size ``n`` (1D) and ``n^2`` (2D)."""
    col = rng.standard_normal(n)
    shift = float(rng.uniform(0, 2))
    op = SymmetricToeplitzOperator(col, shift)
    x = rng.standard_normal(n)
    err = _rel(op.matvec(x), op.to_dense() @ x)
    if err > tol:
        return f"Toeplitz n={n}: relative difference {err:.2e}"

    M = n + 1
    grid = SpatialGrid1D(0.0, 1.0, M)
    st = riesz_stencil(beta, M)
    v = np.zeros(M + 1)
    v[1:-1] = rng.standard_normal(M - 1)
    err = _rel(riesz_apply(st, grid, v, "fft"), riesz_apply(st, grid, v, "direct"))
    if err > tol:
        return f"Riesz M={M}: relative difference {err:.2e}"

    table = rng.standard_normal((2 * n - 1, 2 * n - 1))
    table = (table + table[::-1, ::-1]) / 2  # a_{-j,-k} = a_{j,k}
    bop = BTTBOperator(table, float(rng.uniform(0.5, 2)), shift)
    f = rng.standard_normal((n, n))
    err = _rel(bop.matvec(f).ravel(), bop.to_dense() @ f.ravel())
    if err > tol:
        return f"BTTB n={n}: relative difference {err:.2e}"
    dense = bttb_dense(table, n)
    if not np.allclose(dense, dense.T) and np.allclose(table, table[::-1, ::-1]):
        return "dense BTTB matrix is not symmetric"
    return None


# --- suites --------------------------------------------------------------------


def _grid_suite(name, rng, n, check, *, alpha_hi=0.99, k_lo=0, k_hi_offset=-1):
    res = PropertyResult(name, n)
    for _ in range(n):
        grid = sample_grid(rng, alpha_hi=alpha_hi)
        k = int(rng.integers(k_lo, grid.N + k_hi_offset + 1))
        msg = check(grid, k)
        if msg:
            res.failures.append(f"alpha={grid.alpha:.4f} a={grid.a_tilde:.3f} N={grid.N} k={k}: {msg}")
    return res


def suite_temporal(rng, n=200):
    a_max = L12_SAMPLE_ALPHA_MAX
    return [
        _grid_suite("L2-1sigma weights positive and increasing", rng, n, check_l2sigma_monotone),
        _grid_suite("L2-1sigma last-weight ratio", rng, n, check_l2sigma_last_ratio, k_lo=1),
        _grid_suite("L2-1sigma first-weight bound", rng, n, check_l2sigma_first_bound),
        _grid_suite("L1-2 dominance of the last weight", rng, n, check_l12_dominance, k_lo=2, k_hi_offset=0),
        _grid_suite(
            "L1-2 weights positive and increasing (alpha < 0.37)",
            rng, n, check_l12_monotone, alpha_hi=a_max, k_lo=1, k_hi_offset=0,
        ),
        _grid_suite(
            "L1-2 first-weight bound (alpha < 0.37)",
            rng, n, check_l12_first_bound, alpha_hi=a_max, k_lo=1, k_hi_offset=0,
        ),
    ]


def suite_spatial(rng, n_fields=50, m_max=4096, n_small=16):
    out = []
    res = PropertyResult("Grunwald-Letnikov weight pattern", len(BETAS))
    for beta in BETAS:
        msg = check_gl_weights(beta, m_max)
        if msg:
            res.failures.append(f"beta={beta}: {msg}")
    out.append(res)

    res = PropertyResult("Riesz stencil partial sums", len(BETAS))
    for beta in BETAS:
        msg = check_riesz_partial_sums(beta, m_max)
        if msg:
            res.failures.append(f"beta={beta}: {msg}")
    out.append(res)

    res = PropertyResult("1D quadratic-form bounds", n_fields)
    for _ in range(n_fields):
        beta = float(rng.uniform(1.01, 1.99))
        M = int(rng.integers(2, 200))
        length = float(rng.uniform(0.5, 4))
        v = rng.standard_normal(M - 1)
        msg = check_riesz_quadratic_form(beta, M, length, v)
        if msg:
            res.failures.append(f"beta={beta:.3f} M={M}: {msg}")
    out.append(res)

    res = PropertyResult("2D quadratic-form bounds", n_fields)
    stencils = {}
    for _ in range(n_fields):
        beta = float(rng.choice(BETAS[1:-1]))
        M = int(rng.choice([4, 8, 16]))
        if (beta, M) not in stencils:
            stencils[beta, M] = fcd_coeffs_2d(beta, M)
        v = rng.standard_normal((M - 1, M - 1))
        msg = check_laplacian_quadratic_form(stencils[beta, M], float(rng.uniform(0.5, 2)), v)
        if msg:
            res.failures.append(f"beta={beta} M={M}: {msg}")
    out.append(res)

    res = PropertyResult("FFT matvec equals direct product", n_small)
    for n in range(1, n_small + 1):
        msg = check_fft_direct(rng, n, float(rng.uniform(1.01, 1.99)))
        if msg:
            res.failures.append(msg)
    out.append(res)
    return out


def run_selftest(seed: int = 20240611, quick: bool = False, echo=print) -> bool:
    """Run every property suite; returns True when all pass."""
    rng = np.random.default_rng(seed)
    if quick:
        results = suite_temporal(rng, 40) + suite_spatial(rng, 10, 512, 8)
    else:
        results = suite_temporal(rng) + suite_spatial(rng)
    for r in results:
        echo(r.line())
    return all(r.passed for r in results)

import math

import mpmath as mp
import numpy as np
import pytest
from scipy.special import binom

from ultraslow_fde import spatial_kernels as sk
from ultraslow_fde.errors import ArgumentError


@pytest.mark.parametrize("beta", [1.1, 1.5, 1.9])
def test_gl_weights_are_signed_binomials(beta):
    g = sk.gl_weights(beta, 40)
    k = np.arange(41)
    np.testing.assert_allclose(g, (-1.0) ** k * binom(beta, k), rtol=1e-13, atol=1e-16)
    assert g[0] == 1.0 and g[1] == -beta


def test_riesz_coefficients_known_values():
    st = sk.riesz_stencil(1.5, 8)
    assert st.r[0] == pytest.approx(1.2374368670764582, rel=1e-14)
    assert st.r[1] == pytest.approx(-0.46403882515367184, rel=1e-14)


def test_riesz_coefficients_approach_second_difference():
    st = sk.riesz_stencil(1.999999, 8)
    np.testing.assert_allclose(st.r[:4], [2.0, -1.0, 0.0, 0.0], atol=1e-5)


def _rl_two_sided(x, beta):
    """Riesz derivative of x^4 (1-x)^4 from the power rule, written out term by term."""
    total = np.zeros_like(x)
    coeffs = {4: 1, 5: -4, 6: 6, 7: -4, 8: 1}
    for p, c in coeffs.items():
        g = math.gamma(p + 1) / math.gamma(p + 1 - beta)
        total += c * g * (x ** (p - beta) + (1 - x) ** (p - beta))
    return sk.psi_beta(beta) * total


@pytest.mark.parametrize("beta", [1.2, 1.5, 1.8])
def test_riesz_stencil_is_second_order(beta):
    errs = []
    for M in (128, 256, 512, 1024):
        grid = sk.SpatialGrid1D(0.0, 1.0, M)
        x = grid.x
        v = x**4 * (1 - x) ** 4
        w = sk.riesz_apply(sk.riesz_stencil(beta, M), grid, v)
        # the stencil approximates -RZ_D^beta, i.e. +psi * (sum of RL derivatives)
        errs.append(math.sqrt(grid.h * np.sum((w - _rl_two_sided(x[1:-1], beta)) ** 2)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.9), orders


@pytest.mark.parametrize("beta", [1.1, 1.5, 1.9])
def test_riesz_fft_matches_direct(beta):
    rng = np.random.default_rng(1)
    for M in (2, 3, 9, 17, 100):
        grid = sk.SpatialGrid1D(-1.0, 2.0, M)
        v = np.zeros(M + 1)
        v[1:-1] = rng.normal(size=M - 1)
        st = sk.riesz_stencil(beta, M)
        np.testing.assert_allclose(sk.riesz_apply(st, grid, v), sk.riesz_apply(st, grid, v, "direct"), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("j,k", [(0, 0), (1, 0), (2, 1)])
def test_laplacian_weights_against_quadrature(j, k):
    beta = 1.5
    f = lambda x, y: (4 * mp.sin(x / 2) ** 2 + 4 * mp.sin(y / 2) ** 2) ** (beta / 2) * mp.cos(j * x) * mp.cos(k * y)
    half = [0, mp.pi / 2, mp.pi]
    with mp.workdps(15):
        want = float(mp.quad(f, half, half) / mp.pi**2)
    assert sk.fcd_coeffs_2d(beta, 16).a(j, k) == pytest.approx(want, rel=1e-10, abs=1e-13)


def test_laplacian_weights_approach_five_point_stencil():
    st = sk.fcd_coeffs_2d(1.9999, 8)
    assert st.a(0, 0) == pytest.approx(4.0, abs=2e-3)
    assert st.a(1, 0) == pytest.approx(-1.0, abs=2e-3)
    assert abs(st.a(1, 1)) < 2e-3


@pytest.mark.parametrize("beta", [1.1, 1.5, 1.9])
def test_laplacian_weights_stable_under_oversampling(beta):
    for M in (8, 32, 128):
        K = sk.default_oversample(M)
        a = sk.fcd_coeffs_2d(beta, M).table
        b = sk.fcd_coeffs_2d(beta, M, 2 * K).table
        assert np.max(np.abs(a - b)) < 1e-10


@pytest.mark.parametrize("beta", [1.3, 1.7])
def test_laplacian_weights_symmetry_and_signs(beta):
    st = sk.fcd_coeffs_2d(beta, 12)
    t = st.table
    np.testing.assert_array_equal(t, t.T)
    np.testing.assert_array_equal(t, t[::-1, :])
    np.testing.assert_array_equal(t, t[:, ::-1])
    R = st.M - 2
    off = np.delete(t.ravel(), R * (2 * R + 1) + R)
    assert st.a(0, 0) > 0 and np.all(off < 0)
    # full lattice sums to the symbol at zero, so the truncated sum is a small positive number
    assert 0 < t.sum() < st.a(0, 0)


@pytest.mark.parametrize("beta", [1.2, 1.8])
def test_laplacian_fft_matches_direct(beta):
    rng = np.random.default_rng(2)
    for M in (2, 3, 6, 11):
        grid = sk.SpatialGrid2D(1.5, M)
        st = sk.fcd_coeffs_2d(beta, M)
        v = rng.normal(size=(M - 1, M - 1))
        got = sk.frac_laplacian_apply_2d(st, grid, v)
        want = sk.frac_laplacian_apply_2d(st, grid, v, "direct")
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12 * np.max(np.abs(want)))


def test_bttb_dense_layout():
    table = np.arange(25, dtype=float).reshape(5, 5)  # R = 2
    A = sk.bttb_dense(table, 3)
    # entry for (j1,k1)=(2,0), (j2,k2)=(0,1): a_{2,-1} = table[4, 1]
    assert A[2 * 3 + 0, 0 * 3 + 1] == table[4, 1]


def test_grids():
    g = sk.SpatialGrid1D(0.0, 2.0, 4)
    np.testing.assert_allclose(g.x, [0, 0.5, 1, 1.5, 2])
    g2 = sk.SpatialGrid2D(1.0, 4)
    X, Y = g2.interior_mesh()
    assert X.shape == (3, 3) and X[2, 0] == 0.5 and Y[0, 2] == 0.5


def test_argument_errors():
    with pytest.raises(ArgumentError):
        sk.riesz_stencil(2.0, 8)
    with pytest.raises(ArgumentError):
        sk.riesz_stencil(1.5, 1)
    with pytest.raises(ArgumentError):
        sk.fcd_coeffs_2d(1.5, 8, oversample=300)
    with pytest.raises(ArgumentError):
        sk.fcd_coeffs_2d(1.5, 256, oversample=512)
    with pytest.raises(ArgumentError):
        sk.SpatialGrid1D(1.0, 1.0, 4)
    grid = sk.SpatialGrid1D(0.0, 1.0, 4)
    with pytest.raises(ArgumentError):
        sk.riesz_apply(sk.riesz_stencil(1.5, 4), grid, np.ones(5))
    with pytest.raises(ArgumentError):
        sk.riesz_apply(sk.riesz_stencil(1.5, 5), grid, np.zeros(5))
    with pytest.raises(ArgumentError):
        sk.frac_laplacian_apply_2d(sk.fcd_coeffs_2d(1.5, 4), sk.SpatialGrid2D(1.0, 4), np.zeros((4, 4)))

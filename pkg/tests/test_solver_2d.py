import math

import numpy as np
import pytest

from ultraslow_fde import StabilityWarning
from ultraslow_fde.errors import ArgumentError
from ultraslow_fde.harness import example2_problem
from ultraslow_fde.solver_2d import (
    DiscreteSource,
    Problem2D,
    compute_source_fh,
    error_E_h,
    error_F_tau,
    solve_2d,
    solve_l12_2d,
    solve_l2sigma_2d,
    spatial_source,
)
from ultraslow_fde.spatial_kernels import SpatialGrid2D, fcd_coeffs_2d, frac_laplacian_apply_2d

zero = lambda X, Y: np.zeros_like(X)
bump = lambda X, Y: (1 - X**2) ** 2 * (1 - Y**2) ** 2


def _problem(alpha=0.3, beta=1.5, u0=zero, source=lambda X, Y, t: np.zeros_like(X), **kw):
    return Problem2D(alpha, beta, 1.0, 2.0, kw.pop("L", 1.0), u0, source, **kw)


@pytest.mark.parametrize("scheme", ["l2sigma", "l12"])
def test_zero_data_gives_zero_trajectory(scheme):
    traj = solve_2d(_problem(), 8, 4, scheme)
    assert traj.U.shape == (5, 7, 7)
    assert np.all(traj.U == 0)
    assert traj.padded().shape == (9, 9)


@pytest.mark.parametrize("scheme", ["l2sigma", "l12"])
def test_steady_state_is_reproduced(scheme):
    M, beta = 8, 1.6
    grid = SpatialGrid2D(1.0, M)
    X, Y = grid.interior_mesh()
    Kv = frac_laplacian_apply_2d(fcd_coeffs_2d(beta, M), grid, bump(X, Y))
    prob = _problem(0.3, beta, u0=bump, source=lambda X, Y, t: Kv)
    traj = solve_2d(prob, M, 6, scheme)
    np.testing.assert_allclose(traj.U[-1], bump(X, Y), atol=1e-11)


def test_discrete_source_matches_fine_operator():
    # with h_ref equal to the solve mesh the spatial source is exactly the operator
    M = 16
    src = DiscreteSource(bump, 3.0, h_ref=2.0 / M)
    grid = SpatialGrid2D(1.0, M)
    X, Y = grid.interior_mesh()
    want = frac_laplacian_apply_2d(fcd_coeffs_2d(1.5, M), grid, bump(X, Y))
    np.testing.assert_allclose(spatial_source(src, 1.5, 1.0, M), want, rtol=1e-13)
    # restriction from a finer mesh picks the shared nodes
    fine = DiscreteSource(bump, 3.0, h_ref=2.0 / 64)
    on16 = spatial_source(fine, 1.5, 1.0, 16)
    on32 = spatial_source(fine, 1.5, 1.0, 32)
    np.testing.assert_array_equal(on16, on32[1::2, 1::2])


def test_compute_source_fh_time_dependence():
    src = DiscreteSource(bump, 3.0, h_ref=2.0 / 16)
    alpha = 0.4
    times = [1.0, 1.5, 2.0]
    fh = compute_source_fh(src, alpha, 1.3, 1.0, 1.0, 8, times)
    assert fh.shape == (3, 7, 7)
    assert np.all(fh[0] == 0)
    X = -1 + np.arange(1, 8) * 0.25
    Xg, Yg = np.meshgrid(X, X, indexing="ij")
    spatial = spatial_source(src, 1.3, 1.0, 8)
    w = math.log(1.5)
    want = math.gamma(4) / math.gamma(4 - alpha) * w ** (3 - alpha) * bump(Xg, Yg) + w**3 * spatial
    np.testing.assert_allclose(fh[1], want, rtol=1e-13)


def test_example2_small_run_is_close_to_exact():
    prob = example2_problem(0.5, 1.5, h_ref=2.0**-5)
    traj = solve_l2sigma_2d(prob, 32, 16)
    X, Y = np.meshgrid(traj.x, traj.x, indexing="ij")
    diff = traj.padded() - prob.exact(X, Y, 2.0)
    err = traj.h * math.sqrt(np.sum(diff**2))
    assert err < 1e-2 * traj.h * math.sqrt(np.sum(prob.exact(X, Y, 2.0) ** 2))


def test_self_convergence_errors():
    prob = example2_problem(0.3, 1.3, h_ref=2.0**-5)
    c = solve_2d(prob, 8, 4, "l2sigma")
    f = solve_2d(prob, 16, 4, "l2sigma")
    manual = c.h * math.sqrt(np.sum((c.padded() - f.padded()[::2, ::2]) ** 2))
    assert error_E_h(c, f) == pytest.approx(manual, rel=1e-15)
    f2 = solve_2d(prob, 8, 8, "l2sigma")
    assert error_F_tau(c, f2) == pytest.approx(c.h * math.sqrt(np.sum((c.U[-1] - f2.U[-1]) ** 2)))
    with pytest.raises(ArgumentError):
        error_E_h(c, f2)
    with pytest.raises(ArgumentError):
        error_F_tau(c, f)
    with pytest.raises(ArgumentError):
        error_E_h(c, solve_2d(prob, 32, 4, "l2sigma"))


def test_norms_nonincreasing_bound_and_warning():
    prob = _problem(0.5, 1.5, u0=bump)
    with pytest.warns(StabilityWarning):
        traj = solve_l12_2d(prob, 8, 6)
    assert traj.warnings
    n = solve_l2sigma_2d(prob, 8, 6).norms()
    assert np.all(n <= n[0] * (1 + 1e-12))


def test_misaligned_reference_mesh():
    prob = example2_problem(0.3, 1.5, h_ref=2.0**-4)
    with pytest.raises(ArgumentError):
        solve_2d(prob, 64, 2, "l2sigma")
    with pytest.raises(ArgumentError):
        solve_2d(example2_problem(0.3, 1.5, h_ref=0.3), 8, 2, "l2sigma")


@pytest.mark.parametrize("kw", [dict(alpha=1.2), dict(beta=0.9), dict(L=0.0)])
def test_problem_validation(kw):
    with pytest.raises(ArgumentError):
        _problem(**kw)


def test_bad_source_and_scheme():
    with pytest.raises(ArgumentError):
        solve_2d(_problem(source=3.0), 8, 2, "l2sigma")
    with pytest.raises(ArgumentError):
        solve_2d(_problem(), 8, 2, "euler")

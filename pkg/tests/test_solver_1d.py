import math

import numpy as np
import pytest

from ultraslow_fde import StabilityWarning
from ultraslow_fde.errors import ArgumentError
from ultraslow_fde.harness import example1_problem
from ultraslow_fde.solver_1d import (
    Problem1D,
    apriori_bound_l12,
    apriori_bound_l2sigma,
    error_norm_1d,
    solve_1d,
    solve_l12_1d,
    solve_l2sigma_1d,
)
from ultraslow_fde.spatial_kernels import SpatialGrid1D, riesz_apply, riesz_stencil

zero = lambda x: np.zeros_like(x)


def _problem(alpha=0.3, beta=1.5, u0=zero, f=lambda x, t: np.zeros_like(x), **kw):
    return Problem1D(alpha, beta, kw.pop("a_tilde", 1.0), kw.pop("T", 2.0), kw.pop("a", 0.0), kw.pop("b", 1.0), u0, f, **kw)


@pytest.mark.parametrize("scheme", ["l2sigma", "l12"])
def test_zero_data_gives_zero_trajectory(scheme):
    traj = solve_1d(_problem(), 16, 8, scheme, method="cg")
    assert traj.U.shape == (9, 17)
    assert np.all(traj.U == 0)


@pytest.mark.parametrize("scheme", ["l2sigma", "l12"])
def test_steady_state_is_reproduced(scheme):
    # u(x, t) = v(x) with f = discrete Riesz operator applied to v: every step returns v
    M = 20
    grid = SpatialGrid1D(0.0, 1.0, M)
    v = np.sin(np.pi * grid.x)
    v[[0, -1]] = 0.0
    Kv = riesz_apply(riesz_stencil(1.4, M), grid, v)
    prob = _problem(0.3, 1.4, u0=lambda x: np.sin(np.pi * x), f=lambda x, t: Kv)
    traj = solve_1d(prob, M, 10, scheme)
    np.testing.assert_allclose(traj.U[-1], v, atol=1e-12)


@pytest.mark.parametrize("scheme", ["l2sigma", "l12"])
def test_linear_solvers_agree(scheme):
    prob = example1_problem(0.3, 1.7)
    ref = solve_1d(prob, 64, 16, scheme, method="dense")
    for method in ("cg", "pcg"):
        got = solve_1d(prob, 64, 16, scheme, method=method)
        np.testing.assert_allclose(got.U, ref.U, rtol=1e-9, atol=1e-13)
        assert max(got.iterations) <= 10 * 63


def test_manufactured_solution_error_is_small():
    prob = example1_problem(0.6, 1.5)
    traj = solve_l2sigma_1d(prob, 32, 64)
    err = error_norm_1d(traj.final, prob.exact(traj.x, 2.0), traj.h)
    assert err < 2e-5
    u_norm = error_norm_1d(np.zeros_like(traj.x), prob.exact(traj.x, 2.0), traj.h)
    assert err < 0.01 * u_norm


def test_named_scheme_entry_points():
    prob = example1_problem(0.2, 1.3)
    a = solve_l2sigma_1d(prob, 16, 8)
    b = solve_1d(prob, 16, 8, "l2sigma")
    np.testing.assert_array_equal(a.U, b.U)
    c = solve_l12_1d(prob, 16, 8)
    assert c.scheme == "l12" and c.U.shape == (9, 17)


def test_l12_warns_outside_stability_range():
    with pytest.warns(StabilityWarning):
        traj = solve_l12_1d(_problem(alpha=0.5), 8, 4)
    assert traj.warnings


@pytest.mark.parametrize("seed", range(4))
def test_apriori_bounds_hold(seed):
    rng = np.random.default_rng(seed)
    alpha, beta = rng.uniform(0.05, 0.95), rng.uniform(1.05, 1.95)
    amp = rng.normal(size=3)
    u0 = lambda x: amp[0] * np.sin(np.pi * x) + amp[1] * x * (1 - x) * np.cos(7 * x)
    f = lambda x, t: amp[2] * np.cos(3 * t) * np.exp(x)
    prob = _problem(alpha, beta, u0=u0, f=f)
    traj = solve_l2sigma_1d(prob, 40, 20)
    assert np.all(traj.norms() ** 2 <= apriori_bound_l2sigma(prob, traj) * (1 + 1e-10))
    prob12 = _problem(min(alpha, 0.36), beta, u0=u0, f=f)
    traj12 = solve_l12_1d(prob12, 40, 20)
    assert np.all(traj12.norms() <= apriori_bound_l12(prob12, traj12) * (1 + 1e-10))


def test_error_norm():
    assert error_norm_1d(np.array([0, 1.0, 1.0, 1.0, 0]), np.zeros(5), 0.25) == pytest.approx(math.sqrt(0.75))
    with pytest.raises(ArgumentError):
        error_norm_1d(np.zeros(5), np.zeros(4), 0.25)


@pytest.mark.parametrize(
    "kw",
    [dict(alpha=1.0), dict(alpha=0.0), dict(beta=1.0), dict(beta=2.0), dict(a_tilde=0.0), dict(T=0.5), dict(a=1.0)],
)
def test_problem_validation(kw):
    with pytest.raises(ArgumentError):
        _problem(**kw)


def test_solver_argument_errors():
    prob = _problem()
    with pytest.raises(ArgumentError):
        solve_1d(prob, 8, 4, "crank")
    with pytest.raises(ArgumentError):
        solve_1d(prob, 8, 4, "l2sigma", method="lu")
    with pytest.raises(ArgumentError):
        solve_1d(prob, 1, 4, "l2sigma")

import numpy as np
import pytest

from apgkit import operators as ops
from apgkit import problem as pb
from apgkit.errors import (ConstructionError, OracleUnavailableError,
                           PreconditionError)


def small_instance(seed=0, rows=8, cols=12, **kw):
    return pb.make_random_problem(rows, cols, seed, **kw)


# -- construction ------------------------------------------------------------


def test_lip_certified_at_construction():
    A = ops.dense_map(np.diag([3.0, 1.0]))
    U = ops.AffineSubspace.whole_space(2)
    with pytest.raises(ConstructionError):
        pb.AffineQuadraticProblem(A, np.zeros(2), U, lip=5.0)
    p = pb.AffineQuadraticProblem(A, np.zeros(2), U, lip=9.0)
    assert p.lip == 9.0
    p = pb.AffineQuadraticProblem(A, np.zeros(2), U, lip="auto")
    assert p.lip >= 9.0 - 1e-8


def test_gradient_matches_finite_differences():
    p = small_instance(1)
    rng = np.random.default_rng(2)
    h = 1e-6
    for _ in range(5):
        x = rng.standard_normal(p.dim)
        g = p.grad(x)
        d = rng.standard_normal(p.dim)
        d /= np.linalg.norm(d)
        fd = (p.f(x + h * d) - p.f(x - h * d)) / (2 * h)
        assert abs(fd - np.dot(g, d)) <= 1e-5 * (1.0 + abs(fd))


# -- prox_grad_operator ------------------------------------------------------


def test_T_fixed_point_at_solution():
    p = small_instance(3)
    T = p.prox_grad_operator()
    xstar = p.solution_set().anchor
    assert np.linalg.norm(T(xstar) - xstar) <= 1e-8


def test_T_identity_problem_contracts_to_zero():
    # A = Id, b = 0, U = whole space, lip = 1: the step lands at the origin.
    n = 4
    p = pb.AffineQuadraticProblem(ops.identity_map(n), np.zeros(n),
                                  ops.AffineSubspace.whole_space(n), lip=1.0)
    T = p.prox_grad_operator()
    rng = np.random.default_rng(0)
    for _ in range(5):
        assert np.linalg.norm(T(rng.standard_normal(n))) <= 1e-14


def test_T_matches_two_step_composition():
    p = small_instance(5, rows=6, cols=4, par_dim=3)
    T = p.prox_grad_operator()
    rng = np.random.default_rng(6)
    for _ in range(10):
        x = rng.standard_normal(4)
        direct = p.U.project(x - (1.0 / p.lip) * p.grad(x))
        assert np.linalg.norm(T(x) - direct) <= 1e-12 * (1 + np.linalg.norm(direct))


def test_T_nonexpansive_100_pairs():
    p = small_instance(7)
    T = p.prox_grad_operator()
    rng = np.random.default_rng(8)
    for _ in range(100):
        x, y = rng.standard_normal(p.dim), rng.standard_normal(p.dim)
        assert (np.linalg.norm(T(x) - T(y))
                <= np.linalg.norm(x - y) + 1e-12)


def test_fix_T_equals_solution_set():
    p = small_instance(9)
    T = p.prox_grad_operator()
    sol = p.solution_set()
    rng = np.random.default_rng(10)
    for _ in range(10):
        z = rng.standard_normal(sol.par_dim)
        x = sol.anchor + sol.basis_par_S @ z
        assert np.linalg.norm(T(x) - x) <= 1e-8
    par = p.U.par_projector()
    for _ in range(10):
        x = p.U.project(rng.standard_normal(p.dim) * 3.0)
        resid = np.linalg.norm(T(x) - x)
        predicted = np.linalg.norm(par(p.grad(x))) / p.lip
        # for feasible x, T(x) - x = -(1/lip) P_parU grad f(x) exactly
        assert abs(resid - predicted) <= 1e-10 * (1 + predicted)
        if predicted > 1e-9:
            assert resid > 0.5 * predicted


# -- solve_solution_set ------------------------------------------------------


def test_oracle_line_constraint_singleton():
    # distance-to-line objective: A = Id - P_V for the line x2 = 0
    A = ops.dense_map(np.array([[0.0, 0.0], [0.0, 1.0]]))
    U = ops.AffineSubspace.from_hyperplane([1.0, 1.0], 1.0)
    p = pb.AffineQuadraticProblem(A, np.zeros(2), U, lip=1.0)
    sol = p.solution_set()
    np.testing.assert_allclose(sol.anchor, [1.0, 0.0], atol=1e-12)
    assert sol.par_dim == 0
    assert sol.mu <= 1e-24


def test_oracle_unconstrained_hyperplane_solution_set():
    # A x = x1 + x2, b = 1, U the whole plane: S is the hyperplane x1+x2=1.
    A = ops.dense_map(np.array([[1.0, 1.0]]))
    p = pb.AffineQuadraticProblem(A, np.array([1.0]),
                                  ops.AffineSubspace.whole_space(2), lip=2.0)
    sol = p.solution_set()
    assert sol.par_dim == 1
    np.testing.assert_allclose(sol.anchor, [0.5, 0.5], atol=1e-12)
    assert abs(sol.mu) <= 1e-24
    v = sol.basis_par_S[:, 0]
    np.testing.assert_allclose(v @ np.array([1.0, 1.0]), 0.0, atol=1e-12)


def rank_deficient_slice_instance(seed=11):
    """8x12 instance whose par U (dim 2) contains a ker A direction."""
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((8, 5)) @ rng.standard_normal((5, 12))
    _, _, Vt = np.linalg.svd(M)
    v_ker = Vt[-1]                      # null direction of M
    w = rng.standard_normal(12)
    w -= v_ker * (v_ker @ w)
    w /= np.linalg.norm(w)
    B = np.column_stack([v_ker, w])
    U = ops.AffineSubspace.from_basis(rng.standard_normal(12), B)
    return pb.AffineQuadraticProblem(ops.dense_map(M), rng.standard_normal(8), U)


def test_oracle_rank_deficient_slice_vs_grid_refinement():
    p = rank_deficient_slice_instance()
    sol = p.solution_set()
    res = sol.validate(p)
    assert res["anchor_optimality_residual"] <= 1e-9 * (
        1 + res["gradient_norm_scale"])
    assert sol.par_dim >= 1

    # independent oracle: refine a 2-D grid over the affine slice z -> f(u0 + B z)
    u0, B = p.U.to_basis()
    AB = np.column_stack([p.A(B[:, j]) for j in range(2)])
    rhs = p.b - p.A(u0)
    radius = np.linalg.norm(rhs) / np.linalg.svd(AB, compute_uv=False)[0] * 10 + 1.0
    center = np.zeros(2)
    best = np.inf
    for _ in range(12):
        zs = np.linspace(-radius, radius, 41)
        for z1 in zs:
            for z2 in zs:
                val = p.f(u0 + B @ np.array([center[0] + z1, center[1] + z2]))
                if val < best:
                    best = val
                    arg = np.array([center[0] + z1, center[1] + z2])
        center = arg
        radius *= 0.2
    assert abs(best - sol.mu) <= 1e-6 * (1.0 + abs(sol.mu))


def test_oracle_basis_in_kernel_and_parU():
    p = small_instance(12, rows=10, cols=16, rank=5, par_dim=12)
    sol = p.solution_set()
    assert sol.par_dim >= 1
    par = p.U.par_projector()
    for j in range(sol.par_dim):
        v = sol.basis_par_S[:, j]
        assert np.linalg.norm(p.A(v)) <= 1e-9
        assert np.linalg.norm(par(v) - v) <= 1e-9


def test_oracle_cap(monkeypatch):
    p = small_instance(13)
    with pytest.raises(OracleUnavailableError):
        pb.solve_solution_set(p, cap=4)
    monkeypatch.setenv("APGKIT_ORACLE_CAP", "4")
    with pytest.raises(OracleUnavailableError):
        pb.solve_solution_set(p)
    assert p.try_solution_set() is None or True  # cached before env change


# -- best_approximation / dist_to_S -------------------------------------------


def test_best_approximation_matches_lstsq_oracle():
    p = small_instance(14, rows=10, cols=16, rank=4, par_dim=12)
    sol = p.solution_set()
    rng = np.random.default_rng(15)
    for _ in range(5):
        x0 = rng.standard_normal(16) * 2.0
        got = pb.best_approximation(sol, x0)
        # independent path: parametrize S and solve the least-squares problem
        z, *_ = np.linalg.lstsq(sol.basis_par_S, x0 - sol.anchor, rcond=None)
        want = sol.anchor + sol.basis_par_S @ z
        assert np.linalg.norm(got - want) <= 1e-9 * (1 + np.linalg.norm(want))
        # membership and orthogonality
        assert np.linalg.norm(p.A(got) - p.A(sol.anchor)) <= 1e-9 * (
            1 + np.linalg.norm(p.A(sol.anchor)))
        assert p.U.membership_residual(got) <= 1e-9 * (1 + np.linalg.norm(got))
        assert np.linalg.norm(sol.basis_par_S.T @ (x0 - got)) <= 1e-9 * (
            1 + np.linalg.norm(x0))


def test_best_approximation_trivial_cases():
    p = small_instance(16)
    sol = p.solution_set()
    np.testing.assert_allclose(pb.best_approximation(sol, sol.anchor),
                               sol.anchor, atol=1e-12)
    singleton = pb.SolutionSet(anchor=sol.anchor,
                               basis_par_S=np.zeros((p.dim, 0)), mu=sol.mu)
    rng = np.random.default_rng(17)
    x0 = rng.standard_normal(p.dim)
    np.testing.assert_allclose(pb.best_approximation(singleton, x0),
                               sol.anchor, atol=1e-12)


def test_best_approximation_idempotent_projection():
    p = small_instance(18)
    sol = p.solution_set()
    rng = np.random.default_rng(19)
    for _ in range(10):
        x = rng.standard_normal(p.dim) * 3
        px = sol.project(x)
        assert np.linalg.norm(sol.project(px) - px) <= 1e-9
        s_pt = sol.anchor + sol.basis_par_S @ rng.standard_normal(sol.par_dim)
        assert np.dot(x - px, s_pt - px) <= 1e-9 * (
            1 + np.linalg.norm(x) * (1 + np.linalg.norm(s_pt)))


def test_dist_to_S_values_and_grid_oracle():
    p = small_instance(20, rows=6, cols=9, rank=3, par_dim=7)
    sol = p.solution_set()
    rng = np.random.default_rng(21)
    in_S = sol.anchor + sol.basis_par_S @ rng.standard_normal(sol.par_dim)
    assert pb.dist_to_S(sol, in_S) <= 1e-10

    # anchor + unit vector orthogonal to par S
    q = rng.standard_normal(9)
    q -= sol.basis_par_S @ (sol.basis_par_S.T @ q)
    q /= np.linalg.norm(q)
    assert abs(pb.dist_to_S(sol, sol.anchor + q) - 1.0) <= 1e-10

    # brute force over a sampled S-grid upper-bounds and approaches the distance
    x = rng.standard_normal(9)
    d = pb.dist_to_S(sol, x)
    zstar = sol.basis_par_S.T @ (x - sol.anchor)
    grid_best = np.inf
    for _ in range(2000):
        z = zstar + rng.standard_normal(sol.par_dim) * 0.05
        grid_best = min(grid_best,
                        np.linalg.norm(x - sol.anchor - sol.basis_par_S @ z))
    assert d <= grid_best + 1e-12
    assert grid_best - d <= 1e-3


# -- energy identity ----------------------------------------------------------


def test_energy_identity():
    p = small_instance(22)
    sol = p.solution_set()
    lhs, rhs = pb.energy_identity_check(p, sol, sol.anchor)
    assert lhs <= 1e-16 and abs(rhs) <= 1e-12
    rng = np.random.default_rng(23)
    for _ in range(10):
        x = p.U.project(rng.standard_normal(p.dim) * 2)
        lhs, rhs = pb.energy_identity_check(p, sol, x)
        assert abs(lhs - rhs) <= 1e-8 * (1 + abs(lhs))
    if sol.par_dim:
        v = sol.basis_par_S[:, 0]
        lhs, rhs = pb.energy_identity_check(p, sol, sol.anchor + v)
        assert lhs <= 1e-16 and abs(rhs) <= 1e-10
    with pytest.raises(PreconditionError):
        pb.energy_identity_check(p, sol, rng.standard_normal(p.dim) * 10)


# -- closedness diagnostics ----------------------------------------------------


def axis_problem(par_u_dir, ker_dir):
    """2-D problem with par U spanned by one direction, ker A by another."""
    par_u_dir = np.asarray(par_u_dir, float)
    ker_dir = np.asarray(ker_dir, float)
    ker_dir = ker_dir / np.linalg.norm(ker_dir)
    A = ops.dense_map(np.eye(2) - np.outer(ker_dir, ker_dir))
    U = ops.AffineSubspace.from_basis(
        np.zeros(2), (par_u_dir / np.linalg.norm(par_u_dir)).reshape(2, 1))
    return pb.AffineQuadraticProblem(A, np.zeros(2), U, lip="auto")


def test_friedrichs_orthogonal_lines():
    diag = pb.closedness_diagnostics(axis_problem([1.0, 0.0], [0.0, 1.0]))
    assert abs(diag.friedrichs_cos) <= 1e-10


def test_friedrichs_identical_lines():
    diag = pb.closedness_diagnostics(axis_problem([1.0, 0.0], [1.0, 0.0]))
    assert diag.friedrichs_cos == 0.0


def test_friedrichs_45_degrees():
    diag = pb.closedness_diagnostics(axis_problem([1.0, 0.0], [1.0, 1.0]))
    assert abs(diag.friedrichs_cos - np.sqrt(2) / 2) <= 1e-10


def test_error_bound_on_random_instances():
    for seed in range(3):
        p = small_instance(30 + seed, rows=9, cols=14, rank=4, par_dim=10)
        diag = pb.closedness_diagnostics(p, seed=seed)
        assert 0.0 <= diag.friedrichs_cos < 1.0
        sol = p.solution_set()
        u0, B_U = p.U.to_basis()
        B_int = sol.basis_par_S
        rng = np.random.default_rng(seed)
        for _ in range(50):
            x = B_U @ rng.standard_normal(B_U.shape[1])
            d = np.linalg.norm(x - B_int @ (B_int.T @ x))
            assert d <= diag.error_bound_C * np.linalg.norm(p.A(x)) * (1 + 1e-8)

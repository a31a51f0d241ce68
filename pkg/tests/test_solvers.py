import numpy as np
import pytest

from apgkit import operators as ops
from apgkit import problem as pb
from apgkit import schedules as sch
from apgkit import solvers as sv
from apgkit.errors import (CertificationUnavailableError, OracleUnavailableError,
                           ScheduleError)


def map_line_instance():
    """Alternating projections as a projected-gradient instance.

    Objective: half the squared distance to the line x2 = 0 (so the
    gradient step with unit stepsize is the projection onto the line);
    constraint: the line x1 + x2 = 1.
    """
    A = ops.dense_map(np.array([[0.0, 0.0], [0.0, 1.0]]))
    U = ops.AffineSubspace.from_hyperplane([1.0, 1.0], 1.0)
    return pb.AffineQuadraticProblem(A, np.zeros(2), U, lip=1.0)


def random_instance(seed, rows=8, cols=12, **kw):
    return pb.make_random_problem(rows, cols, seed, **kw)


# -- run_pgm -------------------------------------------------------------------


def test_pgm_alternating_projections_closed_form():
    p = map_line_instance()
    trace = sv.run_pgm(p, np.array([5.0, 0.0]), sv.stop_after(40))
    for k in (1, 2, 3, 10):
        want = np.array([1.0 + 4.0 / 2 ** k, -4.0 / 2 ** k])
        np.testing.assert_allclose(trace.snapshots[k]["x"], want,
                                   rtol=0, atol=1e-13)
    np.testing.assert_allclose(trace.x_final, [1.0, 0.0], atol=1e-10)


def test_pgm_constant_at_fixed_point():
    p = random_instance(1)
    sol = p.solution_set()
    x0 = sol.anchor + sol.basis_par_S @ np.ones(sol.par_dim)
    trace = sv.run_pgm(p, x0, sv.stop_after(30))
    for k, snap in trace.snapshots.items():
        assert np.linalg.norm(snap["x"] - x0) <= 1e-10 * (1 + np.linalg.norm(x0))


def test_pgm_limit_is_best_approximation():
    p = random_instance(2)
    rng = np.random.default_rng(3)
    x0 = rng.standard_normal(p.dim)
    trace = sv.run_pgm(p, x0, sv.stop_on_gradmap(1e-12, max_iter=200_000))
    assert trace.converged
    want = pb.best_approximation(p.solution_set(), x0)
    assert np.linalg.norm(trace.x_final - want) <= 1e-8


def test_pgm_monotone_objective():
    p = random_instance(4)
    rng = np.random.default_rng(5)
    trace = sv.run_pgm(p, rng.standard_normal(p.dim), sv.stop_after(500))
    F = np.asarray(trace.F[1:])  # iterates in U from k = 1 on
    assert np.all(F[1:] <= F[:-1] + 1e-12)


def test_pgm_budget_exhaustion_flagged():
    p = random_instance(6)
    trace = sv.run_pgm(p, np.ones(p.dim) * 5, sv.stop_on_gradmap(1e-14, max_iter=3))
    assert not trace.converged
    assert trace.stop_reason == "budget-exhausted"
    assert trace.iterations == 3


def test_pgm_gap_stop_requires_oracle():
    p = random_instance(7)
    trace = sv.run_pgm(p, np.ones(p.dim), sv.stop_on_gap(1e-12, max_iter=5000))
    assert trace.converged and trace.stop_reason == "gap"
    capped = random_instance(8)
    capped.__dict__["_solution_cache"] = OracleUnavailableError("capped")
    with pytest.raises(OracleUnavailableError):
        sv.run_pgm(capped, np.zeros(capped.dim), sv.stop_on_gap(1e-10))


def test_pgm_alternating_projections_affine_target():
    # distance to an affine (not linear) set V: x2 = 3, via the rewrite
    # A = Id - P_parV, b = A v0, so grad f = Id - P_V and T = P_U P_V.
    A = ops.dense_map(np.array([[0.0, 0.0], [0.0, 1.0]]))
    v0 = np.array([0.0, 3.0])
    U = ops.AffineSubspace.from_hyperplane([1.0, 1.0], 1.0)
    p = pb.AffineQuadraticProblem(A, A(v0), U, lip=1.0)
    T = p.prox_grad_operator()
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.standard_normal(2) * 4
        pv = np.array([x[0], 3.0])
        np.testing.assert_allclose(T(x), U.project(pv), atol=1e-12)
    trace = sv.run_pgm(p, np.array([5.0, 0.0]),
                       sv.stop_on_gradmap(1e-13, max_iter=10_000))
    np.testing.assert_allclose(trace.x_final, [-2.0, 3.0], atol=1e-10)
    np.testing.assert_allclose(p.solution_set().anchor, [-2.0, 3.0], atol=1e-10)


# -- gradient mapping ----------------------------------------------------------


def test_gradient_mapping_zero_at_solution():
    p = random_instance(9)
    sol = p.solution_set()
    assert np.linalg.norm(sv.gradient_mapping(p, sol.anchor)) <= 1e-9


def test_gradient_mapping_orthonormal_rows_formula():
    # with lip = 1, G(x) = (Id - C^T C) A^T (Ax - b) + C^T (Cx - d)
    rng = np.random.default_rng(10)
    n = 4
    dct = ops.dct2d_map(n)
    C = ops.sampled_orthonormal_rows(dct, [0, 1, 5, 7])
    d = rng.standard_normal(4)
    U = ops.AffineSubspace.from_orthonormal_rows(C, d)
    A = ops.row_sampling_map(n * n, [2, 3, 8, 11, 14])
    b = rng.standard_normal(5)
    p = pb.AffineQuadraticProblem(A, b, U, lip=1.0)
    for _ in range(5):
        x = rng.standard_normal(n * n)
        res = A.adjoint(A(x) - b)
        want = res - C.adjoint(C(res)) + C.adjoint(C(x) - d)
        got = sv.gradient_mapping(p, x)
        assert np.linalg.norm(got - want) <= 1e-12 * (1 + np.linalg.norm(want))


def test_gradient_mapping_decreases_along_pgm():
    p = random_instance(11)
    rng = np.random.default_rng(12)
    x0 = rng.standard_normal(p.dim) * 3
    trace = sv.run_pgm(p, x0, sv.stop_after(100))
    assert trace.gradmap[100] < trace.gradmap[0]
    assert trace.gradmap[100] > 0


# -- run_apg -------------------------------------------------------------------


def test_apg_constant_at_fixed_point():
    p = random_instance(13)
    sol = p.solution_set()
    x0 = sol.project(np.ones(p.dim))
    trace = sv.run_apg(p, x0, sch.classical_fista(), sv.stop_after(30))
    for k, snap in trace.snapshots.items():
        assert np.linalg.norm(snap["x"] - x0) <= 1e-9 * (1 + np.linalg.norm(x0))
        # zero momentum forever: y_k = x_k
        assert np.linalg.norm(snap["y"] - snap["x"]) <= 1e-9


def test_apg_rate_bound_holds_everywhere():
    p = pb.make_random_problem(10, 20, 14)
    rng = np.random.default_rng(15)
    x0 = rng.standard_normal(20)
    trace = sv.run_apg(p, x0, sch.linear_half(), sv.stop_after(2000),
                       certify={"rate"})
    assert trace.violation_counts()["rate"] == 0


def test_apg_matches_pgm_limit():
    p = random_instance(16)
    rng = np.random.default_rng(17)
    x0 = rng.standard_normal(p.dim)
    pgm = sv.run_pgm(p, x0, sv.stop_on_gradmap(1e-12, max_iter=200_000))
    apg = sv.run_apg(p, x0, sch.classical_fista(),
                     sv.stop_on_gradmap(1e-12, max_iter=200_000))
    assert pgm.converged and apg.converged
    assert np.linalg.norm(apg.x_final - pgm.x_final) <= 1e-6
    want = pb.best_approximation(p.solution_set(), x0)
    assert np.linalg.norm(apg.x_final - want) <= 1e-6


def test_apg_certificates_classical_conditions():
    for seed, family in ((18, sch.classical_fista()), (19, sch.linear_half())):
        p = random_instance(seed)
        rng = np.random.default_rng(seed + 100)
        x0 = rng.standard_normal(p.dim) * 2
        trace = sv.run_apg(p, x0, family, sv.stop_after(3000),
                           certify={"rate", "xi", "ball"})
        counts = trace.violation_counts()
        assert counts["rate"] == 0
        assert counts["xi"] == 0
        assert counts["ball_x"] == 0
        assert counts["ball_z"] == 0


def test_apg_trace_xi_and_z_recompute():
    p = random_instance(20)
    rng = np.random.default_rng(21)
    x0 = rng.standard_normal(p.dim)
    s = sch.classical_fista()
    trace = sv.run_apg(p, x0, s, sv.stop_after(400), certify={"xi"})
    xstar, mu, lip = trace.xstar, trace.mu, trace.lip
    for k, snap in trace.snapshots.items():
        if k < 1:
            continue
        x, y = snap["x"], snap["y"]
        z = s.t(k) * y + (1 - s.t(k)) * x
        xi = s.t(k - 1) ** 2 * (p.objective(x) - mu) \
            + 0.5 * lip * np.linalg.norm(z - xstar) ** 2
        assert abs(xi - trace.xi[k]) <= 1e-10 * (1 + abs(xi))


def test_apg_inadmissible_schedule_rejected_and_overridable():
    p = random_instance(22)
    bad = sch.custom_schedule([1.0, 100.0, 200.0])
    with pytest.raises(ScheduleError):
        sv.run_apg(p, np.zeros(p.dim), bad, sv.stop_after(2))
    trace = sv.run_apg(p, np.zeros(p.dim), bad, sv.stop_after(2),
                       override_admissibility=True)
    assert trace.iterations == 2


def test_apg_certification_needs_oracle():
    p = random_instance(23)
    p.__dict__["_solution_cache"] = OracleUnavailableError("capped")
    with pytest.raises(CertificationUnavailableError):
        sv.run_apg(p, np.zeros(p.dim), sch.classical_fista(),
                   sv.stop_after(5), certify={"rate"})
    trace = sv.run_apg(p, np.zeros(p.dim), sch.classical_fista(),
                       sv.stop_after(5))
    assert trace.mu is None and np.isnan(trace.gap[0])


def test_apg_chambolle_dossal_limits_agree():
    p = random_instance(24)
    rng = np.random.default_rng(25)
    x0 = rng.standard_normal(p.dim)
    want = pb.best_approximation(p.solution_set(), x0)
    for alpha in (3.0, 5.0):
        trace = sv.run_apg(p, x0, sch.chambolle_dossal(alpha),
                           sv.stop_on_gradmap(1e-12, max_iter=300_000))
        assert trace.converged
        assert np.linalg.norm(trace.x_final - want) <= 1e-6


# -- shadow decomposition --------------------------------------------------------


def test_shadow_first_two_iterations_zero():
    p = random_instance(26, rows=6, cols=10, rank=3, par_dim=7)
    rng = np.random.default_rng(27)
    report = sv.shadow_decomposition(p, rng.standard_normal(10),
                                     sch.linear_half(), K=5)
    assert report[0].s_norm == 0.0
    assert report[1].s_norm <= 1e-12  # r_0 = 0 forces x_1 = T x_0


def test_shadow_checks_pass_K200():
    p = random_instance(28, rows=6, cols=10, rank=3, par_dim=7)
    rng = np.random.default_rng(29)
    report = sv.shadow_decomposition(p, rng.standard_normal(10) * 2,
                                     sch.classical_fista(), K=200)
    assert len(report) == 201
    assert all(r.ok_par and r.ok_proj and r.ok_triangle for r in report)


def test_shadow_requires_oracle():
    p = random_instance(30)
    p.__dict__["_solution_cache"] = OracleUnavailableError("capped")
    with pytest.raises(OracleUnavailableError):
        sv.shadow_decomposition(p, np.zeros(p.dim), sch.linear_half(), K=3)


# -- trace export ----------------------------------------------------------------


def test_trace_csv_and_snapshots(tmp_path):
    p = random_instance(31)
    rng = np.random.default_rng(32)
    trace = sv.run_apg(p, rng.standard_normal(p.dim), sch.classical_fista(),
                       sv.stop_after(50), certify={"rate", "xi", "ball"})
    path = tmp_path / "trace.csv"
    trace.to_csv(path, header_lines=["seed 32"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# seed 32"
    assert lines[1] == sv.TRACE_CSV_HEADER
    assert len(lines) == 2 + 51
    first = lines[2].split(",")
    assert first[0] == "0" and first[3] == ""  # xi starts at k = 1
    assert lines[3].split(",")[6:9] == ["1", "1", "1"]

    snapdir = tmp_path / "snaps"
    trace.dump_snapshots(snapdir)
    assert (snapdir / "x_000000.bin").exists()
    from apgkit.io import read_vector_bin
    np.testing.assert_array_equal(read_vector_bin(snapdir / "x_000050.bin"),
                                  trace.x_final)


def test_generic_drivers_match_run_apg():
    p = random_instance(33)
    rng = np.random.default_rng(34)
    x0 = rng.standard_normal(p.dim)
    T = p.prox_grad_operator()
    s = sch.linear_half()
    trace = sv.run_apg(p, x0, s, sv.stop_after(20))
    gen = sv.apg_iterates(T, x0, sch.linear_half())
    for k in range(21):
        xk, yk = next(gen)
        if k in trace.snapshots:
            np.testing.assert_allclose(xk, trace.snapshots[k]["x"], atol=1e-14)
            np.testing.assert_allclose(yk, trace.snapshots[k]["y"], atol=1e-14)

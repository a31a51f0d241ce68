"""Affine-quadratic problem model: minimize 0.5*||Ax - b||^2 over an affine subspace U.

The model carries the smooth term, its gradient A*(Ax - b), the affine
fixed-point operator of the projected gradient step, and a dense desk-scale
oracle for the solution set

    S = argmin,  par S = ker A  intersect  par U,

reduced over an orthonormal basis of par U and solved by SVD. The oracle is
what certifies limit identification: it exposes the best approximation
P_S x0 that both solvers must converge to.
"""

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (ConstructionError, OracleUnavailableError,
                     PreconditionError)
from .operators import (AffineMap, AffineSubspace, LinearMap, dense_map,
                        operator_norm_sq)

__all__ = [
    "AffineQuadraticProblem",
    "Diagnostics",
    "SolutionSet",
    "best_approximation",
    "closedness_diagnostics",
    "dist_to_S",
    "energy_identity_check",
    "make_random_problem",
    "oracle_cap",
    "prox_grad_operator",
    "solve_solution_set",
]

ORACLE_CAP_ENV = "APGKIT_ORACLE_CAP"
DEFAULT_ORACLE_CAP = 4096
RANK_RTOL = 1e-10           # singular values <= RANK_RTOL * sigma_max count as zero
LIP_SAFETY = 1.0 + 1e-6     # stepsize needs lip >= ||A*A||; Rayleigh estimates sit below


def oracle_cap() -> int:
    return int(os.environ.get(ORACLE_CAP_ENV, DEFAULT_ORACLE_CAP))


class AffineQuadraticProblem:
    """Problem data (A, b, U) plus a certified Lipschitz constant.

    Parameters
    ----------
    A : LinearMap
    b : array
    U : AffineSubspace
    lip : float or "auto"
        Gradient Lipschitz constant, at least ||A*A||. ``"auto"`` runs a
        seeded power iteration and inflates the estimate by a safety factor.
    """

    def __init__(self, A: LinearMap, b, U: AffineSubspace, lip="auto", *,
                 power_tol=1e-12, power_seed=0, power_max_iter=50_000):
        if A.cols != U.dim:
            raise ConstructionError(
                f"A has {A.cols} columns but U lives in dimension {U.dim}")
        b = np.asarray(b, dtype=float).ravel()
        if b.size != A.rows:
            raise ConstructionError(f"b has length {b.size}, expected {A.rows}")
        self.A = A
        self.b = b
        self.U = U
        self.power_seed = int(power_seed)
        est = operator_norm_sq(A, tol=power_tol, max_iter=power_max_iter,
                               seed=power_seed)
        if lip == "auto" or lip is None:
            self.lip = est * LIP_SAFETY if est > 0 else 1.0
        else:
            self.lip = float(lip)
            if self.lip < est - 1e-8:
                raise ConstructionError(
                    f"lip={self.lip} is below the certified estimate {est}")

    @property
    def dim(self) -> int:
        return self.A.cols

    def f(self, x) -> float:
        r = self.A(x) - self.b
        return 0.5 * float(np.dot(r, r))

    def grad(self, x):
        return self.A.adjoint(self.A(x) - self.b)

    def objective(self, x, membership_tol=1e-8) -> float:
        """f + indicator of U; infinite off U (up to the stated tolerance)."""
        if not self.U.contains(x, membership_tol):
            return np.inf
        return self.f(x)

    def prox_grad_operator(self) -> AffineMap:
        return prox_grad_operator(self)

    @cached_property
    def _solution_cache(self):
        try:
            return solve_solution_set(self)
        except OracleUnavailableError as exc:
            return exc

    def solution_set(self) -> "SolutionSet":
        sol = self._solution_cache
        if isinstance(sol, OracleUnavailableError):
            raise sol
        return sol

    def try_solution_set(self):
        sol = self._solution_cache
        return None if isinstance(sol, OracleUnavailableError) else sol

    @property
    def mu(self) -> float:
        return self.solution_set().mu


@dataclass
class SolutionSet:
    """One minimizer, an orthonormal basis of par S, and the optimal value."""
    anchor: np.ndarray
    basis_par_S: np.ndarray
    mu: float

    @property
    def par_dim(self) -> int:
        return self.basis_par_S.shape[1]

    def project(self, x):
        """Best approximation of x in S."""
        x = np.asarray(x, dtype=float)
        B = self.basis_par_S
        return self.anchor + B @ (B.T @ (x - self.anchor))

    def dist(self, x) -> float:
        return float(np.linalg.norm(np.asarray(x, dtype=float) - self.project(x)))

    def validate(self, problem: AffineQuadraticProblem):
        """Residuals behind the construction invariants, for diagnostics."""
        B = self.basis_par_S
        a_res = max((np.linalg.norm(problem.A(B[:, j])) for j in range(B.shape[1])),
                    default=0.0)
        u_res = max((problem.U.par_projector()(B[:, j]) - B[:, j]
                     for j in range(B.shape[1])),
                    key=np.linalg.norm, default=np.zeros(problem.dim))
        g = problem.grad(self.anchor)
        opt_res = np.linalg.norm(problem.U.par_projector()(g))
        return {
            "basis_kerA_residual": float(a_res),
            "basis_parU_residual": float(np.linalg.norm(u_res)),
            "anchor_membership_residual": problem.U.membership_residual(self.anchor),
            "anchor_optimality_residual": float(opt_res),
            "gradient_norm_scale": float(np.linalg.norm(g)),
        }


def prox_grad_operator(p: AffineQuadraticProblem) -> AffineMap:
    """Affine form T = q + L of the projected gradient step.

    q = u0 + (1/lip) P_parU A* b and L = P_parU (Id - (1/lip) A* A), where
    u0 is the min-norm point of U. Evaluating T(x) agrees with the two-step
    form P_U(x - (1/lip) grad f(x)).
    """
    par = p.U.par_projector()
    u0 = p.U.project(np.zeros(p.dim))
    inv_lip = 1.0 / p.lip
    q = u0 + inv_lip * par(p.A.adjoint(p.b))

    def apply(x):
        return par(x - inv_lip * p.A.adjoint(p.A(x)))

    def adjoint(y):
        w = par(y)
        return w - inv_lip * p.A.adjoint(p.A(w))

    L = LinearMap(p.dim, p.dim, apply, adjoint, kind="composition")
    return AffineMap(L, q)


def solve_solution_set(p: AffineQuadraticProblem, cap=None) -> SolutionSet:
    """Dense oracle: reduce over an orthonormal basis of par U and solve by SVD.

    The anchor is u0 + B z with z the min-norm least-squares solution of
    (A B) z = b - A u0; par S is spanned by B applied to the null space of
    A B. Rank decisions use the relative threshold ``RANK_RTOL``.

    Raises
    ------
    OracleUnavailableError
        When the ambient dimension exceeds the cap (``APGKIT_ORACLE_CAP``,
        default 4096).
    """
    cap = oracle_cap() if cap is None else cap
    if p.dim > cap:
        raise OracleUnavailableError(
            f"ambient dimension {p.dim} exceeds the oracle cap {cap}")
    u0, B = p.U.to_basis()
    r = B.shape[1]
    AB = np.zeros((p.A.rows, r))
    for j in range(r):
        AB[:, j] = p.A(B[:, j])
    rhs = p.b - p.A(u0)
    if r == 0:
        return SolutionSet(anchor=u0, basis_par_S=B, mu=p.f(u0))
    Uf, s, Vt = np.linalg.svd(AB, full_matrices=True)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > RANK_RTOL * smax)) if smax > 0 else 0
    z = np.zeros(r)
    for i in range(rank):
        z += (np.dot(Uf[:, i], rhs) / s[i]) * Vt[i]
    anchor = u0 + B @ z
    basis_par_S = B @ Vt[rank:].T
    return SolutionSet(anchor=anchor, basis_par_S=basis_par_S, mu=p.f(anchor))


def best_approximation(s: SolutionSet, x0):
    """P_S x0 = anchor + B_S B_S^T (x0 - anchor)."""
    return s.project(x0)


def dist_to_S(s: SolutionSet, x) -> float:
    return s.dist(x)


def energy_identity_check(p: AffineQuadraticProblem, s: SolutionSet, x):
    """Return (||A(x - anchor)||^2, 2 (f(x) - mu)) for a feasible x.

    The two entries agree for any x in U; the caller asserts the tolerance.

    Raises
    ------
    PreconditionError
        If x is detectably outside U (the identity is stated on U).
    """
    x = np.asarray(x, dtype=float)
    if not p.U.contains(x, 1e-8):
        raise PreconditionError("energy identity requires x in U")
    lhs = float(np.linalg.norm(p.A(x) - p.A(s.anchor)) ** 2)
    rhs = 2.0 * (p.f(x) - s.mu)
    return lhs, rhs


@dataclass
class Diagnostics:
    """Closedness data: Friedrichs-angle cosine and the error-bound constant."""
    friedrichs_cos: float
    error_bound_C: float


def closedness_diagnostics(p: AffineQuadraticProblem, cap=None, *, seed=0,
                           certify=True) -> Diagnostics:
    """Friedrichs cosine of (par U, ker A) and C with dist(x, ker A ∩ par U) <= C||Ax||.

    The cosine comes from the principal angles between the two subspaces
    with the intersection removed; subspace pairs whose intersection equals
    one of them yield 0 (supremum over an empty set). C is the reciprocal
    of the smallest positive singular value of A restricted to par U; when
    requested, the bound is spot-checked on seeded random points of par U.
    """
    cap = oracle_cap() if cap is None else cap
    if p.dim > cap:
        raise OracleUnavailableError(
            f"ambient dimension {p.dim} exceeds the oracle cap {cap}")
    _, B_U = p.U.to_basis()
    A_dense = p.A.as_matrix()
    _, sa, Vta = np.linalg.svd(A_dense, full_matrices=True)
    rank_A = int(np.sum(sa > RANK_RTOL * sa[0])) if sa.size and sa[0] > 0 else 0
    B_ker = Vta[rank_A:].T

    if B_U.shape[1] == 0 or B_ker.shape[1] == 0:
        c_f = 0.0
    else:
        sv = np.linalg.svd(B_U.T @ B_ker, compute_uv=False)
        sv = np.clip(sv, 0.0, 1.0)
        off_intersection = sv[sv < 1.0 - 1e-10]
        c_f = float(off_intersection[0]) if off_intersection.size else 0.0

    AB = A_dense @ B_U
    if AB.size == 0:
        s_ab = np.zeros(0)
        Vt_ab = np.zeros((0, B_U.shape[1]))
    else:
        _, s_ab, Vt_ab = np.linalg.svd(AB, full_matrices=True)
    smax = s_ab[0] if s_ab.size else 0.0
    rank_ab = int(np.sum(s_ab > RANK_RTOL * smax)) if smax > 0 else 0
    positive = s_ab[:rank_ab]
    C = float(1.0 / positive[-1]) if positive.size else 0.0

    if certify and B_U.shape[1]:
        B_int = B_U @ Vt_ab[rank_ab:].T       # basis of ker A ∩ par U
        rng = np.random.default_rng(seed)
        for _ in range(50):
            x = B_U @ rng.standard_normal(B_U.shape[1])
            d = np.linalg.norm(x - B_int @ (B_int.T @ x))
            if d > C * np.linalg.norm(A_dense @ x) * (1.0 + 1e-8) + 1e-12:
                raise RuntimeError(
                    "error-bound certificate failed; rank threshold suspect")
    return Diagnostics(friedrichs_cos=c_f, error_bound_C=C)


def make_random_problem(rows, cols, seed, *, rank=None, par_dim=None,
                        lip="auto") -> AffineQuadraticProblem:
    """Seeded random instance with controllable rank deficiency.

    Defaults choose rank about half of min(rows, cols) and par U large
    enough that ker A ∩ par U is nontrivial, so the solution set has
    positive dimension and limit identification is meaningful.
    """
    rng = np.random.default_rng(seed)
    if rank is None:
        rank = max(1, min(rows, cols) // 2)
    if par_dim is None:
        par_dim = max(1, (3 * cols) // 4)
    M = rng.standard_normal((rows, rank)) @ rng.standard_normal((rank, cols))
    basis, _ = np.linalg.qr(rng.standard_normal((cols, par_dim)))
    U = AffineSubspace.from_basis(rng.standard_normal(cols), basis)
    b = rng.standard_normal(rows)
    return AffineQuadraticProblem(dense_map(M), b, U, lip=lip,
                                  power_seed=int(seed) % (2 ** 31))

"""Projected-gradient and inertial (accelerated) iterations with certificates.

Both solvers iterate the affine operator T of the problem model. The
accelerated run can certify, iteration by iteration,

* ``rate``    F(x_k) - mu <= 2 lip dist(x0, S)^2 / (k+1)^2          (k >= 1)
* ``xi``      the Lyapunov chain xi_{k+1} <= xi_k with
              xi_1 <= (lip/2) ||x0 - x*||^2, where
              xi_k = t_{k-1}^2 (F(x_k) - mu) + (lip/2) ||z_k - x*||^2 and
              z_k = t_k y_k + (1 - t_k) x_k                         (k >= 1)
* ``ball``    ||x_k - x*|| <= ||x0 - x*|| and ||z_k - x*|| <= ||x0 - x*||
* ``shadow``  the decomposition x_k = T^k x0 + s_k with s_k orthogonal to
              par S, P_S x_k = P_S T^k x0, and the triangle bound
              ||s_k|| <= dist(x_k, S) + dist(T^k x0, S)

with x* = P_S x0 from the dense oracle. Every theoretical bound B is
checked as ``value <= B + 1e-9 * (1 + B)``; the mixed form absorbs floating
round-off both at scale and near zero. Violations are recorded with their
iteration index, never raised.

The xi and ball certificates are guaranteed only for parameter sequences
satisfying the classical conditions; for other schedules violations are
still recorded but carry no meaning of failure.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (CertificationUnavailableError, OracleUnavailableError,
                     ScheduleError)
from .io import fmt_float, write_vector_bin
from .problem import AffineQuadraticProblem
from .schedules import Schedule

__all__ = [
    "SolverTrace",
    "StopRule",
    "apg_iterates",
    "gradient_mapping",
    "pgm_iterates",
    "run_apg",
    "run_pgm",
    "shadow_decomposition",
    "stop_after",
    "stop_on_gap",
    "stop_on_gradmap",
]

CERT_SLACK = 1e-9
SHADOW_TOL = 1e-8
DEFAULT_MAX_ITER = 1_000_000
VECTOR_DENSE_LIMIT = 1000
VECTOR_STRIDE = 100

CERT_FLAGS = frozenset({"rate", "xi", "ball", "shadow"})

TRACE_CSV_HEADER = "iter,F,gap,xi,dist_S,gradmap,bound_rate,bound_xi,bound_ball"


@dataclass
class StopRule:
    """Combined stopping rule; a max-iteration guard is always present."""
    gradmap_tol: float | None = None
    gap_tol: float | None = None
    max_iter: int = DEFAULT_MAX_ITER

    @property
    def kind(self) -> str:
        kinds = []
        if self.gradmap_tol is not None:
            kinds.append(f"gradmap-norm({self.gradmap_tol})")
        if self.gap_tol is not None:
            kinds.append(f"gap({self.gap_tol})")
        kinds.append(f"max-iter({self.max_iter})")
        return " + ".join(kinds) if len(kinds) > 1 else kinds[0]


def stop_on_gradmap(tol, max_iter=DEFAULT_MAX_ITER) -> StopRule:
    return StopRule(gradmap_tol=float(tol), max_iter=max_iter)


def stop_on_gap(tol, max_iter=DEFAULT_MAX_ITER) -> StopRule:
    return StopRule(gap_tol=float(tol), max_iter=max_iter)


def stop_after(iterations) -> StopRule:
    return StopRule(max_iter=int(iterations))


def _keep_vector(k: int) -> bool:
    return k <= VECTOR_DENSE_LIMIT or k % VECTOR_STRIDE == 0


@dataclass
class SolverTrace:
    """Per-iteration scalars, subsampled vector snapshots, and bound flags.

    Scalars are recorded at every iteration; vectors are kept densely for
    k <= 1000 and every 100th iteration afterwards (plus the final one).
    ``bound_flags`` maps certificate names to the list of violating
    iteration indices.
    """
    method: str
    lip: float
    power_seed: int | None = None
    schedule: Schedule | None = None
    mu: float | None = None
    xstar: np.ndarray | None = None
    F: list = field(default_factory=list)
    gap: list = field(default_factory=list)
    xi: list = field(default_factory=list)
    dist_S: list = field(default_factory=list)
    gradmap: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    bound_flags: dict = field(default_factory=dict)
    shadow: dict | None = None
    converged: bool = False
    stop_reason: str = ""
    iterations: int = 0
    x_final: np.ndarray | None = None

    def flag(self, name: str, k: int):
        self.bound_flags.setdefault(name, []).append(k)

    def violation_counts(self) -> dict:
        return {name: len(ks) for name, ks in self.bound_flags.items()}

    def certified(self, name: str) -> bool:
        return name in self.bound_flags

    def _flag_cell(self, names, k):
        active = [n for n in names if n in self.bound_flags]
        if not active:
            return ""
        return "0" if any(k in self.bound_flags[n] for n in active) else "1"

    def to_csv(self, path, header_lines=()):
        def cell(v):
            return "" if v is None or (isinstance(v, float) and np.isnan(v)) \
                else fmt_float(v)

        with open(path, "w", encoding="utf-8") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write(TRACE_CSV_HEADER + "\n")
            for k in range(len(self.F)):
                row = [str(k), cell(self.F[k]), cell(self.gap[k]),
                       cell(self.xi[k]), cell(self.dist_S[k]),
                       cell(self.gradmap[k]),
                       self._flag_cell(("rate",), k),
                       self._flag_cell(("xi",), k),
                       self._flag_cell(("ball_x", "ball_z"), k)]
                fh.write(",".join(row) + "\n")

    def dump_snapshots(self, directory):
        """Vectors as binary files keyed by iteration."""
        import os
        os.makedirs(directory, exist_ok=True)
        for k, vecs in sorted(self.snapshots.items()):
            for name, v in vecs.items():
                write_vector_bin(os.path.join(directory, f"{name}_{k:06d}.bin"), v)


def gradient_mapping(p: AffineQuadraticProblem, x):
    """Composite gradient mapping G(x) = x - P_U(x - (1/lip) grad f(x)).

    Uses the same stepsize as the solver, so G(x) = x - T(x) and G vanishes
    exactly on the solution set.
    """
    x = np.asarray(x, dtype=float)
    return x - p.U.project(x - (1.0 / p.lip) * p.grad(x))


def pgm_iterates(T, x0):
    """Generator of p_0, p_1, ... under p_{k+1} = T(p_k)."""
    x = x0
    while True:
        yield x
        x = T(x)


def apg_iterates(T, x0, sched: Schedule):
    """Generator of (x_k, y_k) for the inertial scheme with r_0 = 0.

    x_{k+1} = T(x_k + r_k), r_{k+1} = alpha_k (x_{k+1} - x_k); the pair
    yielded is (x_k, y_k = x_k + r_k), matching the two-sequence form.
    """
    x = x0
    r = x0 - x0
    k = 0
    while True:
        y = x + r
        yield x, y
        x_next = T(y)
        r = sched.alpha(k) * (x_next - x)
        x = x_next
        k += 1


def _mixed_bound_ok(value, bound) -> bool:
    return value <= bound + CERT_SLACK * (1.0 + bound)


def run_pgm(p: AffineQuadraticProblem, x0, stop: StopRule, *,
            record_dist=True) -> SolverTrace:
    """Fixed-point iteration of T from x0.

    Records F and, when the oracle is available, dist(x_k, S) at every
    iteration. The gradient-mapping norm ||G(p_k)|| = ||p_k - p_{k+1}||
    comes free. A gap-based stop needs the oracle.
    """
    x = np.asarray(x0, dtype=float).copy()
    T = p.prox_grad_operator()
    sol = p.try_solution_set()
    if stop.gap_tol is not None and sol is None:
        raise OracleUnavailableError("gap-based stopping needs the oracle value mu")
    mu = sol.mu if sol is not None else None
    trace = SolverTrace(method="pgm", lip=p.lip, power_seed=p.power_seed, mu=mu,
                        xstar=sol.project(x0) if sol is not None else None)
    for k in range(stop.max_iter + 1):
        x_next = T(x)
        gnorm = float(np.linalg.norm(x - x_next))
        F_k = p.objective(x)
        trace.F.append(F_k)
        trace.gap.append(F_k - mu if mu is not None else np.nan)
        trace.xi.append(np.nan)
        trace.dist_S.append(sol.dist(x) if sol is not None and record_dist
                            else np.nan)
        trace.gradmap.append(gnorm)
        if _keep_vector(k):
            trace.snapshots[k] = {"x": x.copy()}
        if stop.gradmap_tol is not None and gnorm <= stop.gradmap_tol:
            trace.converged, trace.stop_reason = True, "gradmap"
            break
        if stop.gap_tol is not None and trace.gap[-1] <= stop.gap_tol:
            trace.converged, trace.stop_reason = True, "gap"
            break
        if k == stop.max_iter:
            break
        x = x_next
    trace.iterations = len(trace.F) - 1
    trace.x_final = x
    trace.snapshots.setdefault(trace.iterations, {"x": x.copy()})
    if not trace.converged:
        tol_requested = stop.gradmap_tol is not None or stop.gap_tol is not None
        trace.converged = not tol_requested
        trace.stop_reason = "max-iter" if trace.converged else "budget-exhausted"
    return trace


def run_apg(p: AffineQuadraticProblem, x0, sched: Schedule, stop: StopRule,
            certify=(), *, override_admissibility=False,
            record_dist=True) -> SolverTrace:
    """Inertial iteration x_{k+1} = T(x_k + r_k), r_{k+1} = alpha_k (x_{k+1} - x_k).

    Parameters
    ----------
    certify : iterable of {"rate", "xi", "ball", "shadow"}
        Certificates evaluated at every iteration; violations land in
        ``trace.bound_flags`` with the offending index. All of them need
        the solution-set oracle.

    Raises
    ------
    ScheduleError
        Non-admissible schedule without ``override_admissibility``.
    CertificationUnavailableError
        Certificates requested but the oracle cap is exceeded; rerun with
        ``certify=()`` to proceed without them.
    """
    certify = frozenset(certify)
    unknown = certify - CERT_FLAGS
    if unknown:
        raise ValueError(f"unknown certification flags: {sorted(unknown)}")
    if not sched.admissible and not override_admissibility:
        raise ScheduleError(
            f"schedule {sched.family!r} is not admissible; pass "
            "override_admissibility=True to run anyway")
    T = p.prox_grad_operator()
    sol = p.try_solution_set()
    if sol is None:
        if certify:
            raise CertificationUnavailableError(
                "certification needs the solution-set oracle (cap exceeded); "
                "run with certify=() to proceed without it")
        if stop.gap_tol is not None:
            raise OracleUnavailableError("gap-based stopping needs mu")
    mu = sol.mu if sol is not None else None
    xstar = sol.project(np.asarray(x0, dtype=float)) if sol is not None else None

    trace = SolverTrace(method="apg", lip=p.lip, power_seed=p.power_seed,
                        schedule=sched, mu=mu, xstar=xstar)
    # fixed registration order keeps exported flag ordering deterministic
    if "rate" in certify:
        trace.bound_flags["rate"] = []
    if "xi" in certify:
        trace.bound_flags["xi"] = []
    if "ball" in certify:
        trace.bound_flags["ball_x"] = []
        trace.bound_flags["ball_z"] = []
    shadow = "shadow" in certify
    if shadow:
        trace.shadow = {"s_norm": [], "s_par_norm": [], "proj_gap": [],
                        "dist_x": [], "dist_p": []}
        for name in ("shadow_par", "shadow_proj", "shadow_tri"):
            trace.bound_flags.setdefault(name, [])

    x = np.asarray(x0, dtype=float).copy()
    r = np.zeros_like(x)
    p_sh = x.copy() if shadow else None
    dist0 = float(np.linalg.norm(x - xstar)) if xstar is not None else np.nan
    xi_prev = np.nan
    xi_1 = np.nan

    for k in range(stop.max_iter + 1):
        y = x + r
        x_next = T(y)                       # x_{k+1}
        Tx = x_next if k == 0 else T(x)     # T(x_k); shared at k = 0
        gnorm = float(np.linalg.norm(x - Tx))
        F_k = p.objective(x)
        gap_k = F_k - mu if mu is not None else np.nan
        xi_k = np.nan
        if k >= 1 and mu is not None:
            t_k = sched.t(k)
            z = t_k * y + (1.0 - t_k) * x
            xi_k = (sched.t(k - 1) ** 2) * gap_k \
                + 0.5 * p.lip * float(np.linalg.norm(z - xstar) ** 2)

        trace.F.append(F_k)
        trace.gap.append(gap_k)
        trace.xi.append(xi_k)
        trace.dist_S.append(sol.dist(x) if sol is not None and record_dist
                            else np.nan)
        trace.gradmap.append(gnorm)
        if _keep_vector(k):
            snap = {"x": x.copy(), "y": y.copy()}
            if shadow:
                snap["p"] = p_sh.copy()
            trace.snapshots[k] = snap

        if "rate" in certify and k >= 1:
            bound = 2.0 * p.lip * dist0 * dist0 / (k + 1) ** 2
            if not _mixed_bound_ok(gap_k, bound):
                trace.flag("rate", k)
        if "ball" in certify:
            if not _mixed_bound_ok(float(np.linalg.norm(x - xstar)), dist0):
                trace.flag("ball_x", k)
            if k >= 1 and not _mixed_bound_ok(float(np.linalg.norm(z - xstar)),
                                              dist0):
                trace.flag("ball_z", k)
        if "xi" in certify and k >= 1:
            if k == 1:
                xi_1 = xi_k
                if not _mixed_bound_ok(xi_k, 0.5 * p.lip * dist0 * dist0):
                    trace.flag("xi", k)
            elif xi_k > xi_prev + CERT_SLACK * (1.0 + xi_1):
                trace.flag("xi", k)
            xi_prev = xi_k
        if shadow:
            s = x - p_sh
            s_norm = float(np.linalg.norm(s))
            Bs = sol.basis_par_S
            s_par = float(np.linalg.norm(Bs.T @ s)) if Bs.shape[1] else 0.0
            proj_gap = float(np.linalg.norm(sol.project(x) - sol.project(p_sh)))
            dist_x, dist_p = sol.dist(x), sol.dist(p_sh)
            trace.shadow["s_norm"].append(s_norm)
            trace.shadow["s_par_norm"].append(s_par)
            trace.shadow["proj_gap"].append(proj_gap)
            trace.shadow["dist_x"].append(dist_x)
            trace.shadow["dist_p"].append(dist_p)
            if s_par > SHADOW_TOL * (1.0 + s_norm):
                trace.flag("shadow_par", k)
            if proj_gap > SHADOW_TOL:
                trace.flag("shadow_proj", k)
            if s_norm > dist_x + dist_p + SHADOW_TOL:
                trace.flag("shadow_tri", k)

        if stop.gradmap_tol is not None and gnorm <= stop.gradmap_tol:
            trace.converged, trace.stop_reason = True, "gradmap"
            break
        if stop.gap_tol is not None and k >= 1 and gap_k <= stop.gap_tol:
            trace.converged, trace.stop_reason = True, "gap"
            break
        if k == stop.max_iter:
            break
        r = sched.alpha(k) * (x_next - x)
        x = x_next
        if shadow:
            p_sh = T(p_sh)

    trace.iterations = len(trace.F) - 1
    trace.x_final = x
    snap = trace.snapshots.setdefault(trace.iterations, {})
    snap.setdefault("x", x.copy())
    if not trace.converged:
        tol_requested = stop.gradmap_tol is not None or stop.gap_tol is not None
        trace.converged = not tol_requested
        trace.stop_reason = "max-iter" if trace.converged else "budget-exhausted"
    return trace


@dataclass
class ShadowRecord:
    """Decomposition diagnostics at one iteration of the paired runs."""
    k: int
    s_norm: float
    s_par_norm: float
    proj_gap: float
    dist_x: float
    dist_p: float
    ok_par: bool
    ok_proj: bool
    ok_triangle: bool


def shadow_decomposition(p: AffineQuadraticProblem, x0, sched: Schedule,
                         K: int) -> list[ShadowRecord]:
    """Run APG and a shadow PGM from the same start; report the split x_k = T^k x0 + s_k.

    For each k <= K the report carries ||s_k||, its component in par S
    (theory: zero), the gap ||P_S x_k - P_S T^k x0|| (theory: zero), and
    the two distances of the triangle bound. The shadow iterates are
    recomputed by iteration, never by powering a matrix.
    """
    p.solution_set()  # raises OracleUnavailableError when capped
    trace = run_apg(p, x0, sched, stop_after(K), certify={"shadow"})
    sh = trace.shadow
    report = []
    for k in range(len(sh["s_norm"])):
        report.append(ShadowRecord(
            k=k,
            s_norm=sh["s_norm"][k],
            s_par_norm=sh["s_par_norm"][k],
            proj_gap=sh["proj_gap"][k],
            dist_x=sh["dist_x"][k],
            dist_p=sh["dist_p"][k],
            ok_par=k not in trace.bound_flags["shadow_par"],
            ok_proj=k not in trace.bound_flags["shadow_proj"],
            ok_triangle=k not in trace.bound_flags["shadow_tri"],
        ))
    return report

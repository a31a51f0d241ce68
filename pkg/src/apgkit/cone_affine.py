"""Exact-rational alternating projections vs. inertial iteration on a cone/affine pair.

The feasibility problem here is U ∩ V with U the line x1 + x2 = 1 and V the
nonnegative quadrant: minimize half the squared distance to V subject to
x in U. The quadrant is a cone, not an affine subspace, so the fixed-point
operator P_U P_V is *not* affine and the two methods may converge to
different points of U ∩ V. Everything below runs in exact rational
arithmetic so limits and trajectories are equalities, not approximations.

The inertial run uses t_k = (k + 2)/2, i.e. alpha_k = k/(k + 3). Once some
index M >= 3 has y_M in U ∩ V with the second-coordinate increment d_M
positive and u_M + (M-1)/2 d_M <= 1, the iteration never leaves U ∩ V again
and its limit has second coordinate u* = u_M + (M-1)/2 d_M, with the
increments decaying as d_{k+1} = ((k-1)/(k+2)) d_k. Starting from (w, 0)
the alternating-projection limit is always (1, 0), so any detected u* > 0
separates the two limits.
"""

from dataclasses import dataclass
from fractions import Fraction

from .errors import DetectionError, PreconditionError

__all__ = [
    "ConeAffineState",
    "DetectionResult",
    "Rat",
    "SeparationReport",
    "apg_cone_iterate",
    "aux_sequence",
    "detect_M_and_limit",
    "in_intersection",
    "map_closed_form",
    "project_cone",
    "project_line",
    "separation_certificate",
]

Rat = Fraction  # reduced num/den pairs with positive denominator

ZERO = Fraction(0)
ONE = Fraction(1)


def project_cone(point):
    """Componentwise max with 0, exactly."""
    a, b = point
    return (a if a > 0 else ZERO, b if b > 0 else ZERO)


def project_line(point):
    """Projection onto x1 + x2 = 1: ((a - b + 1)/2, (b - a + 1)/2)."""
    a, b = point
    return (Fraction(a - b + 1, 2), Fraction(b - a + 1, 2))


def in_intersection(point) -> bool:
    a, b = point
    return a >= 0 and b >= 0 and a + b == 1


def map_closed_form(w, k: int):
    """k-th alternating-projection iterate from (w, 0): (1 + (w-1)/2^k, -(w-1)/2^k)."""
    w = Fraction(w)
    if w < 1 or k < 1:
        raise PreconditionError("closed form needs w >= 1 and k >= 1")
    shift = Fraction(w - 1, 2 ** k)
    return (1 + shift, -shift)


@dataclass(frozen=True)
class ConeAffineState:
    """Exact joint state at index k: MAP iterate p, inertial pair (x, y), u, d.

    u_k is the second coordinate of x_k (so x_k = (1 - u_k, u_k) once the
    iterate is on the line) and d_k = u_k - u_{k-1}; d is None at k = 0.
    """
    k: int
    p: tuple
    x: tuple
    y: tuple
    u: Fraction
    d: Fraction | None


def apg_cone_iterate(w, K: int) -> list[ConeAffineState]:
    """Exact trajectory of both methods from (w, 0) up to index K."""
    w = Fraction(w)
    if w < 1:
        raise PreconditionError("start abscissa must satisfy w >= 1")
    x0 = (w, ZERO)
    states = [ConeAffineState(k=0, p=x0, x=x0, y=x0, u=ZERO, d=None)]
    p = x0
    x = x0
    x_prev = x0
    y = x0
    for k in range(1, K + 1):
        p = project_line(project_cone(p))
        x_next = project_line(project_cone(y))
        alpha = Fraction(k - 1, k + 2)  # alpha_{k-1} = (k-1)/((k-1)+3)
        y = (x_next[0] + alpha * (x_next[0] - x[0]),
             x_next[1] + alpha * (x_next[1] - x[1]))
        x_prev, x = x, x_next
        u = x[1]
        states.append(ConeAffineState(k=k, p=p, x=x, y=y, u=u,
                                      d=u - x_prev[1]))
    return states


@dataclass(frozen=True)
class DetectionResult:
    M: int
    d_M: Fraction
    u_star: Fraction
    x_star: tuple


def detect_M_and_limit(states) -> DetectionResult | None:
    """First index M >= 3 meeting the absorption hypotheses, with the exact limit.

    Requires y_M in U ∩ V, d_M > 0, and u* = u_M + (M-1)/2 d_M in (0, 1].
    Returns None when no index in the provided trajectory qualifies; the
    caller may extend the horizon and retry.
    """
    for st in states:
        if st.k < 3 or st.d is None:
            continue
        if st.d > 0 and in_intersection(st.y):
            u_star = st.u + Fraction(st.k - 1, 2) * st.d
            if 0 < u_star <= 1:
                return DetectionResult(M=st.k, d_M=st.d, u_star=u_star,
                                       x_star=(1 - u_star, u_star))
    return None


def aux_sequence(a, M: int, k: int):
    """Closed forms for a_{k+1} = ((k-1)/(k+2)) a_k started at a_M = a.

    Returns (a_k, sum_{j=M..k} a_{j+1}, sum_{j=k..inf} a_{j+1}), all exact:

        a_k   = a (M-1)M(M+1) / ((k-1)k(k+1))
        head  = a (M-1)/2 * (1 - M(M+1)/((k+1)(k+2)))
        tail  = a (M-1)M(M+1) / (2 k(k+1))
    """
    a = Fraction(a)
    if M < 2 or not (0 < a < 1) or k < M:
        raise PreconditionError("need M >= 2, a in (0,1), k >= M")
    top = a * (M - 1) * M * (M + 1)
    a_k = top / ((k - 1) * k * (k + 1))
    head = Fraction(a * (M - 1), 2) * (1 - Fraction(M * (M + 1), (k + 1) * (k + 2)))
    tail = top / (2 * k * (k + 1))
    return a_k, head, tail


@dataclass(frozen=True)
class SeparationReport:
    """Exact limits of both methods from (w, 0) and their separation."""
    w: Fraction
    M: int | None
    d_M: Fraction | None
    u_star: Fraction
    x_star: tuple
    p_star: tuple
    separation_sq: Fraction


def separation_certificate(w, K: int) -> SeparationReport:
    """Exact p*, x*, and ||x* - p*||^2 from the start (w, 0).

    A start already in U ∩ V is an exact fixed point of both methods (the
    absorption hypotheses need d_M > 0 and can never fire), so it is
    reported directly with zero separation.

    Raises
    ------
    DetectionError
        When the absorption index is not found within the horizon K.
    """
    w = Fraction(w)
    if w < 1:
        raise PreconditionError("start abscissa must satisfy w >= 1")
    x0 = (w, ZERO)
    if in_intersection(x0):
        return SeparationReport(w=w, M=None, d_M=None, u_star=x0[1],
                                x_star=x0, p_star=x0, separation_sq=ZERO)
    states = apg_cone_iterate(w, K)
    det = detect_M_and_limit(states)
    if det is None:
        raise DetectionError(
            f"absorption index not found for w={w} within horizon {K}; "
            "extend the horizon")
    p_star = (ONE, ZERO)
    dx = det.x_star[0] - p_star[0]
    dy = det.x_star[1] - p_star[1]
    return SeparationReport(w=w, M=det.M, d_M=det.d_M, u_star=det.u_star,
                            x_star=det.x_star, p_star=p_star,
                            separation_sq=dx * dx + dy * dy)

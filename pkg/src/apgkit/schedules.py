"""Inertial parameter sequences (t_k) and the derived coefficients alpha_k.

Built-in families:

* ``classical-fista``   t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2
* ``linear-half``       t_k = (k + 2) / 2
* ``chambolle-dossal``  t_{k+1} = 1 + k / (alpha - 1), alpha >= 3
* ``theta-family``      t_{k+1}^2 - t_k^2 = (1 - theta) t_{k+1} + theta t_k,
                        positive root, theta in [0, 1)

All built-ins start at t_0 = 1 and are nondecreasing, so
alpha_k = (t_k - 1) / t_{k+1} stays in [0, 1).

Admissibility conditions are certified numerically with a relative slack:
in float64 the classical identity t_k^2 = t_{k+1}^2 - t_{k+1} can only hold
to roughly ``eps * t_k^2``, which dwarfs any absolute tolerance once
t_k ~ k/2 is large.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ScheduleError

__all__ = [
    "Schedule",
    "ValidationReport",
    "chambolle_dossal",
    "classical_fista",
    "custom_schedule",
    "linear_half",
    "schedule_from_csv",
    "theta_family",
    "validate_parameter_sequence",
]

REL_SLACK = 1e-12


class Schedule:
    """Lazily generated, memoized parameter sequence."""

    def __init__(self, family, rule=None, values=None, params=None):
        self.family = family
        self.params = dict(params or {})
        self._rule = rule
        if values is not None:
            self._t = [float(v) for v in values]
            if not self._t:
                raise ScheduleError("empty parameter sequence")
        else:
            self._t = [1.0]

    def t(self, k: int) -> float:
        if k < 0:
            raise ScheduleError("parameter index must be nonnegative")
        while k >= len(self._t):
            if self._rule is None:
                raise ScheduleError(
                    f"{self.family} schedule exhausted at index {len(self._t)}")
            j = len(self._t) - 1
            self._t.append(self._rule(j, self._t[j]))
        return self._t[k]

    def alpha(self, k: int) -> float:
        return (self.t(k) - 1.0) / self.t(k + 1)

    def t_values(self, upto: int) -> np.ndarray:
        """t_0 ... t_upto as an array."""
        self.t(upto)
        return np.asarray(self._t[: upto + 1])

    def validate(self, upto: int = 10_000) -> "ValidationReport":
        return validate_parameter_sequence(self.t_values(upto))

    @property
    def admissible(self) -> bool:
        """True when the family guarantees convergent inertia.

        Built-ins are admissible by construction; a custom sequence is
        admissible when its provided values satisfy either the classical
        conditions or the relaxed one-sided bound.
        """
        if self.family != "custom":
            return True
        report = validate_parameter_sequence(np.asarray(self._t))
        return report.classical_ok or report.br_ok

    def __repr__(self):
        extra = "".join(f", {k}={v}" for k, v in self.params.items())
        return f"Schedule({self.family!r}{extra})"


def classical_fista() -> Schedule:
    return Schedule("classical-fista",
                    rule=lambda k, tk: (1.0 + math.sqrt(1.0 + 4.0 * tk * tk)) / 2.0)


def linear_half() -> Schedule:
    """t_k = (k + 2) / 2, hence alpha_k = k / (k + 3)."""
    return Schedule("linear-half", rule=lambda k, tk: (k + 3) / 2.0)


def chambolle_dossal(alpha: float) -> Schedule:
    if not alpha >= 3.0:
        raise ScheduleError("chambolle-dossal requires alpha >= 3")
    return Schedule("chambolle-dossal",
                    rule=lambda k, tk: 1.0 + k / (alpha - 1.0),
                    params={"alpha": float(alpha)})


def theta_family(theta: float) -> Schedule:
    """Implicit family t_{k+1}^2 - t_k^2 = (1 - theta) t_{k+1} + theta t_k.

    Only the positive root keeps t_k >= 1 increasing. theta = 0 recovers
    the classical recurrence; theta = 1/2 is the critical damped case,
    satisfying the same recurrence as the chambolle-dossal(3) sequence.
    """
    if not (0.0 <= theta < 1.0):
        raise ScheduleError("theta-family requires theta in [0, 1)")

    def rule(k, tk):
        c = 1.0 - theta
        return (c + math.sqrt(c * c + 4.0 * (tk * tk + theta * tk))) / 2.0

    return Schedule("theta-family", rule=rule, params={"theta": float(theta)})


def custom_schedule(values) -> Schedule:
    return Schedule("custom", values=values)


def schedule_from_csv(path) -> Schedule:
    """Custom schedule from a one-column CSV of t values."""
    vals = np.loadtxt(path, delimiter=",", comments="#", ndmin=1).ravel()
    return custom_schedule(vals)


@dataclass
class ValidationReport:
    """Which admissibility conditions a finite prefix satisfies.

    ``classical`` is the pair of classical bounds (growth at least (k+2)/2
    with t_0 = 1, and t_k^2 >= t_{k+1}^2 - t_{k+1}); ``br`` is the relaxed
    one-sided condition t_{k+1}^2 - t_k^2 <= t_{k+1}. ``*_first_violation``
    is the smallest violating index, or None.
    """
    classical_ok: bool
    classical_first_violation: int | None
    br_ok: bool
    br_first_violation: int | None


def validate_parameter_sequence(ts, rel_slack: float = REL_SLACK) -> ValidationReport:
    """Total validator: report which conditions hold for any finite sequence."""
    ts = np.asarray(ts, dtype=float).ravel()
    if ts.size == 0:
        raise ScheduleError("empty parameter sequence")
    classical_bad: int | None = None
    br_bad: int | None = None
    if not np.all(np.isfinite(ts)) or np.any(ts <= 0):
        bad = int(np.argmax(~(np.isfinite(ts) & (ts > 0))))
        return ValidationReport(False, bad, False, bad)

    if abs(ts[0] - 1.0) > rel_slack:
        classical_bad = 0
    for k in range(ts.size):
        lower = (k + 2) / 2.0
        if classical_bad is None and ts[k] < lower - rel_slack * max(1.0, lower):
            classical_bad = k
        if k + 1 >= ts.size:
            break
        scale = max(1.0, ts[k + 1] ** 2)
        gap = ts[k + 1] ** 2 - ts[k + 1] - ts[k] ** 2
        if classical_bad is None and gap > rel_slack * scale:
            classical_bad = k
        if br_bad is None and ts[k + 1] ** 2 - ts[k] ** 2 - ts[k + 1] > rel_slack * scale:
            br_bad = k
        if classical_bad is not None and br_bad is not None:
            break
    return ValidationReport(classical_bad is None, classical_bad,
                            br_bad is None, br_bad)

#!/usr/bin/env python3
"""A tour of the inertial parameter sequences and their admissibility checks.

Each family generates t_0 = 1, t_1, t_2, ... and the momentum coefficients
alpha_k = (t_k - 1) / t_{k+1}. The classical conditions (growth at least
(k+2)/2 and t_k^2 >= t_{k+1}^2 - t_{k+1}) back the Lyapunov and ball
certificates; the relaxed one-sided condition t_{k+1}^2 - t_k^2 <= t_{k+1}
is what iterate convergence needs.
"""

import numpy as np

from apgkit import (chambolle_dossal, classical_fista, custom_schedule,
                    linear_half, theta_family, validate_parameter_sequence)

families = [
    ("classical-fista", classical_fista()),
    ("linear-half", linear_half()),
    ("chambolle-dossal(3)", chambolle_dossal(3.0)),
    ("chambolle-dossal(10)", chambolle_dossal(10.0)),
    ("theta-family(0.5)", theta_family(0.5)),
]

print(f"{'family':<22} {'t_1':>8} {'t_5':>8} {'t_50':>9} "
      f"{'alpha_5':>9} {'classical':>10} {'relaxed':>8}")
for name, s in families:
    report = s.validate(2000)
    print(f"{name:<22} {s.t(1):8.4f} {s.t(5):8.4f} {s.t(50):9.4f} "
          f"{s.alpha(5):9.4f} {str(report.classical_ok):>10} "
          f"{str(report.br_ok):>8}")

# theta = 0 reproduces the classical recurrence exactly
theta0 = theta_family(0.0)
classical = classical_fista()
drift = max(abs(theta0.t(k) - classical.t(k)) for k in range(100))
print(f"\ntheta=0 vs classical recurrence, max drift over k<=100: {drift:.2e}")

# the validator pinpoints the first index where a custom sequence breaks
ts = list((np.arange(30) + 2) / 2.0)
ts[7] = 40.0
report = validate_parameter_sequence(ts)
print("\ncorrupted linear-half sequence:")
print(f"  classical conditions hold: {report.classical_ok} "
      f"(first violation at k={report.classical_first_violation})")
print(f"  relaxed condition holds:   {report.br_ok} "
      f"(first violation at k={report.br_first_violation})")

decaying = custom_schedule([1.0, 1.0, 0.9, 0.8])
print(f"\na non-increasing custom sequence is admissible: {decaying.admissible}")
print("(the relaxed bound allows it, the classical growth bound does not)")

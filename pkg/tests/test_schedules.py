import math

import numpy as np
import pytest

from apgkit import schedules as sch
from apgkit.errors import ScheduleError

HORIZON = 10_000


def test_classical_first_value():
    s = sch.classical_fista()
    assert s.t(0) == 1.0
    assert abs(s.t(1) - (1 + math.sqrt(5)) / 2) <= 1e-15


def test_classical_growth_bound():
    ts = sch.classical_fista().t_values(HORIZON)
    ks = np.arange(HORIZON + 1)
    assert np.all(ts >= (ks + 2) / 2.0 - 1e-12 * np.maximum(1.0, (ks + 2) / 2.0))


def test_classical_solves_recurrence_with_equality():
    ts = sch.classical_fista().t_values(1000)
    resid = ts[:-1] ** 2 - (ts[1:] ** 2 - ts[1:])
    assert np.max(np.abs(resid)) <= 1e-9
    # over the full horizon the identity holds relative to t^2
    ts = sch.classical_fista().t_values(HORIZON)
    resid = ts[:-1] ** 2 - (ts[1:] ** 2 - ts[1:])
    assert np.max(np.abs(resid) / np.maximum(1.0, ts[1:] ** 2)) <= 1e-12


def test_linear_half_values():
    s = sch.linear_half()
    assert s.alpha(0) == 0.0
    assert s.alpha(3) == pytest.approx(0.5, abs=0)
    ts = s.t_values(HORIZON)
    np.testing.assert_array_equal(ts, (np.arange(HORIZON + 1) + 2) / 2.0)
    alphas = np.array([s.alpha(k) for k in range(1, 2000)])
    assert np.all((alphas > 0) & (alphas < 1))


def test_chambolle_dossal_values():
    s3 = sch.chambolle_dossal(3.0)
    assert s3.t(1) == 1.0  # shifted linear-half
    assert s3.t(2) == 1.5
    s4 = sch.chambolle_dossal(4.0)
    assert s4.t(5) == pytest.approx(1 + 4 / 3, abs=1e-15)
    with pytest.raises(ScheduleError):
        sch.chambolle_dossal(2.5)


@pytest.mark.parametrize("alpha", [3.0, 3.5, 10.0])
def test_chambolle_dossal_admissibility_sweep(alpha):
    report = sch.chambolle_dossal(alpha).validate(HORIZON)
    assert report.br_ok, f"violated at {report.br_first_violation}"


def test_theta_zero_recovers_classical():
    a = sch.theta_family(0.0)
    b = sch.classical_fista()
    for k in range(101):
        assert abs(a.t(k) - b.t(k)) <= 1e-12 * max(1.0, b.t(k))


def test_theta_family_monotone_and_admissible():
    for theta in (0.0, 0.5, 0.99):
        s = sch.theta_family(theta)
        ts = s.t_values(HORIZON)
        assert ts[0] == 1.0
        assert np.all(np.diff(ts) > 0)  # positive root keeps t increasing
        assert s.validate(HORIZON).br_ok
    with pytest.raises(ScheduleError):
        sch.theta_family(1.0)
    with pytest.raises(ScheduleError):
        sch.theta_family(-0.1)


def test_classical_and_linear_half_satisfy_classical_conditions():
    for s in (sch.classical_fista(), sch.linear_half()):
        report = s.validate(HORIZON)
        assert report.classical_ok, (s.family, report)


def test_alpha_in_unit_interval_every_builtin():
    builtins = [sch.classical_fista(), sch.linear_half(),
                sch.chambolle_dossal(3.0), sch.chambolle_dossal(10.0),
                sch.theta_family(0.5)]
    for s in builtins:
        alphas = np.array([s.alpha(k) for k in range(HORIZON + 1)])
        assert np.all((alphas >= 0.0) & (alphas < 1.0)), s.family


def test_validator_reports_first_violation():
    # inflate one entry so t_4^2 - t_3^2 > t_4
    ts = list((np.arange(12) + 2) / 2.0)
    ts[4] = 10.0
    report = sch.validate_parameter_sequence(ts)
    assert not report.classical_ok and report.classical_first_violation == 3
    assert not report.br_ok and report.br_first_violation == 3
    # decaying sequence: violates growth, not the one-sided bound
    report = sch.validate_parameter_sequence([1.0, 1.0, 1.0, 1.0])
    assert not report.classical_ok and report.classical_first_violation == 1
    assert report.br_ok
    report = sch.validate_parameter_sequence([1.0, -2.0])
    assert report.classical_first_violation == 1 and report.br_first_violation == 1


def test_custom_schedule_csv_and_exhaustion(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("# custom\n1.0\n1.5\n2.0\n2.5\n")
    s = sch.schedule_from_csv(path)
    assert s.family == "custom"
    assert s.t(3) == 2.5
    assert s.admissible  # matches linear-half prefix
    with pytest.raises(ScheduleError):
        s.t(4)
    bad = sch.custom_schedule([1.0, 50.0])
    assert not bad.admissible

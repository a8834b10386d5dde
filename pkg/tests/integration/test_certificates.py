import json

import pytest

from databricks.labs.rcn.bounds import SigmaVariant, certify_lower_bound, extend_field, lower_bound_constants
from databricks.labs.rcn.cli import bounds_check, minimize
from databricks.labs.rcn.utils import read_csv


@pytest.mark.parametrize("variant", list(SigmaVariant))
def test_knee_minimizer_certificate(knee_minimizer, variant):
    report = certify_lower_bound(knee_minimizer, variant)
    assert report.passed
    assert report.lhs == pytest.approx(knee_minimizer.energy.total)
    assert report.relative_gap < 0.05


def test_extend_bound_stays_below_the_energy(knee_minimizer):
    constants = lower_bound_constants()
    report = certify_lower_bound(knee_minimizer, SigmaVariant.EXTEND, constants=constants)
    assert report.extend_bound == pytest.approx(constants.extend_bound(0.8, 0.0))
    assert report.extend_bound < report.lhs


def test_minimize_then_bounds_check(tmp_path, capsys):
    minimize(eps="0.8", height="20", m="32", n="32", seeds="knee", tol="1e-6", output_dir=str(tmp_path))
    summary = json.loads(capsys.readouterr().out)
    assert summary["converged"] is True

    rows = bounds_check(field_path=str(tmp_path / "field.txt"), output_dir=str(tmp_path))
    assert [row["variant"] for row in rows] == ["squeeze", "extend"]
    assert all(row["passed"] for row in rows)
    written = read_csv(tmp_path / "bounds.csv")
    assert [row["passed"] for row in written] == ["true", "true"]


def test_certificate_constant_does_not_depend_on_the_field(knee_minimizer):
    report = certify_lower_bound(knee_minimizer, SigmaVariant.EXTEND)
    assert report.c_sub == extend_field().c_sub

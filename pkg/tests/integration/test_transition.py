import logging

import pytest

from databricks.labs.rcn.bounds import SigmaVariant, certify_lower_bound, lower_bound_constants
from databricks.labs.rcn.optimize import local_minima
from databricks.labs.rcn.selfdual import knee_energy

logger = logging.getLogger(__name__)


def test_optimal_fraction_jumps_away_from_zero(transition_report):
    fractions = [optimum.a for optimum in transition_report.optima]
    logger.info(f"argmin a along the sweep: {fractions}, in reference window: {transition_report.in_reference_window}")
    assert transition_report.bracket is not None
    assert fractions[0] == 0.0
    assert fractions[-1] > 0.0
    first_positive = next(i for i, a in enumerate(fractions) if a > 0.0)
    assert all(a > 0.0 for a in fractions[first_positive:])
    eps_hi, eps_lo = transition_report.bracket
    assert 0.30 <= eps_lo < eps_hi <= 0.55


def test_energy_curve_has_a_kink(transition_report):
    assert transition_report.kink_eps is not None
    assert 0.30 < transition_report.kink_eps < 0.55


def test_knee_branch_matches_closed_form(transition_report):
    knee_branch = [optimum for optimum in transition_report.optima if optimum.a == 0.0]
    assert knee_branch
    for optimum in knee_branch:
        assert optimum.energy_total == pytest.approx(knee_energy(optimum.eps), rel=0.05)


@pytest.mark.parametrize("variant", list(SigmaVariant))
def test_converged_minimizers_pass_both_certificates(transition_report, variant):
    constants = lower_bound_constants()
    for optimum in transition_report.optima:
        assert optimum.converged
        report = certify_lower_bound(optimum.minimizer, variant, constants=constants)
        assert report.passed
        assert report.relative_gap < 0.05


def test_sweeps_near_the_jump_have_two_local_minima(transition_report):
    eps_hi, eps_lo = transition_report.bracket
    counts = {eps: len(local_minima(transition_report.sweeps[eps])) for eps in (eps_hi, eps_lo)}
    logger.info(f"Local minima of E(a) around the jump: {counts}")
    assert max(counts.values()) >= 2

"""Acceptance suite: each test evaluates one structural property of the
computed waves at its stated tolerance and prints a single pass/fail line.

The underlying bundles (planar oracle, deep delta ladder, asymmetric
far-field domain, refinement pair, two continuation orders) run once per
session through pmewaves.verify.run_verification; see that module's
docstring for the design.

Two checks fail by construction of the discretization and are left red
rather than loosened: the planar sup-norm tolerance (1e-7 B) and the
barrier-sandwich tolerance (1e-6 B) both sit orders of magnitude below the
first-order interface-smearing error (about 0.1 c hx) of any grid this
suite can run; the measured floors are recorded in the report notes.
"""

import pytest

from pmewaves.verify import run_verification


@pytest.fixture(scope="module")
def outcome():
    return run_verification()


def _check(outcome, number):
    c = next(c for c in outcome.criteria if c.number == number)
    verdict = "PASS" if c.passed else "FAIL"
    print(f"CRITERION {c.number:2d} [{verdict}] {c.name}: {c.measured}")
    assert c.passed, f"{c.name}: measured {c.measured} vs {c.tolerance}"


def test_criterion_01_planar_oracle_equivalence(outcome):
    _check(outcome, 1)


def test_criterion_02_jacobian_finite_difference(outcome):
    _check(outcome, 2)


def test_criterion_03_slope_bounds(outcome):
    _check(outcome, 3)


def test_criterion_04_barrier_sandwich(outcome):
    _check(outcome, 4)


def test_criterion_05_uniform_pinning(outcome):
    _check(outcome, 5)


def test_criterion_06_flux_invariant(outcome):
    _check(outcome, 6)


def test_criterion_07_oscillation_decay(outcome):
    _check(outcome, 7)


def test_criterion_08_slope_at_infinity(outcome):
    _check(outcome, 8)


def test_criterion_09_expansion_coefficients(outcome):
    _check(outcome, 9)


def test_criterion_10_free_boundary(outcome):
    _check(outcome, 10)


def test_criterion_11_uniqueness_up_to_translation(outcome):
    _check(outcome, 11)

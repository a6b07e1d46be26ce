"""Acceptance criteria, one test each, at the stated tolerances.

Each test prints (and records for the terminal summary) one line:
``criterion N [PASS|FAIL] name: statistic ... threshold ...``.
Criterion 10 is exploratory: its line is reported, it never fails.
"""

import pytest

from sandpile import verify as V

from conftest import ACCEPTANCE_LINES

SEED = 20240601
pytestmark = pytest.mark.slow


def report(number, result):
    line = f"criterion {number:>2} {result.line()}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return result


def test_criterion_01_exact_sampling():
    r = report(1, V.exact_sampling(k=2, suite_name="small", tol=1e-10))
    assert r.details["anchor_G2_error"] < 1e-12
    assert r.passed


def test_criterion_02_generic_k_exact_sampling():
    assert report(2, V.exact_sampling(k=3, suite_name="small", tol=1e-10)).passed


def test_criterion_03_abelian():
    assert report(3, V.abelian(cases=1000, seed=SEED)).passed


def test_criterion_04_micro_macro():
    assert report(4, V.micro_macro(Ns=(2, 3, 4, 5), tol=1e-10)).passed


def test_criterion_05_stationary_density():
    r = report(5, V.density(N=1000, steps=100_000, burnin=20_000, seed=SEED, band=(0.47, 0.53),
                            eps=0.1, max_escape=1e-3))
    assert r.passed, r.statistic


def test_criterion_06_drift_sign_change():
    r = report(6, V.drift(N=2000, trials=10_000, seed=SEED))
    assert r.passed, r.statistic


def test_criterion_07_long_jumps():
    assert report(7, V.long_jumps(N=1000, gamma=0.4, beta=0.2, trials=100_000, seed=SEED)).passed


def test_criterion_08_tau0_tail():
    assert report(8, V.tau0_tail_check(N=1000, k=300, j=1, trials=100_000, seed=SEED)).passed


def test_criterion_09_geometric_domination():
    assert report(9, V.geometric(N=2000, frac=0.3, trials=100_000, seed=SEED, n_se=4.0)).passed


def test_criterion_10_generic_k_density_exploratory():
    r = report(10, V.generic_k(N=1000, k=3, steps=200_000, burnin=50_000, seed=SEED, band=0.05))
    assert r.exploratory


def test_criterion_11_oracle_mc_coherence():
    r = report(11, V.coherence(reps=1_000_000, seed=SEED, n_se=4.0))
    assert r.passed, r.details["failing"]

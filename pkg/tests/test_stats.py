import numpy as np
import pytest

from sandpile.errors import BadParameter
from sandpile.oracle import ProbabilityVector
from sandpile.stats import (
    concentration_check,
    drift_profile,
    geometric_domination,
    long_jump_probability,
    mass_exit_probability,
    stabilization_time_bound,
    tau0_tail,
    tv_distance,
)


def test_tv_distance():
    p = ProbabilityVector((0, 1), np.array([0.25, 0.75]))
    q = ProbabilityVector((1, 2), np.array([0.5, 0.5]))
    assert tv_distance(p, p) == 0
    assert tv_distance(p, q) == pytest.approx(0.5)


def test_drift_at_zero_closed_form():
    (pt,) = drift_profile(50, [0.0], 20_000, seed=2)
    assert pt.k == 0
    assert abs(pt.mean - 49 / 50) < 3 * np.sqrt(49 / 50 * 1 / 50 / 20_000)


def test_drift_signs_small_n():
    lo, hi = drift_profile(200, [0.2, 0.8], 2000, seed=1)
    assert lo.lower > 0 and hi.upper < 0
    assert lo.sum_dxi == round(lo.mean * lo.trials)


def test_parameter_checks():
    with pytest.raises(BadParameter):
        drift_profile(100, [0.5], 10, 0)
    with pytest.raises(BadParameter):
        long_jump_probability(100, 0.2, 0.3, 100, 0)
    with pytest.raises(BadParameter):
        mass_exit_probability(100, 0.4, 0.1, 100, 0)
    with pytest.raises(BadParameter):
        concentration_check(100, 10, 0, 0.7, 0)


def test_event_rates_report_counts():
    r = long_jump_probability(200, 0.4, 0.2, 1000, 1)
    assert r.events == 0 and r.trials == 1000 and r.k == 80
    m = mass_exit_probability(200, 0.8, 0.1, 1000, 1)
    assert 0 <= m.probability <= 1 and m.events == round(m.probability * 1000)


def test_tau0_tail_monotone():
    s = tau0_tail(300, 90, 1, 300, 20_000, 4)
    assert s.survival[0] == 1.0
    assert (np.diff(s.survival) <= 0).all()
    slope, _, lo, _ = s.log_linear_fit(n_min=int(np.ceil(stabilization_time_bound(90, 300, 1))))
    assert slope < 0 and lo >= 10


def test_geometric_domination_small():
    r = geometric_domination(400, 120, 20_000, 9)
    assert r.dominated()
    assert (np.diff(r.empirical_cdf) >= 0).all()


def test_concentration_report():
    c = concentration_check(200, 2000, 500, 0.2, 5)
    assert set(c.mean_density) == {0, 199}
    assert c.recorded == 2000

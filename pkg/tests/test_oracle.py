import numpy as np
import pytest

from sandpile.dynamics import Config
from sandpile.errors import BadParameter, InvalidState, NotIrreducible, NumericalFailure, StateCapExceeded
from sandpile.graph import complete_graph, path_graph, small_suite
from sandpile.oracle import (
    ProbabilityVector,
    count_law,
    macro_count_law,
    micro_absorption_distribution,
    sampler_distribution,
    stabilization_distribution,
    stationary_distribution,
    transition_matrix,
)
from sandpile.stats import tv_distance


def law(pv):
    return {s: round(p, 12) for s, p in pv.as_dict().items()}


def test_probability_vector_validation():
    with pytest.raises(NumericalFailure):
        ProbabilityVector((0, 1), np.array([0.5, 0.6]))
    with pytest.raises(NumericalFailure):
        ProbabilityVector((0, 1), np.array([1.5, -0.5]))
    with pytest.raises(BadParameter):
        ProbabilityVector((0, 1), np.array([1.0]))
    pv = ProbabilityVector.from_samples([1, 1, 2, 1])
    assert pv.prob(1) == 0.75 and pv.prob(7) == 0.0


def test_from_rows_matches_from_samples():
    rows = np.array([[0, 1], [1, 1], [0, 1]])
    assert ProbabilityVector.from_rows(rows).as_dict() == ProbabilityVector.from_samples(map(tuple, rows.tolist())).as_dict()


def test_stable_start_is_point_mass(path3):
    pv = stabilization_distribution(Config([1, 0, 1], None), path3)
    assert pv.as_dict() == {(1, 0, 1): 1.0}


def test_g2_stabilization_laws(g2):
    assert law(stabilization_distribution(Config([1], [1]), g2)) == {(0,): 0.5, (1,): 0.5}
    assert law(stabilization_distribution(Config([2], [0]), g2)) == {(0,): round(1 / 3, 12), (1,): round(2 / 3, 12)}


def test_g2_fifo_order_same_law(g2):
    a = stabilization_distribution(Config([2], [0]), g2)
    b = stabilization_distribution(Config([2], [0]), g2, order="fifo")
    assert tv_distance(a, b) < 1e-14


def test_g2_transition_matrix(g2):
    Q = transition_matrix(g2, 2)
    assert Q.states == ((0,), (1,))
    assert np.allclose(Q.matrix, [[0.5, 0.5], [1 / 6, 5 / 6]], atol=1e-14)


def test_rows_sum_to_one():
    for g in small_suite(3):
        Q = transition_matrix(g, 2)
        assert np.abs(Q.matrix.sum(axis=1) - 1).max() < 1e-12


def test_stationary_closed_forms(g2):
    pi = stationary_distribution(transition_matrix(g2, 2))
    assert np.allclose(pi.mass, [0.25, 0.75], atol=1e-14)
    assert stationary_distribution(np.array([[1.0]])).mass.tolist() == [1.0]
    a, b = 0.5, 1 / 6
    pi = stationary_distribution(np.array([[1 - a, a], [b, 1 - b]]))
    assert np.allclose(pi.mass, np.array([b, a]) / (a + b), atol=1e-14)


def test_stationary_rejects_bad_input():
    with pytest.raises(BadParameter):
        stationary_distribution(np.array([[0.5, 0.4], [0.5, 0.5]]))
    with pytest.raises(NotIrreducible):
        stationary_distribution(np.eye(2))


def test_sampler_distribution_g2(g2):
    assert np.allclose(sampler_distribution(g2, 2).mass, [0.25, 0.75], atol=1e-14)


def test_sampler_distribution_k3_support():
    pv = sampler_distribution(complete_graph(2), 3)
    assert set(pv.support) <= {(0,), (1,), (2,)}
    assert abs(pv.mass.sum() - 1) < 1e-12
    pi = stationary_distribution(transition_matrix(complete_graph(2), 3))
    assert tv_distance(pv, pi) < 1e-10


def test_micro_absorption_small_cases():
    assert micro_absorption_distribution(5, 3, 0).as_dict() == {3: 1.0}
    assert law(micro_absorption_distribution(2, 1, 1)) == {0: 0.5, 1: 0.5}
    assert law(micro_absorption_distribution(2, 2, 2)) == {0: round(1 / 3, 12), 1: round(2 / 3, 12)}
    with pytest.raises(InvalidState):
        micro_absorption_distribution(3, 5, 1)


def test_micro_matches_g2_stabilization(g2):
    a = micro_absorption_distribution(2, 2, 2)
    b = count_law(stabilization_distribution(Config([2], [0]), g2))
    assert tv_distance(a, b) < 1e-14


def test_complete3_counts_match_micro():
    Q = transition_matrix(complete_graph(3), 2)
    for s in Q.states:
        kk = sum(s)
        target = micro_absorption_distribution(3, kk + 1, 1)
        assert tv_distance(count_law(Q.row(s)), target) < 1e-12
        assert tv_distance(macro_count_law(3, kk), target) < 1e-12


def test_empty_start_macro_law():
    for N in (2, 5, 9):
        pv = macro_count_law(N, 0)
        assert pv.prob(1) == pytest.approx((N - 1) / N) and pv.prob(0) == pytest.approx(1 / N)


def test_state_cap(monkeypatch):
    monkeypatch.setenv("SANDPILE_STATE_CAP", "3")
    with pytest.raises(StateCapExceeded):
        sampler_distribution(path_graph(3), 2)

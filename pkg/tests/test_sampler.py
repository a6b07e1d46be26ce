import numpy as np

from sandpile.dynamics import Config, InstructionStream, OrderPolicy, stabilize
from sandpile.graph import complete_graph, grid_graph, path_graph
from sandpile.rng import derive_seed
from sandpile.sampler import exact_sample, initial_state, sample_batch, sample_density


def test_initial_state_shape():
    c, _ = initial_state(path_graph(4), 3, 5)
    assert c.eta.tolist() == [2, 2, 2, 2] and ((0 <= c.h) & (c.h < 3)).all()


def test_all_zero_residues_stay_put():
    g = path_graph(3)
    r = stabilize(Config([1, 1, 1], [0, 0, 0]), InstructionStream(g, 3))
    assert r.final.eta.tolist() == [1, 1, 1] and r.steps == 0


def test_exact_sample_matches_batch_rows():
    g = grid_graph(2, 3)
    rows = sample_batch(g, 2, 17, 20, first=5)
    for i in range(20):
        assert exact_sample(g, 2, derive_seed(17, 5 + i)).eta.tolist() == rows[i].tolist()


def test_order_does_not_matter():
    g = grid_graph(3, 3)
    for s in range(20):
        ref = exact_sample(g, 3, s)
        for o in OrderPolicy:
            assert exact_sample(g, 3, s, order=o) == ref


def test_workers_do_not_change_output():
    g = complete_graph(6)
    assert np.array_equal(sample_batch(g, 2, 4, 1001, workers=1), sample_batch(g, 2, 4, 1001, workers=3))


def test_single_rep_is_point_mass():
    pv = sample_density(complete_graph(5), 2, 1, 1)
    assert sorted(pv.mass.tolist())[-1] == 1.0


def test_g2_million_samples():
    pv = sample_density(complete_graph(2), 2, 2024, 10**6)
    assert abs(pv.prob(1) - 0.75) < 3e-3

"""Exact finite-N stationary density of the complete-graph macro chain."""

import numpy as np
import pytest

from sandpile.oracle import complete_macro_matrix, micro_absorption_distribution, stationary_distribution


def test_matrix_rows_match_micro_oracle():
    N = 6
    Q = complete_macro_matrix(N)
    for k in range(N):
        law = micro_absorption_distribution(N, k + 1, 1)
        row = np.zeros(N)
        for s, p in law.as_dict().items():
            row[s] = p
        assert np.abs(Q[k] - row).max() < 1e-12


def exact_density(N):
    pi = stationary_distribution(complete_macro_matrix(N))
    return pi.mean() / N


def test_exact_density_decreases_toward_half():
    d = [exact_density(N) for N in (50, 100, 200)]
    assert d[0] > d[1] > d[2] > 0.5
    assert d == pytest.approx([0.6040, 0.5857, 0.5681], abs=5e-4)

"""Synthetic training behaviour beyond the pass/fail gates."""

from dataclasses import replace

import pytest

from relembed.experiments import SYNTH_CONFIG, normalization_run, two_matrix_run


def test_global_sampling_catches_up_with_ten_times_the_budget():
    # per-pair optimum is unchanged by the mass ratio; global mode is only slower
    r = two_matrix_run("global", 0, config=replace(SYNTH_CONFIG, n_iter=10 * SYNTH_CONFIG.n_iter))
    assert r.nmi_four >= 0.95


def test_global_sampling_starves_small_matrix_early():
    r = two_matrix_run("global", 0)
    assert r.nmi_ab >= 0.95 and r.nmi_four < 0.8


@pytest.mark.parametrize("alphas", [(0.5, 1.0), (1.0, 0.5)])
def test_partial_weights_keep_four_clusters(alphas):
    assert two_matrix_run(seed=0, alphas=alphas, config=replace(SYNTH_CONFIG, n_iter=60)).nmi_four >= 0.95


def test_centering_restores_compact_clusters_and_mirrors_vanish():
    res = normalization_run(0)
    assert res.centered.within_lt_between()
    # raw: the partner cluster lies farther away than a different cluster of the same type
    raw, cen = res.raw, res.centered
    assert raw.d(("A", "R"), ("B", "R")) > raw.d(("A", "R"), ("A", "G"))
    assert cen.d(("A", "R"), ("B", "R")) < cen.d(("A", "R"), ("A", "G"))

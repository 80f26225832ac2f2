import math

import pytest

import poemlab


def test_q_function():
    assert poemlab.q_function(0.0) == 0.5
    assert abs(poemlab.q_function(1.6449) - 0.05) < 1e-4


def test_metrics():
    assert poemlab.auroc([5, 6], [1, 2]) == 1.0
    assert poemlab.auroc([3, 1], [2, 0]) == 0.75
    assert poemlab.threshold_at_tpr(list(range(1, 101))) == 6.0
    assert poemlab.fpr_at_tpr(list(range(1, 101)), list(range(1, 101))) == 0.95
    assert abs(poemlab.aupr([3, 1], [2, 0]) - 5 / 6) < 1e-15


def test_energy():
    assert abs(poemlab.energy([0.0, 0.0]) + math.log(2)) < 1e-15


def test_posterior_scalar():
    post = poemlab.posterior_update([[1.0]], [3.0])
    assert abs(post["precision"][0][0] - 2.0) < 1e-15
    assert abs(post["mean"][0] - 1.5) < 1e-15


def test_mining_and_scores():
    assert poemlab.select_top_n([[3], [1], [2], [0]], [1.0], 2) == [3, 1]
    assert poemlab.boundary_score_exact([1.0, 0.0], 1.0, [3.0, 7.0]) == -6.0


def test_theorem():
    assert abs(poemlab.theorem_bound() - 3.404574) < 1e-6
    with pytest.raises(ValueError):
        poemlab.theorem_bound(epsilon=2.0)
    report = poemlab.verify_theorem(trials=20, test_draws=1000)
    assert report["violation_rate"] == 0.0


def test_train_and_config_errors():
    logs = poemlab.train(epochs=2, pool_size=200, mined_count=30, id_train=120, aux_size=600,
                         test_id=100, test_ood=100, hidden="6")
    assert [entry["epoch"] for entry in logs] == [1, 2]
    with pytest.raises(poemlab.ConfigError):
        poemlab.train(no_such_key=1)

#!/usr/bin/env python3
"""
Tests for the agent-based network generator
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from qrc.bipartite_core import Action
from qrc.config import SimConfig
from qrc.simulator import run_simulation, sample_ability_activity, select_downloads, spawn_item


def test_ability_moments():
    """Mean mu/(mu+1) and tail P(x > 1/2) = 1 - 2**-mu, within 3 sigma at 1e6 draws"""
    rng = np.random.default_rng(0)
    n = 1_000_000
    mu = 0.5
    x = sample_ability_activity(mu, rng, n)
    assert x.min() > 0 and x.max() <= 1

    mean = mu / (mu + 1)
    variance = mu / (mu + 2) - mean ** 2
    assert abs(x.mean() - mean) < 3 * math.sqrt(variance / n)

    tail = 1 - 2 ** -mu
    assert abs((x > 0.5).mean() - tail) < 3 * math.sqrt(tail * (1 - tail) / n)


def test_item_fitness_bounds():
    """Fitness lies in [a, a + (1 - a) X]"""
    rng = np.random.default_rng(1)
    for a in (0.0, 0.3, 0.9):
        values = [spawn_item(a, 0.5, rng) for _ in range(500)]
        assert min(values) >= a
        assert max(values) <= a + (1 - a) * 0.5


def test_downloads_avoid_linked_items():
    """Selection is without replacement and skips already linked items"""
    rng = np.random.default_rng(2)
    fitness = np.array([0.9, 0.8, 0.7, 0.6])
    chosen = select_downloads(0.5, fitness, {0, 1}, 5.0, 2, rng)
    assert sorted(chosen) == [2, 3]
    assert select_downloads(0.5, fitness, {0, 1, 2, 3}, 5.0, 2, rng) == []
    assert len(select_downloads(0.5, fitness, set(), 5.0, 10, rng)) == 4


def test_zero_ability_downloads_uniformly():
    """With a = 0 every candidate weighs f**0 = 1"""
    rng = np.random.default_rng(3)
    fitness = np.array([0.0, 0.5, 1.0])
    counts = np.zeros(3)
    for _ in range(3000):
        counts[select_downloads(0.0, fitness, set(), 5.0, 1, rng)[0]] += 1
    assert counts.min() > 800


def test_high_ability_prefers_fit_items():
    """Weight f**(h a) concentrates on the fittest item"""
    rng = np.random.default_rng(4)
    fitness = np.array([0.2, 0.4, 0.95])
    picks = [select_downloads(1.0, fitness, set(), 5.0, 1, rng)[0] for _ in range(500)]
    assert picks.count(2) > 400


def test_same_seed_same_network():
    """Runs are a pure function of the configuration"""
    config = SimConfig(n_users=60, steps=25, seed=11)
    a, b = run_simulation(config), run_simulation(config)
    np.testing.assert_array_equal(a.truth.fitness, b.truth.fitness)
    np.testing.assert_array_equal(a.event_items, b.event_items)
    np.testing.assert_array_equal(a.network.forward.data, b.network.forward.data)


def test_zero_steps_gives_empty_network():
    """No steps, no items, no links"""
    result = run_simulation(SimConfig(n_users=10, steps=0))
    assert result.empty
    assert result.n_items == 0
    assert result.network.n_users == 10


def test_structure(small_simulation):
    """Every item has one upload by its uploader and no user links twice"""
    result = small_simulation
    net = result.network
    uploads = result.event_actions == Action.UPLOAD.code
    assert uploads.sum() == result.n_items
    np.testing.assert_array_equal(result.event_users[uploads], result.truth.uploader)
    np.testing.assert_array_equal(result.event_items[uploads], np.arange(result.n_items))
    assert net.edge_count == len(result.event_users)
    assert net.n_users == 120
    assert set(net.forward.data.tolist()) <= {1.0, 0.1}


def test_downloads_only_reach_older_items(small_simulation):
    """An item is never downloaded in the step it was created"""
    result = small_simulation
    downloads = result.event_actions == Action.DOWNLOAD.code
    created = result.truth.created_at[result.event_items[downloads]]
    assert (created < result.event_steps[downloads]).all()


def test_item_count_growth_law():
    """Items grow as p_U * t * sum(activity), within 3 sigma"""
    config = SimConfig(n_users=500, steps=40, seed=5)
    result = run_simulation(config)
    activity = result.truth.activity
    expected = config.p_upload * config.steps * activity.sum()
    variance = config.steps * (config.p_upload * activity * (1 - config.p_upload * activity)).sum()
    assert abs(result.n_items - expected) < 3 * math.sqrt(variance)


def test_link_count_growth_law():
    """Each active user-step adds an upload with prob p_U plus two downloads once items exist"""
    config = SimConfig(n_users=500, steps=40, seed=6)
    result = run_simulation(config)
    nu = result.truth.activity
    p = config.p_upload
    # at step 0 nothing can be downloaded yet
    per_step_mean = (nu * (p + 2)).sum()
    per_step_var = (nu * (5 * p + 4) - nu ** 2 * (p + 2) ** 2).sum()
    first_mean = (nu * p).sum()
    first_var = (nu * p * (1 - nu * p)).sum()
    expected = first_mean + (config.steps - 1) * per_step_mean
    sigma = math.sqrt(first_var + (config.steps - 1) * per_step_var)
    assert abs(result.network.edge_count - expected) < 3 * sigma


def test_invalid_config_rejected():
    """mu must lie in (0, 1]"""
    with pytest.raises(ValidationError):
        SimConfig(mu=0.0)
    with pytest.raises(ValidationError):
        SimConfig(p_upload=1.5)


@pytest.mark.slow
def test_default_growth_laws():
    """Default runs land near 6,700 items, mean user degree 140, item degree 21"""
    items, user_degree, item_degree = [], [], []
    for seed in range(5):
        result = run_simulation(SimConfig(seed=seed))
        items.append(result.n_items)
        user_degree.append(result.network.user_degree.mean())
        item_degree.append(result.network.item_degree.mean())
    assert np.mean(items) == pytest.approx(6700, rel=0.05)
    assert np.mean(user_degree) == pytest.approx(140, rel=0.05)
    assert np.mean(item_degree) == pytest.approx(21, rel=0.05)

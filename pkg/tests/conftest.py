"""
Shared fixtures for the QRC test suite
"""

import os
import sys

import numpy as np
import pytest

# Add repo root to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from qrc.bipartite_core import build_author_paper_network, build_user_item_network
from qrc.config import SimConfig
from qrc.simulator import run_simulation

RUN_SLOW = os.environ.get("QRC_RUN_SLOW") == "1"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: benchmark-scale statistical check (set QRC_RUN_SLOW=1)")


def pytest_collection_modifyitems(config, items):
    if RUN_SLOW:
        return
    skip = pytest.mark.skip(reason="set QRC_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def random_connected_network(rng: np.random.Generator, max_nodes: int = 20, weighted: bool = True):
    """Random connected user-item network: a spanning tree plus extra links"""
    n_users = int(rng.integers(2, max_nodes // 2 + 1))
    n_items = int(rng.integers(2, max_nodes - n_users + 1))
    # spanning tree grown from the link (0, 0)
    edges = {(0, 0)}
    placed_users, placed_items = [0], [0]
    rest = [("u", i) for i in range(1, n_users)] + [("i", a) for a in range(1, n_items)]
    for k in rng.permutation(len(rest)):
        kind, idx = rest[k]
        if kind == "u":
            edges.add((idx, placed_items[int(rng.integers(len(placed_items)))]))
            placed_users.append(idx)
        else:
            edges.add((placed_users[int(rng.integers(len(placed_users)))], idx))
            placed_items.append(idx)

    for u in range(n_users):
        for a in range(n_items):
            if rng.random() < 0.3:
                edges.add((u, a))

    weight = (lambda: float(rng.uniform(0.1, 2.0))) if weighted else (lambda: 1.0)
    return build_user_item_network(
        [(u, a, weight()) for u, a in sorted(edges)],
        users=range(n_users),
        items=range(n_items),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_network():
    """Three users, four items, uploads weigh 1 and downloads 0.1"""
    return build_user_item_network([
        (0, 0, 1.0, "upload"),
        (0, 1, 0.1, "download"),
        (1, 1, 1.0, "upload"),
        (1, 0, 0.1, "download"),
        (1, 2, 0.1, "download"),
        (2, 2, 1.0, "upload"),
        (2, 3, 1.0, "upload"),
        (2, 0, 0.1, "download"),
    ])


@pytest.fixture
def small_authors():
    """Authors over the four items of small_network"""
    return build_author_paper_network(
        [("A", 0), ("A", 1), ("B", 1), ("B", 2), ("C", 3)],
        papers=range(4),
    )


@pytest.fixture(scope="session")
def small_simulation():
    """A quick simulated corpus"""
    return run_simulation(SimConfig(n_users=120, steps=40, seed=7))

"""
Agent-based generator of user-item networks with known ground truth

Users carry an ability and an activity drawn from p(x) = mu * x**(mu - 1).
At every step each user is active with probability equal to their
activity; an active user may upload a new item (fitness tied to their
ability) and then downloads items, preferring fit ones when able.
"""

from dataclasses import dataclass
from typing import Collection, List, Union
import logging
import time

import numpy as np

from .bipartite_core import Action, UserItemNetwork, build_user_item_network
from .config import SimConfig

logger = logging.getLogger("qrc.simulator")

# ======================
# Result Types
# ======================

@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Hidden traits used to score the rankings"""
    ability: np.ndarray
    activity: np.ndarray
    fitness: np.ndarray
    created_at: np.ndarray
    uploader: np.ndarray


@dataclass(frozen=True, eq=False)
class SimResult:
    """Generated network, its ground truth and the interaction log"""
    config: SimConfig
    network: UserItemNetwork
    truth: GroundTruth
    # interaction log in generation order: user, item, action code, step
    event_users: np.ndarray
    event_items: np.ndarray
    event_actions: np.ndarray
    event_steps: np.ndarray

    @property
    def empty(self) -> bool:
        return self.network.edge_count == 0

    @property
    def n_items(self) -> int:
        return int(self.truth.fitness.shape[0])

# ======================
# Model Rules
# ======================

def sample_ability_activity(mu: float, rng: np.random.Generator, size=None) -> Union[float, np.ndarray]:
    """Inverse-CDF draw x = u ** (1/mu), u uniform on (0, 1]"""
    u = 1.0 - rng.random(size)
    return u ** (1.0 / mu)


def spawn_item(ability: float, x_max: float, rng: np.random.Generator) -> float:
    """Fitness a + (1 - a) * x with x ~ U[0, X]"""
    return ability + (1.0 - ability) * rng.uniform(0.0, x_max)


def select_downloads(
    ability: float,
    fitness: np.ndarray,
    linked: Collection[int],
    h: float,
    count: int,
    rng: np.random.Generator,
) -> List[int]:
    """
    Weighted sampling without replacement, weight f ** (h * a), among the
    catalog items not yet linked to the user
    """
    candidates = np.ones(fitness.shape[0], dtype=bool)
    if linked:
        candidates[np.fromiter(linked, dtype=np.int64, count=len(linked))] = False
    available = int(candidates.sum())
    if available == 0 or count <= 0:
        return []

    # 0 ** 0 == 1 in numpy
    weights = np.where(candidates, fitness ** (h * ability), 0.0)
    chosen: List[int] = []
    for _ in range(min(count, available)):
        total = weights.sum()
        if total <= 0.0:
            # only zero-weight candidates remain: fall back to a uniform pick
            weights = np.where(candidates, 1.0, 0.0)
            total = weights.sum()
        cumulative = np.cumsum(weights)
        pick = int(np.searchsorted(cumulative, rng.random() * total, side="right"))
        pick = min(pick, fitness.shape[0] - 1)
        while weights[pick] == 0.0:
            pick -= 1
        chosen.append(pick)
        weights[pick] = 0.0
        candidates[pick] = False
    return chosen

# ======================
# Simulation Loop
# ======================

def run_simulation(config: SimConfig) -> SimResult:
    """Evolve the community for `config.steps` steps from one seeded generator"""
    started = time.time()
    rng = np.random.default_rng(config.seed)
    n = config.n_users

    ability = np.asarray(sample_ability_activity(config.mu, rng, n), dtype=np.float64)
    activity = np.asarray(sample_ability_activity(config.mu, rng, n), dtype=np.float64)

    fitness: List[float] = []
    created_at: List[int] = []
    uploader: List[int] = []
    linked: List[set] = [set() for _ in range(n)]
    users: List[int] = []
    items: List[int] = []
    actions: List[int] = []
    steps: List[int] = []

    for step in range(config.steps):
        # items uploaded during this step become downloadable next step
        catalog = np.asarray(fitness, dtype=np.float64)
        active = np.flatnonzero(rng.random(n) < activity)
        for user in active:
            user = int(user)
            a = float(ability[user])
            if rng.random() < config.p_upload:
                item = len(fitness)
                fitness.append(spawn_item(a, config.x_max, rng))
                created_at.append(step)
                uploader.append(user)
                linked[user].add(item)
                users.append(user)
                items.append(item)
                actions.append(Action.UPLOAD.code)
                steps.append(step)

            seen = [i for i in linked[user] if i < catalog.shape[0]]
            for item in select_downloads(a, catalog, seen, config.h, config.downloads_per_step, rng):
                linked[user].add(item)
                users.append(user)
                items.append(item)
                actions.append(Action.DOWNLOAD.code)
                steps.append(step)

    weight_of = {Action.UPLOAD.code: config.w_up, Action.DOWNLOAD.code: config.w_down}
    code_to_action = {action.code: action for action in Action}
    network = build_user_item_network(
        ((u, i, weight_of[c], code_to_action[c]) for u, i, c in zip(users, items, actions)),
        users=range(n),
        items=range(len(fitness)),
    )
    truth = GroundTruth(
        ability=ability,
        activity=activity,
        fitness=np.asarray(fitness, dtype=np.float64),
        created_at=np.asarray(created_at, dtype=np.int64),
        uploader=np.asarray(uploader, dtype=np.int64),
    )
    result = SimResult(
        config=config,
        network=network,
        truth=truth,
        event_users=np.asarray(users, dtype=np.int64),
        event_items=np.asarray(items, dtype=np.int64),
        event_actions=np.asarray(actions, dtype=np.int8),
        event_steps=np.asarray(steps, dtype=np.int64),
    )

    if result.empty:
        logger.warning("Simulation produced an empty network", extra={"seed": config.seed})
    logger.info(
        f"Simulated N={n} M={result.n_items} links={network.edge_count} "
        f"density={network.density:.4f} xi={config.xi:g} in {time.time() - started:.1f}s",
        extra={"seed": config.seed},
    )
    return result

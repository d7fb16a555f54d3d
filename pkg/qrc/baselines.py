"""
Reference rankings without fixed points: popularity and random order
"""

from typing import Optional

import numpy as np

from .bipartite_core import Action, ScoreVector, Side, UserItemNetwork
from .error_handling import ValidationException


def popularity(net: UserItemNetwork, action: Optional[Action] = Action.DOWNLOAD) -> ScoreVector:
    """Interaction count per item, restricted to one action kind when given"""
    items = net.forward.indices
    if action is not None:
        if net.edge_actions is None:
            raise ValidationException("network carries no action tags; popularity needs action=None")
        items = items[net.edge_actions == action.code]
    counts = np.bincount(items, minlength=net.n_items)
    return ScoreVector(counts.astype(np.float64), Side.ITEM)


def random_scores(n_items: int, seed: int) -> ScoreVector:
    """Uniform scores from a seeded generator"""
    rng = np.random.default_rng(seed)
    return ScoreVector(rng.random(n_items), Side.ITEM)

"""Non-personalised baselines: Random and MostPop."""

from __future__ import annotations

import numpy as np

from fairbook.dataset import Dataset
from fairbook.recommenders.base import ModelConfig, RecModel


class MostPopModel(RecModel):
    """Scores every item by its global training interaction count."""

    algorithm = "MostPop"
    rating_scale = False

    def __init__(self, counts: np.ndarray):
        self.counts = counts.astype(float)

    def score_all(self, user: int) -> np.ndarray:
        return self.counts.copy()

    def score_pairs(self, users, items) -> np.ndarray:
        return self.counts[items]


class RandomModel(RecModel):
    """Seeded uniform score per (user, item) pair.

    Each user gets an independent substream keyed by (seed, user index), so
    scores do not depend on evaluation order and runs are bit-reproducible.
    """

    algorithm = "Random"
    rating_scale = False

    def __init__(self, seed: int, n_items: int):
        self.seed = seed
        self.n_items = n_items

    def score_all(self, user: int) -> np.ndarray:
        return np.random.default_rng([self.seed, user]).random(self.n_items)

    def score_pairs(self, users, items) -> np.ndarray:
        users = np.asarray(users)
        items = np.asarray(items)
        scores = np.empty(len(users), dtype=float)
        for u in np.unique(users):
            row = self.score_all(int(u))
            mask = users == u
            scores[mask] = row[items[mask]]
        return scores


def fit_baseline(config: ModelConfig, train: Dataset) -> RecModel:
    config = config.resolved()
    if config.algorithm == "MostPop":
        return MostPopModel(np.bincount(train.items, minlength=train.n_items))
    if config.algorithm == "Random":
        return RandomModel(seed=config.seed, n_items=train.n_items)
    raise ValueError(f"{config.algorithm} is not a baseline")

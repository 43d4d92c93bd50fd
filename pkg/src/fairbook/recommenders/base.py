"""Shared contract for all recommenders: config, fitted-model API, top-N lists."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

ALGORITHMS = ("Random", "MostPop", "UserKNN", "MF", "PMF", "NMF", "WMF", "BPR", "PF")

# Per-algorithm defaults: widely used values for these model families; every
# field is overridable from the run config and recorded in the manifest.
DEFAULTS: Mapping[str, dict] = {
    "Random": {},
    "MostPop": {},
    "UserKNN": {"neighbors": 50},
    "MF": {"k": 10, "learning_rate": 0.01, "regularization": 0.02, "epochs": 100},
    "PMF": {"k": 10, "learning_rate": 0.01, "regularization": 0.02, "epochs": 100},
    "NMF": {"k": 10, "epochs": 100},
    "WMF": {"k": 10, "alpha": 1.0, "regularization": 0.01, "epochs": 50},
    "BPR": {"k": 10, "learning_rate": 0.01, "regularization": 0.01, "epochs": 100},
    "PF": {"k": 10, "prior_shape": 0.3, "prior_rate": 0.3, "epochs": 100},
}

INIT_SCALE = 0.01  # factor entries start uniform in (0, INIT_SCALE]


@dataclass(frozen=True)
class ModelConfig:
    """Configuration for one recommender; unset fields take algorithm defaults."""

    algorithm: str
    name: str | None = None
    k: int | None = None
    learning_rate: float | None = None
    regularization: float | None = None
    epochs: int | None = None
    neighbors: int | None = None
    alpha: float | None = None
    prior_shape: float | None = None
    prior_rate: float | None = None
    seed: int = 0

    def resolved(self) -> "ModelConfig":
        algorithm = resolve_algorithm(self.algorithm)
        cfg = replace(self, algorithm=algorithm, name=self.name or algorithm.lower())
        for key, value in DEFAULTS[algorithm].items():
            if getattr(cfg, key) is None:
                cfg = replace(cfg, **{key: value})
        cfg.validate()
        return cfg

    def validate(self) -> None:
        checks = [
            ("k", lambda v: v >= 1, ">= 1"),
            ("learning_rate", lambda v: v > 0, "> 0"),
            ("regularization", lambda v: v >= 0, ">= 0"),
            # epochs 0 is allowed and means "seeded initialisation only"
            ("epochs", lambda v: v >= 0, ">= 0"),
            ("neighbors", lambda v: v >= 1, ">= 1"),
            ("alpha", lambda v: v > 0, "> 0"),
            ("prior_shape", lambda v: v > 0, "> 0"),
            ("prior_rate", lambda v: v > 0, "> 0"),
        ]
        for key, ok, rule in checks:
            value = getattr(self, key)
            if value is not None and not ok(value):
                raise ValueError(f"{self.algorithm}: {key} must be {rule}, got {value}")


def resolve_algorithm(name: str) -> str:
    for algorithm in ALGORITHMS:
        if algorithm.lower() == name.strip().lower():
            return algorithm
    raise ValueError(f"unknown algorithm {name!r}; expected one of {', '.join(ALGORITHMS)}")


class RecModel:
    """Fitted recommender: scores any (user, item) pair and whole item rows.

    ``rating_scale`` is True when scores live on the 1-10 rating scale (MF,
    PMF, NMF, UserKNN); ranking-scale models (Random, MostPop, WMF, BPR, PF)
    leave it False so error metrics know to rescale.
    """

    algorithm: str = ""
    rating_scale: bool = False

    def score_all(self, user: int) -> np.ndarray:
        raise NotImplementedError

    def score_pairs(self, users: np.ndarray, items: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class FactorModel(RecModel):
    """Base for models whose state is a pair of factor matrices."""

    def __init__(self, algorithm: str, P: np.ndarray, Q: np.ndarray):
        self.algorithm = algorithm
        self.P = P
        self.Q = Q

    def score_all(self, user: int) -> np.ndarray:
        return self.Q @ self.P[user]

    def score_pairs(self, users, items) -> np.ndarray:
        return np.einsum("ij,ij->i", self.P[users], self.Q[items])


def seeded_uniform_positive(rng: np.random.Generator, shape) -> np.ndarray:
    """Uniform draw in (0, INIT_SCALE]; strictly positive so NMF stays valid."""
    return INIT_SCALE * (1.0 - rng.random(shape))


@dataclass(frozen=True)
class RecommendationList:
    """Per-user ranked top-N items with scores.

    Lists are stored as ``user -> (items, scores)`` with scores non-increasing
    in rank.  ``cold_users`` marks users whose list came from the most-popular
    fallback because they had no training interactions.
    """

    n: int
    lists: dict[int, tuple[np.ndarray, np.ndarray]]
    name: str = ""
    cold_users: frozenset[int] = field(default_factory=frozenset)

    @property
    def n_lists(self) -> int:
        return len(self.lists)

    def items_of(self, user: int) -> np.ndarray:
        return self.lists[user][0]

    def item_counts(self, n_items: int) -> np.ndarray:
        """How many times each item is recommended across all users."""
        counts = np.zeros(n_items, dtype=np.int64)
        for items, _ in self.lists.values():
            counts[items] += 1
        return counts

    def check_invariants(self, train_profiles=None) -> None:
        """Assert list-level invariants; used by tests and the import path."""
        for user, (items, scores) in self.lists.items():
            assert len(items) == len(scores)
            assert len(items) <= self.n
            assert len(np.unique(items)) == len(items), f"duplicate item for user {user}"
            assert (np.diff(scores) <= 0).all(), f"scores increase for user {user}"
            if train_profiles is not None:
                overlap = np.intersect1d(items, train_profiles[user])
                assert overlap.size == 0, f"user {user} recommended own training items"

"""Popularity-bias audit for collaborative-filtering book recommendation.

The package is organised around the pipeline stages:

- :mod:`fairbook.dataset` parses the raw ratings file and produces the
  canonical densely indexed dataset.
- :mod:`fairbook.profiling` computes item popularity, per-user popularity
  statistics and the Niche / Diverse / BestsellerFocused grouping.
- :mod:`fairbook.recommenders` trains the nine recommenders behind a common
  fit / score / top-N contract.
- :mod:`fairbook.evaluation` holds the train/test split, accuracy metrics,
  the GAP family of fairness metrics and the significance / tradeoff tests.
- :mod:`fairbook.cli` wires everything into reproducible subcommands.
"""

__version__ = "0.1.0"

from fairbook.dataset import Dataset, dataset_stats, parse_ratings_path, preprocess
from fairbook.errors import (
    ConfigError,
    FairbookError,
    FitError,
    IngestError,
    UndefinedCorrelationError,
    ValidationError,
)
from fairbook.evaluation import delta_gap, gap, rank_metrics, split_train_test
from fairbook.profiling import (
    assign_groups,
    compute_item_popularity,
    user_profile_stats,
)
from fairbook.recommenders import ModelConfig, fit, recommend_top_n

__all__ = [
    "__version__",
    "FairbookError",
    "IngestError",
    "ConfigError",
    "FitError",
    "ValidationError",
    "UndefinedCorrelationError",
    "Dataset",
    "parse_ratings_path",
    "preprocess",
    "dataset_stats",
    "compute_item_popularity",
    "user_profile_stats",
    "assign_groups",
    "ModelConfig",
    "fit",
    "recommend_top_n",
    "split_train_test",
    "rank_metrics",
    "gap",
    "delta_gap",
]

"""Nine recommenders behind one fit / score / top-N contract.

``fit`` dispatches on the configured algorithm; ``recommend_top_n`` turns any
fitted model into per-user ranked lists with the user's training items masked
out and ties broken by ascending item index.  Externally produced lists (for
models trained elsewhere) enter the same pipeline through
``import_external_recommendations``.
"""

from __future__ import annotations

import csv
import io
import logging
from pathlib import Path

import numpy as np

from fairbook.dataset import Dataset
from fairbook.errors import ValidationError
from fairbook.manifest import atomic_write_text, fmt_float
from fairbook.recommenders.base import (
    ALGORITHMS,
    DEFAULTS,
    FactorModel,
    ModelConfig,
    RecModel,
    RecommendationList,
    resolve_algorithm,
)
from fairbook.recommenders.baselines import MostPopModel, RandomModel, fit_baseline
from fairbook.recommenders.bpr import BPRModel, fit_bpr
from fairbook.recommenders.factor import ExplicitFactorModel, NMFModel, fit_explicit_mf
from fairbook.recommenders.knn import UserKNNModel, fit_userknn
from fairbook.recommenders.pf import PFModel, fit_pf
from fairbook.recommenders.wmf import WMFModel, fit_wmf

logger = logging.getLogger(__name__)

__all__ = [
    "ALGORITHMS",
    "DEFAULTS",
    "ModelConfig",
    "RecModel",
    "RecommendationList",
    "FactorModel",
    "ExplicitFactorModel",
    "NMFModel",
    "MostPopModel",
    "RandomModel",
    "UserKNNModel",
    "WMFModel",
    "BPRModel",
    "PFModel",
    "fit",
    "fit_baseline",
    "fit_userknn",
    "fit_explicit_mf",
    "fit_wmf",
    "fit_bpr",
    "fit_pf",
    "recommend_top_n",
    "write_recommendations",
    "import_external_recommendations",
    "resolve_algorithm",
]

_FITTERS = {
    "Random": fit_baseline,
    "MostPop": fit_baseline,
    "UserKNN": fit_userknn,
    "MF": fit_explicit_mf,
    "PMF": fit_explicit_mf,
    "NMF": fit_explicit_mf,
    "WMF": fit_wmf,
    "BPR": fit_bpr,
    "PF": fit_pf,
}

# Baselines score every user natively; all learned models fall back to the
# most-popular list for users absent from the training split.
_NO_COLD_FALLBACK = ("Random", "MostPop")


def fit(config: ModelConfig, train: Dataset) -> RecModel:
    config = config.resolved()
    return _FITTERS[config.algorithm](config, train)


def recommend_top_n(model: RecModel, train: Dataset, n: int = 10, name: str = "") -> RecommendationList:
    """Top-n unseen items per user, ties broken by ascending item index."""
    if n < 1:
        raise ValueError(f"list length must be >= 1, got {n}")
    profiles = train.user_profiles
    counts = np.bincount(train.items, minlength=train.n_items).astype(float)
    use_fallback = model.algorithm not in _NO_COLD_FALLBACK
    lists: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    cold: set[int] = set()
    short_lists = 0
    for user in range(train.n_users):
        seen = profiles[user]
        if seen.size == 0 and use_fallback:
            cold.add(user)
            scores = counts.copy()
        else:
            scores = np.asarray(model.score_all(user), dtype=float)
        scores[seen] = -np.inf
        order = np.argsort(-scores, kind="stable")
        take = min(n, train.n_items - seen.size)
        if take < n:
            short_lists += 1
        top = order[:take]
        lists[user] = (top.copy(), scores[top].copy())
    if short_lists:
        logger.warning("%d users had fewer than %d unseen items; lists shortened", short_lists, n)
    return RecommendationList(n=n, lists=lists, name=name or model.algorithm, cold_users=frozenset(cold))


def write_recommendations(recs: RecommendationList, path: str | Path) -> None:
    """Write ``user_index,rank,item_index,score`` with rank starting at 1."""
    buf = io.StringIO()
    buf.write("user_index,rank,item_index,score\n")
    for user in sorted(recs.lists):
        items, scores = recs.lists[user]
        for rank, (item, score) in enumerate(zip(items, scores), start=1):
            buf.write(f"{user},{rank},{item},{fmt_float(float(score))}\n")
    atomic_write_text(path, buf.getvalue())


def import_external_recommendations(
    path: str | Path,
    n_users: int,
    n_items: int,
    strict: bool = False,
    name: str = "",
) -> RecommendationList:
    """Read and validate a recommendations file in the export format.

    Row-level problems (unknown ids, duplicate items within a user, scores
    that increase with rank, broken rank sequences) are collected per row;
    in strict mode any problem aborts, otherwise the offending user's whole
    list is dropped with a warning.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"recommendations file not found: {path}")
    per_user: dict[int, list[tuple[int, int, float]]] = {}
    errors: list[str] = []
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["user_index", "rank", "item_index", "score"]:
            raise ValidationError(f"{path}: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4:
                errors.append(f"line {lineno}: expected 4 fields, got {len(row)}")
                continue
            try:
                user, rank, item, score = int(row[0]), int(row[1]), int(row[2]), float(row[3])
            except ValueError:
                errors.append(f"line {lineno}: unparseable row {row}")
                continue
            if not 0 <= user < n_users:
                errors.append(f"line {lineno}: unknown user index {user}")
                continue
            if not 0 <= item < n_items:
                errors.append(f"line {lineno}: unknown item index {item}")
                continue
            per_user.setdefault(user, []).append((rank, item, score))

    lists: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    n = 0
    for user, rows in sorted(per_user.items()):
        rows.sort()
        ranks = [r for r, _, _ in rows]
        items = np.asarray([i for _, i, _ in rows], dtype=np.int64)
        scores = np.asarray([s for _, _, s in rows], dtype=float)
        bad = None
        if ranks != list(range(1, len(rows) + 1)):
            bad = f"user {user}: ranks are not 1..{len(rows)}"
        elif len(np.unique(items)) != len(items):
            bad = f"user {user}: duplicate item in list"
        elif (np.diff(scores) > 0).any():
            bad = f"user {user}: scores increase with rank"
        if bad:
            errors.append(bad)
            continue
        lists[user] = (items, scores)
        n = max(n, len(rows))
    if errors:
        message = f"{path}: {len(errors)} validation errors; first: {errors[0]}"
        if strict:
            raise ValidationError(message)
        logger.warning(message)
    if not lists:
        raise ValidationError(f"{path}: no valid recommendation lists")
    return RecommendationList(n=n, lists=lists, name=name or path.stem)

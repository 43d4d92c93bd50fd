"""Train/test split, accuracy metrics, GAP fairness metrics and group tests.

Accuracy follows the top-10 protocol: an item is relevant for a user when it
appears in that user's test interactions (any explicit rating), precision and
recall are hits over list length and over test-set size, and NDCG uses binary
gains with a log2 discount.  MAE compares clamped predictions against held
out ratings; models whose scores are not on the rating scale are min-max
rescaled to [1, 10] first and the report flags the column as scale-adjusted.

Group average popularity GAP(g) is the user-level double average of item
popularity phi, and dGAP = (GAP_r - GAP_p) / GAP_p compares recommendation
lists against full user profiles; 0 means the recommendations match the
popularity the user's history would suggest.

Group comparisons use Welch's unpaired two-tailed t-test: the compared user
groups are disjoint sets of different sizes, so a paired test has no defined
pairing; the report header states the choice.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as sps

from fairbook.dataset import Dataset
from fairbook.profiling import GROUPS, GroupAssignment, ItemPopularity, pearson_correlation
from fairbook.recommenders.base import RecModel, RecommendationList

RATING_MIN = 1.0
RATING_MAX = 10.0


@dataclass(frozen=True)
class TrainTestSplit:
    train: Dataset
    test: Dataset
    seed: int
    cold_users: np.ndarray
    cold_items: np.ndarray


def split_train_test(d: Dataset, ratio: float, seed: int) -> TrainTestSplit:
    """Global per-interaction split: seeded shuffle, first floor(ratio * n) train."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"split ratio must be in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(d.n_interactions)
    n_train = int(np.floor(ratio * d.n_interactions))
    train = d.subset(np.sort(perm[:n_train]))
    test = d.subset(np.sort(perm[n_train:]))
    train_users = np.bincount(train.users, minlength=d.n_users)
    train_items = np.bincount(train.items, minlength=d.n_items)
    return TrainTestSplit(
        train=train,
        test=test,
        seed=seed,
        cold_users=np.flatnonzero(train_users == 0),
        cold_items=np.flatnonzero(train_items == 0),
    )


def heldout_profiles(test: Dataset) -> dict[int, np.ndarray]:
    """Per-user test item sets; users without test interactions are absent."""
    profiles: dict[int, list[int]] = {}
    for u, i in zip(test.users.tolist(), test.items.tolist()):
        profiles.setdefault(u, []).append(i)
    return {u: np.asarray(items, dtype=np.int64) for u, items in profiles.items()}


@dataclass(frozen=True)
class RankMetrics:
    users: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    ndcg: np.ndarray


def rank_metrics(recs: RecommendationList, test: Dataset, n: int | None = None) -> RankMetrics:
    """Precision@N, Recall@N and NDCG@N per user with at least one test item."""
    n = recs.n if n is None else n
    relevant = heldout_profiles(test)
    discounts = 1.0 / np.log2(np.arange(2, n + 2))
    users, precision, recall, ndcg = [], [], [], []
    for u in sorted(relevant):
        if u not in recs.lists:
            continue
        rel = set(relevant[u].tolist())
        items = recs.lists[u][0][:n]
        hit_ranks = [rank for rank, item in enumerate(items) if item in rel]
        hits = len(hit_ranks)
        dcg = float(discounts[hit_ranks].sum()) if hits else 0.0
        idcg = float(discounts[: min(n, len(rel))].sum())
        users.append(u)
        precision.append(hits / n)
        recall.append(hits / len(rel))
        ndcg.append(dcg / idcg if idcg > 0 else 0.0)
    return RankMetrics(
        users=np.asarray(users, dtype=np.int64),
        precision=np.asarray(precision),
        recall=np.asarray(recall),
        ndcg=np.asarray(ndcg),
    )


@dataclass(frozen=True)
class MaeResult:
    users: np.ndarray
    mae: np.ndarray
    scale_adjusted: bool


def mae_from_scores(test: Dataset, scores: np.ndarray, rating_scale: bool) -> MaeResult:
    """Per-user MAE from raw scores for the test pairs (in test row order)."""
    scores = np.asarray(scores, dtype=float)
    if scores.shape[0] != test.n_interactions:
        raise ValueError("one score per test interaction required")
    if not rating_scale:
        lo, hi = float(scores.min()), float(scores.max())
        if hi > lo:
            scores = RATING_MIN + (RATING_MAX - RATING_MIN) * (scores - lo) / (hi - lo)
        else:
            scores = np.full_like(scores, (RATING_MIN + RATING_MAX) / 2.0)
    clamped = np.clip(scores, RATING_MIN, RATING_MAX)
    abs_err = np.abs(clamped - test.ratings)
    counts = np.bincount(test.users, minlength=test.n_users)
    sums = np.bincount(test.users, weights=abs_err, minlength=test.n_users)
    users = np.flatnonzero(counts > 0)
    return MaeResult(
        users=users,
        mae=sums[users] / counts[users],
        scale_adjusted=not rating_scale,
    )


def mae(model: RecModel, test: Dataset) -> MaeResult:
    scores = model.score_pairs(test.users, test.items)
    return mae_from_scores(test, scores, model.rating_scale)


def gap(users: Sequence[int], lists: Mapping[int, np.ndarray], phi: np.ndarray) -> float:
    """Mean over users of the mean popularity of that user's item list."""
    users = list(users)
    if not users:
        raise ValueError("GAP of an empty user group is undefined")
    total = 0.0
    for u in users:
        items = lists[u]
        if len(items) == 0:
            raise ValueError(f"user {u} has an empty item list")
        total += float(phi[items].mean())
    return total / len(users)


def delta_gap(gap_r: float, gap_p: float) -> float:
    """Relative deviation of recommended popularity from profile popularity."""
    if gap_p <= 0.0:
        raise ValueError(f"GAP_p must be positive, got {gap_p}")
    return (gap_r - gap_p) / gap_p


@dataclass(frozen=True)
class FrequencyReport:
    rec_count: np.ndarray
    r: float
    p: float


def recommendation_frequency_correlation(
    recs: RecommendationList, pop: ItemPopularity
) -> FrequencyReport:
    """Pearson correlation of per-item recommendation count against phi."""
    counts = recs.item_counts(len(pop.phi))
    r, p = pearson_correlation(counts.astype(float), pop.phi)
    return FrequencyReport(rec_count=counts, r=r, p=p)


def welch_t_test(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Welch's unpaired two-sample two-tailed t-test."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 values")
    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    diff = a.mean() - b.mean()
    if va + vb == 0.0:
        # degenerate: no variance at all; equal means carry no evidence
        return (0.0, 1.0) if diff == 0.0 else (np.inf if diff > 0 else -np.inf, 0.0)
    t = diff / np.sqrt(va + vb)
    dof = (va + vb) ** 2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1))
    p = float(2.0 * sps.t.sf(abs(t), dof))
    return float(t), p


@dataclass(frozen=True)
class SignificanceResult:
    group_a: str
    group_b: str
    t: float
    p: float
    significant: bool


def group_significance_test(
    users: np.ndarray, values: np.ndarray, groups: GroupAssignment, alpha: float = 0.05
) -> list[SignificanceResult]:
    """Welch test of a per-user metric between every pair of user groups."""
    users = np.asarray(users)
    values = np.asarray(values, dtype=float)
    defined = ~np.isnan(values)
    by_group = {}
    for g in GROUPS:
        members = set(groups.members(g).tolist())
        mask = defined & np.fromiter((u in members for u in users), bool, len(users))
        by_group[g] = values[mask]
    results = []
    for ka in range(len(GROUPS)):
        for kb in range(ka + 1, len(GROUPS)):
            ga, gb = GROUPS[ka], GROUPS[kb]
            if by_group[ga].size < 2 or by_group[gb].size < 2:
                raise ValueError(f"need >= 2 users with defined values in {ga} and {gb}")
            t, p = welch_t_test(by_group[ga], by_group[gb])
            results.append(SignificanceResult(ga, gb, t, p, p < alpha))
    return results


def tradeoff_correlation(
    ndcg_by_algorithm: Sequence[float], dgap_by_algorithm: Sequence[float]
) -> tuple[float, float]:
    """Pearson (r, p) between per-algorithm accuracy and unfairness points."""
    if len(ndcg_by_algorithm) < 3:
        raise ValueError("tradeoff correlation needs at least 3 algorithms")
    return pearson_correlation(ndcg_by_algorithm, dgap_by_algorithm)

"""Item popularity, per-user popularity statistics and user grouping.

Popularity of an item is the fraction of all users who have read it.  Items
in the top 20% by reader count are flagged popular.  Users are sorted by the
ratio of popular items in their profile; the bottom 20% are Niche users, the
top 20% BestsellerFocused, everyone else Diverse.  All quantile boundaries
use floor rounding and ties are broken by ascending index, so the grouping
is a pure deterministic function of the dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from fairbook.dataset import Dataset
from fairbook.errors import UndefinedCorrelationError

POPULAR_TOP_FRACTION = 0.2
GROUP_TAIL_FRACTION = 0.2

NICHE = "Niche"
DIVERSE = "Diverse"
BESTSELLER = "BestsellerFocused"
GROUPS = (NICHE, DIVERSE, BESTSELLER)


@dataclass(frozen=True)
class ItemPopularity:
    """Per-item reader counts, popularity phi and the top-20% popular flag."""

    reader_count: np.ndarray
    phi: np.ndarray
    is_popular: np.ndarray
    rank_order: np.ndarray  # item indices sorted by reader count desc, index asc

    @property
    def n_popular(self) -> int:
        return int(self.is_popular.sum())


@dataclass(frozen=True)
class UserProfileStats:
    profile_size: np.ndarray
    n_popular: np.ndarray
    ratio_popular: np.ndarray
    avg_item_popularity: np.ndarray

    @property
    def n_users(self) -> int:
        return int(self.profile_size.shape[0])


@dataclass(frozen=True)
class GroupAssignment:
    """Per-user group label, stored as an index into :data:`GROUPS`."""

    codes: np.ndarray

    def label(self, user: int) -> str:
        return GROUPS[self.codes[user]]

    def labels(self) -> list[str]:
        return [GROUPS[c] for c in self.codes]

    def members(self, group: str) -> np.ndarray:
        return np.flatnonzero(self.codes == GROUPS.index(group))

    def sizes(self) -> dict[str, int]:
        return {g: int((self.codes == c).sum()) for c, g in enumerate(GROUPS)}


def compute_item_popularity(d: Dataset) -> ItemPopularity:
    """phi(i) = distinct readers of i / n_users; top floor(20%) flagged popular."""
    counts = np.bincount(d.items, minlength=d.n_items)
    # lexsort: last key is primary, so order is by count desc then index asc
    order = np.lexsort((np.arange(d.n_items), -counts))
    n_pop = int(np.floor(POPULAR_TOP_FRACTION * d.n_items))
    is_popular = np.zeros(d.n_items, dtype=bool)
    is_popular[order[:n_pop]] = True
    return ItemPopularity(
        reader_count=counts,
        phi=counts / d.n_users,
        is_popular=is_popular,
        rank_order=order,
    )


def user_profile_stats(d: Dataset, pop: ItemPopularity) -> UserProfileStats:
    sizes = np.bincount(d.users, minlength=d.n_users)
    n_popular = np.bincount(
        d.users, weights=pop.is_popular[d.items].astype(float), minlength=d.n_users
    )
    phi_sum = np.bincount(d.users, weights=pop.phi[d.items], minlength=d.n_users)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(sizes > 0, n_popular / sizes, 0.0)
        avg_phi = np.where(sizes > 0, phi_sum / sizes, 0.0)
    return UserProfileStats(
        profile_size=sizes,
        n_popular=n_popular.astype(np.int64),
        ratio_popular=ratio,
        avg_item_popularity=avg_phi,
    )


def assign_groups(stats: UserProfileStats) -> GroupAssignment:
    """Bottom 20% of users by popular-item ratio are Niche, top 20% Bestseller."""
    n = stats.n_users
    if n < 5:
        raise ValueError(f"grouping needs at least 5 users, got {n}")
    order = np.lexsort((np.arange(n), stats.ratio_popular))
    tail = int(np.floor(GROUP_TAIL_FRACTION * n))
    codes = np.full(n, GROUPS.index(DIVERSE), dtype=np.int8)
    codes[order[:tail]] = GROUPS.index(NICHE)
    codes[order[n - tail:]] = GROUPS.index(BESTSELLER)
    return GroupAssignment(codes=codes)


def pearson_correlation(x, y) -> tuple[float, float]:
    """Pearson r with a two-sided p-value from the t distribution (n-2 dof)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"series length mismatch: {x.shape} vs {y.shape}")
    n = x.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 points for a correlation, got {n}")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise UndefinedCorrelationError("correlation undefined for a constant series")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt(np.dot(xc, xc))
    sy = np.sqrt(np.dot(yc, yc))
    r = float(np.clip(np.dot(xc, yc) / (sx * sy), -1.0, 1.0))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * np.sqrt((n - 2) / (1.0 - r * r))
    p = float(2.0 * sps.t.sf(abs(t), n - 2))
    return r, p


def profile_popularity_correlations(
    stats: UserProfileStats,
) -> tuple[tuple[float, float], tuple[float, float]]:
    """(r, p) of profile size vs popular-item count, and vs mean item popularity."""
    size = stats.profile_size.astype(float)
    size_vs_npop = pearson_correlation(size, stats.n_popular.astype(float))
    size_vs_avgphi = pearson_correlation(size, stats.avg_item_popularity)
    return size_vs_npop, size_vs_avgphi


def group_profile_summary(d: Dataset, groups: GroupAssignment) -> dict[str, float]:
    """Arithmetic mean profile size per user group."""
    sizes = np.bincount(d.users, minlength=d.n_users).astype(float)
    return {g: float(sizes[groups.members(g)].mean()) for g in GROUPS}


def longtail_series(pop: ItemPopularity) -> np.ndarray:
    """Reader count per popularity rank (rank 1 = most read)."""
    return pop.reader_count[pop.rank_order]


def ratio_histogram(
    stats: UserProfileStats, bins: int = 10
) -> list[tuple[float, float, int]]:
    """Histogram of the per-user popular-item ratio over [0, 1]."""
    counts, edges = np.histogram(stats.ratio_popular, bins=bins, range=(0.0, 1.0))
    return [
        (float(edges[k]), float(edges[k + 1]), int(counts[k])) for k in range(bins)
    ]

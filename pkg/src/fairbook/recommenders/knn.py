"""User-based k-nearest-neighbour recommender with mean-centered cosine.

Each user's observed ratings are centered by their own mean and the cosine is
taken between the resulting sparse rows (unrated entries count as zero).  The
prediction for (u, i) averages the centered ratings of the `neighbors` most
similar users who rated i, weighted by similarity:

    score(u, i) = mean_u + sum_v sim(u, v) (r_vi - mean_v) / sum_v |sim(u, v)|

falling back to the user's mean when nobody comparable rated i, and to the
global mean for users without training interactions.  The user themself never
counts as a neighbour; similarity ties at the neighbourhood boundary resolve
to the lower user index.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from scipy import sparse

from fairbook.dataset import Dataset
from fairbook.recommenders.base import ModelConfig, RecModel


@njit(cache=True)
def _score_items_kernel(
    col_ptr, col_users, col_vals, sims, user, base, neighbors, items,
    cand_sims, cand_vals, cand_idx, out,
):
    for t in range(items.shape[0]):
        i = items[t]
        m = 0
        for p in range(col_ptr[i], col_ptr[i + 1]):
            v = col_users[p]
            if v == user:
                continue
            cand_sims[m] = sims[v]
            cand_vals[m] = col_vals[p]
            cand_idx[m] = v
            m += 1
        num = 0.0
        den = 0.0
        if m <= neighbors:
            for p in range(m):
                num += cand_sims[p] * cand_vals[p]
                den += abs(cand_sims[p])
        else:
            order = np.argsort(-cand_sims[:m])
            take = neighbors
            if cand_sims[order[take - 1]] == cand_sims[order[take]]:
                # boundary tie: fill the tied slots by ascending user index
                tie = cand_sims[order[take - 1]]
                start = take - 1
                while start > 0 and cand_sims[order[start - 1]] == tie:
                    start -= 1
                end = take
                while end < m and cand_sims[order[end]] == tie:
                    end += 1
                tied_users = np.sort(cand_idx[order[start:end]])
                for p in range(start):
                    num += cand_sims[order[p]] * cand_vals[order[p]]
                    den += abs(cand_sims[order[p]])
                for q in range(take - start):
                    winner = tied_users[q]
                    for p in range(start, end):
                        if cand_idx[order[p]] == winner:
                            num += cand_sims[order[p]] * cand_vals[order[p]]
                            den += abs(cand_sims[order[p]])
                            break
                take = 0  # contributions already accumulated
            for p in range(take):
                num += cand_sims[order[p]] * cand_vals[order[p]]
                den += abs(cand_sims[order[p]])
        out[t] = base + num / den if den > 0.0 else base


class UserKNNModel(RecModel):
    algorithm = "UserKNN"
    rating_scale = True

    def __init__(self, train: Dataset, neighbors: int):
        self.neighbors = neighbors
        self.n_users = train.n_users
        self.n_items = train.n_items

        counts = np.bincount(train.users, minlength=train.n_users)
        sums = np.bincount(train.users, weights=train.ratings.astype(float), minlength=train.n_users)
        self.global_mean = float(train.ratings.mean()) if train.n_interactions else 0.0
        self.user_mean = np.where(counts > 0, sums / np.maximum(counts, 1), self.global_mean)
        self.is_cold = counts == 0

        centered_vals = train.ratings.astype(float) - self.user_mean[train.users]
        self.centered = sparse.csr_matrix(
            (centered_vals, (train.users, train.items)),
            shape=(train.n_users, train.n_items),
        )
        norms = np.sqrt(np.asarray(self.centered.multiply(self.centered).sum(axis=1)).ravel())
        inv = np.where(norms > 0, 1.0 / np.where(norms > 0, norms, 1.0), 0.0)
        self.normalized = sparse.diags(inv) @ self.centered
        centered_csc = self.centered.tocsc()
        self._col_ptr = centered_csc.indptr.astype(np.int64)
        self._col_users = centered_csc.indices.astype(np.int64)
        self._col_vals = centered_csc.data.astype(np.float64)
        self._max_raters = int(np.diff(self._col_ptr).max()) if train.n_interactions else 0

    def similarities(self, user: int) -> np.ndarray:
        sims = (self.normalized @ self.normalized[user].T).toarray().ravel()
        sims[user] = 0.0  # excluded from neighbourhoods by the kernel anyway
        return sims

    def _score_items(self, user: int, sims: np.ndarray, items: np.ndarray) -> np.ndarray:
        out = np.empty(len(items), dtype=np.float64)
        scratch = max(self._max_raters, 1)
        _score_items_kernel(
            self._col_ptr, self._col_users, self._col_vals, sims,
            user, self.user_mean[user], self.neighbors,
            np.asarray(items, dtype=np.int64),
            np.empty(scratch, dtype=np.float64),
            np.empty(scratch, dtype=np.float64),
            np.empty(scratch, dtype=np.int64),
            out,
        )
        return out

    def score_all(self, user: int) -> np.ndarray:
        if self.is_cold[user]:
            return np.full(self.n_items, self.global_mean)
        return self._score_items(user, self.similarities(user), np.arange(self.n_items))

    def score_pairs(self, users, items) -> np.ndarray:
        users = np.asarray(users)
        items = np.asarray(items)
        scores = np.empty(len(users), dtype=float)
        for u in np.unique(users):
            mask = users == u
            if self.is_cold[u]:
                scores[mask] = self.global_mean
                continue
            sims = self.similarities(int(u))
            scores[mask] = self._score_items(int(u), sims, items[mask])
        return scores


def fit_userknn(config: ModelConfig, train: Dataset) -> UserKNNModel:
    config = config.resolved()
    return UserKNNModel(train, neighbors=config.neighbors)

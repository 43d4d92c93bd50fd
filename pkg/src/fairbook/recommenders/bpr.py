"""Bayesian personalized ranking trained by SGD over sampled triples.

Each epoch visits every training interaction (u, i+) once in a shuffled
order and pairs it with a negative item j- drawn uniformly from the items
absent from u's training profile, for epochs * |train| triples in total.
The per-triple objective being ascended is

    ln sigmoid(p_u . q_i - p_u . q_j) - reg (||p_u||^2 + ||q_i||^2 + ||q_j||^2)

Users whose profile covers the whole catalogue have no negatives to sample
and are excluded with a warning.
"""

from __future__ import annotations

import logging

import numpy as np
from numba import njit

from fairbook.dataset import Dataset
from fairbook.recommenders.base import FactorModel, ModelConfig, seeded_uniform_positive

logger = logging.getLogger(__name__)


class BPRModel(FactorModel):
    rating_scale = False

    def __init__(self, P, Q):
        super().__init__("BPR", P, Q)


@njit(cache=True)
def _bpr_epoch(u_arr, i_arr, j_arr, P, Q, lr, reg):
    k = P.shape[1]
    for t in range(u_arr.shape[0]):
        u = u_arr[t]
        i = i_arr[t]
        j = j_arr[t]
        x = 0.0
        for f in range(k):
            x += P[u, f] * (Q[i, f] - Q[j, f])
        # sigmoid(-x), clipped against exp overflow
        if x > 35.0:
            s = 0.0
        elif x < -35.0:
            s = 1.0
        else:
            s = 1.0 / (1.0 + np.exp(x))
        for f in range(k):
            puf = P[u, f]
            qif = Q[i, f]
            qjf = Q[j, f]
            P[u, f] += lr * (s * (qif - qjf) - 2.0 * reg * puf)
            Q[i, f] += lr * (s * puf - 2.0 * reg * qif)
            Q[j, f] += lr * (-s * puf - 2.0 * reg * qjf)


def bpr_objective(P, Q, triples, reg) -> float:
    """Regularised log-likelihood over an explicit list of triples."""
    u, i, j = triples
    x = np.einsum("tk,tk->t", P[u], Q[i] - Q[j])
    log_sigmoid = np.where(x >= 0, -np.log1p(np.exp(-x)), x - np.log1p(np.exp(x)))
    penalty = (
        np.einsum("tk,tk->t", P[u], P[u])
        + np.einsum("tk,tk->t", Q[i], Q[i])
        + np.einsum("tk,tk->t", Q[j], Q[j])
    )
    return float(np.sum(log_sigmoid - reg * penalty))


def bpr_grad(P, Q, triples, reg):
    """Analytic gradient of :func:`bpr_objective` (for the finite-diff check)."""
    u, i, j = triples
    x = np.einsum("tk,tk->t", P[u], Q[i] - Q[j])
    s = np.empty_like(x)
    pos = x >= 0
    s[pos] = np.exp(-x[pos]) / (1.0 + np.exp(-x[pos]))
    s[~pos] = 1.0 / (1.0 + np.exp(x[~pos]))
    gP = np.zeros_like(P)
    gQ = np.zeros_like(Q)
    np.add.at(gP, u, s[:, None] * (Q[i] - Q[j]) - 2.0 * reg * P[u])
    np.add.at(gQ, i, s[:, None] * P[u] - 2.0 * reg * Q[i])
    np.add.at(gQ, j, -s[:, None] * P[u] - 2.0 * reg * Q[j])
    return gP, gQ


def fit_bpr(config: ModelConfig, train: Dataset) -> BPRModel:
    config = config.resolved()
    rng = np.random.default_rng(config.seed)
    P = seeded_uniform_positive(rng, (train.n_users, config.k))
    Q = seeded_uniform_positive(rng, (train.n_items, config.k))

    rated = np.zeros((train.n_users, train.n_items), dtype=bool)
    rated[train.users, train.items] = True
    full_coverage = rated.all(axis=1)
    if full_coverage.any():
        excluded = np.flatnonzero(full_coverage)
        logger.warning(
            "BPR: %d users rated every item and are excluded from sampling: %s",
            len(excluded), excluded[:10].tolist(),
        )
    pool = np.flatnonzero(~full_coverage[train.users])
    if pool.size == 0:
        return BPRModel(P, Q)

    users = train.users.astype(np.int64)
    items = train.items.astype(np.int64)
    for _ in range(config.epochs):
        order = pool[rng.permutation(pool.size)]
        u_arr = users[order]
        i_arr = items[order]
        j_arr = rng.integers(0, train.n_items, size=order.size)
        bad = rated[u_arr, j_arr]
        while bad.any():
            j_arr[bad] = rng.integers(0, train.n_items, size=int(bad.sum()))
            bad = rated[u_arr, j_arr]
        _bpr_epoch(u_arr, i_arr, j_arr, P, Q, config.learning_rate, config.regularization)
    return BPRModel(P, Q)

"""Explicit-feedback factor models: biased MF, PMF and nonnegative MF.

MF minimises the per-interaction squared error of mu + b_u + b_i + p_u . q_i
with L2 regularisation applied on every visit, by SGD over shuffled
interactions.  PMF is the same squared loss without the bias terms.  NMF uses
the masked multiplicative update rules on observed entries, which keep both
factor matrices nonnegative and never increase the squared error.

All factor entries initialise to a seeded uniform draw in (0, 0.01]; strictly
positive values keep the NMF updates well defined.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from scipy import sparse

from fairbook.dataset import Dataset
from fairbook.errors import FitError
from fairbook.recommenders.base import FactorModel, ModelConfig, seeded_uniform_positive

NMF_EPS = 1e-12


class ExplicitFactorModel(FactorModel):
    """Factor model scoring on the rating scale, with optional bias terms."""

    rating_scale = True

    def __init__(self, algorithm, P, Q, bu, bi, mu, objective_history):
        super().__init__(algorithm, P, Q)
        self.bu = bu
        self.bi = bi
        self.mu = mu
        self.objective_history = objective_history

    def score_all(self, user: int) -> np.ndarray:
        return self.mu + self.bu[user] + self.bi + self.Q @ self.P[user]

    def score_pairs(self, users, items) -> np.ndarray:
        dots = np.einsum("ij,ij->i", self.P[users], self.Q[items])
        return self.mu + self.bu[users] + self.bi[items] + dots


@njit(cache=True)
def _sgd_epoch(users, items, ratings, order, P, Q, bu, bi, mu, lr, reg, use_bias):
    k = P.shape[1]
    for t in range(order.shape[0]):
        s = order[t]
        u = users[s]
        i = items[s]
        pred = mu + bu[u] + bi[i]
        for f in range(k):
            pred += P[u, f] * Q[i, f]
        err = ratings[s] - pred
        if use_bias:
            bu[u] += lr * (err - reg * bu[u])
            bi[i] += lr * (err - reg * bi[i])
        for f in range(k):
            puf = P[u, f]
            qif = Q[i, f]
            P[u, f] += lr * (err * qif - reg * puf)
            Q[i, f] += lr * (err * puf - reg * qif)


def explicit_loss(P, Q, bu, bi, mu, users, items, ratings, reg, use_bias) -> float:
    """Full objective: squared errors plus per-visit L2 penalties.

    Overflow to inf is deliberate: the fit loop uses a non-finite loss to
    detect divergence.
    """
    with np.errstate(over="ignore"):
        pred = np.einsum("ij,ij->i", P[users], Q[items])
        if use_bias:
            pred = pred + mu + bu[users] + bi[items]
        err = ratings - pred
        loss = float(err @ err)
        loss += reg * float(np.einsum("ij,ij->", P[users], P[users]))
        loss += reg * float(np.einsum("ij,ij->", Q[items], Q[items]))
        if use_bias:
            loss += reg * float(bu[users] @ bu[users] + bi[items] @ bi[items])
    return loss


def explicit_grad(P, Q, bu, bi, mu, users, items, ratings, reg, use_bias):
    """Analytic gradient of :func:`explicit_loss` (for the finite-diff check)."""
    pred = np.einsum("ij,ij->i", P[users], Q[items])
    if use_bias:
        pred = pred + mu + bu[users] + bi[items]
    err = ratings - pred
    visits_u = np.bincount(users, minlength=P.shape[0]).astype(float)
    visits_i = np.bincount(items, minlength=Q.shape[0]).astype(float)
    gP = 2.0 * reg * P * visits_u[:, None]
    gQ = 2.0 * reg * Q * visits_i[:, None]
    np.add.at(gP, users, -2.0 * err[:, None] * Q[items])
    np.add.at(gQ, items, -2.0 * err[:, None] * P[users])
    gbu = 2.0 * reg * bu * visits_u
    gbi = 2.0 * reg * bi * visits_i
    if use_bias:
        np.add.at(gbu, users, -2.0 * err)
        np.add.at(gbi, items, -2.0 * err)
    else:
        gbu = np.zeros_like(bu)
        gbi = np.zeros_like(bi)
    return gP, gQ, gbu, gbi


def _fit_sgd(config: ModelConfig, train: Dataset, use_bias: bool) -> ExplicitFactorModel:
    rng = np.random.default_rng(config.seed)
    P = seeded_uniform_positive(rng, (train.n_users, config.k))
    Q = seeded_uniform_positive(rng, (train.n_items, config.k))
    bu = np.zeros(train.n_users)
    bi = np.zeros(train.n_items)
    mu = float(train.ratings.mean()) if use_bias else 0.0

    users = train.users.astype(np.int64)
    items = train.items.astype(np.int64)
    ratings = train.ratings.astype(np.float64)
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(train.n_interactions)
        _sgd_epoch(
            users, items, ratings, order, P, Q, bu, bi, mu,
            config.learning_rate, config.regularization, use_bias,
        )
        loss = explicit_loss(P, Q, bu, bi, mu, users, items, ratings,
                             config.regularization, use_bias)
        if not np.isfinite(loss):
            raise FitError(f"{config.algorithm} diverged at epoch {epoch + 1}")
        history.append(loss)
    return ExplicitFactorModel(config.algorithm, P, Q, bu, bi, mu, history)


class NMFModel(ExplicitFactorModel):
    def __init__(self, P, Q, objective_history, min_entry_history):
        super().__init__(
            "NMF", P, Q,
            np.zeros(P.shape[0]), np.zeros(Q.shape[0]), 0.0,
            objective_history,
        )
        self.min_entry_history = min_entry_history


def _fit_nmf(config: ModelConfig, train: Dataset) -> NMFModel:
    rng = np.random.default_rng(config.seed)
    P = seeded_uniform_positive(rng, (train.n_users, config.k))
    Q = seeded_uniform_positive(rng, (train.n_items, config.k))

    order = np.lexsort((train.items, train.users))
    rows = train.users[order].astype(np.int64)
    cols = train.items[order].astype(np.int64)
    vals = train.ratings[order].astype(np.float64)
    R = sparse.csr_matrix((vals, (rows, cols)), shape=(train.n_users, train.n_items))
    Rhat = R.copy()

    history = []
    min_entries = []
    for epoch in range(config.epochs):
        Rhat.data = np.einsum("ij,ij->i", P[rows], Q[cols])
        P *= (R @ Q) / np.maximum(Rhat @ Q, NMF_EPS)
        Rhat.data = np.einsum("ij,ij->i", P[rows], Q[cols])
        Q *= (R.T @ P) / np.maximum(Rhat.T @ P, NMF_EPS)

        err = vals - np.einsum("ij,ij->i", P[rows], Q[cols])
        loss = float(err @ err)
        if not np.isfinite(loss):
            raise FitError(f"NMF diverged at epoch {epoch + 1}")
        history.append(loss)
        min_entries.append(min(float(P.min()), float(Q.min())))
    return NMFModel(P, Q, history, min_entries)


def fit_explicit_mf(config: ModelConfig, train: Dataset) -> ExplicitFactorModel:
    config = config.resolved()
    if config.algorithm == "MF":
        return _fit_sgd(config, train, use_bias=True)
    if config.algorithm == "PMF":
        return _fit_sgd(config, train, use_bias=False)
    if config.algorithm == "NMF":
        return _fit_nmf(config, train)
    raise ValueError(f"{config.algorithm} is not an explicit MF algorithm")

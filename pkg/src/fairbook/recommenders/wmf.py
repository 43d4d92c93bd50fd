"""Weighted matrix factorization for implicit feedback, trained with ALS.

Observed pairs get a binarized preference p_ui = 1 with confidence
c_ui = 1 + alpha * r_ui; every unobserved pair contributes with confidence 1
and preference 0.  Alternating least squares minimises

    sum_{u,i} c_ui (p_ui - p_u . q_i)^2 + reg (||P||^2 + ||Q||^2)

using the Gram-matrix trick, so each row solve costs O(k^2 nnz_row + k^3)
and the objective over all n_users * n_items cells can still be evaluated in
O(k^2 (n_users + n_items) + k nnz) for the monotonicity check.
"""

from __future__ import annotations

import numpy as np

from fairbook.dataset import Dataset
from fairbook.errors import FitError
from fairbook.recommenders.base import FactorModel, ModelConfig, seeded_uniform_positive


class WMFModel(FactorModel):
    rating_scale = False

    def __init__(self, P, Q, objective_history):
        super().__init__("WMF", P, Q)
        self.objective_history = objective_history


def wmf_objective(P, Q, rows_by_user, conf_by_user, reg) -> float:
    """Full implicit objective including every unobserved cell."""
    G = Q.T @ Q
    total = float(np.einsum("uk,kl,ul->", P, G, P))  # sum over all cells of x^2
    for u, idx in enumerate(rows_by_user):
        if idx.size == 0:
            continue
        x = Q[idx] @ P[u]
        c = conf_by_user[u]
        total += float(c @ ((1.0 - x) ** 2) - x @ x)
    total += reg * (float(np.sum(P * P)) + float(np.sum(Q * Q)))
    return total


def _solve_side(this, other, rows, confs, reg):
    k = other.shape[1]
    G = other.T @ other + reg * np.eye(k)
    for u, idx in enumerate(rows):
        if idx.size == 0:
            this[u] = 0.0
            continue
        M = other[idx]
        c = confs[u]
        A = G + (M.T * (c - 1.0)) @ M
        b = M.T @ c
        try:
            this[u] = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            try:
                this[u] = np.linalg.solve(A + reg * np.eye(k), b)
            except np.linalg.LinAlgError as exc:
                raise FitError(f"WMF normal equations singular for row {u}") from exc


def _group_rows(keys, values, n):
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    values = values[order]
    bounds = np.searchsorted(keys, np.arange(n + 1))
    return [values[bounds[i]:bounds[i + 1]] for i in range(n)]


def fit_wmf(config: ModelConfig, train: Dataset) -> WMFModel:
    config = config.resolved()
    rng = np.random.default_rng(config.seed)
    P = seeded_uniform_positive(rng, (train.n_users, config.k))
    Q = seeded_uniform_positive(rng, (train.n_items, config.k))

    conf = 1.0 + config.alpha * train.ratings.astype(float)
    items_by_user = _group_rows(train.users, train.items, train.n_users)
    conf_by_user = _group_rows(train.users, conf, train.n_users)
    users_by_item = _group_rows(train.items, train.users, train.n_items)
    conf_by_item = _group_rows(train.items, conf, train.n_items)

    history = []
    for _ in range(config.epochs):
        _solve_side(P, Q, items_by_user, conf_by_user, config.regularization)
        _solve_side(Q, P, users_by_item, conf_by_item, config.regularization)
        history.append(wmf_objective(P, Q, items_by_user, conf_by_user, config.regularization))
    return WMFModel(P, Q, history)

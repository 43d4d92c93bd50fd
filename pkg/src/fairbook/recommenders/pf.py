"""Hierarchical Poisson factorization fitted by coordinate-ascent VI.

Ratings are consumed as Poisson counts.  Each user u has latent preferences
theta_u ~ Gamma(a, xi_u) with a per-user capacity xi_u ~ Gamma(a', a'/b');
items carry the symmetric beta_i / eta_i structure.  The variational family
is fully factorised with Gamma factors for theta, beta, xi, eta and one
multinomial auxiliary distribution per observed (u, i) that allocates the
count across the K components.

One sweep updates, in order: the multinomial allocations, the user Gamma
blocks, then the item Gamma blocks.  Every update is an exact coordinate
maximiser of the ELBO given the other blocks, so the ELBO never decreases.
The configured prior_shape plays the role of a = a' = c = c' and prior_rate
of b' = d'; predictions are E[theta_u] . E[beta_i].
"""

from __future__ import annotations

import numpy as np
from scipy.special import digamma, gammaln

from fairbook.dataset import Dataset
from fairbook.errors import FitError
from fairbook.recommenders.base import FactorModel, ModelConfig


class PFModel(FactorModel):
    rating_scale = False

    def __init__(self, P, Q, elbo_history, min_param_history):
        super().__init__("PF", P, Q)
        self.elbo_history = elbo_history
        self.min_param_history = min_param_history


def _gamma_entropy(shp, rte):
    return shp - np.log(rte) + gammaln(shp) + (1.0 - shp) * digamma(shp)


def fit_pf(config: ModelConfig, train: Dataset) -> PFModel:
    config = config.resolved()
    rng = np.random.default_rng(config.seed)
    k = config.k
    a = c = ap = cp = config.prior_shape
    bp = dp = config.prior_rate

    rows = train.users
    cols = train.items
    y = train.ratings.astype(float)
    log_y_fact = float(np.sum(gammaln(y + 1.0)))

    g_shp = a + 0.01 * rng.random((train.n_users, k))
    g_rte = bp + 0.01 * rng.random((train.n_users, k))
    l_shp = c + 0.01 * rng.random((train.n_items, k))
    l_rte = dp + 0.01 * rng.random((train.n_items, k))
    k_shp = ap + k * a  # constant across sweeps
    t_shp = cp + k * c
    k_rte = ap / bp + (g_shp / g_rte).sum(axis=1)
    t_rte = cp / dp + (l_shp / l_rte).sum(axis=1)

    def allocations():
        log_rho = (digamma(g_shp[rows]) - np.log(g_rte[rows])) + (
            digamma(l_shp[cols]) - np.log(l_rte[cols])
        )
        log_rho -= log_rho.max(axis=1, keepdims=True)
        phi = np.exp(log_rho)
        phi /= phi.sum(axis=1, keepdims=True)
        return phi

    def elbo(phi):
        e_theta = g_shp / g_rte
        e_beta = l_shp / l_rte
        eln_theta = digamma(g_shp) - np.log(g_rte)
        eln_beta = digamma(l_shp) - np.log(l_rte)
        e_xi = k_shp / k_rte
        e_eta = t_shp / t_rte
        eln_xi = digamma(k_shp) - np.log(k_rte)
        eln_eta = digamma(t_shp) - np.log(t_rte)

        with np.errstate(divide="ignore"):
            log_phi = np.log(np.maximum(phi, 1e-300))
        alloc = eln_theta[rows] + eln_beta[cols] - log_phi
        obs = float(np.sum(np.where(phi > 0, y[:, None] * phi * alloc, 0.0)))
        obs -= float(e_theta.sum(axis=0) @ e_beta.sum(axis=0))
        obs -= log_y_fact

        theta_term = float(
            np.sum(a * eln_xi[:, None] - gammaln(a) + (a - 1.0) * eln_theta - e_xi[:, None] * e_theta)
        ) + float(np.sum(_gamma_entropy(g_shp, g_rte)))
        beta_term = float(
            np.sum(c * eln_eta[:, None] - gammaln(c) + (c - 1.0) * eln_beta - e_eta[:, None] * e_beta)
        ) + float(np.sum(_gamma_entropy(l_shp, l_rte)))
        xi_term = float(
            np.sum(ap * np.log(ap / bp) - gammaln(ap) + (ap - 1.0) * eln_xi - (ap / bp) * e_xi)
        ) + float(np.sum(_gamma_entropy(k_shp * np.ones_like(k_rte), k_rte)))
        eta_term = float(
            np.sum(cp * np.log(cp / dp) - gammaln(cp) + (cp - 1.0) * eln_eta - (cp / dp) * e_eta)
        ) + float(np.sum(_gamma_entropy(t_shp * np.ones_like(t_rte), t_rte)))
        return obs + theta_term + beta_term + xi_term + eta_term

    elbo_history = []
    min_params = []
    for sweep in range(config.epochs):
        phi = allocations()
        weighted = y[:, None] * phi

        g_shp = a + np.array(
            [np.bincount(rows, weights=weighted[:, f], minlength=train.n_users) for f in range(k)]
        ).T
        g_rte = (k_shp / k_rte)[:, None] + (l_shp / l_rte).sum(axis=0)[None, :]
        k_rte = ap / bp + (g_shp / g_rte).sum(axis=1)

        l_shp = c + np.array(
            [np.bincount(cols, weights=weighted[:, f], minlength=train.n_items) for f in range(k)]
        ).T
        l_rte = (t_shp / t_rte)[:, None] + (g_shp / g_rte).sum(axis=0)[None, :]
        t_rte = cp / dp + (l_shp / l_rte).sum(axis=1)

        value = elbo(phi)
        if not np.isfinite(value):
            raise FitError(f"PF ELBO became non-finite at sweep {sweep + 1}")
        elbo_history.append(value)
        min_params.append(
            min(
                float(g_shp.min()), float(g_rte.min()),
                float(l_shp.min()), float(l_rte.min()),
                float(k_rte.min()), float(t_rte.min()),
                float(k_shp), float(t_shp),
            )
        )
    return PFModel(g_shp / g_rte, l_shp / l_rte, elbo_history, min_params)

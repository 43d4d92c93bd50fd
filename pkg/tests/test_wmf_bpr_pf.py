import numpy as np
import pytest

import oracles
from conftest import make_dataset
from fairbook.recommenders import ModelConfig, fit
from fairbook.recommenders.base import seeded_uniform_positive
from fairbook.recommenders.bpr import bpr_grad, bpr_objective
from fairbook.recommenders.wmf import wmf_objective


def toy_5x5():
    rng = np.random.default_rng(13)
    users, items, ratings = [], [], []
    for u in range(5):
        for i in sorted(rng.choice(5, size=3, replace=False)):
            users.append(u)
            items.append(int(i))
            ratings.append(int(rng.integers(1, 11)))
    return make_dataset(users, items, ratings, 5, 5)


class TestWMF:
    def test_objective_matches_dense_oracle(self):
        d = toy_5x5()
        rng = np.random.default_rng(1)
        P = rng.normal(size=(5, 2))
        Q = rng.normal(size=(5, 2))
        conf = 1.0 + 1.0 * d.ratings.astype(float)
        rows = [d.items[d.users == u] for u in range(5)]
        confs = [conf[d.users == u] for u in range(5)]
        got = wmf_objective(P, Q, rows, confs, reg=0.1)
        want = oracles.wmf_objective_dense(P, Q, d.users, d.items, d.ratings, 1.0, 0.1)
        assert got == pytest.approx(want, rel=1e-10)

    def test_objective_monotone_under_als(self, bx_like):
        model = fit(ModelConfig(algorithm="WMF", epochs=15, seed=2), bx_like.dataset)
        obj = np.asarray(model.objective_history)
        slack = 1e-9 * (1.0 + np.abs(obj[:-1]))
        assert (np.diff(obj) <= slack).all()

    def test_single_cell_learns_binarized_preference(self):
        # k=1 keeps the unregularised normal equations full rank on one cell
        d = make_dataset([0], [0], [10], 1, 1)
        model = fit(ModelConfig(algorithm="WMF", k=1, alpha=1.0, regularization=0.0,
                                epochs=5, seed=3), d)
        assert float(model.P[0] @ model.Q[0]) == pytest.approx(1.0, abs=1e-6)

    def test_singular_solve_without_jitter_is_a_fit_error(self):
        from fairbook.errors import FitError

        d = make_dataset([0], [0], [10], 1, 1)
        with pytest.raises(FitError, match="singular"):
            fit(ModelConfig(algorithm="WMF", k=10, regularization=0.0,
                            epochs=2, seed=3), d)

    def test_beats_random_search(self):
        d = toy_5x5()
        cfg = ModelConfig(algorithm="WMF", k=2, alpha=1.0, regularization=0.05,
                          epochs=30, seed=4)
        model = fit(cfg, d)
        als_obj = oracles.wmf_objective_dense(model.P, model.Q, d.users, d.items,
                                              d.ratings, 1.0, 0.05)
        rng = np.random.default_rng(99)
        best = np.inf
        for _ in range(1000):
            P = rng.uniform(-1.5, 1.5, size=(5, 2))
            Q = rng.uniform(-1.5, 1.5, size=(5, 2))
            best = min(best, oracles.wmf_objective_dense(P, Q, d.users, d.items,
                                                         d.ratings, 1.0, 0.05))
        assert als_obj <= best


class TestBPR:
    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(5)
        P = rng.normal(scale=0.5, size=(4, 3))
        Q = rng.normal(scale=0.5, size=(6, 3))
        triples = (
            rng.integers(0, 4, size=10),
            rng.integers(0, 6, size=10),
            rng.integers(0, 6, size=10),
        )
        reg = 0.02
        gP, gQ = bpr_grad(P, Q, triples, reg)
        h = 1e-6
        for arr, grad in ((P, gP), (Q, gQ)):
            numeric = np.zeros_like(arr)
            flat, nflat = arr.ravel(), numeric.ravel()
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + h
                up = bpr_objective(P, Q, triples, reg)
                flat[idx] = orig - h
                down = bpr_objective(P, Q, triples, reg)
                flat[idx] = orig
                nflat[idx] = (up - down) / (2 * h)
            rel = np.linalg.norm(grad - numeric) / max(np.linalg.norm(numeric), 1e-12)
            assert rel < 1e-4

    def test_objective_matches_loop_oracle(self):
        rng = np.random.default_rng(6)
        P = rng.normal(size=(3, 2))
        Q = rng.normal(size=(4, 2))
        triples = (np.array([0, 1, 2]), np.array([0, 1, 2]), np.array([3, 3, 0]))
        got = bpr_objective(P, Q, triples, 0.01)
        want = oracles.bpr_objective(P, Q, list(zip(*triples)), 0.01)
        assert got == pytest.approx(want, rel=1e-12)

    def test_zero_epochs_returns_seeded_initialisation(self):
        d = toy_5x5()
        model = fit(ModelConfig(algorithm="BPR", epochs=0, seed=7), d)
        rng = np.random.default_rng(7)
        P0 = seeded_uniform_positive(rng, (5, 10))
        Q0 = seeded_uniform_positive(rng, (5, 10))
        assert np.array_equal(model.P, P0)
        assert np.array_equal(model.Q, Q0)

    def test_planted_order_auc_by_enumeration(self):
        # items 0..4 are globally liked; users observe a random subset of the
        # liked items, so unseen liked items should outrank the disliked tail
        rng = np.random.default_rng(8)
        liked = list(range(5))
        users, items, ratings = [], [], []
        heldout = {}
        for u in range(30):
            own = rng.choice(liked, size=3, replace=False)
            heldout[u] = [i for i in liked if i not in own]
            for i in own:
                users.append(u)
                items.append(int(i))
                ratings.append(8)
        d = make_dataset(users, items, ratings, 30, 15)
        model = fit(ModelConfig(algorithm="BPR", epochs=80, seed=9), d)
        aucs = []
        for u in range(30):
            scores = model.score_all(u)
            negatives = list(range(5, 15))
            aucs.append(oracles.pairwise_auc(scores, heldout[u], negatives))
        assert np.mean(aucs) > 0.9

    def test_deterministic_given_seed(self):
        d = toy_5x5()
        cfg = ModelConfig(algorithm="BPR", epochs=5, seed=10)
        m1, m2 = fit(cfg, d), fit(cfg, d)
        assert np.array_equal(m1.P, m2.P)
        assert np.array_equal(m1.Q, m2.Q)

    def test_full_coverage_user_excluded_with_warning(self, caplog):
        # user 0 rated every item; users 1-2 leave room for negatives
        users = [0, 0, 0, 1, 2]
        items = [0, 1, 2, 0, 1]
        d = make_dataset(users, items, [5] * 5, 3, 3)
        import logging

        with caplog.at_level(logging.WARNING, logger="fairbook.recommenders.bpr"):
            model = fit(ModelConfig(algorithm="BPR", epochs=3, seed=11), d)
        assert "excluded from sampling" in caplog.text
        assert np.isfinite(model.P).all()


class TestPF:
    def test_elbo_never_decreases(self, bx_like):
        model = fit(ModelConfig(algorithm="PF", epochs=30, seed=11), bx_like.dataset)
        elbo = np.asarray(model.elbo_history)
        slack = 1e-6 * (1.0 + np.abs(elbo[:-1]))
        assert (np.diff(elbo) >= -slack).all()

    def test_variational_parameters_stay_positive(self):
        d = toy_5x5()
        model = fit(ModelConfig(algorithm="PF", epochs=40, seed=12), d)
        assert min(model.min_param_history) > 0.0

    def test_planted_blocks_score_within_over_cross(self):
        users, items, ratings = [], [], []
        for u in (0, 1):
            for i in (0, 1):
                users.append(u), items.append(i), ratings.append(5)
        for u in (2, 3):
            for i in (2, 3):
                users.append(u), items.append(i), ratings.append(5)
        d = make_dataset(users, items, ratings, 4, 4)
        model = fit(ModelConfig(algorithm="PF", k=2, epochs=60, seed=13), d)
        scores = model.P @ model.Q.T
        within = np.concatenate([scores[:2, :2].ravel(), scores[2:, 2:].ravel()])
        cross = np.concatenate([scores[:2, 2:].ravel(), scores[2:, :2].ravel()])
        assert within.mean() > cross.mean()

    def test_deterministic_given_seed(self):
        d = toy_5x5()
        cfg = ModelConfig(algorithm="PF", epochs=8, seed=14)
        m1, m2 = fit(cfg, d), fit(cfg, d)
        assert np.array_equal(m1.P, m2.P)
        assert np.array_equal(m1.Q, m2.Q)

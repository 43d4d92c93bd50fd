import numpy as np
import pytest

import oracles
from conftest import make_dataset
from fairbook.recommenders import ModelConfig, fit
from fairbook.recommenders.factor import explicit_grad, explicit_loss


def rank_one_dataset():
    # r_ui = a_u * c_i with integer entries on the rating scale
    a = [1, 2, 1, 2]
    c = [1, 2, 3, 4]
    users, items, ratings = [], [], []
    for u in range(4):
        for i in range(4):
            users.append(u)
            items.append(i)
            ratings.append(a[u] * c[i])
    return make_dataset(users, items, ratings, 4, 4)


def random_point(rng, n_users=4, n_items=5, k=3):
    return (
        rng.normal(scale=0.5, size=(n_users, k)),
        rng.normal(scale=0.5, size=(n_items, k)),
        rng.normal(scale=0.3, size=n_users),
        rng.normal(scale=0.3, size=n_items),
    )


def finite_diff_grads(loss_fn, arrays, h=1e-6):
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gflat = g.ravel()
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            up = loss_fn()
            flat[idx] = orig - h
            down = loss_fn()
            flat[idx] = orig
            gflat[idx] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


class TestGradientCheck:
    @pytest.mark.parametrize("use_bias", [True, False])
    def test_analytic_matches_central_differences(self, use_bias):
        rng = np.random.default_rng(17)
        P, Q, bu, bi = random_point(rng)
        users = rng.integers(0, 4, size=12)
        items = rng.integers(0, 5, size=12)
        ratings = rng.uniform(1, 10, size=12)
        mu, reg = 5.0, 0.05

        def loss():
            return explicit_loss(P, Q, bu, bi, mu, users, items, ratings, reg, use_bias)

        gP, gQ, gbu, gbi = explicit_grad(P, Q, bu, bi, mu, users, items, ratings, reg, use_bias)
        fP, fQ, fbu, fbi = finite_diff_grads(loss, [P, Q, bu, bi])
        for analytic, numeric in ((gP, fP), (gQ, fQ), (gbu, fbu), (gbi, fbi)):
            denom = max(float(np.linalg.norm(numeric)), 1e-12)
            rel = float(np.linalg.norm(analytic - numeric)) / denom
            assert rel < 1e-4

    def test_loss_matches_loop_oracle(self):
        rng = np.random.default_rng(3)
        P, Q, bu, bi = random_point(rng)
        users = rng.integers(0, 4, size=9)
        items = rng.integers(0, 5, size=9)
        ratings = rng.uniform(1, 10, size=9)
        got = explicit_loss(P, Q, bu, bi, 5.0, users, items, ratings, 0.1, True)
        want = oracles.squared_loss_explicit(P, Q, bu, bi, 5.0, users, items, ratings, 0.1, True)
        assert got == pytest.approx(want, rel=1e-12)


class TestMF:
    def test_rank_one_matrix_is_recovered(self):
        d = rank_one_dataset()
        cfg = ModelConfig(algorithm="MF", epochs=400, learning_rate=0.02,
                          regularization=0.001, seed=1)
        model = fit(cfg, d)
        preds = model.score_pairs(d.users, d.items)
        train_mae = np.abs(preds - d.ratings).mean()
        assert train_mae < 0.05

    def test_loss_decreases_across_epochs(self):
        d = rank_one_dataset()
        cfg = ModelConfig(algorithm="MF", epochs=60, seed=2)
        model = fit(cfg, d)
        losses = np.asarray(model.objective_history)
        increases = int((np.diff(losses) > 0).sum())
        assert increases <= max(1, int(0.05 * len(losses)))

    def test_deterministic_given_seed(self):
        d = rank_one_dataset()
        cfg = ModelConfig(algorithm="MF", epochs=10, seed=9)
        m1, m2 = fit(cfg, d), fit(cfg, d)
        assert np.array_equal(m1.P, m2.P)
        assert np.array_equal(m1.Q, m2.Q)
        assert np.array_equal(m1.bu, m2.bu)

    def test_divergence_names_the_epoch(self):
        from fairbook.errors import FitError

        d = rank_one_dataset()
        cfg = ModelConfig(algorithm="MF", epochs=5, learning_rate=50.0, seed=10)
        with pytest.raises(FitError, match="epoch"):
            fit(cfg, d)


class TestPMF:
    def test_no_biases(self):
        d = rank_one_dataset()
        model = fit(ModelConfig(algorithm="PMF", epochs=5, seed=4), d)
        assert model.mu == 0.0
        assert not model.bu.any()
        assert not model.bi.any()

    def test_loss_decreases_across_epochs(self):
        d = rank_one_dataset()
        model = fit(ModelConfig(algorithm="PMF", epochs=40, seed=5), d)
        losses = np.asarray(model.objective_history)
        increases = int((np.diff(losses) > 0).sum())
        assert increases <= max(1, int(0.05 * len(losses)))


class TestNMF:
    def test_factors_stay_nonnegative_every_epoch(self, bx_like):
        d = bx_like.dataset
        model = fit(ModelConfig(algorithm="NMF", epochs=25, seed=6), d)
        assert min(model.min_entry_history) >= 0.0

    def test_objective_never_increases(self):
        d = rank_one_dataset()
        model = fit(ModelConfig(algorithm="NMF", epochs=80, seed=7), d)
        losses = np.asarray(model.objective_history)
        assert (np.diff(losses) <= losses[:-1] * 1e-9 + 1e-12).all()

    def test_fits_nonnegative_data_well(self):
        d = rank_one_dataset()
        model = fit(ModelConfig(algorithm="NMF", epochs=300, seed=8), d)
        preds = model.score_pairs(d.users, d.items)
        assert np.abs(preds - d.ratings).mean() < 0.05

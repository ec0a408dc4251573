import math

import numpy as np
import pytest

from gapless.exceptions import DivergenceError, InvalidInputError, NotFittedError
from gapless.mlp import (
    MlpNetwork,
    MlpRegressor,
    TrainConfig,
    forward,
    gradient,
    init_network,
    loss,
    train_scg,
)


def naive_forward(net, x):
    """Independent oracle: evaluate the network with explicit loops."""
    hidden = []
    for j in range(net.hidden_dim):
        a = net.b1[j]
        for i in range(net.input_dim):
            a += net.w1[j, i] * x[i]
        hidden.append(math.tanh(a))
    out = []
    for k in range(net.output_dim):
        y = net.b2[k]
        for j in range(net.hidden_dim):
            y += net.w2[k, j] * hidden[j]
        out.append(y)
    return np.array(out)


def fd_gradient(net, X, T, step=1e-5):
    """Independent oracle: central finite differences on the flat parameters."""
    w0 = net.flatten()
    g = np.empty_like(w0)
    for i in range(w0.shape[0]):
        wp = w0.copy(); wp[i] += step
        wm = w0.copy(); wm[i] -= step
        g[i] = (loss(net.with_flat(wp), X, T) - loss(net.with_flat(wm), X, T)) / (2 * step)
    return g


def rel_err(a, b, floor=1.0):
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


class TestForward:
    def test_all_zero_weights_give_zero_output(self):
        net = MlpNetwork(np.zeros((3, 2)), np.zeros(3), np.zeros((2, 3)), np.zeros(2))
        np.testing.assert_array_equal(forward(net, [0.4, -1.2]), np.zeros(2))

    def test_output_bias_passes_through(self):
        net = MlpNetwork(np.zeros((3, 2)), np.zeros(3), np.zeros((2, 3)), np.array([1.5, -2.0]))
        np.testing.assert_array_equal(forward(net, [9.0, 9.0]), [1.5, -2.0])

    def test_matches_naive_triple_loop_oracle(self):
        rng = np.random.default_rng(7)
        net = init_network(3, 5, 2, seed=11)
        for _ in range(10):
            x = rng.normal(size=3)
            np.testing.assert_allclose(forward(net, x), naive_forward(net, x), atol=1e-12)

    def test_batch_matches_per_row(self):
        net = init_network(4, 3, 2, seed=0)
        X = np.random.default_rng(1).normal(size=(6, 4))
        batch = forward(net, X)
        rows = np.array([forward(net, x) for x in X])
        np.testing.assert_allclose(batch, rows, atol=1e-14)

    def test_dimension_mismatch_raises(self):
        net = init_network(3, 2, 1, seed=0)
        with pytest.raises(InvalidInputError):
            forward(net, [1.0, 2.0])


class TestLoss:
    def test_perfect_fit_is_zero(self):
        net = init_network(2, 3, 2, seed=5)
        X = np.random.default_rng(2).normal(size=(4, 2))
        assert loss(net, X, forward(net, X)) == 0.0

    def test_single_squared_error(self):
        # prediction 1.0 vs target 3.0 -> (3 - 1)^2 = 4
        net = MlpNetwork(np.zeros((1, 1)), np.zeros(1), np.zeros((1, 1)), np.array([1.0]))
        assert loss(net, [[0.0]], [[3.0]]) == pytest.approx(4.0)

    def test_batch_equals_sum_of_instances(self):
        net = init_network(3, 4, 2, seed=9)
        rng = np.random.default_rng(3)
        X = rng.normal(size=(8, 3))
        T = rng.normal(size=(8, 2))
        total = loss(net, X, T)
        per_row = sum(loss(net, X[i : i + 1], T[i : i + 1]) for i in range(8))
        assert total == pytest.approx(per_row, rel=1e-12)


class TestGradient:
    def test_zero_at_exact_fit(self):
        net = init_network(2, 3, 2, seed=1)
        X = np.random.default_rng(4).normal(size=(5, 2))
        g = gradient(net, X, forward(net, X)).flatten()
        np.testing.assert_allclose(g, 0.0, atol=1e-12)

    @pytest.mark.parametrize("dims", [(2, 3, 1), (3, 5, 2), (4, 2, 4)])
    def test_matches_finite_differences(self, dims):
        rng = np.random.default_rng(sum(dims))
        net = init_network(*dims, seed=rng.integers(1000))
        X = rng.normal(size=(6, dims[0]))
        T = rng.normal(size=(6, dims[2]))
        analytic = gradient(net, X, T).flatten()
        numeric = fd_gradient(net, X, T)
        assert np.max(rel_err(analytic, numeric)) < 1e-6

    def test_duplicating_rows_doubles_gradient(self):
        net = init_network(3, 4, 2, seed=2)
        rng = np.random.default_rng(5)
        X = rng.normal(size=(4, 3))
        T = rng.normal(size=(4, 2))
        g1 = gradient(net, X, T).flatten()
        g2 = gradient(net, np.vstack([X, X]), np.vstack([T, T])).flatten()
        np.testing.assert_allclose(g2, 2.0 * g1, rtol=1e-12)


class TestTrainScg:
    def test_already_optimal_returns_immediately(self):
        net = init_network(2, 3, 2, seed=3)
        X = np.random.default_rng(6).normal(size=(5, 2))
        T = forward(net, X)
        trained, trace = train_scg(net, X, T, TrainConfig(max_cycles=100))
        assert trace == [0.0]
        np.testing.assert_array_equal(trained.flatten(), net.flatten())

    def test_xor_converges_for_most_seeds(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        T = np.array([[-1.0], [1.0], [1.0], [-1.0]])
        wins = 0
        for seed in range(10):
            net = init_network(2, 2, 1, seed=seed)
            trained, _ = train_scg(net, X, T, TrainConfig(max_cycles=1200, seed=seed))
            mse = loss(trained, X, T) / X.shape[0]
            if mse < 1e-3:
                wins += 1
        assert wins >= 9

    def test_autoencoder_on_rank2_data(self):
        rng = np.random.default_rng(42)
        basis = rng.uniform(0.2, 0.8, size=(2, 4))
        coeffs = rng.uniform(0.0, 1.0, size=(60, 2))
        X = np.clip(coeffs @ basis * 0.6 + 0.2, 0.0, 1.0)
        net = init_network(4, 3, 4, seed=0)
        trained, _ = train_scg(net, X, X, TrainConfig(max_cycles=1200))
        mse = loss(trained, X, X) / X.size
        assert mse < 1e-3

    def test_trace_is_non_increasing(self):
        rng = np.random.default_rng(8)
        X = rng.uniform(size=(20, 3))
        T = rng.uniform(size=(20, 2))
        _, trace = train_scg(init_network(3, 4, 2, seed=4), X, T, TrainConfig(max_cycles=200))
        diffs = np.diff(np.array(trace))
        assert np.all(diffs <= 1e-12)

    def test_deterministic_for_fixed_seed(self):
        rng = np.random.default_rng(9)
        X = rng.uniform(size=(10, 2))
        T = rng.uniform(size=(10, 1))
        a, ta = train_scg(init_network(2, 3, 1, seed=7), X, T, TrainConfig(max_cycles=50))
        b, tb = train_scg(init_network(2, 3, 1, seed=7), X, T, TrainConfig(max_cycles=50))
        np.testing.assert_array_equal(a.flatten(), b.flatten())
        assert ta == tb

    def test_non_finite_loss_raises_divergence(self):
        net = init_network(1, 2, 1, seed=0)
        with pytest.raises(DivergenceError):
            train_scg(net, [[1.0]], [[np.inf]], TrainConfig(max_cycles=10))


class TestSerialization:
    def test_doc_round_trip_is_bit_exact(self):
        import json

        net = init_network(3, 5, 2, seed=123)
        doc = json.loads(json.dumps(net.to_doc()))
        back = MlpNetwork.from_doc(doc)
        np.testing.assert_array_equal(back.flatten(), net.flatten())


class TestMlpRegressor:
    def test_fit_predict_learns_linear_map(self):
        rng = np.random.default_rng(10)
        X = rng.uniform(size=(50, 2))
        y = 0.3 * X[:, 0] + 0.5 * X[:, 1]
        est = MlpRegressor(hidden_dim=4, max_cycles=400, seed=1).fit(X, y)
        pred = est.predict(X)
        assert np.mean((pred - y) ** 2) < 1e-4

    def test_predict_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            MlpRegressor().predict([[0.0, 0.0]])

    def test_sklearn_params_round_trip(self):
        from sklearn.base import clone

        est = MlpRegressor(hidden_dim=7, max_cycles=10, seed=3)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

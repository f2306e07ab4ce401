import numpy as np
import pytest

from wepinn import network as net
from wepinn.errors import ConfigError, ContractError


def glorot_limit(fan_in, fan_out):
    return np.sqrt(6.0 / (fan_in + fan_out))


class TestInit:
    def test_shapes(self):
        params = net.init_network(net.NetworkConfig(2, 1, 1, 4), seed=0)
        assert [w.shape for w in params.weights] == [(4, 2), (1, 4)]
        assert [b.shape for b in params.biases] == [(4,), (1,)]

    def test_deterministic(self):
        cfg = net.NetworkConfig(2, 1, 1, 4)
        a = net.init_network(cfg, seed=0).flatten()
        b = net.init_network(cfg, seed=0).flatten()
        assert np.array_equal(a, b)
        c = net.init_network(cfg, seed=1).flatten()
        assert not np.array_equal(a, c)

    def test_glorot_bound_and_zero_bias(self):
        cfg = net.NetworkConfig(3, 2, 3, 16)
        params = net.init_network(cfg, seed=7)
        sizes = cfg.layer_sizes()
        for w, fan_in, fan_out in zip(params.weights, sizes[:-1], sizes[1:]):
            assert np.max(np.abs(w)) <= glorot_limit(fan_in, fan_out)
        for b in params.biases:
            assert not b.any()

    @pytest.mark.parametrize("bad", [
        dict(input_dim=1, output_dim=1, hidden_layers=1, hidden_width=4),
        dict(input_dim=2, output_dim=0, hidden_layers=1, hidden_width=4),
        dict(input_dim=2, output_dim=1, hidden_layers=0, hidden_width=4),
        dict(input_dim=2, output_dim=1, hidden_layers=1, hidden_width=0),
    ])
    def test_invalid_config(self, bad):
        with pytest.raises(ConfigError):
            net.NetworkConfig(**bad)


class TestForward:
    def test_zero_network(self):
        params = net.NetworkParams([np.zeros((4, 2)), np.zeros((1, 4))],
                                   [np.zeros(4), np.zeros(1)])
        assert net.forward(params, np.array([0.3, -0.8])) == 0.0

    def test_single_linear_identity(self):
        params = net.NetworkParams([np.eye(2)], [np.zeros(2)])
        x = np.array([0.4, -1.2])
        assert np.array_equal(net.forward(params, x), x)

    def test_tanh_scalar(self):
        # one hidden unit reading the first input, identity output layer
        params = net.NetworkParams([np.array([[1.0, 0.0]]), np.array([[1.0]])],
                                   [np.zeros(1), np.zeros(1)])
        out = net.forward(params, np.array([0.5, 0.9]))
        assert out[0] == pytest.approx(0.46211715726000974, abs=1e-12)

    def test_dimension_mismatch(self):
        params = net.init_network(net.NetworkConfig(2, 1, 1, 4), seed=0)
        with pytest.raises(ContractError):
            net.forward(params, np.array([1.0, 2.0, 3.0]))


class TestFlatten:
    def test_round_trip_exact(self, rng):
        params = net.init_network(net.NetworkConfig(3, 2, 2, 9), seed=3)
        vec = params.flatten()
        back = net.NetworkParams.from_flat(params.layer_sizes(), vec)
        assert np.array_equal(back.flatten(), vec)
        for w1, w2 in zip(params.weights, back.weights):
            assert np.array_equal(w1, w2)

    def test_wrong_length(self):
        with pytest.raises(ContractError):
            net.NetworkParams.from_flat([2, 4, 1], np.zeros(3))

    def test_checkpoint_round_trip(self, tmp_path):
        params = net.init_network(net.NetworkConfig(2, 3, 2, 5), seed=11)
        path = tmp_path / "ck.bin"
        net.save_params(params, path)
        back = net.load_params(path)
        assert back.layer_sizes() == params.layer_sizes()
        assert np.array_equal(back.flatten(), params.flatten())


def smooth_ansatz(seed=5, width=7, m=2):
    params = net.init_network(net.NetworkConfig(2, m, 2, width), seed=seed)
    ic = lambda X: np.stack([np.sin(X[..., 0]), np.cos(X[..., 0])], axis=-1)[..., :m]
    icg = lambda X: np.stack([np.cos(X[..., 0]), -np.sin(X[..., 0])],
                             axis=-1)[..., :m, None]
    maps = net.AffineMaps(np.array([0.1, 0.0]), np.array([1.2, 2.0]),
                          np.arange(1.0, m + 1.0))
    return net.Ansatz(params, ic, 1.0, maps=maps, initial_condition_grad=icg)


class TestAnsatz:
    def test_t0_is_bitwise_exact(self, rng):
        a = smooth_ansatz()
        x = rng.uniform(-1, 1, size=(50, 1))
        u = net.ansatz_eval_batch(a, x, np.zeros(50))
        assert np.array_equal(u, a.initial_condition(x))

    def test_linear_ramp_zero_network(self):
        params = net.NetworkParams([np.zeros((3, 2)), np.zeros((1, 3))],
                                   [np.zeros(3), np.zeros(1)])
        ic = lambda X: np.full(X.shape[:-1] + (1,), 0.8)
        a = net.Ansatz(params, ic, horizon=2.0)
        assert net.ansatz_eval(a, np.array([0.1]), 1.0)[0] == pytest.approx(0.4)

    def test_burgers_shock_left_state(self):
        ic = lambda X: np.where(X[..., 0] <= -0.25, 1.0, 0.0)[..., None]
        params = net.init_network(net.NetworkConfig(2, 1, 1, 4), seed=0)
        a = net.Ansatz(params, ic, horizon=1.0)
        assert net.ansatz_eval(a, np.array([-0.5]), 0.0)[0] == 1.0

    def test_out_of_horizon(self):
        a = smooth_ansatz()
        with pytest.raises(ContractError):
            net.ansatz_eval(a, np.array([0.0]), 1.5)


class TestBackward:
    def test_empty_batch(self):
        a = smooth_ansatz()
        g = net.backward(a, np.zeros((0, 2)), np.zeros((0, 2)))
        assert g.shape == (a.params.n_params,)
        assert not g.any()

    def test_zero_cotangent(self, rng):
        a = smooth_ansatz()
        batch = np.column_stack([rng.uniform(-1, 1, 6), rng.uniform(0, 1, 6)])
        assert not net.backward(a, batch, np.zeros((6, 2))).any()

    def test_length_mismatch(self):
        a = smooth_ansatz()
        with pytest.raises(ContractError):
            net.backward(a, np.zeros((3, 2)), np.zeros((2, 2)))

    def test_matches_finite_differences(self, rng):
        a = smooth_ansatz(seed=9)
        assert a.params.n_params <= 200
        batch = np.column_stack([rng.uniform(-1, 1, 4), rng.uniform(0.1, 1, 4)])
        cot = rng.normal(size=(4, 2))
        grad = net.backward(a, batch, cot)
        sizes = a.params.layer_sizes()
        vec = a.params.flatten()

        def f(v):
            a.params = net.NetworkParams.from_flat(sizes, v)
            return float(np.sum(cot * net.ansatz_eval_batch(a, batch[:, :1],
                                                            batch[:, 1])))

        h = 1e-6
        fd = np.array([(f(vec + h * e) - f(vec - h * e)) / (2 * h)
                       for e in np.eye(vec.size)])
        a.params = net.NetworkParams.from_flat(sizes, vec)
        assert np.linalg.norm(fd - grad) / np.linalg.norm(fd) < 1e-5


class TestInputJet:
    def test_zero_network_constant_ic(self):
        params = net.NetworkParams([np.zeros((3, 2)), np.zeros((1, 3))],
                                   [np.zeros(3), np.zeros(1)])
        c = 0.7
        ic = lambda X: np.full(X.shape[:-1] + (1,), c)
        icg = lambda X: np.zeros(X.shape[:-1] + (1, 1))
        a = net.Ansatz(params, ic, horizon=2.0, initial_condition_grad=icg)
        val, dt, dx = net.input_jet(a, np.array([0.3]), 0.5)
        assert dt[0] == pytest.approx(-c / 2.0, abs=1e-14)
        assert dx[0, 0] == 0.0

    def test_linear_net_hand_derivative(self):
        # plain single-layer network u = 2x + 3t blended with ic(x) = x
        params = net.NetworkParams([np.array([[2.0, 3.0]])], [np.zeros(1)])
        ic = lambda X: X.copy()
        icg = lambda X: np.ones(X.shape[:-1] + (1, 1))
        a = net.Ansatz(params, ic, horizon=1.0, initial_condition_grad=icg)
        x, t = 0.4, 0.5
        val, dt, dx = net.input_jet(a, np.array([x]), t)
        # u = (1-t) x + t (2x + 3t)
        assert val[0] == pytest.approx((1 - t) * x + t * (2 * x + 3 * t), abs=1e-14)
        assert dx[0, 0] == pytest.approx((1 - t) + 2 * t, abs=1e-14)
        assert dt[0] == pytest.approx(-x + 2 * x + 6 * t, abs=1e-14)

    def test_matches_finite_differences(self, rng):
        a = smooth_ansatz(seed=13)
        for _ in range(5):
            x = rng.uniform(-0.8, 0.8, size=1)
            t = float(rng.uniform(0.1, 0.9))
            val, dt, dx = net.input_jet(a, x, t)
            h = 1e-6
            fdt = (net.ansatz_eval(a, x, t + h) - net.ansatz_eval(a, x, t - h)) / (2 * h)
            fdx = (net.ansatz_eval(a, x + h, t) - net.ansatz_eval(a, x - h, t)) / (2 * h)
            scale = max(np.max(np.abs(fdt)), np.max(np.abs(fdx)))
            assert np.max(np.abs(fdt - dt)) / scale < 1e-6
            assert np.max(np.abs(fdx - dx[:, 0])) / scale < 1e-6

    def test_requires_ic_gradient(self):
        params = net.init_network(net.NetworkConfig(2, 1, 1, 3), seed=0)
        a = net.Ansatz(params, lambda X: X.copy(), horizon=1.0)
        with pytest.raises(ContractError):
            net.input_jet(a, np.array([0.0]), 0.5)


class TestJetGrad:
    def test_second_order_reverse_matches_fd(self, rng):
        params = net.init_network(net.NetworkConfig(2, 2, 2, 6), seed=21)
        maps = net.AffineMaps(np.array([0.0, 0.5]), np.array([2.0, 1.5]),
                              np.array([1.0, 0.5]))
        X = rng.uniform(-0.7, 0.7, size=(5, 2))
        c_val = rng.normal(size=(5, 2))
        c_jet = rng.normal(size=(5, 2, 2))
        grad = net.jet_grad_batch(params, X, c_val, c_jet, maps)
        sizes = params.layer_sizes()
        vec = params.flatten()

        def f(v):
            p = net.NetworkParams.from_flat(sizes, v)
            Y, J = net.jet_batch(p, X, maps)
            return float(np.sum(c_val * Y) + np.sum(c_jet * J))

        h = 1e-6
        fd = np.array([(f(vec + h * e) - f(vec - h * e)) / (2 * h)
                       for e in np.eye(vec.size)])
        assert np.linalg.norm(fd - grad) / np.linalg.norm(fd) < 1e-6

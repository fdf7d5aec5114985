import numpy as np
import pytest
from scipy import stats as sps

from modenets.errors import InvalidModelError
from modenets.glasso import ModeNetwork, mode_log_likelihood
from modenets.model import (
    ClusterModel,
    assemble_precision,
    mode_means,
    model_from_dict,
    model_to_dict,
    total_log_likelihood,
)
from modenets.tensor import TensorTS, mode_slices


def _net(n, psi):
    psi = np.asarray(psi, dtype=np.float64)
    support = (psi != 0) | np.eye(psi.shape[0], dtype=bool)
    return ModeNetwork(n=n, psi=psi, support=support)


def _full_support_net(n, rng, d):
    a = rng.standard_normal((d, d))
    psi = a @ a.T / d + np.eye(d)
    return ModeNetwork(n=n, psi=psi, support=np.ones((d, d), dtype=bool))


class TestAssemblePrecision:
    def test_two_mode_worked_example(self):
        psi1 = np.array([[1.0, 0.3], [0.3, 1.0]])
        psi2 = np.array([[1.0, 0.4], [0.4, 1.0]])
        theta = assemble_precision([psi1, psi2])
        expect = np.array(
            [
                [1.0, 0.3, 0.4, 0.0],
                [0.3, 1.0, 0.0, 0.4],
                [0.4, 0.0, 1.0, 0.3],
                [0.0, 0.4, 0.3, 1.0],
            ]
        )
        assert np.array_equal(theta, expect)

    def test_later_mode_diagonals_not_placed(self):
        psi1 = np.eye(2) * 2.0
        psi2 = np.diag([5.0, 7.0])  # diagonal must not reach the output
        theta = assemble_precision([psi1, psi2])
        assert np.array_equal(theta, np.kron(np.eye(2), psi1))

    def test_three_mode_matches_direct_kron_sum(self, rng):
        d1, d2, d3 = 2, 3, 2
        psi = [
            _full_support_net(1, rng, d1).psi,
            _full_support_net(2, rng, d2).psi,
            _full_support_net(3, rng, d3).psi,
        ]
        theta = assemble_precision(psi)

        def offdiag(m):
            return m - np.diag(np.diag(m))

        expect = (
            np.kron(np.eye(d3), np.kron(np.eye(d2), psi[0]))
            + np.kron(np.eye(d3), np.kron(offdiag(psi[1]), np.eye(d1)))
            + np.kron(offdiag(psi[2]), np.eye(d2 * d1))
        )
        assert np.allclose(theta, expect, atol=1e-12)

    def test_accepts_networks_and_models(self, rng):
        nets = [_full_support_net(1, rng, 2), _full_support_net(2, rng, 3)]
        model = ClusterModel(networks=tuple(nets), mean_vec=np.zeros(6), member_count=1)
        a = assemble_precision([n.psi for n in nets])
        b = assemble_precision(nets)
        c = assemble_precision(model)
        assert np.array_equal(a, b)
        assert np.array_equal(a, c)


class TestClusterModel:
    def test_dims_and_total(self, rng):
        nets = (_full_support_net(1, rng, 3), _full_support_net(2, rng, 4))
        model = ClusterModel(networks=nets, mean_vec=np.zeros(12), member_count=1)
        assert model.dims == (3, 4)
        assert model.d_total == 12

    def test_rejects_out_of_order_modes(self, rng):
        nets = (_full_support_net(2, rng, 3), _full_support_net(1, rng, 4))
        with pytest.raises(InvalidModelError):
            ClusterModel(networks=nets, mean_vec=np.zeros(12), member_count=1)

    def test_rejects_wrong_mean_length(self, rng):
        nets = (_full_support_net(1, rng, 3), _full_support_net(2, rng, 4))
        with pytest.raises(InvalidModelError):
            ClusterModel(networks=nets, mean_vec=np.zeros(7), member_count=1)

    def test_mode_means_reshapes_mean_vector(self, rng):
        d1, d2 = 3, 4
        mean_grid = rng.standard_normal((d1, d2))
        nets = (_full_support_net(1, rng, d1), _full_support_net(2, rng, d2))
        model = ClusterModel(
            networks=nets, mean_vec=mean_grid.reshape(-1, order="F"),
            member_count=1,
        )
        m1 = mode_means(model, 1)
        m2 = mode_means(model, 2)
        assert m1.shape == (d2, d1)
        assert m2.shape == (d1, d2)
        assert np.array_equal(m1, mean_grid.T)
        assert np.array_equal(m2, mean_grid)


class TestTotalLogLikelihood:
    def test_matches_brute_force_sum_over_modes(self, rng):
        d1, d2, t_len = 3, 4, 6
        x = TensorTS(rng.standard_normal((d1, d2, t_len)))
        nets = (_full_support_net(1, rng, d1), _full_support_net(2, rng, d2))
        mean_vec = rng.standard_normal(d1 * d2)
        model = ClusterModel(networks=nets, mean_vec=mean_vec, member_count=1)
        got = total_log_likelihood(x, model)
        expect = np.zeros(t_len)
        for n in (1, 2):
            expect += mode_log_likelihood(
                mode_slices(x, n), nets[n - 1], mode_means(model, n)
            )
        assert got.shape == (t_len,)
        assert np.allclose(got, expect, atol=1e-12)

    def test_single_mode_equals_scipy_logpdf(self, rng):
        d, t_len = 4, 5
        values = rng.standard_normal((d, t_len))
        x = TensorTS(values)
        net = _full_support_net(1, rng, d)
        mean = rng.standard_normal(d)
        model = ClusterModel(networks=(net,), mean_vec=mean, member_count=1)
        got = total_log_likelihood(x, model)
        mvn = sps.multivariate_normal(mean=mean, cov=np.linalg.inv(net.psi))
        assert np.allclose(got, mvn.logpdf(values.T), atol=1e-9)

    def test_rejects_mismatched_dims(self, rng):
        x = TensorTS(rng.standard_normal((3, 4, 5)))
        net = _full_support_net(1, rng, 3)
        model = ClusterModel(networks=(net,), mean_vec=np.zeros(3), member_count=1)
        with pytest.raises(InvalidModelError):
            total_log_likelihood(x, model)


class TestModelSerialization:
    def test_round_trip(self, rng):
        nets = (
            _net(1, [[2.0, -0.5], [-0.5, 2.0]]),
            _net(2, np.diag([1.0, 2.0, 3.0])),
        )
        model = ClusterModel(networks=nets, mean_vec=rng.standard_normal(6), member_count=7)
        again = model_from_dict(model_to_dict(model))
        assert again.dims == model.dims
        assert np.array_equal(again.mean_vec, model.mean_vec)
        for a, b in zip(again.networks, model.networks):
            assert a.n == b.n
            assert np.array_equal(a.psi, b.psi)
            assert np.array_equal(a.support, b.support)
            assert a.converged == b.converged
            assert a.degenerate == b.degenerate

    def test_dict_shape(self, rng):
        nets = (_net(1, [[1.0, 0.0], [0.0, 1.0]]),)
        model = ClusterModel(networks=nets, mean_vec=np.zeros(2), member_count=1)
        payload = model_to_dict(model)
        assert payload["member_count"] == 1
        assert payload["mean_vec"] == [0.0, 0.0]
        assert len(payload["networks"]) == 1
        entry = payload["networks"][0]
        assert entry["mode"] == 1
        assert entry["psi"] == [[1.0, 0.0], [0.0, 1.0]]
        assert entry["support"] == [[True, False], [False, True]]

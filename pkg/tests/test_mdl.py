import math

import numpy as np
import pytest

from modenets.glasso import ModeNetwork
from modenets.mdl import (
    CostBreakdown,
    cost_assign,
    cost_data,
    cost_l1,
    cost_model,
    cost_total,
    log_star,
)
from modenets.model import ClusterModel, total_log_likelihood
from modenets.segments import Assignments, Segmentation
from modenets.tensor import TensorTS, slice_time


def _net(n, psi, support=None):
    psi = np.asarray(psi, dtype=np.float64)
    if support is None:
        support = (psi != 0) | np.eye(psi.shape[0], dtype=bool)
    return ModeNetwork(n=n, psi=psi, support=np.asarray(support, dtype=bool))


class TestLogStar:
    def test_exact_powers(self):
        # 1 -> no positive logs; 16 -> 4 + 2 + 1
        assert log_star(1) == 0.0
        assert log_star(2) == 1.0
        assert log_star(4) == 3.0
        assert log_star(16) == 7.0

    def test_non_power_value(self):
        # iterated base-2 logs of 300: 8.2288.. + 3.0407.. + 1.6044.. + 0.6822..
        assert log_star(300) == pytest.approx(13.555931301967329, abs=1e-9)

    def test_monotone(self):
        values = [log_star(n) for n in range(1, 200)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_rejects_below_one(self):
        with pytest.raises(ValueError):
            log_star(0)
        with pytest.raises(ValueError):
            log_star(0.5)


def _two_cluster_assign():
    # segments [1,4) len 3, [4,8) len 4, [8,11) len 3 over T=10
    seg = Segmentation((1, 4, 8), 10)
    return Assignments(seg, (1, 2, 1), 2)


class TestCostAssign:
    def test_hand_computed_case(self):
        # log*(2) + log*(3) + 3*log*(2) + log*(6) + log*(4)
        # = 1 + 2.24941... + 3 + 4.40943... + 3 = 13.65884...
        assert cost_assign(_two_cluster_assign()) == pytest.approx(
            13.658843904628192, abs=1e-9
        )

    def test_composed_of_log_star_terms(self):
        a = _two_cluster_assign()
        expect = (log_star(2) + log_star(3) + 3 * log_star(2)
                  + log_star(6) + log_star(4))
        assert cost_assign(a) == pytest.approx(expect, abs=1e-12)


class TestCostModel:
    def test_hand_computed_single_edge(self):
        # one mode, D=2, one edge:
        # (2(ln2+32) + log*(1) + 1*(ln(1)+32)) / (2^2 * 1) = 24 + ln(2)/2
        net = _net(1, [[1.0, 0.2], [0.2, 1.0]])
        model = ClusterModel(networks=(net,), mean_vec=np.zeros(2),
                             member_count=5)
        assert cost_model([model]) == pytest.approx(
            24.346573590279974, abs=1e-9
        )

    def test_hand_computed_two_modes(self):
        # mode 1: D=3 diagonal-only -> 3(ln3+32)/(9*2)
        # mode 2: D=2 one edge -> (2(ln2+32) + 0 + (ln1+32))/(4*2)
        net1 = _net(1, np.diag([1.0, 2.0, 3.0]))
        net2 = _net(2, [[1.0, -0.4], [-0.4, 1.0]])
        model = ClusterModel(networks=(net1, net2), mean_vec=np.zeros(6),
                             member_count=5)
        assert cost_model([model]) == pytest.approx(
            17.68972217658467, abs=1e-9
        )

    def test_nnz_counted_from_support_not_values(self):
        # a structurally-present zero edge still costs bits
        support = np.array([[True, True], [True, True]])
        net = _net(1, np.eye(2), support=support)
        model = ClusterModel(networks=(net,), mean_vec=np.zeros(2),
                             member_count=5)
        assert cost_model([model]) == pytest.approx(
            24.346573590279974, abs=1e-9
        )

    def test_sums_over_models(self):
        net = _net(1, [[1.0, 0.2], [0.2, 1.0]])
        model = ClusterModel(networks=(net,), mean_vec=np.zeros(2),
                             member_count=5)
        assert cost_model([model, model]) == pytest.approx(
            2 * cost_model([model]), abs=1e-12
        )


class TestCostL1:
    def test_exact_value_and_lambda_affinity(self):
        net = _net(1, [[1.0, 0.2], [0.2, 1.0]])
        model = ClusterModel(networks=(net,), mean_vec=np.zeros(2),
                             member_count=5)
        assert cost_l1([model], 3.0) == pytest.approx(1.2, abs=1e-12)
        for lam in (0.0, 0.5, 2.0):
            assert cost_l1([model], 2 * lam) == pytest.approx(
                2 * cost_l1([model], lam), abs=1e-12
            )


class TestCostData:
    def test_negative_sum_of_segment_likelihoods(self, rng):
        x = TensorTS(rng.standard_normal((2, 10)))
        assign = _two_cluster_assign()
        models = []
        for scale in (1.0, 2.0):
            net = _net(1, scale * np.eye(2))
            models.append(ClusterModel(networks=(net,), mean_vec=np.zeros(2),
                                       member_count=5))
        got = cost_data(x, models, assign)
        expect = 0.0
        for (a, b), c in zip(assign.segmentation.ranges(),
                             assign.segment_cluster):
            expect -= float(
                total_log_likelihood(slice_time(x, a, b), models[c - 1]).sum()
            )
        assert got == pytest.approx(expect, abs=1e-12)


class TestCostTotal:
    def _setup(self, rng):
        x = TensorTS(rng.standard_normal((2, 10)))
        assign = _two_cluster_assign()
        net = _net(1, [[1.5, 0.3], [0.3, 1.5]])
        model = ClusterModel(networks=(net,), mean_vec=np.zeros(2),
                             member_count=5)
        return x, assign, [model, model]

    def test_breakdown_sums_and_is_deterministic(self, rng):
        x, assign, models = self._setup(rng)
        a = cost_total(x, models, assign, 1.0)
        b = cost_total(x, models, assign, 1.0)
        assert a == b  # dataclass equality, exact floats
        assert a.total == pytest.approx(
            a.assign + a.model + a.data + a.l1, abs=1e-12
        )

    def test_lambda_moves_only_l1_term(self, rng):
        x, assign, models = self._setup(rng)
        a = cost_total(x, models, assign, 1.0)
        b = cost_total(x, models, assign, 2.0)
        assert b.assign == a.assign
        assert b.model == a.model
        assert b.data == a.data
        assert b.l1 == pytest.approx(2 * a.l1, abs=1e-12)

    def test_rejects_model_count_mismatch(self, rng):
        x, assign, models = self._setup(rng)
        with pytest.raises(ValueError):
            cost_total(x, models[:1], assign, 1.0)


class TestCostBreakdown:
    def test_from_parts_and_dict(self):
        cb = CostBreakdown.from_parts(1.0, 2.0, 3.0, 4.0)
        assert cb.total == 10.0
        assert cb.to_dict() == {
            "assign": 1.0, "model": 2.0, "data": 3.0, "l1": 4.0, "total": 10.0,
        }

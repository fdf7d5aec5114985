import numpy as np
import pytest

from modenets.cluster import (
    assign_segments,
    detect_clusters,
    fit,
    infer_networks,
)
from modenets.evaluate import labels_from_params, macro_f1
from modenets.segmenter import init_cutpoints
from modenets.segments import Assignments, Segmentation
from modenets.synth import gen_tts


@pytest.fixture(scope="module")
def alternating():
    """Three segments, two regimes (1,2,1), known boundaries."""
    x, truth = gen_tts((4, 3), (1, 2, 1), seed=5)
    return x, truth


@pytest.fixture(scope="module")
def fitted(alternating):
    x, truth = alternating
    seg = Segmentation(truth.cut_points, x.t_len)
    return detect_clusters(x, seg, lam=2.0, seed=0)


class TestAssignSegments:
    def test_identical_models_tie_to_lowest_id(self, alternating, fitted):
        x, truth = alternating
        seg = Segmentation(truth.cut_points, x.t_len)
        model = fitted.models[0]
        labels = assign_segments(x, [model, model], seg)
        assert labels == (1,) * seg.m

    def test_picks_generating_regime(self, alternating, fitted):
        x, truth = alternating
        seg = Segmentation(truth.cut_points, x.t_len)
        labels = assign_segments(x, list(fitted.models), seg)
        assert labels == fitted.assignments.segment_cluster


class TestDetectClusters:
    def test_finds_two_clusters_on_alternating_regimes(self, fitted,
                                                       alternating):
        _, truth = alternating
        assert fitted.k == 2
        assert fitted.assignments.segment_cluster == truth.segment_cluster

    def test_labels_compact_and_first_appearance_ordered(self, fitted):
        labels = fitted.assignments.segment_cluster
        assert labels[0] == 1
        seen: list[int] = []
        for c in labels:
            if c not in seen:
                seen.append(c)
        assert seen == list(range(1, fitted.k + 1))

    def test_partition_property(self, fitted):
        assign = fitted.assignments
        assert len(assign.segment_cluster) == assign.segmentation.m
        assert set(assign.segment_cluster) == set(range(1, assign.k + 1))

    def test_em_fixed_point(self, alternating, fitted):
        # re-running one E-step on the returned models changes nothing
        x, _ = alternating
        labels = assign_segments(x, list(fitted.models),
                                 fitted.assignments.segmentation)
        assert labels == fitted.assignments.segment_cluster

    def test_m_step_consistency(self, alternating, fitted):
        # refitting networks on the final assignment reproduces the models
        x, _ = alternating
        again = infer_networks(x, fitted.assignments, lam=2.0)
        for a, b in zip(again, fitted.models):
            assert np.allclose(a.mean_vec, b.mean_vec, atol=1e-12)
            for na, nb in zip(a.networks, b.networks):
                assert np.array_equal(na.psi, nb.psi)

    def test_deterministic_per_seed(self, alternating):
        x, truth = alternating
        seg = Segmentation(truth.cut_points, x.t_len)
        a = detect_clusters(x, seg, lam=2.0, seed=7)
        b = detect_clusters(x, seg, lam=2.0, seed=7)
        assert a.assignments.segment_cluster == b.assignments.segment_cluster
        assert a.costs == b.costs

    def test_restarts_never_hurt_cost(self, alternating):
        x, truth = alternating
        seg = Segmentation(truth.cut_points, x.t_len)
        one = detect_clusters(x, seg, lam=2.0, seed=3, restarts=1)
        three = detect_clusters(x, seg, lam=2.0, seed=3, restarts=3)
        assert three.costs.total <= one.costs.total + 1e-9

    def test_diagnostics_present(self, fitted):
        diag = fitted.diagnostics
        assert "k_trace" in diag
        assert diag["k_trace"][0]["k"] == 1
        assert all(e["k"] == i + 1 for i, e in enumerate(diag["k_trace"]))

    def test_validates_segmentation_length(self, alternating):
        x, _ = alternating
        with pytest.raises(Exception):
            detect_clusters(x, Segmentation((1,), x.t_len + 5), lam=2.0)

    def test_validates_positive_controls(self, alternating):
        x, truth = alternating
        seg = Segmentation(truth.cut_points, x.t_len)
        with pytest.raises(ValueError):
            detect_clusters(x, seg, lam=2.0, restarts=0)


class TestFit:
    def test_end_to_end_recovers_regimes(self, alternating):
        x, truth = alternating
        params = fit(x, window=4, lam_grid=(2.0,), seed=0)
        rep = macro_f1(labels_from_params(params), truth.labels)
        assert params.k == 2
        assert rep.macro_f1 > 0.95

    def test_grid_winner_minimizes_total_cost(self, alternating):
        x, _ = alternating
        params = fit(x, window=4, lam_grid=(0.5, 2.0), seed=0)
        trace = params.diagnostics["lambda_trace"]
        assert len(trace) == 2
        best = min(entry["total"] for entry in trace)
        assert params.costs.total == pytest.approx(best, abs=1e-12)
        assert params.lam in (0.5, 2.0)

    def test_single_lambda_matches_pipeline(self, alternating):
        x, _ = alternating
        from modenets.segmenter import detect

        params = fit(x, window=4, lam_grid=(2.0,), seed=0)
        seg = detect(x, init_cutpoints(x.t_len, 4), lam=2.0)
        direct = detect_clusters(x, seg, lam=2.0, seed=0)
        assert params.assignments.segmentation.cut_points == seg.cut_points
        assert (params.assignments.segment_cluster
                == direct.assignments.segment_cluster)
        assert params.costs.total == pytest.approx(direct.costs.total,
                                                   abs=1e-12)

    def test_labels_cover_every_step(self, alternating):
        x, _ = alternating
        params = fit(x, window=4, lam_grid=(2.0,), seed=0)
        labels = labels_from_params(params)
        assert labels.shape == (x.t_len,)
        assert labels.min() >= 1
        assert labels.max() == params.k

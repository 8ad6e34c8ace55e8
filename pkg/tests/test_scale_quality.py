import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_instance
from segeval.color import srgb_to_lab
from segeval.raster_io import LabelMap, RasterImage, write_report
from segeval.regions import AdjacencyGraph, RegionStats, build_adjacency, region_stats
from segeval.saliency import region_saliency, saliency_map
from segeval.scale_quality import (
    MetricConfig,
    absolute_quality,
    evaluate,
    global_cost,
    inter_distance,
    intra_distance,
    merging_cost,
    relative_quality,
    scale_of,
    standardize_cost,
    standardize_saliency,
    weight_graph,
)
from segeval.synthetic import gradient_image, split_columns, table1_config

HALF = MetricConfig(fit_constant=0.5)
scales = st.floats(0.5, 1e4)


def rs(area, *mean):
    return RegionStats(0, area, np.array(mean, dtype=float))


def test_merging_cost_equal_means():
    assert merging_cost(rs(5, 3.0), rs(9, 3.0), 1) == 0.0


@pytest.mark.parametrize("A,t", [(64, 10.0), (1024, 37.5)])
def test_merging_cost_equal_area_squares(A, t):
    assert merging_cost(rs(A, 0.0), rs(A, t), 1) == pytest.approx(A * t * t / 2)


def test_merging_cost_hand_value():
    assert merging_cost(rs(3, 10.0), rs(1, 20.0), 1) == pytest.approx(75.0)


def test_merging_cost_divides_by_channels():
    assert merging_cost(rs(2, 0, 0, 0), rs(2, 3, 0, 0), 3) == pytest.approx(1 * 9 / 3)


@given(st.integers(1, 500), st.integers(1, 500), st.floats(-300, 300), st.floats(-300, 300))
def test_merging_cost_symmetric(ni, nj, a, b):
    assert merging_cost(rs(ni, a), rs(nj, b), 1) == merging_cost(rs(nj, b), rs(ni, a), 1)


def test_merging_cost_zero_channels():
    with pytest.raises(ValueError):
        merging_cost(rs(1, 0.0), rs(1, 0.0), 0)


def test_weight_graph_stripes():
    A = 16
    data = np.repeat([[0.0] * 4 + [10.0] * 4 + [20.0] * 4], 4, axis=0)
    lm = LabelMap(np.repeat([[0] * 4 + [1] * 4 + [2] * 4], 4, axis=0))
    g = weight_graph(build_adjacency(lm), region_stats(RasterImage.gray(data), lm), 1)
    assert g.weights.tolist() == pytest.approx([A / 2 * 100, A / 2 * 100])


def test_weight_graph_single_region_and_flat():
    lm = LabelMap(np.zeros((3, 3), dtype=int))
    g = weight_graph(build_adjacency(lm), region_stats(RasterImage.gray(np.ones((3, 3))), lm), 1)
    assert g.edge_count == 0
    lm2 = LabelMap(np.array([[0, 1, 2]] * 3))
    g2 = weight_graph(build_adjacency(lm2), region_stats(RasterImage.gray(np.ones((3, 3))), lm2), 1)
    assert np.all(g2.weights == 0.0)


def test_weight_graph_missing_stats():
    g = AdjacencyGraph(3, np.array([[0, 2]]))
    with pytest.raises(ValueError):
        weight_graph(g, [rs(1, 0.0), rs(1, 0.0)], 1)


def test_global_cost():
    g = AdjacencyGraph(3, np.array([[0, 1], [1, 2]]), np.array([2.0, 4.0]))
    assert global_cost(g) == 3.0
    assert global_cost(AdjacencyGraph(1, np.empty((0, 2), int), np.empty(0))) is None


def test_global_cost_matches_naive(rng):
    w = rng.random(100) * 1000
    g = AdjacencyGraph(101, np.stack([np.arange(100), np.arange(1, 101)], axis=1), w)
    assert global_cost(g) == pytest.approx(sum(w.tolist()) / 100, rel=1e-14)


@pytest.mark.parametrize("n,expected", [(16, 98.235), (58, 51.595), (130, 34.463)])
def test_scale_of_published_values(n, expected):
    assert scale_of(321 * 481, n) == pytest.approx(expected, abs=1e-3)


def test_scale_of_whole_image():
    assert scale_of(65536, 1) == 256.0
    with pytest.raises(ValueError):
        scale_of(10, 0)


def test_standardize_saliency():
    assert standardize_saliency(0.0, 7.0) == 0.0
    # mean per-pixel saliency 64 over s^2 pixels
    assert standardize_saliency(64 * 30.0**2, 30.0, HALF) == pytest.approx(128.0)


@given(st.floats(0, 255), scales)
def test_standardize_saliency_round_trip(t, s):
    assert standardize_saliency(0.515 * t * s * s, s) == pytest.approx(t, abs=1e-9)


def test_standardize_cost():
    assert standardize_cost(0.0, 3.0) == 0.0
    for k in (1, 4, 16, 64):
        s = 256 / math.sqrt(k)
        dmean = 256 / k
        cost = merging_cost(rs(round(s * s), 0.0), rs(round(s * s), dmean), 1)
        assert standardize_cost(cost, s) == pytest.approx(256 / k)


@given(st.floats(0, 255), scales)
def test_standardize_cost_round_trip(t, s):
    assert standardize_cost(0.5 * s * s * t * t, s) == pytest.approx(t, abs=1e-9)


def _gradient_parts(n, cfg=None):
    cfg = cfg or table1_config()
    img = gradient_image()
    lm = split_columns(256, 256, n)
    stats = region_stats(img, lm)
    region_saliency(saliency_map(img, cfg.saliency_mode, lm), lm, stats)
    g = weight_graph(build_adjacency(lm), stats, 1)
    return stats, g, scale_of(img.size, n)


def test_intra_distance_zero():
    assert intra_distance([rs(4, 1.0), rs(4, 2.0)], 2.0) == 0.0
    with pytest.raises(ValueError):
        intra_distance([], 1.0)


@pytest.mark.parametrize("n,expected,rel", [(4, 32.0, 0.05), (1, 128.0, 0.02)])
def test_intra_distance_gradient(n, expected, rel):
    stats, _, s = _gradient_parts(n)
    assert intra_distance(stats, s, HALF) == pytest.approx(expected, rel=rel)


def test_intra_distance_is_unweighted():
    stats = [rs(1, 0.0), rs(99, 0.0)]
    stats[0].saliency_sum = 0.5 * 4
    assert intra_distance(stats, 2.0, HALF) == pytest.approx(0.5)


@pytest.mark.parametrize("n,expected", [(4, 64.0), (128, 2.0)])
def test_inter_distance_gradient(n, expected):
    _, g, s = _gradient_parts(n)
    assert inter_distance(g, s) == pytest.approx(expected, rel=0.01)


def test_inter_distance_averages_standardized_edges():
    g = AdjacencyGraph(3, np.array([[0, 1], [1, 2]]), np.array([2.0, 32.0]))
    assert inter_distance(g, 2.0) == pytest.approx((1.0 + 4.0) / 2)
    assert inter_distance(AdjacencyGraph(1, np.empty((0, 2), int), np.empty(0)), 1.0) is None


def test_absolute_quality():
    assert absolute_quality(65.763, 43.213) == pytest.approx(0.329, abs=1e-3)
    assert absolute_quality(3.0, 6.0) == 1.0
    assert absolute_quality(0.0, 1.0) == math.inf
    assert absolute_quality(0.0, 0.0) is None
    assert absolute_quality(5.0, None) is None


@pytest.mark.parametrize(
    "q0,s,st_,expected",
    [(0.408, 51.595, 98.235, 0.214), (0.398, 34.463, 98.235, 0.140)],
)
def test_relative_quality_published(q0, s, st_, expected):
    assert relative_quality(q0, s, st_) == pytest.approx(expected, abs=1e-3)


@given(st.floats(0, 10), scales)
def test_relative_quality_identity(q0, s):
    assert relative_quality(q0, s, s) == q0


@given(st.floats(0.01, 10), scales, scales)
def test_relative_quality_ratio_law(q0, s, s_t):
    qt = relative_quality(q0, s, s_t)
    assert qt / q0 == pytest.approx(min(s, s_t) / max(s, s_t), rel=1e-12)
    assert 0 <= qt <= q0


@given(st.floats(0.01, 10), scales, st.floats(0.01, 3), st.floats(0.01, 3), st.booleans())
def test_relative_quality_decreasing_in_log_offset(q0, s, a, b, up):
    near, far = sorted([a, b])
    if far - near < 1e-6:
        return
    sign = 1 if up else -1
    q_near = relative_quality(q0, s, s * math.exp(sign * near))
    q_far = relative_quality(q0, s, s * math.exp(sign * far))
    assert q_far < q_near


def test_relative_quality_rejects_bad_scale():
    with pytest.raises(ValueError):
        relative_quality(1.0, 0.0, 2.0)


def test_evaluate_gradient_calibration():
    img = gradient_image()
    lm = split_columns(256, 256, 16)
    s = 64.0
    report = evaluate(img, lm, [s], table1_config())
    assert report.q0 == pytest.approx(1.0, abs=0.05)
    assert report.relative == [(s, report.q0)]


def test_evaluate_constant_image():
    img = RasterImage.gray(np.full((4, 4), 50.0))
    lm = LabelMap(np.array([[0, 0, 1, 1]] * 4))
    report = evaluate(img, lm, [2.0])
    assert report.d_intra == 0.0 and report.d_inter == 0.0
    assert report.q0 is None and report.relative == [(2.0, None)]
    assert b'"q0":null' in write_report(report)


def test_evaluate_single_region():
    report = evaluate(gradient_image(), split_columns(256, 256, 1), [10.0])
    assert report.n == 1 and report.d_inter is None and report.q0 is None


def test_evaluate_infinite_quality_propagates():
    report = evaluate(gradient_image(), split_columns(256, 256, 256), [16.0, 32.0], table1_config())
    assert report.q0 == math.inf
    assert [qt for _, qt in report.relative] == [math.inf, math.inf]


def test_evaluate_compacts_labels():
    img = gradient_image(16, 4)
    a = evaluate(img, LabelMap(np.repeat([[0] * 8 + [1] * 8], 4, axis=0)))
    b = evaluate(img, LabelMap(np.repeat([[9] * 8 + [4] * 8], 4, axis=0)))
    assert (a.n, a.d_intra, a.d_inter, a.q0) == (b.n, b.d_intra, b.d_inter, b.q0)


def test_evaluate_enforce_connectivity():
    img = gradient_image(16, 4)
    lm = LabelMap(np.repeat([[0] * 4 + [1] * 8 + [0] * 4], 4, axis=0))
    assert evaluate(img, lm).n == 2
    assert evaluate(img, lm, cfg=MetricConfig(enforce_connectivity=True)).n == 3


def test_evaluate_colour_uses_lab_by_default(rng):
    img, lm = random_instance(rng, size=12, regions=3, channels=3)
    lab = evaluate(img, lm)
    explicit = evaluate(srgb_to_lab(img), lm, cfg=MetricConfig(spectral_space="native"))
    native = evaluate(img, lm, cfg=MetricConfig(spectral_space="native"))
    assert (lab.d_intra, lab.d_inter) == (explicit.d_intra, explicit.d_inter)
    assert lab.d_intra != native.d_intra


def test_evaluate_dimension_mismatch():
    with pytest.raises(ValueError):
        evaluate(gradient_image(8, 8), LabelMap(np.zeros((4, 4), dtype=int)))


def test_evaluate_deterministic(rng):
    img, lm = random_instance(rng, size=16, regions=5, channels=3)
    a = write_report(evaluate(img, lm, [3.0, 9.0], with_baselines=True))
    b = write_report(evaluate(img, lm, [3.0, 9.0], with_baselines=True))
    assert a == b


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 10), st.sampled_from(["region", "global"]))
def test_uniform_rescale_covariance(seed, alpha, mode):
    img, lm = random_instance(np.random.default_rng(seed), size=10, regions=4)
    cfg = MetricConfig(saliency_mode=mode, spectral_space="native")
    base = evaluate(img, lm, cfg=cfg)
    scaled = evaluate(RasterImage.gray(img.data * alpha), lm, cfg=cfg)
    assert scaled.d_intra == pytest.approx(alpha * base.d_intra, rel=1e-9)
    assert scaled.d_inter == pytest.approx(alpha * base.d_inter, rel=1e-9)
    assert scaled.q0 == pytest.approx(base.q0, rel=1e-9)


def test_config_validation():
    with pytest.raises(ValueError):
        MetricConfig(fit_constant=0)
    with pytest.raises(ValueError):
        MetricConfig(connectivity=6)
    with pytest.raises(ValueError):
        MetricConfig(saliency_mode="local")

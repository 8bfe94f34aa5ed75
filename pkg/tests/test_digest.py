import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdigest import (
    ConfigurationError,
    DomainError,
    EmptyDigestError,
    IncompatibleDigestError,
    InvalidSampleError,
    MergePolicy,
    SampleSet,
    TDigest,
    measure_overlap,
    merge_digests,
)
from tdigest.digest import UNSTRATIFIED
from tdigest.exceptions import NotInstrumentedError

KINDS = ["k0", "k1", "k2", "k3", "k2u", "k3u"]


def singletons(values, delta=100, scale="k1"):
    d = TDigest(delta, scale)
    d.merge_buffer(values)
    return d


# construction ---------------------------------------------------------------


def test_new_digest_is_empty():
    d = TDigest(100, "k2")
    assert d.centroid_count == 0
    assert d.total_weight == 0
    assert d.min == math.inf and d.max == -math.inf
    with pytest.raises(EmptyDigestError, match="empty digest"):
        d.quantile(0.5)
    with pytest.raises(EmptyDigestError):
        d.cdf(0.0)
    with pytest.raises(EmptyDigestError):
        d.trimmed_mean(0, 1)


@pytest.mark.parametrize("delta", [5, 9.99, 0, -1, math.inf, math.nan])
def test_delta_floor(delta):
    with pytest.raises(ConfigurationError):
        TDigest(delta)


@pytest.mark.parametrize("kwargs", [{"buffer_capacity": 0}, {"buffer_capacity": 2.5}, {"working_delta_factor": 0.5}])
def test_bad_policy(kwargs):
    with pytest.raises(ConfigurationError):
        MergePolicy(**kwargs)


def test_default_policy():
    d = TDigest(100)
    assert d.buffer_capacity == 1000
    assert d.working_delta == 300
    assert d.policy.alternate_scan


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_rejects_non_finite(bad):
    d = TDigest(100)
    with pytest.raises(InvalidSampleError):
        d.add(bad)
    with pytest.raises(InvalidSampleError):
        d.update([1.0, bad])
    with pytest.raises(InvalidSampleError):
        d.merge_buffer([bad])
    with pytest.raises(InvalidSampleError):
        d.add_point(bad)
    assert d.total_weight == 0


@pytest.mark.parametrize("w", [0.0, -1.0, math.nan])
def test_rejects_bad_weights(w):
    d = TDigest(100)
    with pytest.raises(InvalidSampleError):
        d.add(1.0, w)
    with pytest.raises(InvalidSampleError):
        d.merge_buffer([1.0], [w])


# merge_buffer / compress ----------------------------------------------------


def test_five_singletons():
    d = singletons([3, 1, 5, 2, 4])
    assert d.centroids() == [(1, 1), (2, 1), (3, 1), (4, 1), (5, 1)]
    _, pair = d.k_sizes(d.working_delta)
    assert np.all(pair > 1)


def test_merge_pass_is_idempotent():
    d = TDigest(100, "k1")
    d.update(np.random.default_rng(0).random(20000))
    d.compress()
    before = d.centroids()
    d.merge_buffer([])
    d.compress()
    assert d.centroids() == before


def test_million_uniform_k1_count():
    d = TDigest(100, "k1")
    d.update(np.random.default_rng(3).random(1_000_000))
    d.compress()
    assert 50 <= d.centroid_count <= 100
    d.check_invariants()


def test_compress_merges_adjacent_pair():
    # ten unit centroids under k0 at delta 10: each pair spans exactly one unit of k
    d = TDigest.from_centroids(np.arange(10.0), np.ones(10), delta=10, scale="k0")
    d.compress()
    assert d.centroids() == [(0.5, 2), (2.5, 2), (4.5, 2), (6.5, 2), (8.5, 2)]


def test_compress_weighted_mean():
    d = TDigest.from_centroids([-5.0, 1.0, 4.0, 10.0], [1000.0, 1.0, 3.0, 1000.0], delta=10, scale="k1")
    d.compress()
    assert d.centroids() == [(-5.0, 1000.0), (3.25, 4.0), (10.0, 1000.0)]


def test_stratified_build_compresses_about_three_to_one():
    d = TDigest(100, "k1", MergePolicy(working_delta_factor=3.16))
    d.update(np.random.default_rng(1).random(200_000))
    before = d.centroid_count
    d.compress()
    after = d.centroid_count
    assert 2.5 <= before / after <= 4.0


def test_oversized_weight_kept_alone():
    d = TDigest(100, "k2")
    d.merge_buffer([0.0, 1.0, 2.0, 3.0], [1.0, 1.0, 1e9, 1.0])
    d.compress()
    assert (2.0, 1e9) in d.centroids()
    d.check_invariants(fully_merged=False)


def test_update_equals_repeated_add():
    values = np.random.default_rng(5).normal(size=5000)
    a = TDigest(50)
    a.update(values)
    b = TDigest(50)
    for v in values:
        b.add(v)
    assert a.centroids() == b.centroids()


def test_alternation_and_unidirectional_differ_but_both_valid():
    values = np.random.default_rng(2).random(50_000)
    for policy in (MergePolicy(), UNSTRATIFIED):
        d = TDigest(100, "k1", policy)
        d.update(values)
        d.compress()
        d.check_invariants()


# add_point --------------------------------------------------------------------


def test_add_point_to_empty():
    d = TDigest(100)
    d.add_point(4.0, 2.0)
    assert d.centroids() == [(4.0, 2.0)]


def test_add_point_prefers_heavier_of_equidistant():
    d = TDigest.from_centroids([0.0, 1.0, 2.0, 3.0], [1000.0, 3.0, 7.0, 1000.0], delta=10, scale="k1")
    d.add_point(1.5)
    assert d.centroids() == [(0.0, 1000.0), (1.0, 3.0), (1.9375, 8.0), (3.0, 1000.0)]


def test_add_point_new_centroid_when_full():
    d = TDigest(10, "k3")
    for _ in range(3):
        d.add_point(1.0)
    d.add_point(100.0)
    assert d.total_weight == 4
    assert d.means[-1] == 100.0


def test_add_point_growth_limit():
    d = TDigest(100, "k2")
    worst = 0
    for v in np.linspace(0, 1, 10_000):
        d.add_point(v, growth_limit=10)
        worst = max(worst, d.centroid_count)
    assert worst <= 1000
    d.compress()
    assert d.centroid_count <= 100
    d.check_invariants()


def test_add_point_growth_limit_validated():
    with pytest.raises(ConfigurationError):
        TDigest(100).add_point(1.0, growth_limit=0)


# merge_digests ----------------------------------------------------------------


def test_merge_with_empty_matches_compress():
    values = np.random.default_rng(4).exponential(size=30_000)
    d = TDigest(100)
    d.update(values)
    merged = merge_digests([d, TDigest(100)], 100)
    direct = d.copy().compress()
    qs = np.linspace(0, 1, 101)
    assert np.array_equal(merged.quantile_array(qs), direct.quantile_array(qs))


def test_merge_two_singletons():
    a = TDigest(1000)
    a.add(1.0)
    b = TDigest(1000)
    b.add(2.0)
    m = merge_digests([a, b])
    assert m.centroids() == [(1.0, 1.0), (2.0, 1.0)]
    assert m.total_weight == 2


def test_merge_rejects_mixed_kinds():
    a = singletons([1.0], scale="k1")
    b = singletons([2.0], scale="k2")
    with pytest.raises(IncompatibleDigestError):
        merge_digests([a, b])


def test_merge_rejects_larger_out_delta():
    with pytest.raises(IncompatibleDigestError):
        merge_digests([TDigest(100), TDigest(50)], 60)


def test_merge_rejects_nothing():
    with pytest.raises(ConfigurationError):
        merge_digests([])


def test_merge_of_partitions_close_to_direct():
    values = np.random.default_rng(8).random(200_000)
    exact = SampleSet(values)
    subs = []
    for part in np.array_split(values, 20):
        s = TDigest(200)
        s.update(part)
        s.compress()
        subs.append(s)
    merged = merge_digests(subs, 100)
    merged.check_invariants()
    assert merged.total_weight == 200_000
    assert merged.min == values.min() and merged.max == values.max()
    for q in (0.01, 0.5, 0.99):
        assert abs(merged.quantile(q) - exact.quantile(q)) < 5e-3


# queries ----------------------------------------------------------------------


def test_singleton_queries():
    d = singletons([1, 2, 3, 4, 5])
    assert d.quantile(0) == 1
    assert d.quantile(1) == 5
    assert d.quantile(0.5) == 3
    assert d.trimmed_mean(0.2, 0.8) == pytest.approx(3.0)
    d3 = singletons([1, 2, 3])
    assert d3.cdf(2) == 0.5
    assert d3.cdf(0) == 0.0
    assert d3.cdf(4) == 1.0


def test_query_domains():
    d = singletons([1, 2, 3])
    for q in (-0.1, 1.1, math.nan):
        with pytest.raises(DomainError):
            d.quantile(q)
    with pytest.raises(DomainError):
        d.cdf(math.nan)
    with pytest.raises(DomainError):
        d.trimmed_mean(0.6, 0.4)


def test_trimmed_mean_uniform():
    values = np.random.default_rng(6).random(100_000)
    d = TDigest(100)
    d.update(values)
    assert d.trimmed_mean(0.25, 0.75) == pytest.approx(0.5, abs=0.01)
    assert d.trimmed_mean(0, 1) == pytest.approx(values.mean(), rel=1e-9)


def test_constant_stream():
    d = TDigest(100)
    d.update(np.full(100_000, 7.25))
    for q in np.linspace(0, 1, 21):
        assert d.quantile(q) == 7.25
    assert d.cdf(7.25) == 0.5


def test_terminal_pair_reflects_through_mean():
    # a weight-2 cluster at the top: samples at max and at 2*mean - max
    d = TDigest.from_centroids([0.0, 1.0, 4.0], [1.0, 1.0, 2.0], delta=10, min=0.0, max=5.0)
    assert d.quantile(1.0) == 5.0
    assert d.cdf(3.0) == pytest.approx(2.5 / 4)
    assert d.cdf(5.0) == pytest.approx(3.5 / 4)


def test_duplicate_means_step():
    d = TDigest.from_centroids([1.0, 2.0, 2.0, 3.0], [1.0, 3.0, 3.0, 1.0], delta=10)
    assert d.cdf(2.0) == pytest.approx(0.5)
    assert d.cdf(1.999) < d.cdf(2.0) < d.cdf(2.001)


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.floats(0.001, 10.0), min_size=2, max_size=40),
    st.lists(st.integers(51, 400), min_size=40, max_size=40),
)
def test_cdf_inverts_quantile_on_continuous_digests(gaps, weights):
    # total weight > 100 keeps every probe clear of the unit jumps at min and max
    means = np.cumsum(gaps)
    weights = np.array(weights[: means.size], dtype=float)
    d = TDigest.from_centroids(means, weights, delta=10, min=means[0] - 1.0, max=means[-1] + 1.0)
    for q in np.linspace(0.01, 0.99, 99):
        assert abs(d.cdf(d.quantile(q)) - q) <= 1e-9


def test_vectorized_queries_match_scalar():
    d = TDigest(50, "k1")
    d.update(np.random.default_rng(9).gamma(2.0, size=20_000))
    qs = np.linspace(0, 1, 57)
    xs = np.linspace(d.min - 1, d.max + 1, 61)
    assert np.array_equal(d.quantile_array(qs), [d.quantile(q) for q in qs])
    assert np.allclose(d.cdf_array(xs), [d.cdf(x) for x in xs], rtol=0, atol=1e-15)


# overlap measurement ----------------------------------------------------------


def test_overlap_zero_for_sorted_single_pass():
    d = TDigest(100, "k1", track_ranges=True)
    d.merge_buffer(np.sort(np.random.default_rng(0).random(10_000)))
    assert measure_overlap(d) == 0


def test_overlap_requires_instrumentation():
    with pytest.raises(NotInstrumentedError):
        measure_overlap(singletons([1.0, 2.0]))


def test_overlap_detects_interleaving():
    d = TDigest(100, "k0", track_ranges=True)
    d._means = np.array([1.0, 2.0, 3.0])
    d._weights = np.array([2.0, 2.0, 2.0])
    d._lo = np.array([0.0, 1.5, 0.5])
    d._hi = np.array([2.0, 2.5, 3.5])
    d._total = 6.0
    assert measure_overlap(d) == 2


# properties -------------------------------------------------------------------

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(KINDS), st.lists(finite, min_size=1, max_size=3000), st.floats(10, 300))
def test_compress_invariants(kind, values, delta):
    d = TDigest(delta, kind)
    d.update(values)
    d.compress()
    d.check_invariants()
    assert d.total_weight == len(values)
    assert d.quantile(0) == min(values)
    assert d.quantile(1) == max(values)
    qs = np.linspace(0, 1, 101)
    est = d.quantile_array(qs)
    assert np.all(np.diff(est) >= 0)
    xs = np.sort(np.asarray(values))
    cd = d.cdf_array(xs)
    assert np.all(np.diff(cd) >= 0)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["k1", "k2", "k3"]), st.lists(st.lists(finite, min_size=0, max_size=800), min_size=1, max_size=6))
def test_merge_closure(kind, parts):
    subs = []
    for part in parts:
        s = TDigest(100, kind)
        s.update(part)
        subs.append(s)
    total = sum(len(p) for p in parts)
    merged = merge_digests(subs, 50)
    assert merged.total_weight == total
    if total:
        merged.check_invariants()
        assert merged.centroid_count <= 50


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 1_000_000), min_size=1, max_size=4000), st.sampled_from(KINDS))
def test_all_singletons_reproduce_oracle(values, kind):
    # with every sample its own centroid, the digest is the sample set
    n = len(values)
    d = TDigest(max(2 * n, 10), kind)
    d.merge_buffer(np.random.default_rng(0).permutation(values).astype(float))
    if d.centroid_count != n and kind in ("k0", "k1"):
        pytest.fail("k0/k1 digest at delta >= 2n should keep every sample apart")
    if np.all(d.weights == 1):
        exact = SampleSet(values)
        for q in np.linspace(0, 1, 101):
            assert d.quantile(q) == pytest.approx(exact.quantile(q), rel=1e-12)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdigest.exceptions import DomainError, EmptyDigestError, InvalidSampleError
from tdigest.oracle import SampleSet, exact_cdf, exact_quantile, exact_trimmed_mean


@pytest.mark.parametrize(
    "values, q, expected",
    [
        ([1, 2, 3, 4, 5], 0.5, 3.0),
        ([1, 2, 3, 4, 5], 0.0, 1.0),
        ([1, 2, 3, 4, 5], 1.0, 5.0),
        ([1, 2], 0.5, 1.5),
        ([1, 2], 0.25, 1.0),
        ([1, 2], 0.375, 1.25),
        ([5, 1, 3], 0.5, 3.0),
        ([10, 20, 30, 40], 0.3, 17.0),
    ],
)
def test_quantile(values, q, expected):
    assert exact_quantile(values, q) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize(
    "values, x, expected",
    [
        ([1, 2, 3], 0.0, 0.0),
        ([1, 2, 3], 2.0, 0.5),
        ([1, 1, 1, 1], 1.0, 0.5),
        ([1, 2, 3], 9.0, 1.0),
        ([1, 2, 2, 3], 2.0, 0.5),
        ([1, 2, 3, 4], 2.5, 0.5),
    ],
)
def test_cdf(values, x, expected):
    assert exact_cdf(values, x) == expected


def test_trimmed_mean():
    assert exact_trimmed_mean([3, 1, 2, 9], 0, 1) == pytest.approx(3.75)
    assert exact_trimmed_mean([1, 2, 3, 4, 5], 0.2, 0.8) == pytest.approx(3.0)
    assert exact_trimmed_mean([0, 100], 0, 0.5) == 0.0
    # half of the first sample's rank interval and all of the second
    assert exact_trimmed_mean([0, 10, 20, 30], 0.125, 0.5) == pytest.approx((0 * 0.5 + 10) / 1.5)


def test_errors():
    with pytest.raises(EmptyDigestError):
        exact_quantile([], 0.5)
    with pytest.raises(EmptyDigestError):
        exact_cdf([], 0.5)
    with pytest.raises(InvalidSampleError):
        SampleSet([1.0, math.nan])
    with pytest.raises(DomainError):
        exact_cdf([1.0], math.nan)
    with pytest.raises(DomainError):
        exact_quantile([1.0], 1.5)
    with pytest.raises(DomainError):
        exact_trimmed_mean([1.0, 2.0], 0.6, 0.4)


values = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=60)


@settings(max_examples=200, deadline=None)
@given(values)
def test_cdf_inverts_quantile_at_mid_ranks(xs):
    s = SampleSet(xs)
    n = len(xs)
    for i in range(n):
        v = s.values[i]
        if np.count_nonzero(s.values == v) == 1:
            q = (i + 0.5) / n
            assert s.quantile(q) == pytest.approx(v, rel=1e-12, abs=1e-9)
            assert s.cdf(v) == pytest.approx(q, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(values, st.lists(st.floats(0, 1), min_size=2, max_size=10))
def test_quantile_monotone_and_bounded(xs, qs):
    s = SampleSet(xs)
    out = [s.quantile(q) for q in sorted(qs)]
    assert all(a <= b for a, b in zip(out, out[1:]))
    assert min(xs) <= out[0] and out[-1] <= max(xs)


@settings(max_examples=200, deadline=None)
@given(values)
def test_full_trimmed_mean_is_mean(xs):
    assert exact_trimmed_mean(xs, 0, 1) == pytest.approx(math.fsum(xs) / len(xs), rel=1e-9, abs=1e-6)

"""Exact, sort-based rank statistics used as the error baseline.

Sample ``i`` (0-based, ascending) sits at the mid-rank ``(i + 0.5) / n`` and
owns the rank interval ``[i, i + 1)``.  That is the same convention the digest
uses for singleton centroids, so a digest in which every sample is its own
centroid reproduces these functions exactly.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import DomainError, EmptyDigestError, InvalidSampleError

__all__ = ["SampleSet", "exact_quantile", "exact_cdf", "exact_trimmed_mean"]


class SampleSet:
    """All samples, retained and sorted."""

    def __init__(self, values):
        arr = np.sort(np.asarray(values, dtype=np.float64).ravel(), kind="stable")
        if not np.all(np.isfinite(arr)):
            raise InvalidSampleError("sample set must contain only finite values")
        self.values = arr

    def __len__(self):
        return self.values.size

    def _require_nonempty(self):
        if self.values.size == 0:
            raise EmptyDigestError("empty sample set")

    def quantile(self, q: float) -> float:
        self._require_nonempty()
        q = float(q)
        if not 0.0 <= q <= 1.0:
            raise DomainError(f"quantile must lie in [0, 1], got {q!r}")
        x = self.values
        n = x.size
        t = q * n - 0.5
        if t <= 0.0:
            return float(x[0])
        if t >= n - 1:
            return float(x[-1])
        i = int(math.floor(t))
        frac = t - i
        return float(x[i] + frac * (x[i + 1] - x[i]))

    def cdf(self, x: float) -> float:
        self._require_nonempty()
        if math.isnan(x):
            raise DomainError("cdf of NaN")
        below = np.searchsorted(self.values, x, side="left")
        through = np.searchsorted(self.values, x, side="right")
        return float((below + 0.5 * (through - below)) / self.values.size)

    def trimmed_mean(self, q_lo: float, q_hi: float) -> float:
        self._require_nonempty()
        if not 0.0 <= q_lo < q_hi <= 1.0:
            raise DomainError(f"need 0 <= q_lo < q_hi <= 1, got ({q_lo!r}, {q_hi!r})")
        n = self.values.size
        lo, hi = q_lo * n, q_hi * n
        starts = np.arange(n, dtype=np.float64)
        share = np.clip(np.minimum(starts + 1.0, hi) - np.maximum(starts, lo), 0.0, None)
        return float(np.dot(share, self.values) / share.sum())


def _as_set(samples) -> SampleSet:
    return samples if isinstance(samples, SampleSet) else SampleSet(samples)


def exact_quantile(samples, q: float) -> float:
    return _as_set(samples).quantile(q)


def exact_cdf(samples, x: float) -> float:
    return _as_set(samples).cdf(x)


def exact_trimmed_mean(samples, q_lo: float, q_hi: float) -> float:
    return _as_set(samples).trimmed_mean(q_lo, q_hi)

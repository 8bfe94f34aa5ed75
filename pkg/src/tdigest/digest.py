"""The t-digest: a sorted list of (mean, weight) centroids with size-bounded clusters."""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .exceptions import (
    ConfigurationError,
    DomainError,
    EmptyDigestError,
    IncompatibleDigestError,
    InvalidSampleError,
    NotInstrumentedError,
)
from .interpolation import RankModel
from .scale import BoundScale, ScaleFunction

__all__ = [
    "MIN_DELTA",
    "Centroid",
    "MergePolicy",
    "TDigest",
    "merge_digests",
    "measure_overlap",
]

MIN_DELTA = 10.0


class Centroid(NamedTuple):
    mean: float
    weight: float


@dataclass(frozen=True)
class MergePolicy:
    """How incoming data is batched and merged.

    ``buffer_capacity=None`` means ``10 * ceil(delta)``.  Merges during
    ingestion run at ``working_delta_factor * delta``; :meth:`TDigest.compress`
    brings the digest back to ``delta``.
    """

    buffer_capacity: int | None = None
    working_delta_factor: float = 3.0
    alternate_scan: bool = True

    def __post_init__(self):
        if self.buffer_capacity is not None and (
            int(self.buffer_capacity) != self.buffer_capacity or self.buffer_capacity < 1
        ):
            raise ConfigurationError(f"buffer_capacity must be a positive integer, got {self.buffer_capacity!r}")
        if not self.working_delta_factor >= 1.0 or math.isinf(self.working_delta_factor):
            raise ConfigurationError(f"working_delta_factor must be >= 1, got {self.working_delta_factor!r}")

    def capacity_for(self, delta: float) -> int:
        if self.buffer_capacity is None:
            return 10 * math.ceil(delta)
        return int(self.buffer_capacity)


UNSTRATIFIED = MergePolicy(working_delta_factor=1.0, alternate_scan=False)


def _check_samples(values, weights):
    values = np.asarray(values, dtype=np.float64).ravel()
    if not np.all(np.isfinite(values)):
        raise InvalidSampleError("values must be finite (NaN and infinities are rejected)")
    if weights is None:
        weights = np.ones_like(values)
    else:
        weights = np.broadcast_to(np.asarray(weights, dtype=np.float64), values.shape).ravel()
        if not np.all(np.isfinite(weights)) or not np.all(weights > 0):
            raise InvalidSampleError("weights must be positive and finite")
    return values, weights


def _cluster_starts(cum: np.ndarray, scale: BoundScale, reverse: bool) -> np.ndarray:
    """Greedy single pass over sorted items; returns the start index of each cluster.

    ``cum`` is the inclusive running weight in ascending order.  One
    ``k``/``k^-1`` pair is evaluated per emitted cluster; membership is decided
    by comparing running weights against the resulting limit.
    """
    n_items = cum.size
    total = float(cum[-1])
    if not reverse:
        run = cum.tolist()
        starts = []
        b = 0
        q0 = 0.0
        while b < n_items:
            starts.append(b)
            threshold = scale.upper_limit(q0) * total
            b = bisect_right(run, threshold, b + 1)
            q0 = run[b - 1] / total
        return np.asarray(starts, dtype=np.intp)

    # mirror image: walk from the top using k^-1(k(q_right) - 1)
    run = (total - np.concatenate(([0.0], cum[:-1])))[::-1].tolist()
    ends = []
    b = 0
    qr0 = 0.0
    while b < n_items:
        threshold = (1.0 - scale.lower_limit(1.0 - qr0)) * total
        nb = bisect_right(run, threshold, b + 1)
        ends.append(n_items - nb)
        qr0 = run[nb - 1] / total
        b = nb
    return np.asarray(ends[::-1], dtype=np.intp)


def _merge_pass(means, weights, scale: BoundScale, reverse: bool, lo=None, hi=None):
    """Sort items by mean (stable) and fold them into a fully merged centroid list."""
    order = np.argsort(means, kind="stable")
    m = means[order]
    w = weights[order]
    cum = np.cumsum(w)
    starts = _cluster_starts(cum, scale, reverse)
    new_w = np.add.reduceat(w, starts)
    # offsets from each cluster's smallest mean keep equal-valued clusters exact
    anchor = m[starts]
    counts = np.diff(np.append(starts, m.size))
    offsets = np.add.reduceat(w * (m - np.repeat(anchor, counts)), starts)
    new_m = anchor + offsets / new_w
    if lo is not None:
        lo = np.minimum.reduceat(lo[order], starts)
        hi = np.maximum.reduceat(hi[order], starts)
    return new_m, new_w, lo, hi


class TDigest:
    """Streaming quantile sketch.

    Parameters
    ----------
    delta : float
        Compression; the fully merged digest holds at most about ``delta``
        centroids.  Must be at least 10.
    scale : ScaleFunction or str
        One of ``k0``, ``k1``, ``k2``, ``k3``, ``k2u``, ``k3u``.
    policy : MergePolicy, optional
        Buffering, stratification and scan-direction settings.
    track_ranges : bool
        Keep the smallest and largest raw sample of every centroid, needed by
        :func:`measure_overlap`.  Ranges are not serialized.
    """

    def __init__(
        self,
        delta: float = 100.0,
        scale: ScaleFunction | str = ScaleFunction.K2,
        policy: MergePolicy | None = None,
        *,
        track_ranges: bool = False,
    ):
        delta = float(delta)
        if not delta >= MIN_DELTA or math.isinf(delta):
            raise ConfigurationError(f"delta must be a finite value >= {MIN_DELTA:g}, got {delta!r}")
        self.delta = delta
        self.scale = ScaleFunction.parse(scale)
        self.policy = policy if policy is not None else MergePolicy()
        self.track_ranges = bool(track_ranges)
        self.buffer_capacity = self.policy.capacity_for(delta)
        self.working_delta = delta * self.policy.working_delta_factor

        self._means = np.empty(0)
        self._weights = np.empty(0)
        self._lo = np.empty(0) if track_ranges else None
        self._hi = np.empty(0) if track_ranges else None
        self._buf_values = np.empty(self.buffer_capacity)
        self._buf_weights = np.empty(self.buffer_capacity)
        self._buf_n = 0
        self._total = 0.0
        self.min = math.inf
        self.max = -math.inf
        self._reverse_next = False
        self._model = None

    # ------------------------------------------------------------------
    # state

    @property
    def total_weight(self) -> float:
        return self._total

    @property
    def means(self) -> np.ndarray:
        self._flush()
        return self._means.copy()

    @property
    def weights(self) -> np.ndarray:
        self._flush()
        return self._weights.copy()

    @property
    def ranges(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.track_ranges:
            raise NotInstrumentedError("digest was not built with track_ranges=True")
        self._flush()
        return self._lo.copy(), self._hi.copy()

    def centroids(self) -> list[Centroid]:
        self._flush()
        return [Centroid(m, w) for m, w in zip(self._means.tolist(), self._weights.tolist())]

    @property
    def centroid_count(self) -> int:
        self._flush()
        return self._means.size

    def __len__(self) -> int:
        return self.centroid_count

    def __repr__(self):
        return (
            f"TDigest(delta={self.delta:g}, scale={self.scale.value!r}, "
            f"n={self._total:g}, centroids={self._means.size}, buffered={self._buf_n})"
        )

    def copy(self) -> "TDigest":
        other = TDigest(self.delta, self.scale, self.policy, track_ranges=self.track_ranges)
        other._means = self._means.copy()
        other._weights = self._weights.copy()
        if self.track_ranges:
            other._lo = self._lo.copy()
            other._hi = self._hi.copy()
        other._buf_values[: self._buf_n] = self._buf_values[: self._buf_n]
        other._buf_weights[: self._buf_n] = self._buf_weights[: self._buf_n]
        other._buf_n = self._buf_n
        other._total = self._total
        other.min, other.max = self.min, self.max
        other._reverse_next = self._reverse_next
        return other

    @classmethod
    def from_centroids(
        cls,
        means: Sequence[float],
        weights: Sequence[float],
        *,
        delta: float = 100.0,
        scale: ScaleFunction | str = ScaleFunction.K2,
        policy: MergePolicy | None = None,
        min: float | None = None,
        max: float | None = None,
    ) -> "TDigest":
        """Wrap an existing centroid list without re-clustering it."""
        digest = cls(delta, scale, policy)
        means, weights = _check_samples(means, weights)
        if means.size and np.any(np.diff(means) < 0):
            raise DomainError("centroid means must be non-decreasing")
        digest._means = means.copy()
        digest._weights = weights.copy()
        digest._total = float(weights.sum())
        if means.size:
            digest.min = float(means[0]) if min is None else float(min)
            digest.max = float(means[-1]) if max is None else float(max)
            if digest.min > means[0] or digest.max < means[-1]:
                raise DomainError("min/max must bracket the centroid means")
        return digest

    # ------------------------------------------------------------------
    # ingestion

    def _next_reverse(self) -> bool:
        if not self.policy.alternate_scan:
            return False
        reverse = self._reverse_next
        self._reverse_next = not reverse
        return reverse

    def _merge_in(self, values, weights, delta, reverse=None, lo=None, hi=None):
        """Run one merge pass over the centroids plus the given items at ``delta``."""
        means = np.concatenate((self._means, values))
        wts = np.concatenate((self._weights, weights))
        if means.size == 0:
            return
        if self.track_ranges:
            lo = np.concatenate((self._lo, values if lo is None else lo))
            hi = np.concatenate((self._hi, values if hi is None else hi))
        scale = BoundScale(self.scale, delta, float(wts.sum()))
        if reverse is None:
            reverse = self._next_reverse()
        self._means, self._weights, self._lo, self._hi = _merge_pass(means, wts, scale, reverse, lo, hi)
        self._model = None

    def _note_extremes(self, values):
        if values.size:
            self.min = min(self.min, float(values.min()))
            self.max = max(self.max, float(values.max()))

    def _flush(self):
        if self._buf_n:
            n = self._buf_n
            self._buf_n = 0
            self._merge_in(self._buf_values[:n].copy(), self._buf_weights[:n].copy(), self.working_delta)

    def add(self, value: float, weight: float = 1.0) -> "TDigest":
        """Buffer one sample; the buffer is merged when it fills up."""
        value = float(value)
        weight = float(weight)
        if not math.isfinite(value):
            raise InvalidSampleError(f"values must be finite, got {value!r}")
        if not (weight > 0 and math.isfinite(weight)):
            raise InvalidSampleError(f"weights must be positive and finite, got {weight!r}")
        self._buf_values[self._buf_n] = value
        self._buf_weights[self._buf_n] = weight
        self._buf_n += 1
        self._total += weight
        if value < self.min:
            self.min = value
        if value > self.max:
            self.max = value
        self._model = None
        if self._buf_n == self.buffer_capacity:
            self._flush()
        return self

    def update(self, values: Iterable[float], weights=None) -> "TDigest":
        """Buffered insertion of many samples; same result as repeated :meth:`add`."""
        values, weights = _check_samples(values, weights)
        self._note_extremes(values)
        self._model = None
        pos = 0
        cap = self.buffer_capacity
        while pos < values.size:
            take = min(cap - self._buf_n, values.size - pos)
            end = pos + take
            self._buf_values[self._buf_n : self._buf_n + take] = values[pos:end]
            self._buf_weights[self._buf_n : self._buf_n + take] = weights[pos:end]
            self._buf_n += take
            self._total += float(weights[pos:end].sum())
            pos = end
            if self._buf_n == cap:
                self._flush()
        return self

    def merge_buffer(self, values: Iterable[float], weights=None) -> "TDigest":
        """Merge a batch of samples (plus anything still buffered) in one pass."""
        values, weights = _check_samples(values, weights)
        n = self._buf_n
        if n:
            values = np.concatenate((self._buf_values[:n], values))
            weights = np.concatenate((self._buf_weights[:n], weights))
            self._buf_n = 0
            pending = float(self._buf_weights[:n].sum())
        else:
            pending = 0.0
        self._note_extremes(values)
        self._total += float(weights.sum()) - pending
        self._merge_in(values, weights, self.working_delta)
        return self

    def add_point(self, value: float, weight: float = 1.0, growth_limit: int = 10) -> "TDigest":
        """Clustering insertion: absorb into the nearest admissible centroid.

        Among the centroids nearest to ``value`` that can take ``weight``
        without exceeding the size bound, the heaviest wins.  Otherwise a new
        centroid is created.  When there are more than ``growth_limit * delta``
        centroids the digest is consolidated with a merge pass at ``delta``.
        """
        if int(growth_limit) != growth_limit or growth_limit < 1:
            raise ConfigurationError(f"growth_limit must be a positive integer, got {growth_limit!r}")
        value = float(value)
        weight = float(weight)
        if not math.isfinite(value):
            raise InvalidSampleError(f"values must be finite, got {value!r}")
        if not (weight > 0 and math.isfinite(weight)):
            raise InvalidSampleError(f"weights must be positive and finite, got {weight!r}")
        self._flush()
        self._model = None
        means, weights = self._means, self._weights
        m = means.size
        new_total = self._total + weight
        chosen = -1
        if m:
            i = int(np.searchsorted(means, value, side="left"))
            dist_left = value - means[i - 1] if i > 0 else math.inf
            dist_right = means[i] - value if i < m else math.inf
            nearest = min(dist_left, dist_right)
            candidates = []
            if dist_left == nearest:
                v = means[i - 1]
                candidates.extend(range(int(np.searchsorted(means, v, side="left")), i))
            if dist_right == nearest:
                v = means[i]
                candidates.extend(range(i, int(np.searchsorted(means, v, side="right"))))
            scale = BoundScale(self.scale, self.working_delta, new_total)
            best_weight = -1.0
            for c in candidates:
                w_left = float(weights[:c].sum())
                q_left = w_left / new_total
                q_right = min(1.0, (w_left + weights[c] + weight) / new_total)
                if scale.forward(q_right) - scale.forward(q_left) <= 1.0 and weights[c] > best_weight:
                    chosen, best_weight = c, weights[c]

        if chosen >= 0:
            weights[chosen] += weight
            means[chosen] += (value - means[chosen]) * weight / weights[chosen]
            if self.track_ranges:
                self._lo[chosen] = min(self._lo[chosen], value)
                self._hi[chosen] = max(self._hi[chosen], value)
            if (chosen > 0 and means[chosen] < means[chosen - 1]) or (chosen < m - 1 and means[chosen] > means[chosen + 1]):
                order = np.argsort(means, kind="stable")
                self._means, self._weights = means[order], weights[order]
                if self.track_ranges:
                    self._lo, self._hi = self._lo[order], self._hi[order]
        else:
            at = int(np.searchsorted(means, value, side="right"))
            self._means = np.insert(means, at, value)
            self._weights = np.insert(weights, at, weight)
            if self.track_ranges:
                self._lo = np.insert(self._lo, at, value)
                self._hi = np.insert(self._hi, at, value)

        self._total = new_total
        self.min = min(self.min, value)
        self.max = max(self.max, value)
        if self._means.size > growth_limit * self.delta:
            self._merge_in(np.empty(0), np.empty(0), self.delta)
        return self

    def compress(self) -> "TDigest":
        """Merge everything, buffered samples included, at the final ``delta``."""
        n = self._buf_n
        self._buf_n = 0
        self._merge_in(self._buf_values[:n].copy(), self._buf_weights[:n].copy(), self.delta)
        return self

    # ------------------------------------------------------------------
    # queries

    def _rank_model(self) -> RankModel:
        self._flush()
        if self._means.size == 0:
            raise EmptyDigestError()
        if self._model is None:
            self._model = RankModel(self._means, self._weights, self.min, self.max)
        return self._model

    def quantile(self, q: float) -> float:
        model = self._rank_model()
        q = float(q)
        if not 0.0 <= q <= 1.0:
            raise DomainError(f"quantile must lie in [0, 1], got {q!r}")
        return model.quantile(q)

    def cdf(self, x: float) -> float:
        model = self._rank_model()
        x = float(x)
        if math.isnan(x):
            raise DomainError("cdf of NaN")
        return model.cdf(x)

    def quantile_array(self, q) -> np.ndarray:
        """Vectorized :meth:`quantile`."""
        model = self._rank_model()
        q = np.asarray(q, dtype=np.float64)
        if not np.all((q >= 0.0) & (q <= 1.0)):
            raise DomainError("quantiles must lie in [0, 1]")
        return model.quantile_many(q)

    def cdf_array(self, x) -> np.ndarray:
        """Vectorized :meth:`cdf`."""
        model = self._rank_model()
        x = np.asarray(x, dtype=np.float64)
        if np.any(np.isnan(x)):
            raise DomainError("cdf of NaN")
        return model.cdf_many(x)

    def trimmed_mean(self, q_lo: float, q_hi: float) -> float:
        """Mean of the part of the distribution between quantiles ``q_lo`` and ``q_hi``.

        Every centroid owns the rank interval of its weight; a centroid cut by
        a boundary contributes its mean in proportion to the part inside.
        """
        self._rank_model()
        if not 0.0 <= q_lo < q_hi <= 1.0:
            raise DomainError(f"need 0 <= q_lo < q_hi <= 1, got ({q_lo!r}, {q_hi!r})")
        w = self._weights
        ends = np.cumsum(w)
        lo, hi = q_lo * self._total, q_hi * self._total
        share = np.clip(np.minimum(ends, hi) - np.maximum(ends - w, lo), 0.0, None)
        means = np.clip(self._means, self.min, self.max)
        return float(np.dot(share, means) / share.sum())

    # ------------------------------------------------------------------
    # size bound

    def k_sizes(self, delta: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """k-size of every centroid and of every adjacent pair at ``delta``.

        Positions are taken at the current total weight.
        """
        self._flush()
        delta = self.delta if delta is None else float(delta)
        w = self._weights
        if w.size == 0:
            return np.empty(0), np.empty(0)
        total = float(w.sum())
        scale = BoundScale(self.scale, delta, total)
        edges = np.concatenate(([0.0], np.cumsum(w))) / total
        edges[-1] = 1.0
        k = scale.forward_array(edges)
        with np.errstate(invalid="ignore"):
            single = k[1:] - k[:-1]
            pair = k[2:] - k[:-2]
        return single, pair

    def check_invariants(self, *, fully_merged: bool = True, delta: float | None = None, tol: float = 1e-9) -> None:
        """Raise ``AssertionError`` describing the first violated invariant."""
        self._flush()
        means, w = self._means, self._weights
        if np.any(np.diff(means) < 0):
            raise AssertionError("centroid means are not sorted")
        total = math.fsum(w.tolist())
        if not math.isclose(total, self._total, rel_tol=1e-12):
            raise AssertionError(f"centroid weights sum to {total!r}, total_weight is {self._total!r}")
        if means.size and (means[0] < self.min - tol * max(1.0, abs(self.min)) or means[-1] > self.max + tol * max(1.0, abs(self.max))):
            raise AssertionError("centroid means fall outside [min, max]")
        if not fully_merged or means.size == 0:
            return
        single, pair = self.k_sizes(delta)
        bad = np.flatnonzero((w > 1) & ~(single <= 1.0 + tol))
        if bad.size:
            i = int(bad[0])
            raise AssertionError(f"centroid {i} (weight {w[i]:g}) has k-size {single[i]!r} > 1")
        bad = np.flatnonzero(~(pair > 1.0))
        if bad.size:
            i = int(bad[0])
            raise AssertionError(f"centroids {i} and {i + 1} could be merged (combined k-size {pair[i]!r})")


def merge_digests(digests: Sequence[TDigest], out_delta: float | None = None, policy: MergePolicy | None = None) -> TDigest:
    """Combine digests into one fully merged digest at ``out_delta``.

    ``out_delta`` defaults to the smallest input compression and may not
    exceed it.  The result continues the first input's scan alternation, so
    merging a digest with empty ones is the same as compressing it.
    """
    digests = list(digests)
    if not digests:
        raise ConfigurationError("merge_digests needs at least one digest")
    kinds = {d.scale for d in digests}
    if len(kinds) > 1:
        raise IncompatibleDigestError("cannot merge digests with different scale functions: " + ", ".join(sorted(k.value for k in kinds)))
    smallest = min(d.delta for d in digests)
    if out_delta is None:
        out_delta = smallest
    if out_delta > smallest:
        raise IncompatibleDigestError(f"out_delta {out_delta:g} exceeds the compression {smallest:g} of an input digest")
    first = digests[0]
    tracked = all(d.track_ranges for d in digests)
    result = TDigest(out_delta, first.scale, policy if policy is not None else first.policy, track_ranges=tracked)
    result._reverse_next = first._reverse_next

    means, weights, los, his = [], [], [], []
    for d in digests:
        n = d._buf_n
        means += [d._means, d._buf_values[:n]]
        weights += [d._weights, d._buf_weights[:n]]
        if tracked:
            los += [d._lo, d._buf_values[:n]]
            his += [d._hi, d._buf_values[:n]]
        result._total += d._total
        result.min = min(result.min, d.min)
        result.max = max(result.max, d.max)
    lo = np.concatenate(los) if tracked else None
    hi = np.concatenate(his) if tracked else None
    result._merge_in(np.concatenate(means), np.concatenate(weights), result.delta, lo=lo, hi=hi)
    return result


def measure_overlap(digest: TDigest) -> int:
    """Smallest offset ``D`` such that every sample of centroid ``i`` is at
    least every sample of centroid ``j`` whenever ``i > j + D``."""
    lo, hi = digest.ranges
    m = lo.size
    if m < 2:
        return 0
    idx = np.arange(m)
    # violation: a later centroid holds a sample below an earlier centroid's largest
    later = idx[:, None] > idx[None, :]
    violates = later & (lo[:, None] < hi[None, :])
    if not violates.any():
        return 0
    gaps = np.where(violates, idx[:, None] - idx[None, :], 0)
    return int(gaps.max())

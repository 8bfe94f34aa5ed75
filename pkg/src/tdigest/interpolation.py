"""Piecewise-linear rank model over a centroid sequence.

The model is a list of knots ``(x, lo, hi)`` in rank units: the cumulative
weight jumps from ``lo`` to ``hi`` at ``x`` and is linear between the ``hi`` of
one knot and the ``lo`` of the next.  Knots come from

* multi-sample centroids: a continuous knot at the mean holding half the
  centroid's weight on each side,
* single samples: a jump of their full weight at the mean,
* the extreme samples: a terminal multi-sample centroid gives up one sample as
  a jump at ``min``/``max``; a terminal centroid of weight 2 becomes two single
  samples at the extremum and its reflection through the mean,
* centroids whose mean equals ``min`` or ``max``, which can only hold copies of
  that extremum and so become a jump of their whole weight.

Knots at the same ``x`` are fused, so duplicate means turn into a single step.

``cdf`` evaluates the model directly and returns the mid-point of any step.
``quantile`` inverts it, except that each jump made of single samples is
squeezed to the sample mid-ranks (half a unit in from each end).  That is the
mid-rank convention of :mod:`tdigest.oracle`, so an all-singleton digest
answers exactly like the sorted samples.
"""

from __future__ import annotations

import numpy as np


class RankModel:
    __slots__ = ("total", "xmin", "xmax", "x", "lo", "hi", "_qt", "_qx")

    def __init__(self, means, weights, xmin: float, xmax: float):
        means = np.clip(np.asarray(means, dtype=np.float64), xmin, xmax)
        weights = np.asarray(weights, dtype=np.float64)
        self.total = float(weights.sum())
        self.xmin = float(xmin)
        self.xmax = float(xmax)

        starts = np.concatenate(([0.0], np.cumsum(weights)[:-1]))
        knots = []  # [x, lo, hi, squeeze_lo, squeeze_hi]

        def point(x, lo, w):
            s = min(0.5, w / 2.0)
            knots.append([x, lo, lo + w, s, s])

        m = means.size
        for i in range(m):
            mu = float(means[i])
            w = float(weights[i])
            start = float(starts[i])
            first = i == 0
            last = i == m - 1
            if w <= 1.0 or mu == xmin or mu == xmax:
                point(mu, start, w)
            elif w == 2.0 and (first or last):
                if first and last:
                    a, b = xmin, xmax
                elif first:
                    a = xmin
                    b = min(2.0 * mu - xmin, float(means[i + 1]))
                else:
                    a = max(2.0 * mu - xmax, float(means[i - 1]))
                    b = xmax
                point(a, start, 1.0)
                point(b, start + 1.0, 1.0)
            else:
                half = w / 2.0
                if first:
                    if w > 2.0:
                        knots.append([xmin, 0.0, 1.0, 0.0, 0.0])
                    else:
                        knots.append([xmin, 0.0, 0.0, 0.0, 0.0])
                knots.append([mu, start + half, start + half, 0.0, 0.0])
                if last:
                    if w > 2.0:
                        knots.append([xmax, self.total - 1.0, self.total, 0.0, 0.0])
                    else:
                        knots.append([xmax, self.total, self.total, 0.0, 0.0])

        fused = []
        for k in knots:
            if fused and k[0] == fused[-1][0]:
                fused[-1][2] = k[2]
                fused[-1][4] = k[4]
            else:
                fused.append(k)

        arr = np.array(fused, dtype=np.float64).reshape(-1, 5)
        self.x = arr[:, 0]
        self.lo = arr[:, 1]
        self.hi = arr[:, 2]
        # quantile polyline: each knot spans [lo + squeeze_lo, hi - squeeze_hi] in rank
        t = np.empty(2 * len(arr))
        t[0::2] = arr[:, 1] + arr[:, 3]
        t[1::2] = np.maximum(arr[:, 2] - arr[:, 4], t[0::2])
        self._qt = np.maximum.accumulate(t)
        self._qx = np.repeat(self.x, 2)

    def cdf(self, x: float) -> float:
        xs = self.x
        if x < xs[0]:
            return 0.0
        if x > xs[-1]:
            return 1.0
        j = int(np.searchsorted(xs, x, side="left"))
        if xs[j] == x:
            rank = 0.5 * (self.lo[j] + self.hi[j])
        else:
            x0, x1 = xs[j - 1], xs[j]
            r0, r1 = self.hi[j - 1], self.lo[j]
            rank = r0 + (x - x0) / (x1 - x0) * (r1 - r0)
        return float(rank / self.total)

    def quantile(self, q: float) -> float:
        if q <= 0.0:
            return self.xmin
        if q >= 1.0:
            return self.xmax
        return float(np.interp(q * self.total, self._qt, self._qx))

    def cdf_many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        knots = self.x
        j = np.clip(np.searchsorted(knots, xs, side="left"), 1, knots.size - 1) if knots.size > 1 else np.zeros(xs.shape, dtype=np.intp)
        out = np.empty(xs.shape)
        if knots.size > 1:
            x0, x1 = knots[j - 1], knots[j]
            r0, r1 = self.hi[j - 1], self.lo[j]
            with np.errstate(invalid="ignore", divide="ignore"):
                out = r0 + (xs - x0) / (x1 - x0) * (r1 - r0)
        exact = np.searchsorted(knots, xs, side="left")
        exact_c = np.minimum(exact, knots.size - 1)
        hit = knots[exact_c] == xs
        out = np.where(hit, 0.5 * (self.lo[exact_c] + self.hi[exact_c]), out) / self.total
        out = np.where(xs < knots[0], 0.0, np.where(xs > knots[-1], 1.0, out))
        return out

    def quantile_many(self, qs) -> np.ndarray:
        qs = np.asarray(qs, dtype=np.float64)
        out = np.interp(qs * self.total, self._qt, self._qx)
        return np.where(qs <= 0.0, self.xmin, np.where(qs >= 1.0, self.xmax, out))

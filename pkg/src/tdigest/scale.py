"""Scale functions mapping a quantile ``q`` to a notional cluster index ``k``.

A cluster whose quantile span is ``[q_left, q_right]`` is admissible when
``k(q_right) - k(q_left) <= 1``.  The functions differ in how strongly they
shrink clusters near ``q = 0`` and ``q = 1``:

========  ==============================================  ===============
kind      k(q)                                            tail cluster size
========  ==============================================  ===============
``k0``    delta * q / 2                                   constant
``k1``    delta / (2 pi) * asin(2q - 1)                   ~ sqrt(q(1-q))
``k2``    delta / Z * log(q / (1 - q))                    ~ q(1-q)
``k3``    delta / Z' * (log 2q | -log 2(1-q))             ~ min(q, 1-q)
``k2u``   delta * log(q / (1 - q))                        ~ q(1-q)
``k3u``   delta * (log 2q | -log 2(1-q))                  ~ min(q, 1-q)
========  ==============================================  ===============

with ``Z = 4 log(n / delta) + 24`` and ``Z' = 4 log(n / delta) + 21``, both
floored at 1 so that tiny digests (``n`` far below ``delta``) keep a finite,
increasing scale.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .exceptions import DomainError

__all__ = [
    "ScaleFunction",
    "BoundScale",
    "k_forward",
    "k_inverse",
    "k_size",
    "max_cluster_weight",
]


class ScaleFunction(enum.Enum):
    K0 = "k0"
    K1 = "k1"
    K2 = "k2"
    K3 = "k3"
    K2_UNNORMALIZED = "k2u"
    K3_UNNORMALIZED = "k3u"

    @classmethod
    def parse(cls, value: "ScaleFunction | str") -> "ScaleFunction":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise DomainError(f"unknown scale function {value!r} (expected one of {names})") from None

    @property
    def code(self) -> int:
        """Stable small-integer tag used by the wire format."""
        return _CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "ScaleFunction":
        return _KINDS_BY_CODE[code]

    @property
    def uses_total_weight(self) -> bool:
        return self in (ScaleFunction.K2, ScaleFunction.K3)

    @property
    def is_antisymmetric(self) -> bool:
        return self is not ScaleFunction.K0


_CODES = {kind: i for i, kind in enumerate(ScaleFunction)}
_KINDS_BY_CODE = {i: kind for kind, i in _CODES.items()}


def _logistic(t: float) -> float:
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


class BoundScale:
    """A scale function with ``delta`` and ``n`` fixed.

    The merge pass evaluates the scale once per emitted centroid, so the
    normalizing constants are computed here once rather than per call.
    """

    __slots__ = ("kind", "delta", "n", "_factor", "k_min", "k_max")

    def __init__(self, kind: ScaleFunction, delta: float, n: float = 1.0):
        kind = ScaleFunction.parse(kind)
        if not delta > 0 or math.isinf(delta):
            raise DomainError(f"compression must be positive and finite, got {delta!r}")
        self.kind = kind
        self.delta = float(delta)
        self.n = float(n)
        if kind is ScaleFunction.K0:
            self._factor = self.delta / 2.0
            self.k_min, self.k_max = 0.0, self._factor
        elif kind is ScaleFunction.K1:
            self._factor = self.delta / (2.0 * math.pi)
            self.k_min, self.k_max = -self.delta / 4.0, self.delta / 4.0
        else:
            if kind.uses_total_weight:
                if not n > 0:
                    raise DomainError(f"total weight must be positive for {kind.value}, got {n!r}")
                offset = 24.0 if kind is ScaleFunction.K2 else 21.0
                self._factor = self.delta / max(1.0, 4.0 * math.log(self.n / self.delta) + offset)
            else:
                self._factor = self.delta
            self.k_min, self.k_max = -math.inf, math.inf

    def forward(self, q: float) -> float:
        kind = self.kind
        if kind is ScaleFunction.K0:
            return self._factor * q
        if kind is ScaleFunction.K1:
            return self._factor * math.asin(2.0 * q - 1.0)
        if q <= 0.0:
            return -math.inf
        if q >= 1.0:
            return math.inf
        if kind is ScaleFunction.K2 or kind is ScaleFunction.K2_UNNORMALIZED:
            return self._factor * math.log(q / (1.0 - q))
        if q <= 0.5:
            return self._factor * math.log(2.0 * q)
        return -self._factor * math.log(2.0 * (1.0 - q))

    def forward_array(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=np.float64)
        kind = self.kind
        with np.errstate(divide="ignore", invalid="ignore"):
            if kind is ScaleFunction.K0:
                k = self._factor * q
            elif kind is ScaleFunction.K1:
                k = self._factor * np.arcsin(np.clip(2.0 * q - 1.0, -1.0, 1.0))
            elif kind is ScaleFunction.K2 or kind is ScaleFunction.K2_UNNORMALIZED:
                k = self._factor * (np.log(q) - np.log1p(-q))
            else:
                k = np.where(q <= 0.5, self._factor * np.log(2.0 * q), -self._factor * np.log(2.0 * (1.0 - q)))
            if self.k_min == -math.inf:
                k = np.where(q <= 0.0, -np.inf, np.where(q >= 1.0, np.inf, k))
        return k

    def inverse(self, k: float) -> float:
        if k <= self.k_min:
            return 0.0
        if k >= self.k_max:
            return 1.0
        kind = self.kind
        if kind is ScaleFunction.K0:
            q = k / self._factor
        elif kind is ScaleFunction.K1:
            q = (math.sin(k / self._factor) + 1.0) / 2.0
        elif kind is ScaleFunction.K2 or kind is ScaleFunction.K2_UNNORMALIZED:
            q = _logistic(k / self._factor)
        else:
            s = k / self._factor
            q = math.exp(s) / 2.0 if s <= 0 else 1.0 - math.exp(-s) / 2.0
        return min(1.0, max(0.0, q))

    def upper_limit(self, q_left: float) -> float:
        """Largest right edge ``q`` admissible for a cluster starting at ``q_left``."""
        return self.inverse(self.forward(q_left) + 1.0)

    def lower_limit(self, q_right: float) -> float:
        """Smallest left edge admissible for a cluster ending at ``q_right``."""
        return self.inverse(self.forward(q_right) - 1.0)


def _check_q(q: float) -> float:
    q = float(q)
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"quantile must lie in [0, 1], got {q!r}")
    return q


def k_forward(kind: ScaleFunction | str, q: float, delta: float, n: float = 1.0) -> float:
    """Notional index ``k(q)``; infinite at the ends for the logarithmic kinds."""
    return BoundScale(kind, delta, n).forward(_check_q(q))


def k_inverse(kind: ScaleFunction | str, k: float, delta: float, n: float = 1.0) -> float:
    """Quantile ``q`` with ``k(q) == k``.  Out-of-range ``k`` is clamped."""
    return BoundScale(kind, delta, n).inverse(float(k))


def k_size(kind: ScaleFunction | str, q_left: float, q_right: float, delta: float, n: float = 1.0) -> float:
    scale = BoundScale(kind, delta, n)
    return scale.forward(_check_q(q_right)) - scale.forward(_check_q(q_left))


def max_cluster_weight(kind: ScaleFunction | str, q_left: float, delta: float, n: float) -> float:
    """Largest weight a cluster starting at ``q_left`` may hold, never below 1."""
    q_left = _check_q(q_left)
    scale = BoundScale(kind, delta, n)
    return max(1.0, float(n) * (scale.upper_limit(q_left) - q_left))

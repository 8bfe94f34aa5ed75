"""scikit-learn transformer that maps each feature through a per-column digest.

``transform`` returns estimated CDF values (a streaming quantile normalizer);
``inverse_transform`` maps fractions back to feature units.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .digest import MergePolicy, TDigest
from .scale import ScaleFunction


class TDigestTransformer(TransformerMixin, BaseEstimator):
    """Per-feature t-digest quantile transformer.

    Parameters
    ----------
    delta : float, default=100
        Compression of every column digest.
    scale : str, default="k2"
        Scale function name.
    buffer_capacity : int or None
        Insertion buffer size; ``None`` uses ``10 * ceil(delta)``.
    stratify_factor : float, default=3
        Working compression multiplier used while ingesting.
    alternate_scan : bool, default=True
        Alternate the scan direction of successive merges.

    Attributes
    ----------
    digests_ : list of TDigest
        One fitted digest per input column.
    n_features_in_ : int
    """

    def __init__(self, delta=100.0, scale="k2", buffer_capacity=None, stratify_factor=3.0, alternate_scan=True):
        self.delta = delta
        self.scale = scale
        self.buffer_capacity = buffer_capacity
        self.stratify_factor = stratify_factor
        self.alternate_scan = alternate_scan

    def _new_digest(self) -> TDigest:
        policy = MergePolicy(
            buffer_capacity=self.buffer_capacity,
            working_delta_factor=self.stratify_factor,
            alternate_scan=self.alternate_scan,
        )
        return TDigest(self.delta, ScaleFunction.parse(self.scale), policy)

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64)
        self.digests_ = [self._new_digest() for _ in range(X.shape[1])]
        return self._ingest(X)

    def partial_fit(self, X, y=None):
        """Add a batch of rows; the first call behaves like :meth:`fit`."""
        first = not hasattr(self, "digests_")
        X = validate_data(self, X, dtype=np.float64, reset=first)
        if first:
            self.digests_ = [self._new_digest() for _ in range(X.shape[1])]
        return self._ingest(X)

    def _ingest(self, X):
        for column, digest in zip(X.T, self.digests_):
            digest.update(column)
            digest.compress()
        return self

    def transform(self, X):
        check_is_fitted(self, "digests_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        out = np.empty_like(X)
        for j, digest in enumerate(self.digests_):
            out[:, j] = digest.cdf_array(X[:, j])
        return out

    def inverse_transform(self, X):
        check_is_fitted(self, "digests_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        out = np.empty_like(X)
        for j, digest in enumerate(self.digests_):
            out[:, j] = digest.quantile_array(X[:, j])
        return out

    def quantiles(self, q):
        """Array of shape ``(len(q), n_features)`` with each column's quantiles."""
        check_is_fitted(self, "digests_")
        q = np.atleast_1d(np.asarray(q, dtype=np.float64))
        return np.column_stack([d.quantile_array(q) for d in self.digests_])

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.input_tags.allow_nan = False
        return tags

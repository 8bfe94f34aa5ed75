"""t-digest: mergeable streaming sketch for quantiles, CDF values and trimmed means."""

from .codec import Encoding, decode, encode
from .digest import MIN_DELTA, Centroid, MergePolicy, TDigest, measure_overlap, merge_digests
from .exceptions import (
    CodecError,
    ConfigurationError,
    DomainError,
    EmptyDigestError,
    IncompatibleDigestError,
    InvalidSampleError,
    TDigestError,
)
from .oracle import SampleSet, exact_cdf, exact_quantile, exact_trimmed_mean
from .scale import ScaleFunction, k_forward, k_inverse, k_size, max_cluster_weight

__version__ = "0.1.0"

__all__ = [
    "MIN_DELTA",
    "Centroid",
    "CodecError",
    "ConfigurationError",
    "DomainError",
    "EmptyDigestError",
    "Encoding",
    "IncompatibleDigestError",
    "InvalidSampleError",
    "MergePolicy",
    "SampleSet",
    "ScaleFunction",
    "TDigest",
    "TDigestError",
    "decode",
    "encode",
    "exact_cdf",
    "exact_quantile",
    "exact_trimmed_mean",
    "k_forward",
    "k_inverse",
    "k_size",
    "max_cluster_weight",
    "measure_overlap",
    "merge_digests",
]

"""Accuracy, size, ordering and parallel-merge experiments.

Each ``bench_*`` function returns a list of row dicts in a deterministic order
(trial index, then sweep parameters).  The CLI writes them out as CSV.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field, replace

import numpy as np

from . import codec
from .exceptions import ConfigurationError
from .digest import MergePolicy, TDigest, measure_overlap, merge_digests
from .generators import GENERATORS, make_samples, trial_rng
from .oracle import SampleSet
from .scale import ScaleFunction

ACCURACY_QS = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.5)
SWEEP_DELTAS = (20, 50, 100, 200, 500, 1000)
PARALLEL_WAYS = (5, 20, 100)
PARALLEL_QS = (0.01, 0.5, 0.99)
OVERLAP_WORKING_DELTA = 316.0


def mirrored(qs):
    """``qs`` together with ``1 - q`` for every ``q < 0.5``, ascending."""
    return tuple(sorted(set(qs) | {1.0 - q for q in qs if q < 0.5}))


@dataclass(frozen=True)
class ExperimentConfig:
    generator: str = "uniform"
    sample_count: int = 1_000_000
    trials: int = 20
    delta: float = 100.0
    scale: ScaleFunction = ScaleFunction.K2
    policy: MergePolicy = field(default_factory=MergePolicy)
    seed: int = 42

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ConfigurationError(f"unknown generator {self.generator!r}")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.sample_count < 1:
            raise ConfigurationError("sample_count must be >= 1")
        object.__setattr__(self, "scale", ScaleFunction.parse(self.scale))

    def samples(self, trial: int) -> np.ndarray:
        return make_samples(self.generator, self.sample_count, trial_rng(self.seed, trial))


def build(values, delta, scale, policy=None, *, track_ranges=False) -> TDigest:
    digest = TDigest(delta, scale, policy, track_ranges=track_ranges)
    digest.update(values)
    digest.compress()
    digest.check_invariants()
    return digest


def _errors(digest: TDigest, exact: SampleSet, qs):
    out = []
    for q in qs:
        truth = exact.quantile(q)
        err = abs(digest.quantile(q) - truth)
        if err == 0.0:
            rel = 0.0
        else:
            rel = err / abs(truth) if truth != 0.0 else math.inf
        out.append((q, err, rel))
    return out


def _summary(values):
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


def bench_accuracy(config: ExperimentConfig, scales=None, qs=ACCURACY_QS):
    """Per-trial absolute and relative quantile errors against the exact samples."""
    scales = [ScaleFunction.parse(s) for s in (scales or [config.scale])]
    probes = mirrored(qs)
    rows = []
    collected = {}
    for trial in range(config.trials):
        values = config.samples(trial)
        exact = SampleSet(values)
        for kind in scales:
            digest = build(values, config.delta, kind, config.policy)
            for q, err, rel in _errors(digest, exact, probes):
                rows.append({"scale": kind.value, "q": q, "trial": trial, "abs_error": err, "rel_error": rel})
                collected.setdefault((kind.value, q), []).append((err, rel))
    for kind in scales:
        for q in probes:
            errs = collected[(kind.value, q)]
            a_mean, a_std = _summary([e for e, _ in errs])
            r_mean, r_std = _summary([r for _, r in errs])
            rows.append({"scale": kind.value, "q": q, "trial": "mean", "abs_error": a_mean, "rel_error": r_mean})
            rows.append({"scale": kind.value, "q": q, "trial": "std", "abs_error": a_std, "rel_error": r_std})
    return rows


def bench_size(config: ExperimentConfig, deltas=SWEEP_DELTAS, qs=ACCURACY_QS, encoding="full"):
    """Error and digest size as a function of compression.

    ``centroid_count`` and ``image_octets`` are the largest seen over all trials.
    """
    errors = {}
    counts = {}
    octets = {}
    for trial in range(config.trials):
        values = config.samples(trial)
        exact = SampleSet(values)
        for delta in deltas:
            digest = build(values, delta, config.scale, config.policy)
            counts[delta] = max(counts.get(delta, 0), digest.centroid_count)
            octets[delta] = max(octets.get(delta, 0), len(codec.encode(digest, encoding)))
            for q, err, _ in _errors(digest, exact, qs):
                errors.setdefault((delta, q), []).append(err)
    rows = []
    for delta in deltas:
        for q in qs:
            rows.append({
                "delta": delta,
                "q": q,
                "mean_abs_error": statistics.fmean(errors[(delta, q)]),
                "centroid_count": counts[delta],
                "image_octets": octets[delta],
            })
    return rows


OVERLAP_POLICIES = {
    "stratified": lambda delta: MergePolicy(working_delta_factor=max(1.0, OVERLAP_WORKING_DELTA / delta), alternate_scan=True),
    "unidirectional": lambda delta: MergePolicy(working_delta_factor=1.0, alternate_scan=False),
}


def bench_overlap(config: ExperimentConfig, policies=("stratified", "unidirectional")):
    """Measured ordering offset of digests built under different merge policies."""
    rows = []
    for trial in range(config.trials):
        values = config.samples(trial)
        for name in policies:
            policy = OVERLAP_POLICIES[name](config.delta)
            if config.policy.buffer_capacity is not None:
                policy = replace(policy, buffer_capacity=config.policy.buffer_capacity)
            digest = build(values, config.delta, config.scale, policy, track_ranges=True)
            rows.append({"policy": name, "trial": trial, "Delta": measure_overlap(digest)})
    return rows


def parallel_digests(values, ways, delta, scale, policy, sub_delta, sub_policy):
    """Partition ``values`` into ``ways`` equal parts, digest each, merge at ``delta``."""
    subs = [build(part, sub_delta, scale, sub_policy) for part in np.array_split(values, ways)]
    return merge_digests(subs, delta, policy)


def bench_parallel(config: ExperimentConfig, ways=PARALLEL_WAYS, qs=PARALLEL_QS, sub_factor=2.0):
    """Direct stratified build versus stratified and flat parallel merges."""
    flat = MergePolicy(buffer_capacity=config.policy.buffer_capacity, working_delta_factor=1.0, alternate_scan=False)
    rows = []
    for trial in range(config.trials):
        values = config.samples(trial)
        exact = SampleSet(values)
        direct = build(values, config.delta, config.scale, config.policy)
        direct_err = _errors(direct, exact, qs)
        for w in ways:
            strategies = {
                "direct": direct_err,
                "stratified": _errors(
                    parallel_digests(values, w, config.delta, config.scale, config.policy, sub_factor * config.delta, config.policy),
                    exact, qs),
                "flat": _errors(
                    parallel_digests(values, w, config.delta, config.scale, flat, config.delta, flat),
                    exact, qs),
            }
            for name, errs in strategies.items():
                for q, err, _ in errs:
                    rows.append({"ways": w, "strategy": name, "trial": trial, "q": q, "abs_error": err})
    return rows

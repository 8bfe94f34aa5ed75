"""Seeded sample generators for the experiment harness.

All randomness comes from numpy's PCG64 bit generator (``numpy.random.default_rng``).
Trial ``t`` of a run seeded with ``s`` draws from ``default_rng([s, t])``, so any
single trial can be reproduced on its own.  Uniform variates use the 53 high
bits of a 64-bit draw (``Generator.random``); exponential variates are
``-log(u)`` with ``u = 1 - Generator.random()`` in ``(0, 1]``.
"""

from __future__ import annotations

import numpy as np

GENERATORS = ("uniform", "exponential", "ascending", "constant", "mixture")

CONSTANT_VALUE = 1.0


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, int(trial)])


def make_samples(generator: str, n: int, rng: np.random.Generator) -> np.ndarray:
    if generator == "uniform":
        return rng.random(n)
    if generator == "exponential":
        return -np.log(1.0 - rng.random(n))
    if generator == "ascending":
        return np.sort(rng.random(n))
    if generator == "constant":
        return np.full(n, CONSTANT_VALUE)
    if generator == "mixture":
        # half the stream repeats one of ten values, the rest is uniform
        repeated = rng.integers(0, 10, n) / 10.0
        return np.where(rng.random(n) < 0.5, repeated, rng.random(n))
    raise ValueError(f"unknown generator {generator!r} (expected one of {', '.join(GENERATORS)})")

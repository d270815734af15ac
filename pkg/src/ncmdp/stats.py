"""Bootstrap summaries for small seed ensembles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import make_rng


@dataclass(frozen=True)
class BootstrapResult:
    """Percentile bootstrap summary of a sample mean."""

    mean: float
    lower: float
    upper: float
    resamples: int
    seed: int


def bootstrap_ci(samples, resamples: int = 10_000, seed: int = 0) -> BootstrapResult:
    """95% percentile bootstrap interval of the mean; deterministic per seed."""
    data = np.asarray(list(samples), dtype=float)
    if data.size < 2:
        raise ValueError(f"need at least two samples, got {data.size}")
    if resamples < 1:
        raise ValueError("resamples must be positive")
    rng = make_rng(seed, 7)
    draws = rng.integers(0, data.size, size=(resamples, data.size))
    means = data[draws].mean(axis=1)
    lower, upper = np.percentile(means, [2.5, 97.5])
    return BootstrapResult(float(data.mean()), float(lower), float(upper),
                           resamples, seed)

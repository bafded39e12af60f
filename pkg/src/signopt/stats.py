"""Measurement procedures: single-pass Welford moments, the vector density
measure, signal-to-noise ratios, empirical sign-error rates, and noise
histograms.

The density phi(v) = ||v||_1^2 / (d ||v||_2^2) is 1 for a uniform-magnitude
vector and 1/d for a one-hot vector; the ratios of gradient, noise and
curvature densities decide which geometry regime a problem sits in. Welford
accumulation is numerically stable, takes a single pass, and merges across
parallel shards with the standard pairwise combine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .core import ObjectiveSpec, as_vector, make_rng
from .problems import NoiseModel


@dataclass
class WelfordAccumulator:
    """Running per-coordinate count/mean/M2; single writer per instance."""

    dim: int
    count: int = 0
    mean: np.ndarray = None
    m2: np.ndarray = None

    def __post_init__(self):
        if self.mean is None:
            self.mean = np.zeros(self.dim)
        if self.m2 is None:
            self.m2 = np.zeros(self.dim)


def welford_update(acc: WelfordAccumulator, sample: np.ndarray) -> WelfordAccumulator:
    """Fold one sample vector into the accumulator (mutates and returns it)."""
    x = as_vector(sample, acc.dim)
    acc.count += 1
    delta = x - acc.mean
    acc.mean = acc.mean + delta / acc.count
    acc.m2 = acc.m2 + delta * (x - acc.mean)
    return acc


def welford_finalize(acc: WelfordAccumulator) -> Tuple[np.ndarray, np.ndarray]:
    """(mean, population variance m2/count); errors on an empty accumulator."""
    if acc.count < 1:
        raise ValueError("cannot finalize an empty accumulator")
    return acc.mean.copy(), acc.m2 / acc.count


def welford_merge(a: WelfordAccumulator, b: WelfordAccumulator) -> WelfordAccumulator:
    """Pairwise combine of two shards; equals single-stream accumulation."""
    if a.dim != b.dim:
        raise ValueError("accumulator dimensions do not match")
    if a.count == 0:
        return WelfordAccumulator(dim=b.dim, count=b.count, mean=b.mean.copy(), m2=b.m2.copy())
    if b.count == 0:
        return WelfordAccumulator(dim=a.dim, count=a.count, mean=a.mean.copy(), m2=a.m2.copy())
    n = a.count + b.count
    delta = b.mean - a.mean
    mean = a.mean + delta * (b.count / n)
    m2 = a.m2 + b.m2 + delta ** 2 * (a.count * b.count / n)
    return WelfordAccumulator(dim=a.dim, count=n, mean=mean, m2=m2)


def density(v: np.ndarray) -> float:
    """phi(v) = ||v||_1^2 / (d ||v||_2^2), in [1/d, 1]; undefined at zero."""
    v = np.asarray(v, dtype=np.float64)
    l1 = float(np.sum(np.abs(v)))
    l2sq = float(np.sum(v * v))
    if l2sq == 0.0:
        raise ValueError("density undefined for the zero vector")
    return l1 * l1 / (v.size * l2sq)


def snr(g: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Per-coordinate |g_i|/sigma_i; +inf where sigma_i = 0 (noiseless)."""
    g = np.asarray(g, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma < 0):
        raise ValueError("sigma must be non-negative")
    with np.errstate(divide="ignore"):
        return np.where(sigma > 0, np.abs(g) / np.where(sigma > 0, sigma, 1.0), np.inf)


def measure_gradient_stats(objective: ObjectiveSpec, noise: NoiseModel, x: np.ndarray,
                           samples: int, seed: int = 0):
    """Welford moments of the stochastic gradient at a fixed point.

    Returns (mean, sigma_hat, phi_g, phi_sigma): the estimated mean gradient,
    the per-coordinate std estimate, and their densities (NaN for an exactly
    zero vector, where the density is undefined).
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    x = as_vector(x, objective.dim)
    rng = make_rng(seed)
    g = objective.gradient(x)
    acc = WelfordAccumulator(dim=objective.dim)
    # One (samples, d) draw block; identical stream to repeated single draws.
    rows = g + noise.sample_batch(samples, objective.dim, rng)
    for row in rows:
        welford_update(acc, row)
    mean, var = welford_finalize(acc)
    sigma_hat = np.sqrt(var)

    def _phi(v):
        return density(v) if np.any(v != 0) else math.nan

    return mean, sigma_hat, _phi(mean), _phi(sigma_hat)


def empirical_sign_error(noise: NoiseModel, g_value: float, sigma: float,
                         trials: int, seed: int = 0) -> float:
    """Fraction of draws g_value + sigma*eps whose sign differs from
    sign(g_value), with the g = 0 case counted as positive."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = make_rng(seed)
    draws = g_value + sigma * noise.standard_samples(trials, rng)
    truth_positive = g_value >= 0
    wrong = (draws >= 0) != truth_positive
    return float(np.mean(wrong))


@dataclass(frozen=True)
class Histogram:
    """Equal-width histogram; edges strictly increasing, counts sum to n."""

    bin_edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.bin_edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")


def noise_histogram(noise: NoiseModel, g_value: float, sigma: float, trials: int,
                    bins: int, seed: int = 0) -> Histogram:
    """Histogram of the noise (draws minus g_value), equal-width bins over
    the sample range."""
    if bins < 1 or trials < bins:
        raise ValueError("need trials >= bins >= 1")
    rng = make_rng(seed)
    samples = sigma * noise.standard_samples(trials, rng)
    counts, edges = np.histogram(samples, bins=bins)
    return Histogram(bin_edges=edges, counts=counts)


def symmetry_statistic(samples: np.ndarray) -> float:
    """|#left - #right| / n about the empirical mean; small under symmetry."""
    samples = np.asarray(samples, dtype=np.float64)
    center = samples.mean()
    left = int(np.sum(samples < center))
    right = int(np.sum(samples > center))
    return abs(left - right) / samples.size

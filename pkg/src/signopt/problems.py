"""Synthetic objectives and noise models with analytically known constants.

Every noise model here is zero-mean additive noise with an exactly known
per-coordinate standard deviation vector, so the oracle contract (unbiased,
coordinate-bounded variance) holds by construction and bound checks can use
closed-form constants. The skewed two-point model is the classic pathology
for majority voting: a variable that is almost always on the wrong side of
its own mean, so adding voters makes the aggregate sign *worse*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import ObjectiveSpec, StochasticOracle, as_vector, make_rng, worker_seed, INIT_STREAM


class NoiseModel:
    """Zero-mean additive gradient noise with exact per-coordinate std.

    ``sample_batch(n, dim, rng)`` returns n independent noise rows;
    ``standard_samples(size, rng)`` returns samples of the model's scalar
    shape normalized to unit variance (used by the measurement helpers,
    which scale them by an explicit sigma).
    """

    def sigma_vector(self, dim: int) -> np.ndarray:
        raise NotImplementedError

    def sample_batch(self, n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def standard_samples(self, size, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


class NoNoise(NoiseModel):
    """Deterministic oracle: the draw is the exact gradient."""

    def sigma_vector(self, dim):
        return np.zeros(dim)

    def sample_batch(self, n, dim, rng):
        return np.zeros((n, dim))

    def standard_samples(self, size, rng):
        return np.zeros(size)


class GaussianPerCoord(NoiseModel):
    """Independent Gaussian noise per coordinate, std broadcast from scalar."""

    def __init__(self, std):
        self.std = np.atleast_1d(np.asarray(std, dtype=np.float64))
        if np.any(self.std < 0):
            raise ValueError("std must be non-negative")

    def sigma_vector(self, dim):
        if self.std.size == 1:
            return np.full(dim, self.std[0])
        return as_vector(self.std, dim).copy()

    def sample_batch(self, n, dim, rng):
        return rng.standard_normal((n, dim)) * self.sigma_vector(dim)

    def standard_samples(self, size, rng):
        return rng.standard_normal(size)


class SparseGaussian(NoiseModel):
    """Gaussian noise on a listed set of coordinates, zero elsewhere."""

    def __init__(self, std: float, indices: Sequence[int] = (0,)):
        if std < 0:
            raise ValueError("std must be non-negative")
        self.std = float(std)
        self.indices = tuple(int(i) for i in indices)
        if any(i < 0 for i in self.indices):
            raise ValueError("index out of range")

    def _check(self, dim):
        if any(i >= dim for i in self.indices):
            raise ValueError("index out of range")

    def sigma_vector(self, dim):
        self._check(dim)
        s = np.zeros(dim)
        s[list(self.indices)] = self.std
        return s

    def sample_batch(self, n, dim, rng):
        self._check(dim)
        rows = np.zeros((n, dim))
        rows[:, list(self.indices)] = rng.standard_normal((n, len(self.indices))) * self.std
        return rows

    def standard_samples(self, size, rng):
        return rng.standard_normal(size)


class UniformPerCoord(NoiseModel):
    """Uniform noise on [-halfwidth, +halfwidth] per coordinate; std = hw/sqrt(3)."""

    def __init__(self, halfwidth):
        self.halfwidth = np.atleast_1d(np.asarray(halfwidth, dtype=np.float64))
        if np.any(self.halfwidth < 0):
            raise ValueError("halfwidth must be non-negative")

    def _hw(self, dim):
        if self.halfwidth.size == 1:
            return np.full(dim, self.halfwidth[0])
        return as_vector(self.halfwidth, dim)

    def sigma_vector(self, dim):
        return self._hw(dim) / math.sqrt(3.0)

    def sample_batch(self, n, dim, rng):
        return rng.uniform(-1.0, 1.0, (n, dim)) * self._hw(dim)

    def standard_samples(self, size, rng):
        return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size)


class SkewedTwoPoint(NoiseModel):
    """Two-point variable X = hi w.p. hi_prob, else lo, on one coordinate.

    Used two ways: recentred to zero mean it is additive noise like any other
    model; at a point where the true gradient coordinate equals the raw mean
    the stochastic draw *is* the raw variable, whose sign disagrees with the
    sign of its mean with probability 1 - hi_prob. Defaults reproduce the
    50 / -1 example with mean 4.1.
    """

    def __init__(self, hi: float = 50.0, hi_prob: float = 0.1, lo: float = -1.0,
                 coordinate: int = 0):
        if not 0.0 <= hi_prob <= 1.0:
            raise ValueError("hi_prob must be a probability")
        if coordinate < 0:
            raise ValueError("index out of range")
        self.hi = float(hi)
        self.hi_prob = float(hi_prob)
        self.lo = float(lo)
        self.coordinate = int(coordinate)

    @property
    def mean(self) -> float:
        return self.hi_prob * self.hi + (1.0 - self.hi_prob) * self.lo

    @property
    def std(self) -> float:
        second = self.hi_prob * self.hi ** 2 + (1.0 - self.hi_prob) * self.lo ** 2
        return math.sqrt(second - self.mean ** 2)

    def raw_samples(self, size, rng: np.random.Generator) -> np.ndarray:
        """Draws of the raw two-point variable itself."""
        return np.where(rng.random(size) < self.hi_prob, self.hi, self.lo)

    def sigma_vector(self, dim):
        if self.coordinate >= dim:
            raise ValueError("index out of range")
        s = np.zeros(dim)
        s[self.coordinate] = self.std
        return s

    def sample_batch(self, n, dim, rng):
        if self.coordinate >= dim:
            raise ValueError("index out of range")
        rows = np.zeros((n, dim))
        rows[:, self.coordinate] = self.raw_samples(n, rng) - self.mean
        return rows

    def standard_samples(self, size, rng):
        return (self.raw_samples(size, rng) - self.mean) / self.std


def draw_noisy_gradient(objective: ObjectiveSpec, noise: NoiseModel, x: np.ndarray,
                        rng: np.random.Generator) -> np.ndarray:
    """One unbiased stochastic gradient: gradient(x) plus a noise row."""
    x = as_vector(x, objective.dim)
    return objective.gradient(x) + noise.sample_batch(1, objective.dim, rng)[0]


@dataclass(frozen=True)
class QuadraticProblem:
    """Separable quadratic f(x) = 0.5 * sum_i a_i x_i^2 with a_i > 0.

    Gradient a .* x, per-coordinate smoothness exactly a, minimum 0 at the
    origin. The quadratic makes the majorization inequality an identity,
    which keeps bound checks free of modelling slack.
    """

    a: np.ndarray

    def __post_init__(self):
        a = as_vector(self.a)
        if np.any(a <= 0):
            raise ValueError("curvatures must be positive")
        object.__setattr__(self, "a", a)

    @property
    def dim(self) -> int:
        return self.a.size

    def value(self, x) -> float:
        return 0.5 * float(np.sum(self.a * np.asarray(x) ** 2))

    def gradient(self, x) -> np.ndarray:
        return self.a * np.asarray(x, dtype=np.float64)

    def spec(self, noise: Optional[NoiseModel] = None) -> ObjectiveSpec:
        sigma = noise.sigma_vector(self.dim) if noise is not None else np.zeros(self.dim)
        return ObjectiveSpec(dim=self.dim, value=self.value, gradient=self.gradient,
                             lipschitz=self.a.copy(), lower_bound=0.0, sigma=sigma)


TOY_DIM = 100
TOY_NOISE_STD = 100.0


def initial_point(dim: int, seed: int) -> np.ndarray:
    """Unit spherical Gaussian initial point from the run's init stream."""
    return make_rng(worker_seed(seed, INIT_STREAM)).standard_normal(dim)


def make_sparse_noise_problem(seed: int):
    """The sparse-noise toy: d=100 isotropic quadratic, N(0, 100^2) noise on
    the first coordinate only. Returns (objective, oracle); the oracle seed
    is the worker-0 stream of the given run seed, matching single-node runs.
    """
    quad = QuadraticProblem(np.ones(TOY_DIM))
    noise = SparseGaussian(TOY_NOISE_STD, (0,))
    objective = quad.spec(noise)
    oracle = StochasticOracle(objective, noise, seed=worker_seed(seed, 0))
    return objective, oracle

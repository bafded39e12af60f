"""Core numeric types: vectors, objectives, the stochastic-gradient oracle,
deterministic seeding, and per-run trajectory records.

Everything is plain float64 numpy. Vectors are 1-D arrays of fixed dimension.
An objective exposes its analytic gradient together with the per-coordinate
smoothness vector, a lower bound, and (optionally) the per-coordinate noise
scale of the oracle attached to it; these are the constants the bound
calculators in :mod:`signopt.theory` consume.

The oracle owns a seeded PCG64 stream. Parallel workers derive disjoint
streams with :func:`worker_seed` (a splitmix64 mix of the base seed and the
worker index), so multi-worker runs are reproducible bit-for-bit and a single
oracle is never shared between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Reserved stream index used to derive the initial-point RNG of a run, far
# outside any realistic worker count.
INIT_STREAM = 0xFFFFFFFF


def splitmix64(state: int) -> int:
    """One output of the splitmix64 generator (Steele, Lea & Flood 2014).

    Adds the 64-bit golden-ratio increment and applies the standard
    xor-shift/multiply finalizer. All arithmetic is modulo 2**64.
    """
    z = (state + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def worker_seed(base_seed: int, worker_index: int) -> int:
    """Derive a per-worker seed: splitmix64(base XOR (index+1)*golden).

    Distinct workers get distinct, decorrelated streams; the same
    (base_seed, worker_index) pair always yields the same seed.
    """
    if worker_index < 0:
        raise ValueError("worker_index must be >= 0")
    mixed = (int(base_seed) ^ (((worker_index + 1) * _GOLDEN) & _MASK64)) & _MASK64
    return splitmix64(mixed)


def make_rng(seed: int) -> np.random.Generator:
    """A PCG64 generator for a 64-bit seed (the library's only RNG kind)."""
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


def as_vector(values, dim: Optional[int] = None) -> np.ndarray:
    """Validate and convert to a finite 1-D float64 vector with d >= 1."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("vector must be 1-D with dimension >= 1")
    if dim is not None and v.size != dim:
        raise ValueError(f"expected dimension {dim}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite entry in vector")
    return v


def sign_vec(v: np.ndarray) -> np.ndarray:
    """Elementwise sign with entries in {-1., +1.}; sign(0) := +1.

    The zero convention (signed zero included) keeps every coordinate
    representable in exactly one bit on the wire.
    """
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite gradient")
    return np.where(v >= 0.0, 1.0, -1.0)


@dataclass(frozen=True)
class ObjectiveSpec:
    """An objective with analytic gradient and the constants of its contract.

    ``lipschitz`` is the per-coordinate smoothness vector (the quadratic
    majorization constant per coordinate), ``lower_bound`` the global
    minimum bound, and ``sigma`` the per-coordinate standard-deviation bound
    of the attached noise model (``None`` when no analytic noise scale is
    known, e.g. black-box objectives).
    """

    dim: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    lipschitz: np.ndarray
    lower_bound: float
    sigma: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        L = as_vector(self.lipschitz, self.dim)
        if np.any(L < 0):
            raise ValueError("lipschitz vector must be non-negative")
        object.__setattr__(self, "lipschitz", L)
        if self.sigma is not None:
            s = as_vector(self.sigma, self.dim)
            if np.any(s < 0):
                raise ValueError("sigma vector must be non-negative")
            object.__setattr__(self, "sigma", s)


def finite_difference_gradient(value, x: np.ndarray, scale: float = 1e-6) -> np.ndarray:
    """Central finite differences with per-coordinate step h = scale*(1+|x_i|)."""
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for i in range(x.size):
        h = scale * (1.0 + abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (value(xp) - value(xm)) / (2.0 * h)
    return g


def validate_objective(spec: ObjectiveSpec, seed: int = 0, probes: int = 16,
                       box: float = 1.0, rtol: float = 1e-5) -> None:
    """Check an objective against its contract on random probes.

    Verifies the lower bound, that the analytic gradient matches central
    finite differences to relative tolerance ``rtol``, and that the
    per-coordinate quadratic majorization holds between random point pairs.
    Raises ``ValueError`` on the first violation.
    """
    rng = make_rng(seed)
    for _ in range(probes):
        x = box * rng.standard_normal(spec.dim)
        fx = spec.value(x)
        if fx < spec.lower_bound - 1e-12:
            raise ValueError("objective value below stated lower bound")
        g = spec.gradient(x)
        fd = finite_difference_gradient(spec.value, x)
        err = np.abs(fd - g)
        if np.any(err > rtol * np.maximum(1.0, np.abs(g))):
            raise ValueError("gradient does not match finite differences")
        y = x + box * rng.standard_normal(spec.dim)
        lin = fx + float(np.dot(g, y - x))
        quad = 0.5 * float(np.sum(spec.lipschitz * (y - x) ** 2))
        if abs(spec.value(y) - lin) > quad + 1e-9 * (1.0 + abs(fx)):
            raise ValueError("quadratic majorization violated")


class StochasticOracle:
    """Seeded unbiased gradient oracle with per-coordinate variance bound.

    A single draw returns ``scale * (gradient(x) + noise)`` where the noise
    model reports an exact per-coordinate standard deviation. Minibatch draws
    average n independent single draws, squashing the variance by 1/n.
    ``scale`` is a positive gain applied to every draw (sign-based methods
    must be invariant to it). Not safe for concurrent draws; derive
    per-worker oracles via :func:`worker_seed` instead.
    """

    def __init__(self, objective: ObjectiveSpec, noise, seed: int, scale: float = 1.0):
        if scale <= 0:
            raise ValueError("oracle scale must be positive")
        self.objective = objective
        self.noise = noise
        self.seed = int(seed) & _MASK64
        self.scale = float(scale)
        self.draw_count = 0
        self._rng = make_rng(self.seed)

    def draw(self, x: np.ndarray) -> np.ndarray:
        """One stochastic gradient at x."""
        return self.minibatch(x, 1)

    def minibatch(self, x: np.ndarray, n: int) -> np.ndarray:
        """Arithmetic mean of n independent single draws at x."""
        if n < 1:
            raise ValueError("empty batch")
        g = self.objective.gradient(x)
        rows = self.noise.sample_batch(n, self.objective.dim, self._rng)
        self.draw_count += n
        out = self.scale * (g + rows.mean(axis=0))
        if not np.all(np.isfinite(out)):
            raise ValueError("non-finite gradient")
        return out


@dataclass
class StepRecord:
    """Per-step snapshot taken before the step is applied.

    ``oracle_calls_cum`` and the bits fields are cumulative totals including
    the step's own draws/messages (per worker for distributed runs).
    """

    k: int
    f: float
    grad_l1: float
    grad_l2: float
    oracle_calls_cum: int
    bits_up: int = 0
    bits_down: int = 0
    x_snapshot: Optional[np.ndarray] = None


@dataclass
class Trajectory:
    """Append-only record of an optimizer run, plus the final iterate."""

    records: list = field(default_factory=list)
    final_x: Optional[np.ndarray] = None
    final_f: Optional[float] = None

    def append(self, rec: StepRecord) -> None:
        if rec.grad_l1 < rec.grad_l2 - 1e-12 or rec.grad_l2 < 0:
            raise ValueError("gradient norms must satisfy l1 >= l2 >= 0")
        if self.records and rec.oracle_calls_cum < self.records[-1].oracle_calls_cum:
            raise ValueError("oracle call counter must be nondecreasing")
        self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def f(self) -> np.ndarray:
        return self.column("f")

    @property
    def grad_l1(self) -> np.ndarray:
        return self.column("grad_l1")

    @property
    def oracle_calls(self) -> int:
        return self.records[-1].oracle_calls_cum if self.records else 0

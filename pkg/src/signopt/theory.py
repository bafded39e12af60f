"""Closed-form bound calculators used as oracles against measured runs.

Single-bit failure probabilities come in three strengths: the Markov-style
sigma/|g| bound (no shape assumption), Cantelli's one-sided bound 1/(1+S^2),
and the Gauss-inequality bound for unimodal symmetric noise, which is below
1/2 for every positive signal-to-noise ratio and enables the majority-vote
variance reduction. The rate calculators return the right-hand sides of the
convergence bounds at the exact cumulative draw count N, so trajectory
statistics can be compared against them directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

# Case boundary of the Gauss-inequality bound; coordinates above it sit in
# the l1 phase of the mixed norm.
SNR_CASE_BOUNDARY = 2.0 / math.sqrt(3.0)


@dataclass(frozen=True)
class BoundInputs:
    """Problem constants a bound is evaluated at.

    N is the cumulative single-draw count (per worker, where relevant);
    M, beta, delta0, fC only apply to the distributed / momentum bounds.
    """

    L: np.ndarray
    sigma: np.ndarray
    f0: float
    f_star: float
    N: int
    M: Optional[int] = None
    beta: Optional[float] = None
    delta0: Optional[float] = None
    fC: Optional[float] = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.f0 < self.f_star:
            raise ValueError("f0 must be >= f_star")
        object.__setattr__(self, "L", np.asarray(self.L, dtype=np.float64))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=np.float64))
        if np.any(self.L < 0) or np.any(self.sigma < 0):
            raise ValueError("L and sigma must be non-negative")

    @property
    def l1_L(self) -> float:
        return float(np.sum(np.abs(self.L)))

    @property
    def l1_sigma(self) -> float:
        return float(np.sum(np.abs(self.sigma)))


def markov_sign_bound(g_i: float, sigma_i: float) -> float:
    """P[sign flip] <= min(1, sigma/|g|); 1 when the coordinate vanishes."""
    if g_i == 0.0:
        return 1.0
    return min(1.0, abs(sigma_i) / abs(g_i))


def cantelli_sign_bound(S: float) -> float:
    """One-sided Chebyshev: q <= 1/(1+S^2)."""
    if S < 0:
        raise ValueError("S must be non-negative")
    return 1.0 / (1.0 + S * S)


def gauss_sign_bound(S: float) -> float:
    """Unimodal-symmetric bound: 2/(9 S^2) above the case boundary, else
    1/2 - S/(2 sqrt(3)); continuous at the boundary and < 1/2 for S > 0."""
    if S < 0:
        raise ValueError("S must be non-negative")
    if S > SNR_CASE_BOUNDARY:
        return 2.0 / (9.0 * S * S)
    return 0.5 - S / (2.0 * math.sqrt(3.0))


def vote_error_bound(M: int, S: float) -> float:
    """Majority-of-M failure bound min(1, 1/(sqrt(M) S)); 1 at S = 0."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if S <= 0:
        return 1.0
    return min(1.0, 1.0 / (math.sqrt(M) * S))


def thm1_rhs(inputs: BoundInputs) -> float:
    """Large-batch rate: (sqrt(||L||_1)(f0-f*+1/2) + 2||sigma||_1)^2 / sqrt(N)."""
    bracket = math.sqrt(inputs.l1_L) * (inputs.f0 - inputs.f_star + 0.5) \
        + 2.0 * inputs.l1_sigma
    return bracket ** 2 / math.sqrt(inputs.N)


def thm2b_rhs(inputs: BoundInputs) -> float:
    """Majority-vote rate: the large-batch form with ||sigma||_1 / sqrt(M)."""
    if inputs.M is None or inputs.M < 1:
        raise ValueError("M must be >= 1")
    bracket = math.sqrt(inputs.l1_L) * (inputs.f0 - inputs.f_star + 0.5) \
        + 2.0 * inputs.l1_sigma / math.sqrt(inputs.M)
    return bracket ** 2 / math.sqrt(inputs.N)


def smallbatch_rhs(inputs: BoundInputs) -> float:
    """Small-batch mixed-norm rate: sqrt(3||L||_1/N) * (f0 - f* + 1/2)."""
    return math.sqrt(3.0 * inputs.l1_L / inputs.N) * (inputs.f0 - inputs.f_star + 0.5)


def sgd_rhs(L_inf: float, sigma_sq_total: float, f0: float, f_star: float, N: int) -> float:
    """SGD baseline rate: (2 L (f0 - f*) + sigma^2) / sqrt(N)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return (2.0 * L_inf * (f0 - f_star) + sigma_sq_total) / math.sqrt(N)


def mixed_norm(g: np.ndarray, sigma: np.ndarray) -> float:
    """sum_{high SNR} |g_i| + sum_{low SNR} g_i^2/sigma_i, split at the Gauss
    case boundary (noiseless coordinates count as high SNR)."""
    g = np.asarray(g, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma < 0):
        raise ValueError("sigma must be non-negative")
    with np.errstate(divide="ignore"):
        s = np.where(sigma > 0, np.abs(g) / np.where(sigma > 0, sigma, 1.0), np.inf)
    high = s > SNR_CASE_BOUNDARY
    l1_part = float(np.sum(np.abs(g[high])))
    low = ~high
    l2_part = float(np.sum(g[low] ** 2 / sigma[low])) if np.any(low) else 0.0
    return l1_part + l2_part


def signum_bound_shape(inputs: BoundInputs) -> float:
    """Momentum-method bound without its hidden constant:
    [(fC-f*)/delta0 + (1+ln N)(delta0 ||L||_1/(1-beta) + ||sigma||_1 sqrt(1-beta))]^2 / sqrt(N).
    Natural log. Used only for ratio (shape) checks, never absolutely."""
    if inputs.beta is None or not 0.0 <= inputs.beta < 1.0:
        raise ValueError("momentum must be < 1")
    if inputs.delta0 is None or inputs.delta0 <= 0:
        raise ValueError("delta0 must be positive")
    fc = inputs.f0 if inputs.fC is None else inputs.fC
    bracket = (fc - inputs.f_star) / inputs.delta0 \
        + (1.0 + math.log(inputs.N)) * (inputs.delta0 * inputs.l1_L / (1.0 - inputs.beta)
                                        + inputs.l1_sigma * math.sqrt(1.0 - inputs.beta))
    return bracket ** 2 / math.sqrt(inputs.N)

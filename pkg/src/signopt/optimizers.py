"""Sign-based optimizers and the SGD baseline, with their step-size and
batch-size schedules.

The sign methods step by the elementwise sign of a stochastic gradient
(or of its exponential moving average), so they are invariant to any
positive rescaling of the oracle. Schedules come from the convergence
analyses: the large-batch schedule ties the batch size to the total
iteration count, the momentum schedule grows the batch and decays the step
per iteration, with a warmup period during which updates follow the sign of
the raw stochastic gradient while the momentum settles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple

import numpy as np

from .core import (ObjectiveSpec, StepRecord, StochasticOracle, Trajectory,
                   sign_vec, worker_seed)
from .problems import NoiseModel, initial_point


@dataclass
class SignSGDState:
    x: np.ndarray
    k: int = 0


@dataclass
class SignumState:
    """Iterate plus unnormalized EMA momentum m (init 0).

    After processing gradients g_0..g_k, m = (1-beta) * sum_t beta^t g_{k-t}.
    Steps with k < warmup_c follow sign(g_k); later steps follow sign(m).
    """

    x: np.ndarray
    m: np.ndarray
    k: int = 0
    beta: float = 0.9
    warmup_c: int = 0


@dataclass
class SGDState:
    x: np.ndarray
    k: int = 0


def _checked(draw: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(draw)):
        raise ValueError("non-finite gradient")
    return draw


def signsgd_step(state: SignSGDState, oracle: StochasticOracle, delta: float,
                 n: int) -> SignSGDState:
    """x' = x - delta * sign(minibatch gradient)."""
    if delta <= 0:
        raise ValueError("step size must be positive")
    g = _checked(oracle.minibatch(state.x, n))
    return SignSGDState(x=state.x - delta * sign_vec(g), k=state.k + 1)


def signum_step(state: SignumState, oracle: StochasticOracle, delta: float,
                n: int) -> SignumState:
    """m' = beta*m + (1-beta)*g; step by sign(g) during warmup, else sign(m')."""
    if delta <= 0:
        raise ValueError("step size must be positive")
    if not 0.0 <= state.beta < 1.0:
        raise ValueError("momentum must be < 1")
    g = _checked(oracle.minibatch(state.x, n))
    m = state.beta * state.m + (1.0 - state.beta) * g
    direction = sign_vec(g) if state.k < state.warmup_c else sign_vec(m)
    return replace(state, x=state.x - delta * direction, m=m, k=state.k + 1)


def sgd_step(state: SGDState, oracle: StochasticOracle, delta: float, n: int) -> SGDState:
    """x' = x - delta * minibatch gradient."""
    if delta < 0:
        raise ValueError("step size must be non-negative")
    g = _checked(oracle.minibatch(state.x, n))
    return SGDState(x=state.x - delta * g, k=state.k + 1)


def compute_warmup(beta: float) -> int:
    """Smallest positive C with (C/2)*beta^C <= 1/((1-beta^2)(C+1)) and
    beta^(C+1) <= 1/2; 54 at beta = 0.9."""
    if not 0.0 <= beta < 1.0:
        raise ValueError("momentum must be < 1")
    c = 1
    while True:
        if (c / 2.0) * beta ** c <= 1.0 / ((1.0 - beta * beta) * (c + 1)) \
                and beta ** (c + 1) <= 0.5:
            return c
        c += 1


def _l1(v) -> float:
    return float(np.sum(np.abs(v)))


def schedule_thm1(K: int, L) -> Tuple[float, int]:
    """Large-batch schedule: delta = 1/sqrt(||L||_1 K), n = K (constant)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    l1 = _l1(L)
    if l1 <= 0:
        raise ValueError("||L||_1 must be positive")
    return 1.0 / math.sqrt(l1 * K), K


def schedule_smallbatch(K: int, L) -> Tuple[float, int]:
    """Small-batch schedule: same step size as the large-batch one, n = 1."""
    delta, _ = schedule_thm1(K, L)
    return delta, 1


def schedule_signum(k: int, delta0: float) -> Tuple[float, int]:
    """Momentum schedule at step k: (delta0/sqrt(k+1), k+1)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if delta0 <= 0:
        raise ValueError("delta0 must be positive")
    return delta0 / math.sqrt(k + 1.0), k + 1


def schedule_sgd(K: int, L_inf: float, mode: str) -> Tuple[float, int]:
    """SGD baseline schedules: large batch (1/L, K) or small batch (1/(L sqrt(K)), 1)."""
    if L_inf <= 0:
        raise ValueError("L must be positive")
    if mode == "large":
        return 1.0 / L_inf, K
    if mode == "small":
        return 1.0 / (L_inf * math.sqrt(K)), 1
    raise ValueError(f"unknown SGD schedule mode: {mode}")


Schedule = Callable[[int], Tuple[float, int]]


def constant_schedule(delta: float, n: int = 1) -> Schedule:
    return lambda k: (delta, n)


def signum_schedule(delta0: float) -> Schedule:
    return lambda k: schedule_signum(k, delta0)


_KINDS = ("signsgd", "signum", "sgd")


def run(kind: str, objective: ObjectiveSpec, noise: NoiseModel, schedule: Schedule,
        K: int, seed: int, x0: Optional[np.ndarray] = None, record_x: bool = False,
        beta: float = 0.9, warmup: Optional[int] = None,
        oracle_scale: float = 1.0) -> Trajectory:
    """Run K steps of one optimizer, recording the trajectory.

    Each record holds the pre-step iterate's objective value and exact
    gradient norms (analytic gradient, which is what the bounds control),
    plus the cumulative single-draw count. The oracle stream is the worker-0
    stream of ``seed`` and the default initial point is a unit Gaussian from
    the seed's init stream, so a single-node run is bitwise identical to a
    one-worker distributed run with the same base seed.
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown optimizer kind: {kind}")
    if K < 0:
        raise ValueError("K must be >= 0")
    oracle = StochasticOracle(objective, noise, seed=worker_seed(seed, 0),
                              scale=oracle_scale)
    if x0 is None:
        x0 = initial_point(objective.dim, seed)
    x0 = np.asarray(x0, dtype=np.float64)

    if kind == "signum":
        state = SignumState(x=x0.copy(), m=np.zeros(objective.dim), beta=beta,
                            warmup_c=compute_warmup(beta) if warmup is None else warmup)
        step = signum_step
    elif kind == "sgd":
        state = SGDState(x=x0.copy())
        step = sgd_step
    else:
        state = SignSGDState(x=x0.copy())
        step = signsgd_step

    traj = Trajectory()
    for k in range(K):
        delta, n = schedule(k)
        g = objective.gradient(state.x)
        rec = StepRecord(
            k=k,
            f=objective.value(state.x),
            grad_l1=_l1(g),
            grad_l2=float(np.linalg.norm(g)),
            oracle_calls_cum=oracle.draw_count + n,
            x_snapshot=state.x.copy() if record_x else None,
        )
        state = step(state, oracle, delta, n)
        traj.append(rec)
    traj.final_x = state.x.copy()
    traj.final_f = objective.value(state.x)
    return traj

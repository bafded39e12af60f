"""In-process parameter-server simulation: M workers send packed gradient
sign bits, the server returns the elementwise sign of their sum (majority
vote), and a ledger counts payload bits in both directions.

Messages are bit-exact: coordinate i occupies bit (i mod 8) of byte
floor(i/8), least-significant bit first, 1 encoding +1; trailing pad bits of
the last byte are zero. The ledger distinguishes the *unique* downlink
payload (one decision message) from the *delivered* downlink (that decision
received by each of the M workers), so both readings of the per-iteration
cost are recoverable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .core import (ObjectiveSpec, StepRecord, StochasticOracle, Trajectory,
                   sign_vec, worker_seed)
from .optimizers import Schedule
from .problems import NoiseModel, initial_point


@dataclass(frozen=True)
class SignMessage:
    """A packed vector of gradient signs (dim coordinates, ceil(dim/8) bytes)."""

    dim: int
    payload: bytes

    def __post_init__(self):
        if self.dim < 1 or self.dim > 0xFFFFFFFF:
            raise ValueError("message dimension must fit in u32")
        if len(self.payload) != (self.dim + 7) // 8:
            raise ValueError("payload length does not match dimension")

    def to_bytes(self) -> bytes:
        """Serialized form: u32 little-endian dim header, then the payload."""
        return self.dim.to_bytes(4, "little") + self.payload

    @classmethod
    def from_bytes(cls, blob: bytes) -> "SignMessage":
        dim = int.from_bytes(blob[:4], "little")
        return cls(dim=dim, payload=blob[4:4 + (dim + 7) // 8])


def pack_signs(s: np.ndarray) -> SignMessage:
    """Pack a vector with entries exactly +/-1 into one bit per coordinate."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 1 or s.size < 1:
        raise ValueError("sign vector must be 1-D and non-empty")
    if not np.all(np.abs(s) == 1.0):
        raise ValueError("entries must be exactly +1 or -1")
    bits = (s > 0).astype(np.uint8)
    return SignMessage(dim=s.size, payload=np.packbits(bits, bitorder="little").tobytes())


def unpack_signs(msg: SignMessage) -> np.ndarray:
    """Inverse of :func:`pack_signs`; returns a +/-1.0 float vector."""
    raw = np.frombuffer(msg.payload, dtype=np.uint8)
    bits = np.unpackbits(raw, count=msg.dim, bitorder="little")
    return bits.astype(np.float64) * 2.0 - 1.0


def tally_messages(messages: List[SignMessage]) -> np.ndarray:
    """Integer per-coordinate sum of the decoded sign vectors."""
    if not messages:
        raise ValueError("at least one message required")
    dim = messages[0].dim
    if any(m.dim != dim for m in messages):
        raise ValueError("message dimensions do not match")
    tally = np.zeros(dim, dtype=np.int64)
    for m in messages:
        tally += unpack_signs(m).astype(np.int64)
    return tally


def aggregate_majority(messages: List[SignMessage]) -> SignMessage:
    """Majority decision: sign of the tally, ties (even M) resolved to +1."""
    return pack_signs(sign_vec(tally_messages(messages).astype(np.float64)))


@dataclass
class VoteRound:
    """One protocol round: M uplink messages, the tally, the decision, and
    the round's payload bits (bits_down counts the unique decision once)."""

    up_messages: List[SignMessage]
    tally: np.ndarray
    decision: SignMessage
    bits_up: int
    bits_down: int


@dataclass
class CommLedger:
    """Cumulative payload-bit accounting for a distributed run.

    ``bits_down_unique`` counts each decision payload once;
    ``bits_down_delivered`` counts it once per receiving worker. Headers are
    excluded throughout so the totals compare directly with the per-scheme
    formulas of :func:`comm_bits_per_iter`.
    """

    workers: int
    dim: int
    rounds: int = 0
    bits_up: int = 0
    bits_down_unique: int = 0
    bits_down_delivered: int = 0

    def add_round(self, rnd: VoteRound) -> None:
        self.rounds += 1
        self.bits_up += rnd.bits_up
        self.bits_down_unique += rnd.bits_down
        self.bits_down_delivered += rnd.bits_down * self.workers

    def payload_bits_per_iter(self) -> float:
        """Measured up + delivered-down payload bits per round."""
        if self.rounds == 0:
            return 0.0
        return (self.bits_up + self.bits_down_delivered) / self.rounds


def comm_bits_per_iter(scheme: str, M: int, d: int) -> float:
    """Per-iteration communication cost of the compared schemes, in bits."""
    if M < 1 or d < 1:
        raise ValueError("M and d must be >= 1")
    if scheme == "SGD":
        return 64.0 * M * d
    if scheme in ("QSGD", "TernGrad"):
        return (2.0 + math.log2(2 * M + 1)) * M * d
    if scheme == "SignMajority":
        return 2.0 * M * d
    raise ValueError(f"unknown scheme: {scheme}")


def vote_round(x: np.ndarray, workers: List[StochasticOracle], delta: float, n: int,
               mode: str = "majority") -> Tuple[np.ndarray, VoteRound]:
    """One round: every worker draws an n-batch gradient at x and votes.

    ``majority`` applies x - delta * decision (1-bit downlink); the
    ``sum_of_signs`` variant applies x - delta * tally and its downlink costs
    d*ceil(log2(2M+1)) bits since the tally lives in {-M..M}. Worker draws
    commute (per-worker streams, integer tally), so any execution order
    yields the identical round.
    """
    if mode not in ("majority", "sum_of_signs"):
        raise ValueError(f"unknown vote mode: {mode}")
    if not workers:
        raise ValueError("at least one worker required")
    M = len(workers)
    dim = workers[0].objective.dim
    messages = [pack_signs(sign_vec(w.minibatch(x, n))) for w in workers]
    tally = tally_messages(messages)
    decision = aggregate_majority(messages)
    if mode == "majority":
        x_next = x - delta * unpack_signs(decision)
        bits_down = dim
    else:
        x_next = x - delta * tally.astype(np.float64)
        bits_down = dim * math.ceil(math.log2(2 * M + 1))
    rnd = VoteRound(up_messages=messages, tally=tally, decision=decision,
                    bits_up=M * dim, bits_down=bits_down)
    return x_next, rnd


def run_distributed(objective: ObjectiveSpec, noise: NoiseModel, M: int, K: int,
                    schedule: Schedule, base_seed: int,
                    x0: Optional[np.ndarray] = None, record_x: bool = False,
                    mode: str = "majority",
                    ledger: Optional[CommLedger] = None) -> Trajectory:
    """K majority-vote rounds with per-worker oracles derived from base_seed.

    Trajectory bit fields are cumulative (uplink total, unique downlink);
    ``oracle_calls_cum`` counts draws *per worker*, the quantity the
    distributed convergence bound is stated in. With M = 1 the trajectory is
    bitwise identical to the single-node sign method under the same seed.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    workers = [StochasticOracle(objective, noise, seed=worker_seed(base_seed, m))
               for m in range(M)]
    if x0 is None:
        x0 = initial_point(objective.dim, base_seed)
    x = np.asarray(x0, dtype=np.float64).copy()
    if ledger is None:
        ledger = CommLedger(workers=M, dim=objective.dim)

    traj = Trajectory()
    for k in range(K):
        delta, n = schedule(k)
        g = objective.gradient(x)
        rec = StepRecord(
            k=k,
            f=objective.value(x),
            grad_l1=float(np.sum(np.abs(g))),
            grad_l2=float(np.linalg.norm(g)),
            oracle_calls_cum=workers[0].draw_count + n,
            x_snapshot=x.copy() if record_x else None,
        )
        x, rnd = vote_round(x, workers, delta, n, mode=mode)
        ledger.add_round(rnd)
        rec.bits_up = ledger.bits_up
        rec.bits_down = ledger.bits_down_unique
        traj.append(rec)
    traj.final_x = x.copy()
    traj.final_f = objective.value(x)
    return traj


def decision_error_mc(noise: NoiseModel, g_value: float, sigma: float, M: int,
                      rounds: int, seed: int) -> float:
    """Monte-Carlo majority-decision error rate for one gradient coordinate.

    Each round draws M independent stochastic gradients g_value + sigma*eps
    (eps the noise model's unit-variance shape), tallies their signs and
    compares the majority decision against sign(g_value). Vectorized
    equivalent of running :func:`vote_round` on a 1-D problem.
    """
    if M < 1 or rounds < 1:
        raise ValueError("M and rounds must be >= 1")
    rng = np.random.Generator(np.random.PCG64(int(seed) & ((1 << 64) - 1)))
    draws = g_value + sigma * noise.standard_samples((rounds, M), rng)
    signs = np.where(draws >= 0.0, 1, -1)
    tallies = signs.sum(axis=1)
    decisions = np.where(tallies >= 0, 1.0, -1.0)
    truth = 1.0 if g_value >= 0 else -1.0
    return float(np.mean(decisions != truth))

"""Sign-based stochastic optimization with majority-vote aggregation.

Optimizers that step by the elementwise sign of a stochastic gradient (or of
its momentum), a bit-exact packed-sign wire format with a parameter-server
majority-vote simulator, measurement utilities (Welford moments, density,
sign-error rates), and closed-form convergence-bound calculators for
verifying runs against theory on synthetic problems.
"""

from .core import (INIT_STREAM, ObjectiveSpec, StepRecord, StochasticOracle,
                   Trajectory, as_vector, finite_difference_gradient, make_rng,
                   sign_vec, splitmix64, validate_objective, worker_seed)
from .problems import (GaussianPerCoord, NoNoise, NoiseModel, QuadraticProblem,
                       SkewedTwoPoint, SparseGaussian, UniformPerCoord,
                       draw_noisy_gradient, initial_point,
                       make_sparse_noise_problem)
from .optimizers import (SGDState, SignSGDState, SignumState, compute_warmup,
                         constant_schedule, run, schedule_sgd, schedule_signum,
                         schedule_smallbatch, schedule_thm1, sgd_step,
                         signsgd_step, signum_schedule, signum_step)
from .votesim import (CommLedger, SignMessage, VoteRound, aggregate_majority,
                      comm_bits_per_iter, decision_error_mc, pack_signs,
                      run_distributed, tally_messages, unpack_signs, vote_round)
from .stats import (Histogram, WelfordAccumulator, density, empirical_sign_error,
                    measure_gradient_stats, noise_histogram, snr,
                    symmetry_statistic, welford_finalize, welford_merge,
                    welford_update)
from .theory import (SNR_CASE_BOUNDARY, BoundInputs, cantelli_sign_bound,
                     gauss_sign_bound, markov_sign_bound, mixed_norm,
                     sgd_rhs, signum_bound_shape, smallbatch_rhs, thm1_rhs,
                     thm2b_rhs, vote_error_bound)

__version__ = "0.1.0"

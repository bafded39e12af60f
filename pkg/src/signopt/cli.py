"""Command-line harness: config-driven experiments, multi-seed aggregation,
bound reports, communication-cost tables, and plot-ready CSV emission.

Config files are flat ``key = value`` lines (``#`` comments allowed) with
dotted keys; unknown keys are errors. Documented keys:

    problem.name        quadratic | toy
    problem.d           dimension (quadratic; toy is fixed at 100)
    problem.curvature   scalar or comma list of per-coordinate curvatures
    problem.noise.kind  none | gaussian | sparse_gaussian | uniform | skewed
    problem.noise.std   noise scale (gaussian / sparse_gaussian)
    problem.noise.halfwidth  uniform support half-width
    problem.noise.index sparse / skewed coordinate index
    optimizer.kind      signsgd | signum | sgd
    schedule.kind       thm1 | smallbatch | signum | sgd_large | sgd_small | constant
    schedule.delta      constant-schedule step size
    schedule.n          constant-schedule batch size
    run.K               number of steps
    run.seeds           comma list of run seeds
    run.snapshots       true | false (store iterates)
    distributed.M       worker count (votesim / distributed bounds)
    signum.beta         momentum constant
    signum.delta0       momentum base step size

Exit codes: 0 success, 1 config error, 2 acceptance-check failure.
Per-seed CSV columns: k, f, grad_l1, grad_l2, oracle_calls_cum, bits_up,
bits_down. Aggregate CSV columns: k, f_mean, f_std, g1_mean, g1_std (std is
the population formula). Stats CSV: two ``# phi_*`` comment lines, then
coord, mean, std rows.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import optimizers, problems, stats, theory, votesim
from .core import Trajectory
from .problems import (GaussianPerCoord, NoNoise, QuadraticProblem, SkewedTwoPoint,
                       SparseGaussian, UniformPerCoord, initial_point)


class ConfigError(Exception):
    pass


_KNOWN_KEYS = {
    "problem.name", "problem.d", "problem.curvature", "problem.noise.kind",
    "problem.noise.std", "problem.noise.halfwidth", "problem.noise.index",
    "optimizer.kind", "schedule.kind", "schedule.delta", "schedule.n",
    "run.K", "run.seeds", "run.snapshots", "distributed.M",
    "signum.beta", "signum.delta0",
}


def parse_config(path: str) -> Dict[str, str]:
    text = Path(path).read_text()
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config key: {key}")
        out[key] = value
    return out


def _get(cfg, key, conv, default=None, required=False):
    if key not in cfg:
        if required:
            raise ConfigError(f"missing config key: {key}")
        return default
    try:
        return conv(cfg[key])
    except ConfigError:
        raise
    except Exception:
        raise ConfigError(f"bad value for {key}: {cfg[key]!r}")


def _int_list(s: str) -> List[int]:
    vals = [int(tok) for tok in s.split(",") if tok.strip() != ""]
    if not vals:
        raise ValueError("empty list")
    return vals


def _bool(s: str) -> bool:
    if s.lower() in ("true", "1", "yes"):
        return True
    if s.lower() in ("false", "0", "no"):
        return False
    raise ValueError(s)


def build_problem(cfg):
    """(objective, noise) from the problem.* keys."""
    name = _get(cfg, "problem.name", str, required=True)
    if name == "toy":
        quad = QuadraticProblem(np.ones(problems.TOY_DIM))
        noise = SparseGaussian(problems.TOY_NOISE_STD, (0,))
        return quad.spec(noise), noise
    if name != "quadratic":
        raise ConfigError(f"unknown problem.name: {name}")
    d = _get(cfg, "problem.d", int, default=10)
    curv = _get(cfg, "problem.curvature", str, default="1.0")
    parts = [float(tok) for tok in curv.split(",")]
    a = np.full(d, parts[0]) if len(parts) == 1 else np.asarray(parts)
    if a.size != d:
        raise ConfigError("problem.curvature list length must equal problem.d")
    quad = QuadraticProblem(a)

    kind = _get(cfg, "problem.noise.kind", str, default="none")
    std = _get(cfg, "problem.noise.std", float, default=1.0)
    index = _get(cfg, "problem.noise.index", int, default=0)
    if kind == "none":
        noise = NoNoise()
    elif kind == "gaussian":
        noise = GaussianPerCoord(std)
    elif kind == "sparse_gaussian":
        noise = SparseGaussian(std, (index,))
    elif kind == "uniform":
        noise = UniformPerCoord(_get(cfg, "problem.noise.halfwidth", float, default=1.0))
    elif kind == "skewed":
        noise = SkewedTwoPoint(coordinate=index)
    else:
        raise ConfigError(f"unknown problem.noise.kind: {kind}")
    try:
        return quad.spec(noise), noise
    except ValueError as exc:
        raise ConfigError(str(exc))


def build_schedule(cfg, objective, K):
    kind = _get(cfg, "schedule.kind", str, default="thm1")
    if kind == "thm1":
        if K < 1:
            return optimizers.constant_schedule(1.0, 1)
        return optimizers.constant_schedule(*optimizers.schedule_thm1(K, objective.lipschitz))
    if kind == "smallbatch":
        if K < 1:
            return optimizers.constant_schedule(1.0, 1)
        return optimizers.constant_schedule(*optimizers.schedule_smallbatch(K, objective.lipschitz))
    if kind == "signum":
        return optimizers.signum_schedule(_get(cfg, "signum.delta0", float, default=0.1))
    if kind in ("sgd_large", "sgd_small"):
        L_inf = float(np.max(objective.lipschitz))
        mode = "large" if kind == "sgd_large" else "small"
        return optimizers.constant_schedule(*optimizers.schedule_sgd(max(K, 1), L_inf, mode))
    if kind == "constant":
        delta = _get(cfg, "schedule.delta", float, required=True)
        n = _get(cfg, "schedule.n", int, default=1)
        return optimizers.constant_schedule(delta, n)
    raise ConfigError(f"unknown schedule.kind: {kind}")


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_run_csv(path: Path, traj: Trajectory) -> None:
    lines = ["k,f,grad_l1,grad_l2,oracle_calls_cum,bits_up,bits_down"]
    for r in traj.records:
        lines.append(",".join([str(r.k), _fmt(r.f), _fmt(r.grad_l1), _fmt(r.grad_l2),
                               str(r.oracle_calls_cum), str(r.bits_up), str(r.bits_down)]))
    path.write_text("\n".join(lines) + "\n")


@dataclass
class AggregateReport:
    """Per-step seed statistics (population std) plus final-objective stats."""

    k: np.ndarray
    f_mean: np.ndarray
    f_std: np.ndarray
    g1_mean: np.ndarray
    g1_std: np.ndarray
    final_f_mean: float
    final_f_std: float


def aggregate(trajectories: List[Trajectory]) -> AggregateReport:
    if not trajectories:
        raise ValueError("no trajectories to aggregate")
    f = np.array([t.f for t in trajectories])
    g1 = np.array([t.grad_l1 for t in trajectories])
    finals = np.array([t.final_f for t in trajectories])
    k = trajectories[0].column("k") if len(trajectories[0]) else np.array([], dtype=int)
    return AggregateReport(
        k=k,
        f_mean=f.mean(axis=0) if f.size else np.array([]),
        f_std=f.std(axis=0) if f.size else np.array([]),
        g1_mean=g1.mean(axis=0) if g1.size else np.array([]),
        g1_std=g1.std(axis=0) if g1.size else np.array([]),
        final_f_mean=float(finals.mean()),
        final_f_std=float(finals.std()),
    )


def write_aggregate_csv(path: Path, rep: AggregateReport, bands: bool = False) -> None:
    header = "k,f_mean,f_std,g1_mean,g1_std"
    if bands:
        header += ",f_lo,f_hi"
    lines = [header]
    for i in range(rep.k.size):
        row = [str(int(rep.k[i])), _fmt(rep.f_mean[i]), _fmt(rep.f_std[i]),
               _fmt(rep.g1_mean[i]), _fmt(rep.g1_std[i])]
        if bands:
            row += [_fmt(rep.f_mean[i] - rep.f_std[i]), _fmt(rep.f_mean[i] + rep.f_std[i])]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def _run_seeds(fn, seeds, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, seeds))
    return [fn(s) for s in seeds]


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    objective, noise = build_problem(cfg)
    K = _get(cfg, "run.K", int, required=True)
    if K < 0:
        raise ConfigError("run.K must be >= 0")
    seeds = _int_list(args.seeds) if args.seeds else _get(cfg, "run.seeds", _int_list, default=[0])
    snapshots = _get(cfg, "run.snapshots", _bool, default=False)
    kind = _get(cfg, "optimizer.kind", str, default="signsgd")
    if kind not in ("signsgd", "signum", "sgd"):
        raise ConfigError(f"unknown optimizer.kind: {kind}")
    schedule = build_schedule(cfg, objective, K)
    beta = _get(cfg, "signum.beta", float, default=0.9)

    def one(seed):
        return optimizers.run(kind, objective, noise, schedule, K, seed,
                              record_x=snapshots, beta=beta)

    trajectories = _run_seeds(one, seeds, args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for seed, traj in zip(seeds, trajectories):
        write_run_csv(out / f"run_seed{seed}.csv", traj)
    rep = aggregate(trajectories)
    write_aggregate_csv(out / "aggregate.csv", rep)
    print(f"{kind}: K={K} seeds={len(seeds)} "
          f"final_f_mean={rep.final_f_mean:.6g} final_f_std={rep.final_f_std:.6g}")
    return 0


def cmd_reproduce_sparse_noise(args) -> int:
    """Sparse-noise toy comparison: tuned constant rates, 50 repeats."""
    steps = args.steps
    seeds = list(range(args.repeats))
    quad = QuadraticProblem(np.ones(problems.TOY_DIM))
    noise = SparseGaussian(problems.TOY_NOISE_STD, (0,))
    objective = quad.spec(noise)

    def sign_run(seed):
        return optimizers.run("signsgd", objective, noise,
                              optimizers.constant_schedule(0.01, 1), steps, seed)

    def sgd_run(seed):
        return optimizers.run("sgd", objective, noise,
                              optimizers.constant_schedule(0.001, 1), steps, seed)

    sign_rep = aggregate(_run_seeds(sign_run, seeds, args.threads))
    sgd_rep = aggregate(_run_seeds(sgd_run, seeds, args.threads))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_aggregate_csv(out / "signsgd_aggregate.csv", sign_rep, bands=True)
    write_aggregate_csv(out / "sgd_aggregate.csv", sgd_rep, bands=True)

    ok = sign_rep.final_f_mean < sgd_rep.final_f_mean
    trend_ok = sign_rep.final_f_mean < sign_rep.f_mean[0]
    print(f"signSGD@0.01 final f mean = {sign_rep.final_f_mean:.6g} "
          f"(initial {sign_rep.f_mean[0]:.6g})")
    print(f"SGD@0.001   final f mean = {sgd_rep.final_f_mean:.6g}")
    print(f"verdict: {'PASS' if ok and trend_ok else 'FAIL'}")
    return 0 if ok and trend_ok else 2


def cmd_bounds(args) -> int:
    cfg = parse_config(args.config)
    objective, noise = build_problem(cfg)
    if objective.sigma is None or objective.lipschitz is None:
        print("error: bounds require analytic constants", file=sys.stderr)
        return 1
    K = _get(cfg, "run.K", int, required=True)
    if K < 1:
        raise ConfigError("run.K must be >= 1")
    seeds = _int_list(args.seeds) if args.seeds else _get(cfg, "run.seeds", _int_list, default=[0])
    M = _get(cfg, "distributed.M", int, default=None)
    kind = _get(cfg, "schedule.kind", str, default="thm1")
    x0 = initial_point(objective.dim, seeds[0])
    f0 = objective.value(x0)

    if kind == "thm1":
        schedule = optimizers.constant_schedule(*optimizers.schedule_thm1(K, objective.lipschitz))

        def one(seed):
            if M is None:
                return optimizers.run("signsgd", objective, noise, schedule, K, seed, x0=x0)
            return votesim.run_distributed(objective, noise, M, K, schedule, seed, x0=x0)

        trajectories = _run_seeds(one, seeds, args.threads)
        lhs = float(np.mean([t.grad_l1.mean() for t in trajectories])) ** 2
        N = trajectories[0].oracle_calls
        inputs = theory.BoundInputs(L=objective.lipschitz, sigma=objective.sigma,
                                    f0=f0, f_star=objective.lower_bound, N=N, M=M)
        rhs = theory.thm1_rhs(inputs) if M is None else theory.thm2b_rhs(inputs)
        label = "large-batch rate" if M is None else f"majority-vote rate (M={M})"
    elif kind == "smallbatch":
        schedule = optimizers.constant_schedule(*optimizers.schedule_smallbatch(K, objective.lipschitz))

        def one(seed):
            return optimizers.run("signsgd", objective, noise, schedule, K, seed,
                                  x0=x0, record_x=True)

        trajectories = _run_seeds(one, seeds, args.threads)
        mins = []
        for t in trajectories:
            vals = [theory.mixed_norm(objective.gradient(r.x_snapshot), objective.sigma)
                    for r in t.records]
            mins.append(min(vals))
        lhs = float(np.mean(mins))
        N = trajectories[0].oracle_calls
        inputs = theory.BoundInputs(L=objective.lipschitz, sigma=objective.sigma,
                                    f0=f0, f_star=objective.lower_bound, N=N)
        rhs = theory.smallbatch_rhs(inputs)
        label = "small-batch mixed-norm rate"
    else:
        raise ConfigError(f"bounds does not support schedule.kind: {kind}")

    margin = rhs - lhs
    ok = lhs <= rhs
    print(f"{label}: N={N} LHS={lhs:.6g} RHS={rhs:.6g} margin={margin:.6g} "
          f"{'PASS' if ok else 'FAIL'}")
    return 0 if ok else 2


def cmd_commcost(args) -> int:
    M, d, K = args.workers, args.dim, args.rounds
    print("scheme,bits_per_iter,bits_per_run")
    for scheme in ("SGD", "QSGD", "TernGrad", "SignMajority"):
        per = votesim.comm_bits_per_iter(scheme, M, d)
        print(f"{scheme},{per:.6g},{per * K:.6g}")

    quad = QuadraticProblem(np.ones(d))
    noise = GaussianPerCoord(1.0)
    objective = quad.spec(noise)
    ledger = votesim.CommLedger(workers=M, dim=d)
    votesim.run_distributed(objective, noise, M, K,
                            optimizers.constant_schedule(0.1, 1), base_seed=0,
                            ledger=ledger)
    measured = ledger.payload_bits_per_iter()
    expected = votesim.comm_bits_per_iter("SignMajority", M, d)
    print(f"measured SignMajority payload bits/iter (up + delivered down): "
          f"{measured:.6g} (up {ledger.bits_up}, unique down {ledger.bits_down_unique})")
    if measured != expected:
        print("measured payload does not match 2Md", file=sys.stderr)
        return 2
    return 0


def cmd_stats(args) -> int:
    cfg = parse_config(args.config)
    objective, noise = build_problem(cfg)
    if args.at == "init":
        x = initial_point(objective.dim, args.seed)
    elif args.at == "ones":
        x = np.ones(objective.dim)
    elif args.at == "zeros":
        x = np.zeros(objective.dim)
    else:
        raise ConfigError(f"unknown --at value: {args.at}")
    mean, sigma_hat, phi_g, phi_sigma = stats.measure_gradient_stats(
        objective, noise, x, args.samples, seed=args.seed)
    lines = [f"# phi_g = {_fmt(phi_g)}", f"# phi_sigma = {_fmt(phi_sigma)}",
             "coord,mean,std"]
    for i in range(objective.dim):
        lines.append(f"{i},{_fmt(mean[i])},{_fmt(sigma_hat[i])}")
    text = "\n".join(lines) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "stats.csv").write_text(text)
    print(f"phi_g={phi_g:.6g} phi_sigma={phi_sigma:.6g} samples={args.samples}")
    if args.out is None:
        sys.stdout.write(text)
    return 0


def cmd_votesim(args) -> int:
    cfg = parse_config(args.config)
    objective, noise = build_problem(cfg)
    K = _get(cfg, "run.K", int, required=True)
    M = _get(cfg, "distributed.M", int, required=True)
    if M < 1:
        raise ConfigError("distributed.M must be >= 1")
    seeds = _int_list(args.seeds) if args.seeds else _get(cfg, "run.seeds", _int_list, default=[0])
    snapshots = _get(cfg, "run.snapshots", _bool, default=False)
    schedule = build_schedule(cfg, objective, K)

    def one(seed):
        return votesim.run_distributed(objective, noise, M, K, schedule, seed,
                                       record_x=snapshots)

    trajectories = _run_seeds(one, seeds, args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for seed, traj in zip(seeds, trajectories):
        write_run_csv(out / f"vote_seed{seed}.csv", traj)
    rep = aggregate(trajectories)
    write_aggregate_csv(out / "aggregate.csv", rep)
    last = trajectories[0].records[-1] if trajectories[0].records else None
    bits = f" bits_up={last.bits_up} bits_down={last.bits_down}" if last else ""
    print(f"majority vote: M={M} K={K} seeds={len(seeds)} "
          f"final_f_mean={rep.final_f_mean:.6g}{bits}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="signopt",
                                description="Sign-based optimization experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=True):
        sp.add_argument("--config", required=True, help="config file path")
        sp.add_argument("--seeds", default=None, help="comma list overriding run.seeds")
        sp.add_argument("--threads", type=int, default=1)
        if out_required:
            sp.add_argument("--out", required=True, help="output directory")

    sp = sub.add_parser("run", help="run a configured single-node experiment")
    common(sp)
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("reproduce-sparse-noise",
                        help="sparse-noise toy: signSGD@0.01 vs SGD@0.001")
    sp.add_argument("--out", required=True)
    sp.add_argument("--steps", type=int, default=1000)
    sp.add_argument("--repeats", type=int, default=50)
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(fn=cmd_reproduce_sparse_noise)

    sp = sub.add_parser("bounds", help="measured rate vs closed-form bound")
    common(sp, out_required=False)
    sp.set_defaults(fn=cmd_bounds)

    sp = sub.add_parser("commcost", help="communication-cost table")
    sp.add_argument("--workers", type=int, required=True)
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--rounds", type=int, default=1)
    sp.set_defaults(fn=cmd_commcost)

    sp = sub.add_parser("stats", help="gradient/noise moment and density report")
    sp.add_argument("--config", required=True)
    sp.add_argument("--samples", type=int, default=10000)
    sp.add_argument("--at", default="init", choices=("init", "ones", "zeros"))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_stats)

    sp = sub.add_parser("votesim", help="distributed majority-vote experiment")
    common(sp)
    sp.set_defaults(fn=cmd_votesim)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

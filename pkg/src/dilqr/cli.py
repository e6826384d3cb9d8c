"""Command-line entry point.

Subcommands: train, feedback, eval, sweep, jacobian-bench. Exit codes:
0 success, 1 usage/config error, 2 numerical failure.

All file output lands under the --out directory, alongside a verbatim echo
of the effective configuration. Timing columns are written as 0.0 unless
run.record_timing is set, so repeated runs produce bit-identical files.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, default_config, load_config
from .envs import make_env
from .errors import ContractViolation, RegularizationExhausted, SingularSystem, SynthesisFailure
from .evaluation import COST_VAR, MEAN_COST_GAP, epsilon_sweep, monte_carlo_eval, variance_scaling_fit
from .feedback import build_policy
from .ilqr import optimize
from .serialize import load_policy, load_trajectory, save_policy, save_trajectory
from .sysid import estimate_fd, estimate_llscd, identify_ltv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _prepare(args) -> tuple[RunConfig, Path]:
    cfg = load_config(args.config) if args.config else default_config()
    if args.seed is not None:
        cfg.set("run", "seed", args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.dump())
    return cfg, out


def cmd_train(args) -> int:
    cfg, out = _prepare(args)
    env = cfg.make_env()
    cost = cfg.make_cost(env)
    u_init = np.zeros((env.horizon, env.n_u))
    traj, trace = optimize(env, cost, env.x0, u_init, cfg.make_optimizer())
    save_trajectory(out / "trajectory.txt", traj, env.name)
    record_timing = cfg.get("run", "record_timing")
    _write_csv(
        out / "trace.csv",
        ["iteration", "cost", "mu", "alpha", "accepted", "wall_time_s", "eval_count"],
        [
            (r.iteration, r.cost, r.mu, r.alpha, int(r.accepted),
             r.wall_time_s if record_timing else 0.0, r.eval_count)
            for r in trace.records
        ],
    )
    print(f"train: {env.name} final cost {traj.cost!r} after {len(trace)} iterations")
    return EXIT_OK


def cmd_feedback(args) -> int:
    cfg, out = _prepare(args)
    traj, env_name = load_trajectory(args.trajectory)
    env = cfg.make_env()
    if env.name != env_name:
        raise ConfigError(f"trajectory was recorded on {env_name!r} but config selects {env.name!r}")
    policy = build_policy(env, traj, cfg.make_estimator(), cfg.make_cost(env))
    save_policy(out / "policy.txt", policy, env.name)
    print(f"feedback: wrote {out / 'policy.txt'} ({traj.horizon} gains)")
    return EXIT_OK


SWEEP_HEADER = [
    "epsilon", "channel", "n_rollouts", "divergences",
    "cost_mean", "cost_var", "terminal_mse_mean", "seed",
]


def _stats_row(s):
    return (s.epsilon, s.channel, s.n_rollouts, s.divergences,
            s.cost_mean, s.cost_var, s.terminal_mse_mean, s.seed)


def cmd_eval(args) -> int:
    cfg, out = _prepare(args)
    policy, env_name = load_policy(args.policy)
    env = cfg.make_env()
    if env.name != env_name:
        raise ConfigError(f"policy was built on {env_name!r} but config selects {env.name!r}")
    cost = cfg.make_cost(env)
    stats = monte_carlo_eval(env, policy, cfg.make_noise(), cfg.get("eval", "rollouts"), cost)
    _write_csv(out / "eval.csv", SWEEP_HEADER, [_stats_row(stats)])
    print(f"eval: eps={stats.epsilon} cost_mean={stats.cost_mean!r} cost_var={stats.cost_var!r}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg, out = _prepare(args)
    policy, env_name = load_policy(args.policy)
    env = cfg.make_env()
    if env.name != env_name:
        raise ConfigError(f"policy was built on {env_name!r} but config selects {env.name!r}")
    cost = cfg.make_cost(env)
    sweep = epsilon_sweep(
        env, policy, cfg.get("noise", "channel"),
        sorted(cfg.get("eval", "epsilons")), cfg.get("eval", "rollouts"),
        cost, seed=cfg.get("run", "seed"),
    )
    _write_csv(out / "sweep.csv", SWEEP_HEADER, [_stats_row(s) for s in sweep])
    clean = [s for s in sweep if s.divergences == 0]
    fit_rows = []
    for response in (COST_VAR, MEAN_COST_GAP):
        try:
            fit = variance_scaling_fit(clean, response, nominal_cost=policy.nominal.cost)
            fit_rows.append((response, fit.slope, fit.intercept, fit.r_squared, len(fit.epsilons)))
        except ContractViolation:
            pass  # too few usable points for this response
    _write_csv(out / "fit.csv", ["response", "slope", "intercept", "r_squared", "n_points"], fit_rows)
    for row in fit_rows:
        print(f"sweep: {row[0]} slope={row[1]:.3f} r2={row[3]:.4f}")
    return EXIT_OK


def _reference_jacobian(env, x, u):
    """Richardson-extrapolated central differences; bench-table reference."""
    h = 1e-5
    m1 = estimate_fd(env, x, u, h)
    m2 = estimate_fd(env, x, u, h / 2)
    A = (4 * m2.A - m1.A) / 3
    B = (4 * m2.B - m1.B) / 3
    return A, B


def cmd_jacobian_bench(args) -> int:
    cfg, out = _prepare(args)
    est = cfg.make_estimator()
    record_timing = cfg.get("run", "record_timing")
    rows = []
    for name in ("linear_test", "pendulum", "cartpole"):
        env = make_env(name)
        x, u = env.x0, np.zeros(env.n_u)
        refs = _reference_jacobian(env, x, u)
        for method in ("llscd", "fd"):
            t0 = time.perf_counter()
            if method == "llscd":
                models = [
                    estimate_llscd(env, x, u, est.child(t)) for t in range(env.horizon)
                ]
                param = est.resolve_n_s(env)
            else:
                models = [estimate_fd(env, x, u, est.fd_step) for _ in range(env.horizon)]
                param = est.fd_step
            wall = time.perf_counter() - t0
            err = max(
                max(np.max(np.abs(m.A - refs[0])), np.max(np.abs(m.B - refs[1])))
                for m in models
            )
            rows.append(
                (env.name, method, param, wall if record_timing else 0.0,
                 models[0].eval_count, float(err))
            )
    _write_csv(
        out / "bench.csv",
        ["env", "method", "n_s_or_h", "wall_time_s", "eval_count", "max_abs_error_vs_oracle"],
        rows,
    )
    print(f"jacobian-bench: wrote {out / 'bench.csv'} ({len(rows)} rows)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dilqr",
        description="Sample-based ILQR with decoupled LQR feedback and noise-scaling evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="path to a key = value config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override run.seed")

    p = sub.add_parser("train", help="optimize an open-loop trajectory")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("feedback", help="wrap a trajectory with LQR feedback gains")
    common(p)
    p.add_argument("trajectory", help="trajectory file from `train`")
    p.set_defaults(func=cmd_feedback)

    p = sub.add_parser("eval", help="Monte-Carlo closed-loop evaluation at one noise level")
    common(p)
    p.add_argument("policy", help="policy file from `feedback`")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="noise-scaling sweep with power-law fits")
    common(p)
    p.add_argument("policy", help="policy file from `feedback`")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("jacobian-bench", help="time both Jacobian estimators per environment")
    common(p)
    p.set_defaults(func=cmd_jacobian_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ContractViolation, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RegularizationExhausted, SynthesisFailure, SingularSystem) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

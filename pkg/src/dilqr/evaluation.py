"""Monte-Carlo closed-loop evaluation under scaled process noise.

Provides per-epsilon rollout statistics (cost mean/variance, terminal
squared deviation from goal) and log-log power-law fits of how those
statistics scale with the noise factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .costs import QuadraticCostModel
from .envs import Environment, NoiseModel
from .errors import ContractViolation
from .feedback import DecoupledPolicy


@dataclass(frozen=True)
class RolloutStats:
    epsilon: float
    n_rollouts: int
    cost_mean: float
    cost_var: float
    terminal_mse_mean: float
    channel: str
    seed: int
    divergences: int = 0

    def __post_init__(self):
        if self.n_rollouts < 1:
            raise ContractViolation("n_rollouts must be >= 1")
        if self.cost_var < 0:
            raise ContractViolation("cost variance cannot be negative")


@dataclass(frozen=True)
class ScalingFit:
    epsilons: tuple
    responses: tuple
    slope: float
    intercept: float
    r_squared: float
    dropped: int = 0


def _batched_rollouts(
    env: Environment,
    policy: DecoupledPolicy,
    noise: NoiseModel,
    M: int,
    cost: QuadraticCostModel,
):
    """Advance all M closed-loop rollouts in lockstep (vectorized over rollouts).

    Uses the same per-rollout noise streams as rollout_closed_loop, so the
    statistics stay keyed by (seed, rollout_id) and scheduling-independent.
    """
    nominal = policy.nominal
    N = nominal.horizon
    dim = env.n_x if noise.channel == "state" else env.n_u
    w = np.stack([noise.draws(i, N, dim) for i in range(M)])  # (M, N, dim)

    x = np.tile(nominal.states[0], (M, 1))
    costs = np.zeros(M)
    alive = np.ones(M, dtype=bool)
    with np.errstate(all="ignore"):
        for t in range(N):
            u = nominal.controls[t] + (x - nominal.states[t]) @ policy.gains[t].T
            if noise.channel == "control":
                u = u + noise.epsilon * env.u_scale * w[:, t]
            u = np.clip(u, env.control_bounds[:, 0], env.control_bounds[:, 1])
            dx = x - cost.x_goal
            costs += 0.5 * np.einsum("mi,ij,mj->m", dx, cost.Q_at(t), dx)
            costs += 0.5 * np.einsum("mi,ij,mj->m", u, cost.R_at(t), u)
            x = env.step_fn(x, u)
            if noise.channel == "state":
                x = x + noise.epsilon * w[:, t]
            alive &= np.all(np.isfinite(x), axis=1)
            x = np.where(alive[:, None], x, 0.0)
        dx = x - cost.x_goal
        costs += 0.5 * np.einsum("mi,ij,mj->m", dx, cost.Q_terminal, dx)
        terminal_sq = np.sum(dx**2, axis=1)
    return costs, terminal_sq, ~alive


def monte_carlo_eval(
    env: Environment,
    policy: DecoupledPolicy,
    noise: NoiseModel,
    M: int,
    cost: QuadraticCostModel,
) -> RolloutStats:
    """M independent closed-loop rollouts; unbiased sample moments.

    Divergent rollouts (non-finite states) are excluded from the moments
    and counted. Deterministic given (noise.seed, M).
    """
    if M < 1:
        raise ContractViolation("M must be >= 1")
    if noise.epsilon == 0.0:
        # noiseless degeneracy: every rollout reproduces the nominal exactly
        mse = float(np.sum((policy.nominal.terminal_state - cost.x_goal) ** 2))
        return RolloutStats(
            epsilon=0.0,
            n_rollouts=M,
            cost_mean=policy.nominal.cost,
            cost_var=0.0,
            terminal_mse_mean=mse,
            channel=noise.channel,
            seed=noise.seed,
        )
    costs, terminal_sq, diverged = _batched_rollouts(env, policy, noise, M, cost)
    ok = ~diverged
    n_ok = int(np.sum(ok))
    if n_ok == 0:
        raise ContractViolation("all rollouts diverged; cannot form moments")
    cost_var = float(np.var(costs[ok], ddof=1)) if n_ok > 1 else 0.0
    return RolloutStats(
        epsilon=noise.epsilon,
        n_rollouts=M,
        cost_mean=float(np.mean(costs[ok])),
        cost_var=cost_var,
        terminal_mse_mean=float(np.mean(terminal_sq[ok])),
        channel=noise.channel,
        seed=noise.seed,
        divergences=int(np.sum(diverged)),
    )


def _child_seed(seed: int, index: int) -> int:
    sub = np.random.SeedSequence([int(seed) & (2**63 - 1), index])
    return int(sub.generate_state(1, dtype=np.uint64)[0] >> 1)


def epsilon_sweep(
    env: Environment,
    policy: DecoupledPolicy,
    channel: str,
    epsilons: Sequence[float],
    M: int,
    cost: QuadraticCostModel,
    seed: int = 0,
) -> list[RolloutStats]:
    """One RolloutStats per epsilon, each from a disjoint noise stream."""
    epsilons = [float(e) for e in epsilons]
    if any(e < 0 for e in epsilons) or epsilons != sorted(epsilons):
        raise ContractViolation("epsilons must be non-negative and ascending")
    out = []
    for i, eps in enumerate(epsilons):
        noise = NoiseModel(epsilon=eps, channel=channel, seed=_child_seed(seed, i))
        out.append(monte_carlo_eval(env, policy, noise, M, cost))
    return out


COST_VAR = "cost_var"
MEAN_COST_GAP = "mean_cost_gap"


def variance_scaling_fit(
    sweep: Sequence[RolloutStats],
    response: str,
    nominal_cost: float | None = None,
) -> ScalingFit:
    """OLS fit of log(response) against log(epsilon) over a sweep.

    response selects Var(J) or |E[J] - J_nominal|; for the latter the
    nominal (noiseless) cost must be supplied. Non-positive responses and
    epsilon = 0 entries are dropped; at least 4 must survive.
    """
    if response == COST_VAR:
        pairs = [(s.epsilon, s.cost_var) for s in sweep]
    elif response == MEAN_COST_GAP:
        if nominal_cost is None:
            raise ContractViolation("mean_cost_gap response requires nominal_cost")
        pairs = [(s.epsilon, abs(s.cost_mean - nominal_cost)) for s in sweep]
    else:
        raise ContractViolation(f"unknown response {response!r}")

    kept = [(e, r) for e, r in pairs if e > 0 and r > 0]
    dropped = len(pairs) - len(kept)
    if len(kept) < 4:
        raise ContractViolation(
            f"scaling fit needs >= 4 positive (epsilon, response) pairs, have {len(kept)}"
        )
    log_e = np.log([e for e, _ in kept])
    log_r = np.log([r for _, r in kept])
    slope, intercept = np.polyfit(log_e, log_r, 1)
    pred = slope * log_e + intercept
    ss_res = float(np.sum((log_r - pred) ** 2))
    ss_tot = float(np.sum((log_r - np.mean(log_r)) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return ScalingFit(
        epsilons=tuple(e for e, _ in kept),
        responses=tuple(r for _, r in kept),
        slope=float(slope),
        intercept=float(intercept),
        r_squared=float(min(r2, 1.0)),
        dropped=dropped,
    )


DEFAULT_EPSILON_GRID = (0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08)

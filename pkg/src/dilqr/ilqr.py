"""Model-free ILQR: regularized backward pass, line-searched forward pass,
and the outer loop with band acceptance.

The backward pass adds mu*I to the value Hessian inside Q_ux and Q_uu only
(state-regularization variant); positive definiteness of Q_uu is checked by
Cholesky and a failure aborts the pass so the caller can escalate mu.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .costs import (
    NominalTrajectory,
    QuadraticCostModel,
    cost_partials,
    terminal_partials,
    total_cost,
)
from .envs import Environment, rollout_open_loop, step
from .errors import ContractViolation, NotPositiveDefinite, RegularizationExhausted
from .sysid import EstimatorConfig, LinearizedModel, identify_ltv


@dataclass(frozen=True)
class IterationGains:
    """Feedforward k_t and feedback K_t from one backward pass."""

    k: np.ndarray  # (N, n_u)
    K: np.ndarray  # (N, n_u, n_x)

    @property
    def horizon(self) -> int:
        return self.k.shape[0]


def default_alpha_schedule(length: int = 10) -> tuple[float, ...]:
    return tuple(0.5**i for i in range(length))


@dataclass(frozen=True)
class OptimizerConfig:
    mu: float = 1e-6
    mu_factor: float = 10.0
    mu_min: float = 1e-9
    mu_max: float = 1e10
    alphas: Sequence[float] = field(default_factory=default_alpha_schedule)
    band: float = 0.05
    conv_tol: float = 5e-3
    conv_patience: int = 5
    max_iters: int = 500
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)

    def __post_init__(self):
        if self.mu < 0 or self.mu_factor <= 1 or not 0 < self.mu_min <= self.mu_max:
            raise ContractViolation("invalid regularizer bounds")
        alphas = tuple(float(a) for a in self.alphas)
        if not alphas or any(not 0 < a <= 1 for a in alphas):
            raise ContractViolation("alpha schedule must lie in (0, 1]")
        if any(b >= a for a, b in zip(alphas, alphas[1:])):
            raise ContractViolation("alpha schedule must be strictly decreasing")
        object.__setattr__(self, "alphas", alphas)
        if self.band < 0 or self.conv_tol <= 0 or self.conv_patience < 1 or self.max_iters < 0:
            raise ContractViolation("invalid convergence parameters")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    cost: float
    mu: float
    alpha: float
    backward_success: bool
    accepted: bool
    wall_time_s: float
    eval_count: int  # cumulative black-box step calls


@dataclass
class ConvergenceTrace:
    records: list[IterationRecord] = field(default_factory=list)

    def append(self, rec: IterationRecord) -> None:
        self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)


def backward_pass(
    traj: NominalTrajectory,
    cost: QuadraticCostModel,
    models: Sequence[LinearizedModel],
    mu: float,
) -> IterationGains:
    """Riccati-like recursion producing (k_t, K_t); raises on indefinite Q_uu."""
    N = traj.horizon
    if len(models) != N:
        raise ContractViolation(f"expected {N} linearized models, got {len(models)}")
    n_x = traj.states.shape[1]
    n_u = traj.controls.shape[1]
    k = np.empty((N, n_u))
    K = np.empty((N, n_u, n_x))

    J_x, J_xx = terminal_partials(traj.states[N], cost)
    for t in range(N - 1, -1, -1):
        A, B = models[t].A, models[t].B
        c = cost_partials(traj.states[t], traj.controls[t], t, cost)
        J_xx_reg = J_xx + mu * np.eye(n_x)
        Q_x = c.c_x + A.T @ J_x
        Q_u = c.c_u + B.T @ J_x
        Q_xx = c.c_xx + A.T @ J_xx @ A
        Q_ux = c.c_ux + B.T @ J_xx_reg @ A
        Q_uu = c.c_uu + B.T @ J_xx_reg @ B
        Q_uu = 0.5 * (Q_uu + Q_uu.T)
        try:
            chol = scipy.linalg.cho_factor(Q_uu, lower=True)
        except scipy.linalg.LinAlgError:
            raise NotPositiveDefinite(t) from None
        k[t] = -scipy.linalg.cho_solve(chol, Q_u)
        K[t] = -scipy.linalg.cho_solve(chol, Q_ux)
        J_x = Q_x + K[t].T @ Q_uu @ k[t] + K[t].T @ Q_u + Q_ux.T @ k[t]
        J_xx = Q_xx + K[t].T @ Q_uu @ K[t] + K[t].T @ Q_ux + Q_ux.T @ K[t]
        J_xx = 0.5 * (J_xx + J_xx.T)
    return IterationGains(k=k, K=K)


def forward_pass(
    prev: NominalTrajectory,
    gains: IterationGains,
    alpha: float,
    env: Environment,
    cost: QuadraticCostModel,
    band: float = 0.0,
    reference_cost: Optional[float] = None,
) -> tuple[NominalTrajectory, bool]:
    """Roll out u_t = u_prev_t + alpha*k_t + K_t (x_t - x_prev_t).

    The candidate is accepted when its cost stays within the relative band
    of reference_cost (the best cost so far; defaults to prev.cost). A
    rejected or divergent candidate returns prev unchanged.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ContractViolation("alpha must lie in [0, 1]")
    if gains.horizon != prev.horizon:
        raise ContractViolation("gain and trajectory horizons disagree")
    ref = prev.cost if reference_cost is None else reference_cost
    N = prev.horizon
    states = np.empty_like(prev.states)
    controls = np.empty_like(prev.controls)
    states[0] = prev.states[0]
    for t in range(N):
        u = prev.controls[t] + alpha * gains.k[t] + gains.K[t] @ (states[t] - prev.states[t])
        controls[t] = env.clamp(u)
        states[t + 1] = step(env, states[t], controls[t])
        if not np.all(np.isfinite(states[t + 1])):
            return prev, False
    candidate_cost = total_cost(states, controls, cost)
    if candidate_cost <= ref * (1.0 + band) + 1e-300:
        return NominalTrajectory(states, controls, candidate_cost), True
    return prev, False


def optimize(
    env: Environment,
    cost: QuadraticCostModel,
    x0: np.ndarray,
    u_init: np.ndarray,
    cfg: OptimizerConfig,
) -> tuple[NominalTrajectory, ConvergenceTrace]:
    """Outer ILQR loop: identify, backward pass, line search, band acceptance.

    mu escalates on backward failure and decays after accepted iterations;
    termination on sustained small relative cost change, full line-search
    rejection, or the iteration cap. Returns the best-cost trajectory seen.
    """
    t_start = time.perf_counter()
    current = rollout_open_loop(env, x0, u_init, cost)
    best = current
    trace = ConvergenceTrace()
    mu = cfg.mu
    eval_count = 0
    patience = 0

    for it in range(1, cfg.max_iters + 1):
        models = identify_ltv(env, current, cfg.estimator.child(it))
        eval_count += sum(m.eval_count for m in models)
        try:
            gains = backward_pass(current, cost, models, mu)
            backward_ok = True
        except NotPositiveDefinite:
            backward_ok = False
        if not backward_ok:
            if mu >= cfg.mu_max:
                raise RegularizationExhausted(
                    f"mu reached {mu:g} with the backward pass still failing"
                )
            mu = min(mu * cfg.mu_factor, cfg.mu_max)
            trace.append(
                IterationRecord(
                    it, current.cost, mu, float("nan"), False, False,
                    time.perf_counter() - t_start, eval_count,
                )
            )
            continue

        accepted = False
        alpha_used = float("nan")
        prev_cost = current.cost
        for alpha in cfg.alphas:
            candidate, ok = forward_pass(
                current, gains, alpha, env, cost, band=cfg.band, reference_cost=best.cost
            )
            eval_count += current.horizon
            if ok:
                current = candidate
                accepted = True
                alpha_used = alpha
                break
        trace.append(
            IterationRecord(
                it, current.cost, mu, alpha_used, True, accepted,
                time.perf_counter() - t_start, eval_count,
            )
        )
        if not accepted:
            break
        if current.cost < best.cost:
            best = current
        mu = max(mu / cfg.mu_factor, cfg.mu_min)
        rel_change = abs(prev_cost - current.cost) / max(abs(prev_cost), 1e-300)
        patience = patience + 1 if rel_change < cfg.conv_tol else 0
        if patience >= cfg.conv_patience:
            break

    return best, trace

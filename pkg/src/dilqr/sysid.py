"""Sample-based Jacobian estimation from black-box rollouts.

Two estimators share the LinearizedModel output type:

* a batched least-squares central-difference estimator: n_s random
  symmetric perturbations of state and control, paired rollouts, one
  least-squares solve recovering [f_x f_u] simultaneously (2*n_s step
  calls);
* a per-coordinate central-difference baseline (2*(n_x+n_u) step calls).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .costs import NominalTrajectory
from .envs import Environment, step
from .errors import ContractViolation, SingularSystem

LSTSQ_RCOND = 1e-12


@dataclass(frozen=True)
class LinearizedModel:
    """Jacobian pair (A, B) of the dynamics at one nominal point."""

    A: np.ndarray
    B: np.ndarray
    eval_count: int

    def __post_init__(self):
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.B))):
            raise ContractViolation("linearized model contains non-finite entries")


@dataclass(frozen=True)
class EstimatorConfig:
    """Sampling parameters for the least-squares estimator."""

    n_s: int = 0  # 0 -> n_x + n_u + 4, resolved per environment
    sigma: float = 1e-3
    seed: int = 0
    approx_identity: bool = False  # use the sigma^2 (n_s - 1) I shortcut
    fd_step: float = 1e-4

    def __post_init__(self):
        if self.sigma <= 0 or self.fd_step <= 0:
            raise ContractViolation("sigma and fd_step must be positive")

    def resolve_n_s(self, env: Environment) -> int:
        n_s = self.n_s if self.n_s > 0 else env.n_x + env.n_u + 4
        if n_s < env.n_x + env.n_u:
            raise ContractViolation(
                f"n_s={n_s} below n_x + n_u = {env.n_x + env.n_u}; system unsolvable"
            )
        return n_s

    def child(self, *key: int) -> "EstimatorConfig":
        """Derive a config with an independent seed for a subproblem."""
        sub = np.random.SeedSequence([int(self.seed) & (2**63 - 1), *key])
        return replace(self, seed=int(sub.generate_state(1, dtype=np.uint64)[0] >> 1))


def estimate_llscd(
    env: Environment, x_bar: np.ndarray, u_bar: np.ndarray, cfg: EstimatorConfig
) -> LinearizedModel:
    """Batched central-difference least-squares estimate of (f_x, f_u).

    Draws n_s Gaussian perturbation pairs with per-entry std sigma, rolls
    out both signs of each, and solves the stacked system

        [f_x f_u] [dx_i; du_i] = (f(x+dx_i, u+du_i) - f(x-dx_i, u-du_i)) / 2

    in the least-squares sense. Bias is O(sigma^2) on smooth dynamics.
    """
    x_bar = np.asarray(x_bar, dtype=float)
    u_bar = np.asarray(u_bar, dtype=float)
    n_s = cfg.resolve_n_s(env)
    rng = np.random.default_rng(cfg.seed)
    D = cfg.sigma * rng.standard_normal((n_s, env.n_x + env.n_u))
    dX, dU = D[:, : env.n_x], D[:, env.n_x :]

    Y = np.empty((n_s, env.n_x))
    for i in range(n_s):
        f_plus = step(env, x_bar + dX[i], u_bar + dU[i])
        f_minus = step(env, x_bar - dX[i], u_bar - dU[i])
        Y[i] = 0.5 * (f_plus - f_minus)

    if cfg.approx_identity:
        # sample-covariance identity approximation: D'D ~ sigma^2 (n_s - 1) I
        AB = (Y.T @ D) / (cfg.sigma**2 * (n_s - 1))
    else:
        sv = np.linalg.svd(D, compute_uv=False)
        if sv[-1] <= LSTSQ_RCOND * sv[0]:
            raise SingularSystem(
                f"perturbation matrix rank-deficient (cond {sv[0] / max(sv[-1], 1e-300):.3e})",
                condition_number=sv[0] / max(sv[-1], 1e-300),
            )
        AB = np.linalg.lstsq(D, Y, rcond=LSTSQ_RCOND)[0].T
    return LinearizedModel(A=AB[:, : env.n_x], B=AB[:, env.n_x :], eval_count=2 * n_s)


def estimate_fd(
    env: Environment, x_bar: np.ndarray, u_bar: np.ndarray, h: float
) -> LinearizedModel:
    """Per-coordinate central-difference baseline; 2*(n_x + n_u) step calls."""
    if h <= 0:
        raise ContractViolation("finite-difference step h must be positive")
    x_bar = np.asarray(x_bar, dtype=float)
    u_bar = np.asarray(u_bar, dtype=float)
    A = np.empty((env.n_x, env.n_x))
    B = np.empty((env.n_x, env.n_u))
    for j in range(env.n_x):
        e = np.zeros(env.n_x)
        e[j] = h
        A[:, j] = (step(env, x_bar + e, u_bar) - step(env, x_bar - e, u_bar)) / (2 * h)
    for j in range(env.n_u):
        e = np.zeros(env.n_u)
        e[j] = h
        B[:, j] = (step(env, x_bar, u_bar + e) - step(env, x_bar, u_bar - e)) / (2 * h)
    return LinearizedModel(A=A, B=B, eval_count=2 * (env.n_x + env.n_u))


def identify_ltv(
    env: Environment, traj: NominalTrajectory, cfg: EstimatorConfig
) -> list[LinearizedModel]:
    """One LinearizedModel per timestep along a nominal trajectory."""
    models = []
    for t in range(traj.horizon):
        try:
            models.append(estimate_llscd(env, traj.states[t], traj.controls[t], cfg.child(t)))
        except SingularSystem as exc:
            raise SingularSystem(f"identification failed at t={t}: {exc}") from exc
    return models

"""Quadratic trajectory costs and their analytic partials.

Costs are 1/2-scaled quadratics about a goal state:

    J = sum_t 1/2 (x_t - x_g)' Q_t (x_t - x_g) + 1/2 u_t' R_t u_t
        + 1/2 (x_N - x_g)' Q_N (x_N - x_g)

Weights may be time-constant (a single matrix) or time-varying (a stack
indexed by t).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation


def _as_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    return M


def _check_symmetric_psd(M: np.ndarray, name: str, tol: float = 1e-9) -> None:
    if M.ndim == 2:
        stack = M[None]
    else:
        stack = M
    for Mi in stack:
        if not np.allclose(Mi, Mi.T, atol=tol):
            raise ContractViolation(f"{name} must be symmetric")
        if np.min(np.linalg.eigvalsh(Mi)) < -tol:
            raise ContractViolation(f"{name} must be positive semidefinite")


def _check_symmetric_pd(M: np.ndarray, name: str) -> None:
    _check_symmetric_psd(M, name)
    stack = M[None] if M.ndim == 2 else M
    for Mi in stack:
        try:
            np.linalg.cholesky(Mi)
        except np.linalg.LinAlgError:
            raise ContractViolation(f"{name} must be strictly positive definite") from None


@dataclass(frozen=True)
class QuadraticCostModel:
    """Quadratic running + terminal cost about a goal state.

    Q and R may be (n, n) time-constant matrices or (N, n, n) stacks.
    R must be strictly positive definite so the backward pass can always
    regularize Q_uu into positive definiteness.
    """

    Q: np.ndarray
    R: np.ndarray
    Q_terminal: np.ndarray
    x_goal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Q", _as_matrix(self.Q))
        object.__setattr__(self, "R", _as_matrix(self.R))
        object.__setattr__(self, "Q_terminal", _as_matrix(self.Q_terminal))
        object.__setattr__(self, "x_goal", np.atleast_1d(np.asarray(self.x_goal, dtype=float)))
        _check_symmetric_psd(self.Q, "Q")
        _check_symmetric_pd(self.R, "R")
        _check_symmetric_psd(self.Q_terminal, "Q_terminal")
        if self.Q_terminal.shape[-1] != self.x_goal.shape[0]:
            raise ContractViolation("Q_terminal and x_goal dimensions disagree")

    @property
    def n_x(self) -> int:
        return self.x_goal.shape[0]

    @property
    def n_u(self) -> int:
        return self.R.shape[-1]

    def Q_at(self, t: int) -> np.ndarray:
        return self.Q if self.Q.ndim == 2 else self.Q[t]

    def R_at(self, t: int) -> np.ndarray:
        return self.R if self.R.ndim == 2 else self.R[t]

    def scaled(self, factor: float) -> "QuadraticCostModel":
        return QuadraticCostModel(
            factor * self.Q, factor * self.R, factor * self.Q_terminal, self.x_goal
        )


@dataclass(frozen=True)
class CostPartials:
    """First and second partials of the incremental cost at one (x, u, t)."""

    c_x: np.ndarray
    c_u: np.ndarray
    c_xx: np.ndarray
    c_uu: np.ndarray
    c_ux: np.ndarray


@dataclass(frozen=True)
class NominalTrajectory:
    """A deterministic state/control rollout with its scalar cost.

    states has shape (N+1, n_x), controls (N, n_u).
    """

    states: np.ndarray
    controls: np.ndarray
    cost: float

    def __post_init__(self):
        object.__setattr__(self, "states", np.atleast_2d(np.asarray(self.states, dtype=float)))
        object.__setattr__(self, "controls", np.atleast_2d(np.asarray(self.controls, dtype=float)))
        if self.states.shape[0] != self.controls.shape[0] + 1:
            raise ContractViolation("states must have exactly one more entry than controls")
        if not np.all(np.isfinite(self.states)) or not np.all(np.isfinite(self.controls)):
            raise ContractViolation("trajectory contains non-finite entries")

    @property
    def horizon(self) -> int:
        return self.controls.shape[0]

    @property
    def terminal_state(self) -> np.ndarray:
        return self.states[-1]


def _check_dims(x: np.ndarray, u: np.ndarray, cost: QuadraticCostModel) -> None:
    if x.shape[-1] != cost.n_x:
        raise ContractViolation(f"state dimension {x.shape[-1]} != cost n_x {cost.n_x}")
    if u.shape[-1] != cost.n_u:
        raise ContractViolation(f"control dimension {u.shape[-1]} != cost n_u {cost.n_u}")


def stage_cost(x: np.ndarray, u: np.ndarray, t: int, cost: QuadraticCostModel) -> float:
    dx = np.asarray(x, dtype=float) - cost.x_goal
    u = np.asarray(u, dtype=float)
    return 0.5 * dx @ cost.Q_at(t) @ dx + 0.5 * u @ cost.R_at(t) @ u


def terminal_cost(x: np.ndarray, cost: QuadraticCostModel) -> float:
    dx = np.asarray(x, dtype=float) - cost.x_goal
    return 0.5 * dx @ cost.Q_terminal @ dx


def total_cost(states: np.ndarray, controls: np.ndarray, cost: QuadraticCostModel) -> float:
    """Accumulate the quadratic cost of a trajectory, left to right over t."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    controls = np.atleast_2d(np.asarray(controls, dtype=float))
    if states.shape[0] != controls.shape[0] + 1:
        raise ContractViolation("states must have exactly one more entry than controls")
    _check_dims(states, controls, cost)
    J = 0.0
    for t in range(controls.shape[0]):
        J += stage_cost(states[t], controls[t], t, cost)
    J += terminal_cost(states[-1], cost)
    if not np.isfinite(J):
        raise ContractViolation("total cost is not finite")
    return J


def cost_partials(x: np.ndarray, u: np.ndarray, t: int, cost: QuadraticCostModel) -> CostPartials:
    """Closed-form partials of the incremental quadratic cost at (x, u, t)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    _check_dims(x, u, cost)
    Qt = cost.Q_at(t)
    Rt = cost.R_at(t)
    dx = x - cost.x_goal
    return CostPartials(
        c_x=Qt @ dx,
        c_u=Rt @ u,
        c_xx=Qt.copy(),
        c_uu=Rt.copy(),
        c_ux=np.zeros((cost.n_u, cost.n_x)),
    )


def terminal_partials(x: np.ndarray, cost: QuadraticCostModel):
    """Gradient and Hessian of the terminal cost, the backward-pass boundary."""
    dx = np.atleast_1d(np.asarray(x, dtype=float)) - cost.x_goal
    return cost.Q_terminal @ dx, cost.Q_terminal.copy()

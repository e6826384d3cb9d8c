"""Black-box discrete-time dynamics environments.

Every environment is exposed to the optimizer strictly through ``step``;
no module outside the test suite ever reads an analytic Jacobian. The
linear test system stores its defining matrices only as ground truth for
estimator tests.

Stochastic execution follows x_{t+1} = f(x_t, u_t) + eps * w_t with
w_t i.i.d. standard Gaussian per dimension. Noise streams are keyed by
(seed, rollout_id) so concurrent rollouts reproduce regardless of order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .costs import NominalTrajectory, QuadraticCostModel, total_cost
from .errors import ContractViolation

STATE_CHANNEL = "state"
CONTROL_CHANNEL = "control"


@dataclass(frozen=True)
class Environment:
    """An immutable environment specification plus its black-box step map."""

    name: str
    n_x: int
    n_u: int
    dt: float
    horizon: int
    control_bounds: np.ndarray  # (n_u, 2) rows of [lo, hi]
    x0: np.ndarray
    x_goal: np.ndarray
    step_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    # ground truth for exactly linear systems; test metadata only
    true_A: Optional[np.ndarray] = None
    true_B: Optional[np.ndarray] = None

    def __post_init__(self):
        bounds = np.asarray(self.control_bounds, dtype=float).reshape(self.n_u, 2)
        object.__setattr__(self, "control_bounds", bounds)
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        object.__setattr__(self, "x_goal", np.asarray(self.x_goal, dtype=float))
        if self.n_x < 1 or self.n_u < 1 or self.horizon < 1 or self.dt <= 0:
            raise ContractViolation("n_x, n_u, horizon must be >= 1 and dt > 0")
        if np.any(bounds[:, 0] >= bounds[:, 1]):
            raise ContractViolation("control bounds must satisfy lo < hi")

    @property
    def u_scale(self) -> np.ndarray:
        """Per-dimension half-width of the control bounds (control-noise unit)."""
        return 0.5 * (self.control_bounds[:, 1] - self.control_bounds[:, 0])

    def clamp(self, u: np.ndarray) -> np.ndarray:
        return np.clip(u, self.control_bounds[:, 0], self.control_bounds[:, 1])


@dataclass(frozen=True)
class NoiseModel:
    """Scaled additive white Gaussian noise, reproducible from a seed."""

    epsilon: float
    channel: str = STATE_CHANNEL
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ContractViolation("epsilon must lie in [0, 1)")
        if self.channel not in (STATE_CHANNEL, CONTROL_CHANNEL):
            raise ContractViolation(f"unknown noise channel {self.channel!r}")

    def draws(self, rollout_id: int, horizon: int, dim: int) -> np.ndarray:
        """The (horizon, dim) standard-normal block for one rollout."""
        rng = np.random.default_rng([int(self.seed) & (2**63 - 1), int(rollout_id)])
        return rng.standard_normal((horizon, dim))


def step(env: Environment, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Deterministic black-box transition; controls clamped before integration."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape[-1] != env.n_x or u.shape[-1] != env.n_u:
        raise ContractViolation(
            f"bad dimensions for {env.name}: state {x.shape}, control {u.shape}"
        )
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u))):
        raise ContractViolation("non-finite state or control passed to step")
    return env.step_fn(x, env.clamp(u))


def step_noisy(
    env: Environment,
    x: np.ndarray,
    u: np.ndarray,
    noise: NoiseModel,
    t: int,
    rollout_id: int = 0,
) -> np.ndarray:
    """One stochastic transition, positioned deterministically by (seed, rollout, t)."""
    if noise.channel == STATE_CHANNEL:
        w = noise.draws(rollout_id, t + 1, env.n_x)[t]
        return step(env, x, u) + noise.epsilon * w
    w = noise.draws(rollout_id, t + 1, env.n_u)[t]
    u_noisy = np.asarray(u, dtype=float) + noise.epsilon * env.u_scale * w
    return step(env, x, u_noisy)


def rollout_open_loop(
    env: Environment, x0: np.ndarray, controls: np.ndarray, cost: QuadraticCostModel
) -> NominalTrajectory:
    """Deterministic rollout of a control sequence from x0, with its cost."""
    controls = np.atleast_2d(np.asarray(controls, dtype=float))
    N = controls.shape[0]
    states = np.empty((N + 1, env.n_x))
    states[0] = np.asarray(x0, dtype=float)
    for t in range(N):
        states[t + 1] = step(env, states[t], controls[t])
    return NominalTrajectory(states, controls, total_cost(states, controls, cost))


def rollout_closed_loop(
    env: Environment,
    policy,
    noise: NoiseModel,
    cost: QuadraticCostModel,
    rollout_id: int = 0,
):
    """Execute u_t = ubar_t + K_t (x_t - xbar_t) under scaled process noise.

    Returns (states, controls, realized_cost). Controls are clamped after
    the feedback correction; on the control channel, noise is added before
    clamping (actuator saturation acts on the physical command).
    """
    nominal = policy.nominal
    N = nominal.horizon
    dim = env.n_x if noise.channel == STATE_CHANNEL else env.n_u
    w = noise.draws(rollout_id, N, dim)
    states = np.empty((N + 1, env.n_x))
    controls = np.empty((N, env.n_u))
    states[0] = nominal.states[0]
    for t in range(N):
        u = nominal.controls[t] + policy.gains[t] @ (states[t] - nominal.states[t])
        if noise.channel == CONTROL_CHANNEL:
            u = u + noise.epsilon * env.u_scale * w[t]
        u = env.clamp(u)
        controls[t] = u
        x_next = env.step_fn(states[t], u)
        if noise.channel == STATE_CHANNEL:
            x_next = x_next + noise.epsilon * w[t]
        states[t + 1] = x_next
        if not np.all(np.isfinite(x_next)):
            return states[: t + 2], controls[: t + 1], np.inf
    return states, controls, total_cost(states, controls, cost)


# ---------------------------------------------------------------------------
# integrators and built-in environments


def rk4_step(deriv, x: np.ndarray, u: np.ndarray, dt: float, substeps: int = 4) -> np.ndarray:
    """Classic fixed-step RK4 over dt, split into substeps for fidelity."""
    h = dt / substeps
    for _ in range(substeps):
        k1 = deriv(x, u)
        k2 = deriv(x + 0.5 * h * k1, u)
        k3 = deriv(x + 0.5 * h * k2, u)
        k4 = deriv(x + h * k3, u)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


LINEAR_TEST_A = np.array([[1.0, 0.1], [0.0, 1.0]])
LINEAR_TEST_B = np.array([[0.0], [0.1]])

PENDULUM_PARAMS = dict(mass=1.0, length=1.0, gravity=9.81, damping=0.1)
CARTPOLE_PARAMS = dict(cart_mass=1.0, pole_mass=0.1, pole_length=0.5, gravity=9.81)

RK4_SUBSTEPS = 4


def make_linear_env(
    A=LINEAR_TEST_A,
    B=LINEAR_TEST_B,
    name: str = "linear_test",
    dt: float = 0.1,
    horizon: int = 30,
    control_bounds=None,
    x0=None,
    x_goal=None,
) -> Environment:
    """Exactly linear system x_{t+1} = A x + B u; ground truth for Jacobian tests."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n_x, n_u = B.shape
    if control_bounds is None:
        control_bounds = np.tile([-100.0, 100.0], (n_u, 1))
    if x0 is None:
        x0 = np.zeros(n_x)
        x0[0] = 1.0
    if x_goal is None:
        x_goal = np.zeros(n_x)

    def step_fn(x, u):
        return x @ A.T + u @ B.T if x.ndim > 1 else A @ x + B @ u

    return Environment(
        name=name,
        n_x=n_x,
        n_u=n_u,
        dt=dt,
        horizon=horizon,
        control_bounds=control_bounds,
        x0=x0,
        x_goal=x_goal,
        step_fn=step_fn,
        true_A=A,
        true_B=B,
    )


def pendulum_deriv(x, u, mass=1.0, length=1.0, gravity=9.81, damping=0.1):
    """Damped torque-actuated pendulum; theta = 0 hanging, theta = pi upright."""
    theta, omega = x[..., 0], x[..., 1]
    torque = u[..., 0]
    alpha = (torque - damping * omega - mass * gravity * length * np.sin(theta)) / (
        mass * length**2
    )
    return np.stack([omega, alpha], axis=-1)


def make_pendulum_env(
    dt: float = 0.1,
    horizon: int = 30,
    torque_limit: float = 10.0,
    damping: float = PENDULUM_PARAMS["damping"],
    substeps: int = RK4_SUBSTEPS,
) -> Environment:
    params = dict(PENDULUM_PARAMS, damping=damping)

    def step_fn(x, u):
        return rk4_step(lambda xx, uu: pendulum_deriv(xx, uu, **params), x, u, dt, substeps)

    return Environment(
        name="pendulum",
        n_x=2,
        n_u=1,
        dt=dt,
        horizon=horizon,
        control_bounds=np.array([[-torque_limit, torque_limit]]),
        x0=np.zeros(2),
        x_goal=np.array([np.pi, 0.0]),
        step_fn=step_fn,
    )


def cartpole_deriv(x, u, cart_mass=1.0, pole_mass=0.1, pole_length=0.5, gravity=9.81):
    """Cart-pole; pole angle theta = 0 hanging below the cart, pi upright."""
    theta, dpos, dtheta = x[..., 2], x[..., 1], x[..., 3]
    force = u[..., 0]
    s, c = np.sin(theta), np.cos(theta)
    accel = (force + pole_mass * s * (pole_length * dtheta**2 + gravity * c)) / (
        cart_mass + pole_mass * s**2
    )
    ang_accel = -(accel * c + gravity * s) / pole_length
    return np.stack([dpos, accel, dtheta, ang_accel], axis=-1)


def make_cartpole_env(
    dt: float = 0.15,
    horizon: int = 30,
    force_limit: float = 20.0,
    substeps: int = RK4_SUBSTEPS,
) -> Environment:
    def step_fn(x, u):
        return rk4_step(lambda xx, uu: cartpole_deriv(xx, uu, **CARTPOLE_PARAMS), x, u, dt, substeps)

    return Environment(
        name="cartpole",
        n_x=4,
        n_u=1,
        dt=dt,
        horizon=horizon,
        control_bounds=np.array([[-force_limit, force_limit]]),
        x0=np.zeros(4),
        x_goal=np.array([0.0, 0.0, np.pi, 0.0]),
        step_fn=step_fn,
    )


ENV_BUILDERS = {
    "linear_test": make_linear_env,
    "pendulum": make_pendulum_env,
    "cartpole": make_cartpole_env,
}


def make_env(name: str, **overrides) -> Environment:
    if name not in ENV_BUILDERS:
        raise ContractViolation(
            f"unknown environment {name!r}; choose from {sorted(ENV_BUILDERS)}"
        )
    return ENV_BUILDERS[name](**overrides)

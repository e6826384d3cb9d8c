"""Shared fixtures: small environments and cached trained artifacts.

Training runs are expensive, so converged trajectories and policies are
session-scoped and shared by every test that needs them.
"""

import time

import numpy as np
import pytest

import dilqr
from dilqr.config import default_config


@pytest.fixture(scope="session")
def linear_env():
    return dilqr.make_env("linear_test")


@pytest.fixture(scope="session")
def linear_cost(linear_env):
    cfg = default_config()
    cfg.set("env", "name", "linear_test")
    return cfg.make_cost(linear_env)


@pytest.fixture(scope="session")
def pendulum_env():
    return dilqr.make_env("pendulum")


@pytest.fixture(scope="session")
def cartpole_env():
    return dilqr.make_env("cartpole")


class TrainedRun:
    """A full default-config training run plus its synthesized feedback policy."""

    def __init__(self, name):
        cfg = default_config()
        cfg.set("env", "name", name)
        self.env = cfg.make_env()
        self.cost = cfg.make_cost(self.env)
        u_init = np.zeros((self.env.horizon, self.env.n_u))
        t0 = time.perf_counter()
        self.traj, self.trace = dilqr.optimize(
            self.env, self.cost, self.env.x0, u_init, cfg.make_optimizer()
        )
        self.train_seconds = time.perf_counter() - t0
        self.policy = dilqr.build_policy(self.env, self.traj, cfg.make_estimator(), self.cost)


@pytest.fixture(scope="session")
def trained_linear():
    return TrainedRun("linear_test")


@pytest.fixture(scope="session")
def trained_pendulum():
    return TrainedRun("pendulum")


@pytest.fixture(scope="session")
def trained_cartpole():
    return TrainedRun("cartpole")

import numpy as np
import pytest
import scipy.linalg

import dilqr.feedback as fb_mod
from dilqr.costs import QuadraticCostModel
from dilqr.envs import make_linear_env, rollout_open_loop
from dilqr.errors import ContractViolation, SynthesisFailure
from dilqr.feedback import DecoupledPolicy, build_policy, riccati_gains, riccati_value
from dilqr.sysid import EstimatorConfig, LinearizedModel

from oracles import riccati_reference_gains


def scalar_models(n):
    m = LinearizedModel(A=np.array([[1.0]]), B=np.array([[1.0]]), eval_count=0)
    return [m] * n


def unit_weights(n_x=1, n_u=1):
    return QuadraticCostModel(
        Q=np.eye(n_x), R=np.eye(n_u), Q_terminal=np.eye(n_x), x_goal=np.zeros(n_x)
    )


class TestRiccatiGains:
    def test_scalar_two_step_hand_oracle(self):
        # A=B=Q=R=Q_N=1: P_2=1, K_1=-1/2, P_1=3/2, K_0=-3/5, P_0=8/5
        w = unit_weights()
        K = riccati_gains(scalar_models(2), w)
        assert K[1, 0, 0] == pytest.approx(-0.5, abs=1e-14)
        assert K[0, 0, 0] == pytest.approx(-0.6, abs=1e-14)
        P0 = riccati_value(scalar_models(2), w)
        assert P0[0, 0] == pytest.approx(1.6, abs=1e-14)

    def test_matches_independent_recursion_on_linear_system(self):
        env = make_linear_env()
        w = QuadraticCostModel(
            Q=np.diag([2.0, 0.5]), R=np.array([[0.3]]),
            Q_terminal=np.diag([10.0, 1.0]), x_goal=np.zeros(2),
        )
        N = 12
        models = [
            LinearizedModel(A=env.true_A, B=env.true_B, eval_count=0) for _ in range(N)
        ]
        K = riccati_gains(models, w)
        ref = riccati_reference_gains(env.true_A, env.true_B, w.Q, w.R, w.Q_terminal, N)
        for t in range(N):
            assert np.allclose(K[t], ref[t], atol=1e-12)

    def test_gains_invariant_to_uniform_weight_scaling(self):
        w = QuadraticCostModel(
            Q=np.diag([2.0, 0.5]), R=np.array([[0.3]]),
            Q_terminal=np.diag([10.0, 1.0]), x_goal=np.zeros(2),
        )
        env = make_linear_env()
        models = [
            LinearizedModel(A=env.true_A, B=env.true_B, eval_count=0) for _ in range(8)
        ]
        assert np.allclose(riccati_gains(models, w), riccati_gains(models, w.scaled(7.3)))

    def test_terminal_gain_uses_terminal_weight(self):
        # one-step problem: K_0 depends only on Q_N, R; with Q_N large the
        # gain approaches dead-beat -(B'B)^-1 B'A
        w = QuadraticCostModel(Q=1.0, R=1e-9, Q_terminal=1e6, x_goal=[0.0])
        K = riccati_gains(scalar_models(1), w)
        assert K[0, 0, 0] == pytest.approx(-1.0, abs=1e-6)

    def test_synthesis_failure_carries_timestep(self, monkeypatch):
        def boom(*args, **kwargs):
            raise scipy.linalg.LinAlgError("not positive definite")

        monkeypatch.setattr(fb_mod.scipy.linalg, "cho_factor", boom)
        with pytest.raises(SynthesisFailure) as exc_info:
            riccati_gains(scalar_models(3), unit_weights())
        assert exc_info.value.t == 2  # recursion runs backward from the end


class TestBuildPolicy:
    def test_linear_system_recovers_reference_gains(self):
        env = make_linear_env(horizon=10)
        w = unit_weights(2, 1)
        nominal = rollout_open_loop(env, env.x0, np.zeros((10, 1)), w)
        policy = build_policy(env, nominal, EstimatorConfig(seed=0), w)
        ref = riccati_reference_gains(env.true_A, env.true_B, w.Q, w.R, w.Q_terminal, 10)
        assert policy.gains.shape == (10, 1, 2)
        for t in range(10):
            assert np.allclose(policy.gains[t], ref[t], atol=1e-8)
        assert policy.lqr_weights is w

    def test_deterministic_for_fixed_estimator_seed(self):
        env = make_linear_env(horizon=5)
        w = unit_weights(2, 1)
        nominal = rollout_open_loop(env, env.x0, np.zeros((5, 1)), w)
        a = build_policy(env, nominal, EstimatorConfig(seed=3), w)
        b = build_policy(env, nominal, EstimatorConfig(seed=3), w)
        assert np.array_equal(a.gains, b.gains)


class TestDecoupledPolicy:
    def _policy(self):
        env = make_linear_env(horizon=4)
        w = unit_weights(2, 1)
        nominal = rollout_open_loop(env, env.x0, np.zeros((4, 1)), w)
        return DecoupledPolicy(nominal, np.ones((4, 1, 2)))

    def test_zero_gain_variant_keeps_nominal(self):
        p = self._policy()
        z = p.with_zero_gains()
        assert np.all(z.gains == 0.0)
        assert z.nominal is p.nominal

    def test_gain_length_must_match_horizon(self):
        p = self._policy()
        with pytest.raises(ContractViolation, match="horizon"):
            DecoupledPolicy(p.nominal, np.zeros((3, 1, 2)))

    def test_non_finite_gains_rejected(self):
        p = self._policy()
        bad = np.zeros((4, 1, 2))
        bad[2, 0, 0] = np.inf
        with pytest.raises(ContractViolation, match="non-finite"):
            DecoupledPolicy(p.nominal, bad)


def test_gains_contract_initial_state_perturbations():
    # deterministic check: the synthesized gains shrink the terminal
    # deviation produced by an initial-state offset several-fold

    env = make_linear_env(horizon=25)
    w = QuadraticCostModel(
        Q=np.eye(2), R=np.array([[0.1]]), Q_terminal=5 * np.eye(2), x_goal=np.zeros(2)
    )
    nominal = rollout_open_loop(env, env.x0, np.zeros((25, 1)), w)
    policy = build_policy(env, nominal, EstimatorConfig(seed=0), w)
    dx0 = np.array([0.3, -0.2])

    def run(gains):
        x = env.x0 + dx0
        for t in range(25):
            u = nominal.controls[t] + gains[t] @ (x - nominal.states[t])
            x = env.true_A @ x + env.true_B @ env.clamp(u)
        return np.linalg.norm(x - nominal.states[-1])

    assert run(policy.gains) < 0.25 * run(np.zeros_like(policy.gains))

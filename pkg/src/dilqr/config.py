"""Run configuration: flat `key = value` text with bracketed sections.

Every key has a documented default; unknown sections or keys are rejected
with the offending line number. The effective (fully defaulted) config is
echoed alongside every run's outputs for provenance.
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import envs
from .costs import QuadraticCostModel
from .envs import Environment, NoiseModel
from .ilqr import OptimizerConfig, default_alpha_schedule
from .sysid import EstimatorConfig


class ConfigError(ValueError):
    pass


def _parse_bool(s: str) -> bool:
    if s.lower() in ("true", "1", "yes"):
        return True
    if s.lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_floats(s: str) -> tuple:
    return tuple(float(v) for v in s.replace(",", " ").split())


# (parser, default); None default means "derived from the environment"
SCHEMA = {
    "env": {
        "name": (str, "pendulum"),
        "horizon": (int, None),
        "dt": (float, None),
        "torque_limit": (float, None),
        "force_limit": (float, None),
        "damping": (float, None),
        "substeps": (int, None),
    },
    "cost": {
        "q": (_parse_floats, None),
        "r": (_parse_floats, None),
        "q_terminal": (_parse_floats, None),
        "goal": (_parse_floats, None),
    },
    "optimizer": {
        "mu": (float, 1e-6),
        "mu_factor": (float, 10.0),
        "mu_min": (float, 1e-9),
        "mu_max": (float, 1e10),
        "alphas": (_parse_floats, default_alpha_schedule()),
        "band": (float, 0.05),
        "conv_tol": (float, 5e-3),
        "conv_patience": (int, 5),
        "max_iters": (int, 500),
    },
    "estimator": {
        "n_s": (int, 0),  # 0 -> n_x + n_u + 4
        "sigma": (float, 1e-3),
        "approx_identity": (_parse_bool, False),
        "fd_step": (float, 1e-4),
    },
    "noise": {
        "epsilon": (float, 0.05),
        "channel": (str, "state"),
    },
    "eval": {
        "rollouts": (int, 1000),
        "epsilons": (_parse_floats, (0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08)),
    },
    "run": {
        "seed": (int, 0),
        "threads": (int, 0),  # 0 = auto; caps worker parallelism
        "record_timing": (_parse_bool, False),
    },
}

# built-in per-environment cost weights (diagonals)
DEFAULT_WEIGHTS = {
    "linear_test": dict(q=(1.0, 1.0), r=(1.0,), q_terminal=(10.0, 10.0)),
    "pendulum": dict(q=(0.5, 0.1), r=(0.1,), q_terminal=(60.0, 6.0)),
    "cartpole": dict(q=(0.05, 0.05, 1.0, 0.2), r=(0.1,), q_terminal=(1.0, 0.5, 40.0, 4.0)),
}


@dataclass
class RunConfig:
    """Parsed, fully defaulted configuration for one command invocation."""

    values: dict

    def get(self, section: str, key: str):
        return self.values[section][key]

    def set(self, section: str, key: str, value) -> None:
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {section}.{key}")
        self.values[section][key] = value

    # -- factories ---------------------------------------------------------

    def make_env(self) -> Environment:
        name = self.get("env", "name")
        overrides = {}
        for key, builder_key in (
            ("horizon", "horizon"),
            ("dt", "dt"),
            ("torque_limit", "torque_limit"),
            ("force_limit", "force_limit"),
            ("damping", "damping"),
            ("substeps", "substeps"),
        ):
            value = self.get("env", key)
            if value is not None:
                overrides[builder_key] = value
        if name not in envs.ENV_BUILDERS:
            raise ConfigError(f"unknown environment {name!r}")
        allowed = inspect.signature(envs.ENV_BUILDERS[name]).parameters
        bad = [k for k in overrides if k not in allowed]
        if bad:
            raise ConfigError(f"environment {name!r} does not accept {bad}")
        return envs.make_env(name, **overrides)

    def make_cost(self, env: Environment) -> QuadraticCostModel:
        defaults = DEFAULT_WEIGHTS.get(env.name, None)

        def diag(key, size):
            v = self.get("cost", key)
            if v is None:
                if defaults is None:
                    raise ConfigError(f"cost.{key} required for environment {env.name!r}")
                v = defaults[key]
            if len(v) == 1:
                v = v * size
            if len(v) != size:
                raise ConfigError(f"cost.{key} needs 1 or {size} entries, got {len(v)}")
            return np.diag(v)

        goal = self.get("cost", "goal")
        goal = env.x_goal if goal is None else np.asarray(goal, dtype=float)
        if goal.shape != (env.n_x,):
            raise ConfigError(f"cost.goal needs {env.n_x} entries")
        return QuadraticCostModel(
            Q=diag("q", env.n_x),
            R=diag("r", env.n_u),
            Q_terminal=diag("q_terminal", env.n_x),
            x_goal=goal,
        )

    def make_estimator(self) -> EstimatorConfig:
        return EstimatorConfig(
            n_s=self.get("estimator", "n_s"),
            sigma=self.get("estimator", "sigma"),
            seed=self.get("run", "seed"),
            approx_identity=self.get("estimator", "approx_identity"),
            fd_step=self.get("estimator", "fd_step"),
        )

    def make_optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(
            mu=self.get("optimizer", "mu"),
            mu_factor=self.get("optimizer", "mu_factor"),
            mu_min=self.get("optimizer", "mu_min"),
            mu_max=self.get("optimizer", "mu_max"),
            alphas=self.get("optimizer", "alphas"),
            band=self.get("optimizer", "band"),
            conv_tol=self.get("optimizer", "conv_tol"),
            conv_patience=self.get("optimizer", "conv_patience"),
            max_iters=self.get("optimizer", "max_iters"),
            estimator=self.make_estimator(),
        )

    def make_noise(self, epsilon: float | None = None) -> NoiseModel:
        return NoiseModel(
            epsilon=self.get("noise", "epsilon") if epsilon is None else epsilon,
            channel=self.get("noise", "channel"),
            seed=self.get("run", "seed"),
        )

    # -- text round trip ---------------------------------------------------

    def dump(self) -> str:
        """Effective config as parseable text (full provenance echo)."""
        out = []
        for section, keys in SCHEMA.items():
            out.append(f"[{section}]")
            for key in keys:
                value = self.values[section][key]
                out.append(f"{key} = {_format_value(value)}")
            out.append("")
        return "\n".join(out)


def _format_value(value) -> str:
    if value is None:
        return "default"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def default_config() -> RunConfig:
    return RunConfig({s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()})


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse config text over the defaults; errors carry line numbers."""
    cfg = default_config()
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"{source}:{lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if section is None:
            raise ConfigError(f"{source}:{lineno}: key outside any [section]")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in SCHEMA[section]:
            raise ConfigError(f"{source}:{lineno}: unknown key {section}.{key}")
        if value == "default":
            continue
        parser, _ = SCHEMA[section][key]
        try:
            cfg.values[section][key] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {section}.{key}: {exc}") from exc
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))

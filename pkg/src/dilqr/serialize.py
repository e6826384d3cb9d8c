"""Flat-text serialization of trajectories and policies.

Files are line-oriented decimal text at full round-trip precision, so a
save/load cycle is bit-exact. Layout: a versioned magic line, `key = value`
header fields, then bracketed array sections with one row per line.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np

from .costs import NominalTrajectory
from .envs import Environment
from .errors import ContractViolation
from .feedback import DecoupledPolicy

TRAJECTORY_MAGIC = "dilqr-trajectory v1"
POLICY_MAGIC = "dilqr-policy v1"


def _format_row(row) -> str:
    return " ".join(repr(float(v)) for v in np.atleast_1d(row))


def _header_lines(env_name: str, n_x: int, n_u: int, horizon: int, cost: float) -> list[str]:
    return [
        f"env = {env_name}",
        f"n_x = {n_x}",
        f"n_u = {n_u}",
        f"horizon = {horizon}",
        f"cost = {repr(float(cost))}",
    ]


def save_trajectory(path, traj: NominalTrajectory, env_name: str) -> None:
    n_x = traj.states.shape[1]
    n_u = traj.controls.shape[1]
    lines = [TRAJECTORY_MAGIC]
    lines += _header_lines(env_name, n_x, n_u, traj.horizon, traj.cost)
    lines.append("[states]")
    lines += [_format_row(row) for row in traj.states]
    lines.append("[controls]")
    lines += [_format_row(row) for row in traj.controls]
    Path(path).write_text("\n".join(lines) + "\n")


def save_policy(path, policy: DecoupledPolicy, env_name: str) -> None:
    traj = policy.nominal
    n_x = traj.states.shape[1]
    n_u = traj.controls.shape[1]
    lines = [POLICY_MAGIC]
    lines += _header_lines(env_name, n_x, n_u, traj.horizon, traj.cost)
    lines.append("[states]")
    lines += [_format_row(row) for row in traj.states]
    lines.append("[controls]")
    lines += [_format_row(row) for row in traj.controls]
    lines.append("[gains]")
    lines += [_format_row(K.reshape(-1)) for K in policy.gains]
    Path(path).write_text("\n".join(lines) + "\n")


class _Parser:
    def __init__(self, path, magic: str):
        text = Path(path).read_text()
        self.lines = text.splitlines()
        self.pos = 0
        if not self.lines or self.lines[0] != magic:
            raise ContractViolation(f"{path}: expected a file starting with {magic!r}")
        self.pos = 1
        self.header: dict[str, str] = {}
        while self.pos < len(self.lines) and "=" in self.lines[self.pos]:
            key, _, value = self.lines[self.pos].partition("=")
            self.header[key.strip()] = value.strip()
            self.pos += 1

    def section(self, name: str, rows: int, cols: int) -> np.ndarray:
        if self.pos >= len(self.lines) or self.lines[self.pos] != f"[{name}]":
            raise ContractViolation(f"expected section [{name}] at line {self.pos + 1}")
        self.pos += 1
        block = self.lines[self.pos : self.pos + rows]
        if len(block) != rows:
            raise ContractViolation(f"section [{name}] truncated")
        self.pos += rows
        data = np.array([[float(v) for v in line.split()] for line in block])
        if data.shape != (rows, cols):
            raise ContractViolation(f"section [{name}] has shape {data.shape}, want {(rows, cols)}")
        return data


def load_trajectory(path) -> tuple[NominalTrajectory, str]:
    p = _Parser(path, TRAJECTORY_MAGIC)
    n_x, n_u = int(p.header["n_x"]), int(p.header["n_u"])
    N = int(p.header["horizon"])
    states = p.section("states", N + 1, n_x)
    controls = p.section("controls", N, n_u)
    traj = NominalTrajectory(states, controls, float(p.header["cost"]))
    return traj, p.header["env"]


def load_policy(path) -> tuple[DecoupledPolicy, str]:
    p = _Parser(path, POLICY_MAGIC)
    n_x, n_u = int(p.header["n_x"]), int(p.header["n_u"])
    N = int(p.header["horizon"])
    states = p.section("states", N + 1, n_x)
    controls = p.section("controls", N, n_u)
    gains = p.section("gains", N, n_u * n_x).reshape(N, n_u, n_x)
    traj = NominalTrajectory(states, controls, float(p.header["cost"]))
    return DecoupledPolicy(nominal=traj, gains=gains), p.header["env"]

"""Discretised dynamic-programming solvers used to check the closed form.

Both solvers work on a grid whose step divides the per-period learning
``delta`` exactly, so every honeypot continuation lands on a grid node and no
interpolation is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from engagement.model import ModelParams, derive

DEFAULT_M_PER_DELTA = 100
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000


class NotConverged(RuntimeError):
    def __init__(self, iterations: int, residual: float) -> None:
        super().__init__(
            f"value iteration did not converge after {iterations} iterations "
            f"(final residual {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class GridSpec:
    m_per_delta: int = DEFAULT_M_PER_DELTA

    def __post_init__(self) -> None:
        if not isinstance(self.m_per_delta, (int, np.integer)) or self.m_per_delta < 1:
            raise ValueError(
                f"m_per_delta must be a positive integer (grid not commensurate with delta), "
                f"got {self.m_per_delta!r}"
            )

    def step(self, params: ModelParams) -> float:
        return derive(params).delta / self.m_per_delta

    def nodes(self, params: ModelParams) -> np.ndarray:
        h = self.step(params)
        # tolerate u0 landing a hair above a node through rounding
        n = math.ceil(params.u0 / h - 1e-9) if params.u0 > 0 else 0
        return np.arange(n + 1) * h


@dataclass(frozen=True)
class GridValue:
    u: np.ndarray
    v_h: np.ndarray
    v_n: np.ndarray
    h: float
    iterations: int = 1
    residual: float = 0.0
    meta: dict = field(default_factory=dict)


def _stage_reward_h(params: ModelParams, n_nodes: int, m: int, h: float) -> np.ndarray:
    # net reward of one honeypot stage under the wait-until-depletion rule
    j = np.arange(n_nodes)
    gain = params.v + params.c_h
    return np.where(j >= m, gain * params.t_a_bar, gain * j * h / params.v)


def backward_solve(params: ModelParams, grid: GridSpec | None = None) -> GridValue:
    """Solve upward in residual utility, one block of ``delta`` at a time.

    The normal-system equation has the unknown on both sides with weight p and
    is solved algebraically: V_N = max(0, V_H - expected damage).
    """
    grid = grid or GridSpec()
    m = grid.m_per_delta
    h = grid.step(params)
    u = grid.nodes(params)
    n = u.size
    p = params.p
    damage = -params.c_n / (1.0 - p) * params.t_a_bar

    base = _stage_reward_h(params, n, m, h)
    v_h = np.empty(n)
    v_n = np.empty(n)
    # first block: the attacker never outlasts the defender's wait
    head = min(m, n)
    v_h[:head] = base[:head]
    v_n[:head] = np.maximum(v_h[:head] - damage, 0.0)
    for start in range(m, n, m):
        stop = min(start + m, n)
        prev = slice(start - m, stop - m)
        v_h[start:stop] = base[start:stop] + p * v_n[prev] + (1.0 - p) * v_h[prev]
        v_n[start:stop] = np.maximum(v_h[start:stop] - damage, 0.0)
    return GridValue(u, v_h, v_n, h)


def bellman(params: ModelParams, grid: GridSpec, v_h: np.ndarray, v_n: np.ndarray):
    """One application of the two-action Bellman operator on the grid."""
    m = grid.m_per_delta
    h = grid.step(params)
    p = params.p
    new_h = _stage_reward_h(params, v_h.size, m, h)
    if v_h.size > m:
        new_h[m:] += p * v_n[:-m] + (1.0 - p) * v_h[:-m]
    # in a normal system: eject now (0) or let the attacker move on
    cont = params.c_n * params.t_a_bar + p * v_n + (1.0 - p) * v_h
    new_n = np.maximum(cont, 0.0)
    return new_h, new_n


def fixed_point_solve(
    params: ModelParams,
    grid: GridSpec | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> GridValue:
    """Value iteration from all-zero tables until the sup-norm update drops below ``tol``."""
    if tol <= 0.0:
        raise ValueError("tol must be > 0")
    grid = grid or GridSpec()
    u = grid.nodes(params)
    v_h = np.zeros(u.size)
    v_n = np.zeros(u.size)
    residual = math.inf
    for it in range(1, max_iter + 1):
        new_h, new_n = bellman(params, grid, v_h, v_n)
        residual = float(max(np.max(np.abs(new_h - v_h)), np.max(np.abs(new_n - v_n))))
        v_h, v_n = new_h, new_n
        if residual < tol:
            return GridValue(u, v_h, v_n, grid.step(params), it, residual)
    raise NotConverged(max_iter, residual)


@dataclass(frozen=True)
class PolicyTable:
    u: np.ndarray
    continue_n: np.ndarray  # True where the attacker is allowed to move on
    wait_h: np.ndarray  # defender waiting time in honeypots
    omega_hat: float  # smallest node with continuation; inf when none


def extract_policy(gv: GridValue, params: ModelParams) -> PolicyTable:
    damage = -params.c_n / (1.0 - params.p) * params.t_a_bar
    cont = gv.v_h - damage > 0.0
    idx = np.flatnonzero(cont)
    omega_hat = float(gv.u[idx[0]]) if idx.size else math.inf
    return PolicyTable(gv.u, cont, gv.u / params.v, omega_hat)

"""Closed-form threshold, value function and optimal defender policy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from engagement.model import (
    DerivedQuantities,
    EngagementState,
    ModelParams,
    SystemType,
    derive,
)

SNAP = 1e-9
# slack allowed when callers pass u marginally above u0 after float arithmetic
DOMAIN_SLACK = 1e-12


def k_index(x: float, delta: float) -> int:
    """Number of whole ``delta`` steps contained in ``x`` (0 for negative ``x``).

    A small snap keeps exact multiples of ``delta`` reached by repeated
    subtraction from landing one bucket low.
    """
    if delta <= 0.0:
        raise ValueError("delta must be > 0")
    if x < 0.0:
        return 0
    return math.floor(x / delta + SNAP)


def k_index_array(x: np.ndarray, delta: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    k = np.floor(x / delta + SNAP)
    return np.where(x < 0.0, 0.0, k)


@dataclass(frozen=True)
class SolveResult:
    omega: float  # math.inf in the trivial case
    k_omega: int
    trivial: bool
    params: ModelParams
    derived: DerivedQuantities
    grazing: bool = False  # omega sits on a multiple of delta within tolerance

    @property
    def balance_residual(self) -> float:
        """f_d(omega) minus the expected damage; zero up to rounding."""
        if self.trivial:
            return math.nan
        return _f_d_scalar(self.omega, self) - self.params.t_a_bar * self.derived.lambda_n

    def value(self, u: float, s: SystemType | str) -> float:
        return value(EngagementState(u, SystemType(s)), self)

    def policy(self, u: float, s: SystemType | str) -> float:
        return policy(EngagementState(u, SystemType(s)), self)


def _survival_sum(p: float, k: float) -> float:
    """(1 - (1-p)**k) / p with the p -> 0 limit k."""
    if p == 0.0:
        return k
    return -math.expm1(k * math.log1p(-p)) / p


def solve_threshold(params: ModelParams) -> SolveResult:
    d = derive(params)
    p = params.p
    gain = params.v + params.c_h
    # log argument; non-positive means no residual utility makes staying in N worthwhile
    a = 1.0 + p * params.c_n / ((1.0 - p) * gain)
    if a <= 0.0:
        return SolveResult(math.inf, 0, True, params, d)

    ratio = d.lambda_n / gain
    if p == 0.0:
        k_log = math.floor(ratio + SNAP)
    else:
        k_log = math.floor(math.log(a) / math.log1p(-p) + SNAP)
    k_log = max(k_log, 0)

    survive = (1.0 - p) ** k_log
    omega = d.delta * (k_log + ratio / survive - _survival_sum(p, k_log) / survive)
    omega = max(omega, 0.0)
    k_omega = k_index(omega, d.delta)
    grazing = abs(omega - k_omega * d.delta) < 1e-9 * max(1.0, d.delta)
    return SolveResult(omega, k_omega, False, params, d, grazing)


def f_d_array(u: np.ndarray, solve: SolveResult) -> np.ndarray:
    """Vectorised honeypot value with no domain check."""
    u = np.asarray(u, dtype=float)
    params, d = solve.params, solve.derived
    p = params.p
    k_u = k_index_array(u, d.delta)
    if solve.trivial:
        k_past = np.zeros_like(u)
    else:
        k_past = k_index_array(u - solve.omega, d.delta)
    steps = k_u - k_past
    survive = (1.0 - p) ** steps
    if p == 0.0:
        middle = d.delta1 * steps
    else:
        middle = (d.delta1 / p) * (-np.expm1(steps * np.log1p(-p)))
    # remainder below one delta step, clamped against the snap pushing it negative
    remainder = np.maximum(u - d.delta * k_u, 0.0)
    drift = d.delta1 - p * d.lambda_n * params.t_a_bar
    return d.chi_h * remainder * survive + middle + k_past * drift


def _f_d_scalar(u: float, solve: SolveResult) -> float:
    return float(f_d_array(np.array([u]), solve)[0])


def _check_domain(u: float, solve: SolveResult) -> None:
    if not 0.0 <= u <= solve.params.u0 * (1.0 + DOMAIN_SLACK) + DOMAIN_SLACK:
        raise ValueError(f"u={u} outside [0, u0={solve.params.u0}]")


def f_d(u: float, solve: SolveResult) -> float:
    """Expected surveillance reward from residual utility ``u`` in a honeypot."""
    _check_domain(u, solve)
    return _f_d_scalar(u, solve)


def value_arrays(u: np.ndarray, solve: SolveResult) -> tuple[np.ndarray, np.ndarray]:
    """Honeypot and normal-system values at every entry of ``u``."""
    v_h = f_d_array(u, solve)
    v_n = np.maximum(v_h - solve.params.t_a_bar * solve.derived.lambda_n, 0.0)
    if solve.trivial:
        v_n = np.zeros_like(v_h)
    return v_h, v_n


def value(state: EngagementState, solve: SolveResult) -> float:
    if state.s is SystemType.L:
        return 0.0
    fd = f_d(state.u, solve)
    if state.s is SystemType.H:
        return fd
    if solve.trivial:
        return 0.0
    return max(fd - solve.params.t_a_bar * solve.derived.lambda_n, 0.0)


def policy(state: EngagementState, solve: SolveResult) -> float:
    """Optimal defender waiting time; 0 means eject now.

    A normal system exactly at the threshold keeps the attacker for one period;
    ejecting there is worth the same (zero).
    """
    if state.s is SystemType.L:
        raise ValueError("no action exists after ejection")
    if state.s is SystemType.H:
        return state.u / solve.params.v
    if solve.trivial or state.u < solve.omega:
        return 0.0
    return solve.params.t_a_bar

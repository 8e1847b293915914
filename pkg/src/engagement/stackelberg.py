"""Worst-case attacker timing: the defender's expected value as a function of
the attacker's move period, its asymptotes, and the sweep-based equilibrium."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from engagement.model import ModelParams
from engagement.solver import solve_threshold, value_arrays

ENVELOPE_ALLOWANCE = 0.02

REGIME_DELTA_LT_OMEGA = "delta<omega"
REGIME_DELTA_GT_OMEGA = "delta>omega"
REGIME_DELTA_EQ_OMEGA = "delta=omega"
REGIME_TRIVIAL = "trivial"

# T_bar >= max(r, T_omega) uses an undefined r; read here as the depletion time u0/v
R_INTERPRETATION = "r = u0/v (honeypot depletion time)"


def v_bar(t_a_bar: float, base: ModelParams) -> float:
    """Expected defender value over the initial system type for move period ``t_a_bar``."""
    if not t_a_bar > 0.0:
        raise ValueError(f"t_a_bar must be > 0, got {t_a_bar}")
    solve = solve_threshold(base.replace(t_a_bar=t_a_bar))
    v_h, v_n = value_arrays(np.array([base.u0]), solve)
    return float(base.p * v_n[0] + (1.0 - base.p) * v_h[0])


def limit_low(base: ModelParams) -> float:
    """Value approached as the attacker moves arbitrarily fast."""
    return base.u0 * (1.0 + (base.c_h + base.c_n * base.p / (1.0 - base.p)) / base.v)


def value_high(base: ModelParams) -> float:
    """Plateau reached once the attacker is slow enough to be held to depletion."""
    return base.u0 * (1.0 - base.p) * (base.v + base.c_h) / base.v


def t_omega(base: ModelParams) -> float | None:
    """Move period at which the threshold equals u0; ``None`` in the trivial case.

    The threshold scales linearly with the move period (its bucket index does
    not depend on it), so one solve fixes the ratio.
    """
    solve = solve_threshold(base)
    if solve.trivial:
        return None
    ratio = solve.omega / solve.derived.delta
    return base.u0 / (base.v * ratio)


def plateau_start(base: ModelParams) -> float | None:
    t_w = t_omega(base)
    if t_w is None:
        return None
    return max(base.u0 / base.v, t_w)


def worst_case_bound(base: ModelParams) -> float:
    return min(limit_low(base), value_high(base))


def regime(base: ModelParams) -> str:
    """Which of delta < omega / delta > omega holds; the ratio is period-independent."""
    solve = solve_threshold(base)
    if solve.trivial:
        return REGIME_TRIVIAL
    if math.isclose(solve.omega, solve.derived.delta, rel_tol=1e-12):
        return REGIME_DELTA_EQ_OMEGA
    return REGIME_DELTA_LT_OMEGA if solve.derived.delta < solve.omega else REGIME_DELTA_GT_OMEGA


def geometric_grid(t_min: float, t_max: float, points_per_decade: int = 2000) -> np.ndarray:
    if not 0.0 < t_min <= t_max:
        raise ValueError(f"need 0 < t_min <= t_max, got {t_min}, {t_max}")
    decades = math.log10(t_max / t_min)
    n = max(int(math.ceil(decades * points_per_decade)) + 1, 1)
    return np.geomspace(t_min, t_max, n) if n > 1 else np.array([t_min])


@dataclass(frozen=True)
class SweepResult:
    t_a: np.ndarray
    v_bar: np.ndarray
    regimes: tuple[str, ...]
    argmin_t: float
    min_value: float
    limit_low: float
    value_high: float
    t_omega: float | None
    plateau_start: float | None
    bound: float
    allowance: float = ENVELOPE_ALLOWANCE
    notes: dict = field(default_factory=dict)

    @property
    def bound_violation(self) -> bool:
        """True when a sampled value dips below the worst-case bound by more
        than the envelope allowance. Such a dip is a finding to report, not
        an error."""
        return bool(self.min_value < self.bound - self.allowance * abs(self.bound))

    def summary(self) -> dict:
        return {
            "argmin_t_a": self.argmin_t,
            "min_v_bar": self.min_value,
            "limit_low": self.limit_low,
            "value_high": self.value_high,
            "t_omega": self.t_omega,
            "plateau_start": self.plateau_start,
            "worst_case_bound": self.bound,
            "bound_violation": self.bound_violation,
            "envelope_allowance": self.allowance,
            "regime": self.regimes[0] if self.regimes else None,
            **self.notes,
        }


def sweep(
    base: ModelParams,
    t_grid: Sequence[float] | Iterable[float],
    workers: int | None = None,
) -> SweepResult:
    """Evaluate the expected value over a grid of attacker periods.

    Samples are returned sorted by period; ``workers`` > 1 evaluates them on a
    thread pool without changing the result.
    """
    t = np.sort(np.asarray(list(t_grid), dtype=float))
    if t.size == 0:
        raise ValueError("t_grid must not be empty")
    if np.any(t <= 0.0):
        raise ValueError("t_grid must contain only positive periods")
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = np.fromiter(pool.map(lambda x: v_bar(x, base), t), float, t.size)
    else:
        values = np.fromiter((v_bar(x, base) for x in t), float, t.size)
    i = int(np.argmin(values))
    label = regime(base)
    return SweepResult(
        t_a=t,
        v_bar=values,
        regimes=(label,) * t.size,
        argmin_t=float(t[i]),
        min_value=float(values[i]),
        limit_low=limit_low(base),
        value_high=value_high(base),
        t_omega=t_omega(base),
        plateau_start=plateau_start(base),
        bound=worst_case_bound(base),
        notes={"r_interpretation": R_INTERPRETATION},
    )

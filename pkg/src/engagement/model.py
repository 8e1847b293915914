"""MDP primitives: parameters, state, one-stage reward and transition kernel."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence


class InvalidParameters(ValueError):
    """Raised when a parameter set violates a model constraint."""


class SystemType(str, enum.Enum):
    H = "H"  # honeypot
    N = "N"  # normal (production) system
    L = "L"  # left the network


@dataclass(frozen=True)
class ModelParams:
    """Primitive constants of the engagement game.

    p is the fraction of normal systems, v the learning rate in honeypots,
    c_h the honeypot maintenance rate, c_n the damage rate in normal systems,
    t_a_bar the attacker's move period and u0 the total learnable utility.
    """

    p: float
    v: float
    c_h: float
    c_n: float
    t_a_bar: float
    u0: float

    def __post_init__(self) -> None:
        for name in ("p", "v", "c_h", "c_n", "t_a_bar", "u0"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise InvalidParameters(f"{name} must be a finite number, got {value!r}")
        if not 0.0 <= self.p < 1.0:
            raise InvalidParameters(f"p must satisfy 0 <= p < 1, got {self.p}")
        if self.v <= 0.0:
            raise InvalidParameters(f"v must be > 0, got {self.v}")
        if self.c_h > 0.0:
            raise InvalidParameters(f"c_h must be <= 0, got {self.c_h}")
        if self.c_n >= 0.0:
            raise InvalidParameters(f"c_n must be < 0, got {self.c_n}")
        if self.v + self.c_h <= 0.0:
            raise InvalidParameters(
                f"v + c_h must be > 0 (honeypot monitoring must pay), got {self.v + self.c_h}"
            )
        if self.t_a_bar <= 0.0:
            raise InvalidParameters(f"t_a_bar must be > 0, got {self.t_a_bar}")
        # u0 = 0 is accepted as a degenerate empty utility range
        if self.u0 < 0.0:
            raise InvalidParameters(f"u0 must be >= 0, got {self.u0}")

    def replace(self, **changes: float) -> "ModelParams":
        fields = {name: getattr(self, name) for name in ("p", "v", "c_h", "c_n", "t_a_bar", "u0")}
        fields.update(changes)
        return ModelParams(**fields)

    def as_dict(self) -> dict[str, float]:
        return {
            "p": self.p,
            "v": self.v,
            "c_h": self.c_h,
            "c_n": self.c_n,
            "t_a_bar": self.t_a_bar,
            "u0": self.u0,
        }


@dataclass(frozen=True)
class DerivedQuantities:
    delta: float  # utility learned per full attacker period in a honeypot
    delta1: float  # net honeypot reward per full attacker period
    lambda_n: float  # damage rate scaled by the expected run of normal systems
    chi_h: float  # net fraction of honeypot learning that is kept


def derive(params: ModelParams) -> DerivedQuantities:
    return DerivedQuantities(
        delta=params.t_a_bar * params.v,
        delta1=params.t_a_bar * (params.v + params.c_h),
        lambda_n=-params.c_n / (1.0 - params.p),
        chi_h=(params.v + params.c_h) / params.v,
    )


@dataclass(frozen=True)
class EngagementState:
    u: float
    s: SystemType

    def __post_init__(self) -> None:
        if self.u < 0.0 or not math.isfinite(self.u):
            raise ValueError(f"residual utility must be >= 0, got {self.u}")
        object.__setattr__(self, "s", SystemType(self.s))


@dataclass(frozen=True)
class Vulnerability:
    rho: float  # exploitation likelihood
    phi: float  # cost rate when exploited


@dataclass(frozen=True)
class VulnerabilityTable:
    systems: tuple[tuple[Vulnerability, ...], ...]

    def __post_init__(self) -> None:
        if not self.systems:
            raise ValueError("vulnerability table must list at least one system")
        for m, vulns in enumerate(self.systems):
            for vuln in vulns:
                if not 0.0 <= vuln.rho <= 1.0:
                    raise ValueError(f"system {m}: rho must lie in [0, 1], got {vuln.rho}")
                if not vuln.phi < 0.0:
                    raise ValueError(f"system {m}: phi must be < 0, got {vuln.phi}")

    @classmethod
    def from_pairs(cls, systems: Sequence[Sequence[tuple[float, float]]]) -> "VulnerabilityTable":
        return cls(tuple(tuple(Vulnerability(rho, phi) for rho, phi in vulns) for vulns in systems))

    @classmethod
    def read_csv(cls, path: str | Path) -> "VulnerabilityTable":
        """Load a table from a CSV file with header ``system,vuln,rho,phi``.

        Systems are kept in order of first appearance.
        """
        grouped: dict[str, list[Vulnerability]] = {}
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != [
                "system",
                "vuln",
                "rho",
                "phi",
            ]:
                raise ValueError(
                    f"{path}: expected header 'system,vuln,rho,phi', got {reader.fieldnames}"
                )
            for lineno, row in enumerate(reader, start=2):
                try:
                    rho = float(row["rho"])
                    phi = float(row["phi"])
                except (TypeError, ValueError) as exc:
                    raise ValueError(f"{path}:{lineno}: bad rho/phi value") from exc
                grouped.setdefault(row["system"].strip(), []).append(Vulnerability(rho, phi))
        return cls(tuple(tuple(v) for v in grouped.values()))


def aggregate_cn(table: VulnerabilityTable) -> float:
    """Average per-system damage rate, each vulnerability weighted by its likelihood."""
    total = math.fsum(vuln.rho * vuln.phi for vulns in table.systems for vuln in vulns)
    return total / len(table.systems)


def residual_after(u: float, t: float, v: float) -> float:
    """Residual utility left after ``t`` seconds of honeypot observation."""
    return max(u - v * t, 0.0)


def reward(state: EngagementState, t_d: float, t_a: float, params: ModelParams) -> float:
    """One-stage reward to the defender.

    ``t_d`` is how long the defender waits before ejecting and ``t_a`` how long
    the attacker waits before moving; the attacker stays ``min(t_a, t_d)``.
    """
    if t_d < 0.0 or t_a < 0.0:
        raise ValueError("waiting times must be non-negative")
    stay = min(t_a, t_d)
    if state.s is SystemType.N:
        return params.c_n * stay
    if state.s is SystemType.H:
        return min(stay * params.v, state.u) + params.c_h * stay
    return 0.0


def transition(
    state: EngagementState,
    t_d: float,
    t_a: float,
    params: ModelParams,
    draw: float,
) -> EngagementState:
    """Sample the next state given a uniform ``draw`` in [0, 1).

    The attacker is ejected when ``t_a > t_d``; otherwise it moves to a normal
    system when ``draw < p`` and to a honeypot otherwise.
    """
    if state.s is SystemType.L:
        raise ValueError("cannot step an engagement that has already ended")
    if not 0.0 <= draw < 1.0:
        raise ValueError(f"draw must lie in [0, 1), got {draw}")
    if t_a > t_d:
        u_next = state.u if state.s is SystemType.N else residual_after(state.u, t_d, params.v)
        return EngagementState(u_next, SystemType.L)
    u_next = state.u if state.s is SystemType.N else residual_after(state.u, t_a, params.v)
    return EngagementState(u_next, SystemType.N if draw < params.p else SystemType.H)

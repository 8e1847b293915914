"""Monte Carlo replay of attacks under the optimal defender policy."""

from __future__ import annotations

import csv
import functools
import io
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from engagement.model import (
    EngagementState,
    ModelParams,
    SystemType,
    residual_after,
    reward,
)
from engagement.solver import SolveResult, policy

log = logging.getLogger(__name__)

CONTINUE = "continue"
EJECT = "eject"

TRACE_COLUMNS = ("stage", "time", "node", "system", "u_before", "u_after", "action", "reward", "cum_utility")


@dataclass(frozen=True)
class NetworkSpec:
    """Nodes ``1..num_nodes``; the last ``num_honeypots`` ids are honeypots."""

    num_nodes: int = 20
    num_honeypots: int = 4
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.num_nodes < 1:
            raise ValueError("num_nodes must be >= 1")
        if not 0 <= self.num_honeypots <= self.num_nodes:
            raise ValueError("num_honeypots must lie in [0, num_nodes]")
        if self.labels is not None and len(self.labels) != self.num_nodes:
            raise ValueError("labels must name every node")

    @property
    def implied_p(self) -> float:
        return (self.num_nodes - self.num_honeypots) / self.num_nodes

    def id_table(self) -> dict[SystemType, tuple[str, ...]]:
        return _id_table(self)

    def node_ids(self, s: SystemType) -> list[str]:
        normal = self.num_nodes - self.num_honeypots
        ids = range(1, normal + 1) if s is SystemType.N else range(normal + 1, self.num_nodes + 1)
        if self.labels is None:
            return [str(i) for i in ids]
        return [self.labels[i - 1] for i in ids]


@functools.lru_cache(maxsize=32)
def _id_table(net: NetworkSpec) -> dict[SystemType, tuple[str, ...]]:
    return {s: tuple(net.node_ids(s)) for s in (SystemType.H, SystemType.N)}


class TraceEvent(NamedTuple):
    stage: int
    time: float  # wall-clock time when the attacker leaves this system
    node: str
    system: str
    u_before: float
    u_after: float
    action: str
    reward: float
    cum_utility: float


@dataclass(frozen=True)
class AttackTrace:
    events: tuple[TraceEvent, ...]
    exhausted: bool = False  # ran out of real nodes and fell back to synthetic ids

    @property
    def final_utility(self) -> float:
        return self.events[-1].cum_utility if self.events else 0.0

    @property
    def duration(self) -> float:
        return self.events[-1].time if self.events else 0.0


def trace_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Independent stream for trace ``index`` derived from the master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


class _NodePool:
    """Draws node ids uniformly without replacement via a sparse Fisher-Yates shuffle."""

    def __init__(self, ids: dict[SystemType, tuple[str, ...]], rng: np.random.Generator) -> None:
        self._ids = ids
        self._swaps: dict[SystemType, dict[int, int]] = {SystemType.H: {}, SystemType.N: {}}
        self._taken = {SystemType.H: 0, SystemType.N: 0}
        self._rng = rng
        self.exhausted = False

    def take(self, s: SystemType) -> str:
        ids = self._ids[s]
        taken = self._taken[s]
        self._taken[s] = taken + 1
        if taken >= len(ids):
            self.exhausted = True
            return f"{s.value}*{taken - len(ids) + 1}"
        swaps = self._swaps[s]
        last = len(ids) - 1 - taken
        pick = int(self._rng.integers(last + 1))
        chosen = swaps.get(pick, pick)
        swaps[pick] = swaps.get(last, last)
        return ids[chosen]


def simulate_trace(
    params: ModelParams,
    solve: SolveResult,
    net: NetworkSpec,
    seed: int | np.random.Generator,
) -> AttackTrace:
    """Run one attack until the defender ejects the attacker.

    The attacker always waits exactly ``t_a_bar`` per system; the defender
    plays the optimal policy. Each visited system gets a fresh node id.
    """
    rng = seed if isinstance(seed, np.random.Generator) else trace_rng(seed)
    pool = _NodePool(net.id_table(), rng)
    t_a = params.t_a_bar
    s = SystemType.N if rng.random() < params.p else SystemType.H
    u = params.u0
    clock = 0.0
    total = 0.0
    events: list[TraceEvent] = []
    stage = 0
    while True:
        node = pool.take(s)
        state = EngagementState(u, s)
        t_d = policy(state, solve)
        r = reward(state, t_d, t_a, params) + 0.0  # no negative zero in output
        total += r
        # ties go to the attacker: it moves when t_a <= t_d
        moves = t_a <= t_d
        stay = t_a if moves else t_d
        clock += stay
        u_next = u if s is SystemType.N else residual_after(u, stay, params.v)
        events.append(
            TraceEvent(stage, clock, node, s.value, u, u_next, CONTINUE if moves else EJECT, r, total)
        )
        if not moves:
            break
        u = u_next
        s = SystemType.N if rng.random() < params.p else SystemType.H
        stage += 1
    if pool.exhausted:
        log.debug("network exhausted; synthetic node ids used")
    return AttackTrace(tuple(events), pool.exhausted)


@dataclass(frozen=True)
class EnsembleResult:
    traces: tuple[AttackTrace, ...]
    mean: float
    std: float
    half_width: float | None  # 95% normal-approximation half-width; None for one trace
    num_exhausted: int = 0
    finals: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def standard_error(self) -> float | None:
        n = len(self.traces)
        return None if n < 2 else self.std / math.sqrt(n)

    def summary(self) -> dict:
        return {
            "num_traces": len(self.traces),
            "mean": self.mean,
            "std": self.std,
            "standard_error": self.standard_error,
            "half_width_95": self.half_width,
            "num_exhausted": self.num_exhausted,
        }


def simulate_ensemble(
    params: ModelParams,
    solve: SolveResult,
    net: NetworkSpec,
    num_traces: int,
    seed: int,
) -> EnsembleResult:
    if num_traces < 1:
        raise ValueError("num_traces must be >= 1")
    traces = tuple(
        simulate_trace(params, solve, net, trace_rng(seed, k)) for k in range(num_traces)
    )
    finals = np.fromiter((t.final_utility for t in traces), float, num_traces)
    mean = math.fsum(finals) / num_traces
    if num_traces > 1:
        std = float(np.std(finals, ddof=1))
        half = 1.96 * std / math.sqrt(num_traces)
    else:
        std, half = 0.0, None
    exhausted = sum(t.exhausted for t in traces)
    if exhausted:
        log.warning(
            "%d of %d traces exhausted the %d-node network; synthetic node ids were used",
            exhausted, num_traces, net.num_nodes,
        )
    return EnsembleResult(traces, mean, std, half, exhausted, finals)


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def trace_rows(trace: AttackTrace) -> list[list[str]]:
    return [
        [str(e.stage), _fmt(e.time), e.node, e.system, _fmt(e.u_before), _fmt(e.u_after),
         e.action, _fmt(e.reward), _fmt(e.cum_utility)]
        for e in trace.events
    ]


def export_trace(trace: AttackTrace, header: Sequence[str] = ()) -> str:
    """CSV text for one trace; ``header`` lines are written first as ``#`` comments."""
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    writer.writerows(trace_rows(trace))
    return buf.getvalue()

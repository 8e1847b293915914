"""Run configuration: one JSON file with nested blocks.

Example::

    {
      "model": {"p": 0.5, "v": 1.0, "c_h": 0.0, "c_n": -0.25, "t_a_bar": 1.0, "u0": 3.0},
      "solve": {"u_points": 301},
      "oracle": {"m_per_delta": 100, "tol": 1e-10, "max_iter": 100000},
      "sweep": {"t_min": 1e-4, "t_max": 10.0, "points_per_decade": 2000},
      "simulate": {"num_nodes": 20, "num_honeypots": 4, "num_traces": 5, "seed": 0},
      "output_dir": "out"
    }

``model.vulnerability_table`` may replace ``model.c_n`` with the path of a
``system,vuln,rho,phi`` CSV; relative paths resolve against the config file.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from engagement.model import InvalidParameters, ModelParams, VulnerabilityTable, aggregate_cn


class ConfigError(ValueError):
    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class SolveBlock:
    u_points: int = 301


@dataclass(frozen=True)
class OracleBlock:
    m_per_delta: int = 100
    tol: float = 1e-10
    max_iter: int = 100_000


@dataclass(frozen=True)
class SweepBlock:
    t_min: float = 1e-4
    t_max: float = 10.0
    points_per_decade: int = 2000
    workers: int = 1


@dataclass(frozen=True)
class SimulateBlock:
    num_nodes: int = 20
    num_honeypots: int = 4
    num_traces: int = 5
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    model_block: dict[str, Any]  # as written, for echoing
    solve: SolveBlock = field(default_factory=SolveBlock)
    oracle: OracleBlock = field(default_factory=OracleBlock)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    simulate: SimulateBlock = field(default_factory=SimulateBlock)
    output_dir: str = "out"

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": dict(self.model_block),
            "solve": asdict(self.solve),
            "oracle": asdict(self.oracle),
            "sweep": asdict(self.sweep),
            "simulate": asdict(self.simulate),
            "output_dir": self.output_dir,
        }


MODEL_KEYS = ("p", "v", "c_h", "c_n", "t_a_bar", "u0")
TOP_KEYS = {"model", "solve", "oracle", "sweep", "simulate", "output_dir"}


def _number(block: dict, name: str, prefix: str, kind: type = float) -> Any:
    value = block[name]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{prefix}.{name}", f"expected a number, got {value!r}")
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{prefix}.{name}", f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _block(raw: dict, name: str, cls: type) -> Any:
    block = raw.get(name, {})
    if not isinstance(block, dict):
        raise ConfigError(name, "expected a block of key/value pairs")
    defaults = cls()
    known = set(asdict(defaults))
    unknown = set(block) - known
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}", "unknown key")
    values = {}
    for key in known:
        if key in block:
            kind = int if isinstance(getattr(defaults, key), int) else float
            values[key] = _number(block, key, name, kind)
    return cls(**values)


def _model(raw: dict, base_dir: Path) -> tuple[ModelParams, dict[str, Any]]:
    block = raw.get("model")
    if not isinstance(block, dict):
        raise ConfigError("model", "missing model block")
    unknown = set(block) - set(MODEL_KEYS) - {"vulnerability_table"}
    if unknown:
        raise ConfigError(f"model.{sorted(unknown)[0]}", "unknown key")
    has_cn = "c_n" in block
    has_table = "vulnerability_table" in block
    if has_cn == has_table:
        raise ConfigError("model.c_n", "give exactly one of c_n or vulnerability_table")
    values: dict[str, float] = {}
    for key in MODEL_KEYS:
        if key == "c_n" and has_table:
            continue
        if key not in block:
            raise ConfigError(key, "required model parameter is missing")
        values[key] = _number(block, key, "model")
    echo = dict(block)
    if has_table:
        path = Path(block["vulnerability_table"])
        if not path.is_absolute():
            path = base_dir / path
        try:
            values["c_n"] = aggregate_cn(VulnerabilityTable.read_csv(path))
        except (OSError, ValueError) as exc:
            raise ConfigError("model.vulnerability_table", str(exc)) from exc
        echo["vulnerability_table"] = str(path.resolve())
    try:
        params = ModelParams(**values)
    except InvalidParameters as exc:
        raise ConfigError("model", str(exc)) from exc
    return params, echo


def parse_config(raw: dict, base_dir: str | Path = ".") -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be an object")
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    params, echo = _model(raw, Path(base_dir))
    output_dir = raw.get("output_dir", "out")
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir", "expected a path string")
    cfg = RunConfig(
        params=params,
        model_block=echo,
        solve=_block(raw, "solve", SolveBlock),
        oracle=_block(raw, "oracle", OracleBlock),
        sweep=_block(raw, "sweep", SweepBlock),
        simulate=_block(raw, "simulate", SimulateBlock),
        output_dir=output_dir,
    )
    if cfg.solve.u_points < 2:
        raise ConfigError("solve.u_points", "need at least 2 points")
    if cfg.simulate.num_traces < 1:
        raise ConfigError("simulate.num_traces", "must be >= 1")
    if not 0 < cfg.sweep.t_min <= cfg.sweep.t_max:
        raise ConfigError("sweep.t_min", "need 0 < t_min <= t_max")
    if cfg.sweep.points_per_decade < 1:
        raise ConfigError("sweep.points_per_decade", "must be >= 1")
    if cfg.oracle.m_per_delta < 1:
        raise ConfigError("oracle.m_per_delta", "must be >= 1")
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{path} is not valid JSON: {exc}") from exc
    return parse_config(raw, path.parent)

"""Scenario configuration files.

Grammar, one setting per line::

    # comment
    key = value

Blank lines and ``#`` comments are ignored; keys are the ScenarioConfig field
names; booleans are ``true``/``false``; lists are comma-separated; ``none``
clears an optional field. Unknown or repeated keys are errors.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..allocation import ALLOCATORS, ORACLE_LIMIT


class ConfigError(ValueError):
    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


@dataclass(frozen=True)
class ScenarioConfig:
    # network
    n_vehicles: int = 80
    gamma: float = 1.0
    noise_power: float = 2e-12
    p_t_max_low: float = 0.1
    p_t_max_high: float = 0.2
    arena_side: float = 2000.0
    pathloss_exponent: float = 3.0
    speed_min: float = 5.0
    speed_max: float = 20.0
    slot_duration: float = 1.0
    redistribute: bool = True
    # allocation
    allocator: str = "nfl"
    allocators: tuple[str, ...] = ("nfl", "oma", "fullset")
    sweep_grid: tuple[int, ...] = (10, 20, 30, 40, 50, 60, 70, 80)
    # learning
    rounds: Optional[int] = None  # None: 500 for iid, 1000 for dirichlet
    local_steps: int = 10
    eta: float = 0.05
    batch_size: Optional[int] = 32
    scale_by_shard_size: bool = True
    aggregation: str = "weighted"
    partition: str = "iid"
    alpha_d: float = 0.4
    model: str = "logistic"
    hidden: int = 32
    n_features: int = 32
    n_classes: int = 10
    samples_per_client: int = 200
    test_fraction: float = 0.25
    class_separation: float = 3.0
    # bookkeeping
    master_seed: int = 0
    replications: int = 1

    def __post_init__(self):
        positive = [
            "gamma", "noise_power", "p_t_max_low", "p_t_max_high", "arena_side",
            "pathloss_exponent", "speed_max", "slot_duration", "eta", "alpha_d", "class_separation",
        ]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)!r}", name)
        for name in ("n_vehicles", "replications", "local_steps", "hidden", "n_features", "samples_per_client"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)!r}", name)
        if self.n_classes < 2:
            raise ConfigError("n_classes must be >= 2", "n_classes")
        if self.speed_min < 0 or self.speed_min > self.speed_max:
            raise ConfigError("speed_min must lie in [0, speed_max]", "speed_min")
        if self.p_t_max_low > self.p_t_max_high:
            raise ConfigError("p_t_max_low must not exceed p_t_max_high", "p_t_max_low")
        if self.rounds is not None and self.rounds < 1:
            raise ConfigError("rounds must be >= 1", "rounds")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1", "batch_size")
        if not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction must lie in (0, 1)", "test_fraction")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be >= 0", "master_seed")
        if self.partition not in ("iid", "dirichlet"):
            raise ConfigError(f"partition must be iid or dirichlet, got {self.partition!r}", "partition")
        if self.aggregation not in ("weighted", "uniform"):
            raise ConfigError(f"aggregation must be weighted or uniform, got {self.aggregation!r}", "aggregation")
        if self.model not in ("logistic", "mlp"):
            raise ConfigError(f"model must be logistic or mlp, got {self.model!r}", "model")
        for name in (self.allocator, *self.allocators):
            if name not in ALLOCATORS:
                raise ConfigError(f"unknown allocator {name!r}; choose from {sorted(ALLOCATORS)}",
                                  "allocator" if name == self.allocator else "allocators")
        if not self.allocators:
            raise ConfigError("allocators must not be empty", "allocators")
        if not self.sweep_grid or min(self.sweep_grid) < 1:
            raise ConfigError("sweep_grid must be a nonempty list of positive counts", "sweep_grid")
        if "oracle" in (self.allocator, *self.allocators) and self.n_vehicles > ORACLE_LIMIT:
            raise ConfigError(f"allocator oracle requires n_vehicles <= {ORACLE_LIMIT}", "n_vehicles")

    @property
    def effective_rounds(self) -> int:
        if self.rounds is not None:
            return self.rounds
        return 500 if self.partition == "iid" else 1000

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}


def _coerce(name: str, text: str):
    kind = str(_FIELDS[name].type)
    raw = text.strip()
    if kind.startswith("Optional") and raw.lower() == "none":
        return None
    try:
        if "tuple[int" in kind:
            return tuple(int(x) for x in raw.split(",") if x.strip())
        if "tuple[str" in kind:
            return tuple(x.strip() for x in raw.split(",") if x.strip())
        if "bool" in kind:
            low = raw.lower()
            if low not in ("true", "false"):
                raise ValueError(f"expected true or false, got {raw!r}")
            return low == "true"
        if "int" in kind:
            return int(raw)
        if "float" in kind:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {raw!r} ({exc})", name) from None


def parse_scenario(text: str, source: str = "<string>") -> ScenarioConfig:
    values = {}
    unknown = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            unknown.append(key)
            continue
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}", key)
        values[key] = _coerce(key, value)
    if unknown:
        raise ConfigError(f"{source}: unknown key(s): {', '.join(unknown)}", unknown[0])
    return ScenarioConfig(**values)


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_scenario(text, str(path))


def dump_scenario(cfg: ScenarioConfig) -> str:
    lines = []
    for name in _FIELDS:
        v = getattr(cfg, name)
        if v is None:
            s = "none"
        elif isinstance(v, bool):
            s = "true" if v else "false"
        elif isinstance(v, tuple):
            s = ",".join(str(x) for x in v)
        else:
            s = repr(v) if isinstance(v, float) else str(v)
        lines.append(f"{name} = {s}")
    return "\n".join(lines) + "\n"

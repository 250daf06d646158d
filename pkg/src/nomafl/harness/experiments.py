"""Scenario orchestration: allocation sweeps and FL training runs."""
from __future__ import annotations

import functools
import logging
from dataclasses import dataclass

import numpy as np

from .. import seeding
from ..allocation import (
    ORACLE_LIMIT,
    full_set_allocate,
    oma_select,
    oracle_max_selection,
    select_and_allocate,
)
from ..channel import ChannelProcess, snapshot, spawn_vehicles
from ..fl import (
    FLConfig,
    FLRun,
    make_gaussian_mixture,
    make_model,
    partition_dirichlet,
    partition_iid,
    run_nfl,
    train_test_split,
)
from .config import ConfigError, ScenarioConfig
from .metrics import MetricsRow, MetricsTable

log = logging.getLogger(__name__)


def make_allocator(name: str, cfg: ScenarioConfig):
    """Bind an allocator name to the scenario's threshold; returns snapshot -> SelectionResult."""
    if name == "nfl":
        return functools.partial(select_and_allocate, gamma=cfg.gamma, redistribute=cfg.redistribute)
    if name == "oma":
        return functools.partial(oma_select, gamma=cfg.gamma)
    if name == "fullset":
        return functools.partial(full_set_allocate, gamma=cfg.gamma)
    if name == "oracle":
        return functools.partial(oracle_max_selection, gamma=cfg.gamma)
    raise ValueError(f"unknown allocator {name!r}")


def spawn_for(cfg: ScenarioConfig, rng, n_vehicles: int | None = None):
    return spawn_vehicles(
        cfg.n_vehicles if n_vehicles is None else n_vehicles,
        rng,
        arena_side=cfg.arena_side,
        speed_range=(cfg.speed_min, cfg.speed_max),
        p_t_max_range=(cfg.p_t_max_low, cfg.p_t_max_high),
    )


def build_channel(cfg: ScenarioConfig, replication: int) -> ChannelProcess:
    vehicles = spawn_for(cfg, seeding.stream(cfg.master_seed, seeding.MOBILITY, replication))
    return ChannelProcess(
        vehicles,
        noise_power=cfg.noise_power,
        pathloss_exponent=cfg.pathloss_exponent,
        arena_side=cfg.arena_side,
        dt=cfg.slot_duration,
        seed=cfg.master_seed,
        replication=replication,
    )


def sweep_snapshot(cfg: ScenarioConfig, replication: int, n_vehicles: int):
    """Fresh placement and fading for one (replication, N) sweep cell."""
    rng = seeding.stream(cfg.master_seed, seeding.SWEEP, replication, n_vehicles)
    vehicles = spawn_for(cfg, rng, n_vehicles)
    bs = (cfg.arena_side / 2, cfg.arena_side / 2)
    return snapshot(vehicles, bs, cfg.noise_power, cfg.pathloss_exponent, rng)


def run_allocation_sweep(cfg: ScenarioConfig, n_vehicles_grid=None, allocators=None) -> MetricsTable:
    grid = tuple(cfg.sweep_grid if n_vehicles_grid is None else n_vehicles_grid)
    names = tuple(cfg.allocators if allocators is None else allocators)
    if not grid:
        raise ValueError("n_vehicles_grid must not be empty")
    if "oracle" in names and max(grid) > ORACLE_LIMIT:
        raise ConfigError(f"oracle allocator requires every N <= {ORACLE_LIMIT}, grid has {max(grid)}", "sweep_grid")
    fns = {name: make_allocator(name, cfg) for name in names}
    table = MetricsTable(kind="sweep")
    for n in grid:
        for rep in range(cfg.replications):
            snap = sweep_snapshot(cfg, rep, n)
            for name, fn in fns.items():
                res = fn(snap)
                table.add(MetricsRow(rep, int(n), name, int(res.m_t), float(res.joining_ratio)))
    return table.normalized()


@dataclass
class FederatedData:
    shards: list
    test: object
    model: object


def build_federated_data(cfg: ScenarioConfig, replication: int) -> FederatedData:
    total = cfg.n_vehicles * cfg.samples_per_client
    data = make_gaussian_mixture(
        total,
        seeding.stream(cfg.master_seed, seeding.DATA, replication),
        n_features=cfg.n_features,
        n_classes=cfg.n_classes,
        separation=cfg.class_separation,
    )
    prng = seeding.stream(cfg.master_seed, seeding.PARTITION, replication)
    train, test = train_test_split(data, cfg.test_fraction, prng)
    if cfg.partition == "iid":
        shards = partition_iid(train, cfg.n_vehicles, prng)
    else:
        shards = partition_dirichlet(train, cfg.n_vehicles, cfg.alpha_d, prng)
    model = make_model(cfg.model, cfg.n_features, cfg.n_classes, cfg.hidden)
    return FederatedData(shards, test, model)


def fl_config(cfg: ScenarioConfig, replication: int) -> FLConfig:
    return FLConfig(
        rounds=cfg.effective_rounds,
        local_steps=cfg.local_steps,
        eta=cfg.eta,
        batch_size=cfg.batch_size,
        scale_by_shard_size=cfg.scale_by_shard_size,
        aggregation=cfg.aggregation,
        seed=cfg.master_seed,
        replication=replication,
    )


def run_fl_replication(cfg: ScenarioConfig, replication: int, allocator: str) -> tuple[FLRun, FederatedData]:
    fed = build_federated_data(cfg, replication)
    channel = build_channel(cfg, replication)
    run = run_nfl(fl_config(cfg, replication), channel, make_allocator(allocator, cfg), fed.shards, fed.test, fed.model)
    return run, fed


def run_fl_experiment(cfg: ScenarioConfig, allocators=None) -> MetricsTable:
    """Per-round traces for every (replication, allocator); allocators share channels."""
    names = tuple(cfg.allocators if allocators is None else allocators)
    table = MetricsTable(kind="rounds")
    for rep in range(cfg.replications):
        for name in names:
            try:
                run, _ = run_fl_replication(cfg, rep, name)
            except Exception as exc:
                raise RuntimeError(f"replication {rep}, allocator {name}: {exc}") from exc
            log.info("rep %d %s: final accuracy %.3f", rep, name, run.metrics[-1].test_accuracy if run.metrics else float("nan"))
            for m in run.metrics:
                table.add(MetricsRow(rep, m.round, name, m.m_t, m.joining_ratio, m.train_loss, m.test_accuracy))
    return table.normalized()


def accuracy_trace(table: MetricsTable, allocator: str, replication: int) -> np.ndarray:
    rows = sorted(table.select(allocator, replication), key=lambda r: r.round_or_n)
    return np.array([r.test_accuracy for r in rows])

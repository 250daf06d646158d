"""Local SGD, weighted aggregation and the NOMA-driven FedAvg loop."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .. import seeding
from .data import Dataset, DataShard
from .models import accuracy, loss_and_gradient


@dataclass(frozen=True)
class FLConfig:
    rounds: int = 500
    local_steps: int = 10
    eta: float = 0.05
    batch_size: Optional[int] = 32  # None: full local batch every step
    scale_by_shard_size: bool = True
    aggregation: str = "weighted"  # or "uniform"
    seed: int = 0
    replication: int = 0

    def __post_init__(self):
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if self.local_steps < 1:
            raise ValueError("local_steps must be >= 1")
        if not self.eta > 0:
            raise ValueError("eta must be > 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.aggregation not in ("weighted", "uniform"):
            raise ValueError(f"unknown aggregation {self.aggregation!r}")


@dataclass(frozen=True)
class RoundMetrics:
    round: int
    m_t: int
    joining_ratio: float
    train_loss: float
    test_accuracy: float


@dataclass
class FLRun:
    metrics: list[RoundMetrics]
    weights: np.ndarray
    selections: list


def local_update(
    model,
    w: np.ndarray,
    shard: DataShard,
    eta: float,
    tau_star: int,
    batch_size: Optional[int],
    rng: np.random.Generator,
    scale_by_shard_size: bool = True,
) -> np.ndarray:
    """``tau_star`` SGD steps of size ``eta / k_n`` (or ``eta`` when unscaled).

    Batches are drawn uniformly with replacement from the shard.
    """
    if not eta > 0:
        raise ValueError("eta must be > 0")
    if tau_star < 1:
        raise ValueError("tau_star must be >= 1")
    step = eta / shard.k if scale_by_shard_size else eta
    w = np.array(w, dtype=float, copy=True)
    for _ in range(tau_star):
        batch = None if batch_size is None else rng.integers(0, shard.k, size=batch_size)
        _, grad = loss_and_gradient(model, w, shard, batch)
        w -= step * grad
    return w


def aggregate(models: Sequence[np.ndarray], alpha: Sequence[float]) -> np.ndarray:
    """Convex combination ``sum_n alpha_n * w_n``."""
    if len(models) == 0 or len(models) != len(alpha):
        raise ValueError("need one weight per model and at least one model")
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0):
        raise ValueError("aggregation weights must be > 0")
    if abs(math.fsum(alpha) - 1.0) > 1e-12:
        raise ValueError(f"aggregation weights sum to {math.fsum(alpha)!r}, not 1")
    stacked = np.asarray(models, dtype=float)
    if stacked.ndim != 2:
        raise ValueError("all models must share one dimension")
    return alpha @ stacked


def aggregation_weights(sizes: Sequence[int], scheme: str = "weighted") -> np.ndarray:
    sizes = np.asarray(sizes, dtype=float)
    if scheme == "uniform":
        return np.full(len(sizes), 1.0 / len(sizes))
    return sizes / sizes.sum()


def client_losses(model, w, shards: Sequence[DataShard]) -> np.ndarray:
    return np.array([loss_and_gradient(model, w, s)[0] for s in shards])


def run_nfl(
    config: FLConfig,
    channel,
    allocator: Callable,
    shards: Sequence[DataShard],
    test: Dataset,
    model,
    w0: Optional[np.ndarray] = None,
) -> FLRun:
    """FedAvg where round ``t`` trains exactly the vehicles the allocator admits.

    ``allocator`` maps a ChannelSnapshot to a SelectionResult. Vehicles are
    trained in id order, each with its own stream keyed by (round, vehicle), so
    the trace does not depend on iteration order. Rounds with nobody admitted
    keep the global model. ``train_loss`` is the mean full-shard loss of the new
    global model over the round's participants (over all shards if none).
    """
    shard_of = channel.shard_of()
    n_total = len(shard_of)
    w = model.init(seeding.stream(config.seed, seeding.MODEL_INIT, config.replication)) if w0 is None else np.array(w0, dtype=float)
    metrics, selections = [], []
    for t in range(config.rounds):
        snap = channel.next_snapshot()
        sel = allocator(snap)
        selections.append(sel)
        users = sorted(sel.selected)
        if users:
            local = []
            for vid in users:
                rng = seeding.stream(config.seed, seeding.LOCAL_SGD, config.replication, t, vid)
                local.append(local_update(
                    model, w, shards[shard_of[vid]], config.eta, config.local_steps,
                    config.batch_size, rng, config.scale_by_shard_size,
                ))
            sizes = [shards[shard_of[vid]].k for vid in users]
            w = aggregate(local, aggregation_weights(sizes, config.aggregation))
            if not np.all(np.isfinite(w)):
                raise FloatingPointError(f"round {t}: global model became non-finite")
            evaluated = [shards[shard_of[vid]] for vid in users]
        else:
            evaluated = list(shards)
        train_loss = float(np.mean(client_losses(model, w, evaluated)))
        metrics.append(RoundMetrics(
            round=t,
            m_t=len(users),
            joining_ratio=len(users) / n_total,
            train_loss=train_loss,
            test_accuracy=accuracy(model, w, test.features, test.labels),
        ))
    return FLRun(metrics=metrics, weights=w, selections=selections)


def rounds_to_fraction(accuracies: Sequence[float], fraction: float = 0.9, tail: int = 10) -> int:
    """First round whose accuracy reaches ``fraction`` of the final accuracy.

    Final accuracy is the mean over the last ``tail`` rounds.
    """
    acc = np.asarray(accuracies, dtype=float)
    if acc.size == 0:
        raise ValueError("empty accuracy trace")
    final = acc[-tail:].mean()
    hit = np.flatnonzero(acc >= fraction * final)
    return int(hit[0])

"""Vehicle mobility and per-slot Rayleigh-fading channel state."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import seeding

D_MIN = 1.0


@dataclass(frozen=True)
class VehicleState:
    id: int
    position: tuple[float, float]
    velocity: tuple[float, float]
    p_t_max: float
    shard_id: int

    def __post_init__(self):
        if not self.p_t_max > 0:
            raise ValueError(f"vehicle {self.id}: p_t_max must be > 0, got {self.p_t_max}")


@dataclass(frozen=True)
class ChannelSnapshot:
    """Block-fading channel for one slot.

    ``gains`` and ``p_r_max`` are indexed like ``ids``; ``p_r_max[n]`` is the
    received power vehicle ``ids[n]`` reaches at full transmit power.
    """

    slot: int
    ids: tuple[int, ...]
    gains: np.ndarray
    p_t_max: np.ndarray
    p_r_max: np.ndarray
    noise_power: float

    def __post_init__(self):
        n = len(self.ids)
        if not (len(self.gains) == len(self.p_t_max) == len(self.p_r_max) == n):
            raise ValueError("snapshot arrays must all have one entry per vehicle")
        if n and np.any(self.gains <= 0):
            raise ValueError("channel gains must be strictly positive")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be > 0")

    @classmethod
    def from_gains(cls, gains, p_t_max, noise_power, ids=None, slot=0) -> "ChannelSnapshot":
        gains = np.asarray(gains, dtype=float)
        p_t_max = np.broadcast_to(np.asarray(p_t_max, dtype=float), gains.shape).copy()
        if ids is None:
            ids = range(len(gains))
        return cls(
            slot=slot,
            ids=tuple(int(i) for i in ids),
            gains=gains,
            p_t_max=p_t_max,
            p_r_max=p_t_max * gains,
            noise_power=float(noise_power),
        )

    @classmethod
    def from_received(cls, p_r_max, noise_power, ids=None, slot=0) -> "ChannelSnapshot":
        """Snapshot with unit transmit budgets, so gains equal the received budgets."""
        p_r_max = np.asarray(p_r_max, dtype=float)
        return cls.from_gains(p_r_max, 1.0, noise_power, ids=ids, slot=slot)

    def __len__(self):
        return len(self.ids)


def advance_positions(vehicles: list[VehicleState], dt: float, arena_side: float) -> list[VehicleState]:
    """Constant-velocity motion on a torus of side ``arena_side``."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if not arena_side > 0:
        raise ValueError("arena_side must be > 0")
    moved = []
    for v in vehicles:
        x = (v.position[0] + v.velocity[0] * dt) % arena_side
        y = (v.position[1] + v.velocity[1] * dt) % arena_side
        # float modulo can return arena_side itself for tiny negative inputs
        x = 0.0 if x >= arena_side else x
        y = 0.0 if y >= arena_side else y
        moved.append(replace(v, position=(x, y)))
    return moved


def sample_channel_gain(distance, pathloss_exponent: float, rng: np.random.Generator, d_min: float = D_MIN):
    """Power gain ``X * max(d, d_min)**-alpha`` with ``X ~ Exp(1)``.

    Accepts a scalar or an array of distances; one fading draw per distance.
    """
    if not pathloss_exponent > 0:
        raise ValueError("pathloss_exponent must be > 0")
    d = np.maximum(np.asarray(distance, dtype=float), d_min)
    fading = rng.standard_exponential(size=d.shape)
    # Exp(1) can return exactly 0.0 with negligible probability; keep g > 0
    fading = np.maximum(fading, np.finfo(float).tiny)
    g = fading * d ** (-pathloss_exponent)
    return float(g) if g.ndim == 0 else g


def snapshot(
    vehicles: list[VehicleState],
    bs_position: tuple[float, float],
    noise_power: float,
    pathloss_exponent: float,
    rng: np.random.Generator,
    slot: int = 0,
) -> ChannelSnapshot:
    if not vehicles:
        raise ValueError("snapshot needs at least one vehicle")
    pos = np.array([v.position for v in vehicles], dtype=float)
    dist = np.hypot(pos[:, 0] - bs_position[0], pos[:, 1] - bs_position[1])
    gains = np.atleast_1d(sample_channel_gain(dist, pathloss_exponent, rng))
    p_t_max = np.array([v.p_t_max for v in vehicles], dtype=float)
    return ChannelSnapshot(
        slot=slot,
        ids=tuple(v.id for v in vehicles),
        gains=gains,
        p_t_max=p_t_max,
        p_r_max=p_t_max * gains,
        noise_power=float(noise_power),
    )


def spawn_vehicles(
    n: int,
    rng: np.random.Generator,
    arena_side: float = 2000.0,
    speed_range: tuple[float, float] = (5.0, 20.0),
    p_t_max_range: tuple[float, float] = (0.1, 0.2),
) -> list[VehicleState]:
    """Uniform positions in the arena, uniform headings and speeds."""
    pos = rng.uniform(0.0, arena_side, size=(n, 2))
    speed = rng.uniform(*speed_range, size=n)
    heading = rng.uniform(0.0, 2 * np.pi, size=n)
    p_max = rng.uniform(*p_t_max_range, size=n)
    return [
        VehicleState(
            id=i,
            position=(float(pos[i, 0]), float(pos[i, 1])),
            velocity=(float(speed[i] * np.cos(heading[i])), float(speed[i] * np.sin(heading[i]))),
            p_t_max=float(p_max[i]),
            shard_id=i,
        )
        for i in range(n)
    ]


class ChannelProcess:
    """Mobility plus one block-fading snapshot per round.

    Round ``t`` sees the vehicles after ``t`` mobility steps of ``dt`` seconds;
    fading for round ``t`` comes from its own derived stream.
    """

    def __init__(
        self,
        vehicles: list[VehicleState],
        noise_power: float,
        pathloss_exponent: float = 3.0,
        arena_side: float = 2000.0,
        dt: float = 1.0,
        bs_position: tuple[float, float] | None = None,
        seed: int = 0,
        replication: int = 0,
    ):
        self.initial = list(vehicles)
        self.vehicles = list(vehicles)
        self.noise_power = noise_power
        self.pathloss_exponent = pathloss_exponent
        self.arena_side = arena_side
        self.dt = dt
        self.bs_position = bs_position if bs_position is not None else (arena_side / 2, arena_side / 2)
        self.seed = seed
        self.replication = replication
        self.round = 0

    def shard_of(self) -> dict[int, int]:
        return {v.id: v.shard_id for v in self.initial}

    def reset(self):
        self.vehicles = list(self.initial)
        self.round = 0

    def next_snapshot(self) -> ChannelSnapshot:
        if self.round > 0:
            self.vehicles = advance_positions(self.vehicles, self.dt, self.arena_side)
        rng = seeding.stream(self.seed, seeding.CHANNEL, self.replication, self.round)
        snap = snapshot(self.vehicles, self.bs_position, self.noise_power, self.pathloss_exponent, rng, slot=self.round)
        self.round += 1
        return snap

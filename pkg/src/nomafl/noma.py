"""Uplink NOMA with successive interference cancellation (SIC).

All powers here are *received* powers at the base station, listed in decode
order (strongest first).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

RTOL = 1e-9


def geq(a: float, b: float, rtol: float = RTOL) -> bool:
    """``a >= b`` up to a relative tolerance."""
    return a >= b - rtol * max(abs(a), abs(b))


@dataclass(frozen=True)
class OrderedPowers:
    powers: tuple[float, ...]
    noise_power: float
    gamma: float

    def __init__(self, powers: Sequence[float], noise_power: float, gamma: float):
        object.__setattr__(self, "powers", tuple(float(p) for p in powers))
        object.__setattr__(self, "noise_power", float(noise_power))
        object.__setattr__(self, "gamma", float(gamma))
        self.validate()

    def validate(self):
        if not self.noise_power > 0:
            raise ValueError(f"noise_power must be > 0, got {self.noise_power}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        for k, p in enumerate(self.powers):
            if not (p > 0 and math.isfinite(p)):
                raise ValueError(f"power #{k} must be finite and > 0, got {p}")
        for k in range(len(self.powers) - 1):
            if not geq(self.powers[k], self.powers[k + 1]):
                raise ValueError(
                    f"powers must be nonincreasing: p[{k}]={self.powers[k]} < p[{k + 1}]={self.powers[k + 1]}"
                )

    def __len__(self):
        return len(self.powers)


@dataclass(frozen=True)
class DecodeOutcome:
    sinrs: np.ndarray
    decoded: np.ndarray
    m_t: int

    @property
    def all_decoded(self) -> bool:
        return self.m_t == len(self.decoded)


def sinr(powers: Sequence[float], n: int, noise_power: float, cancelled: Sequence[bool] | None = None) -> float:
    """SINR of signal ``n`` with arbitrary cancellation flags for earlier signals.

    ``cancelled[j]`` is True when signal ``j < n`` was decoded and removed; by
    default every earlier signal is assumed cancelled.
    """
    later = math.fsum(powers[n + 1:])
    if cancelled is None:
        earlier = 0.0
    else:
        earlier = math.fsum(p for p, c in zip(powers[:n], cancelled[:n]) if not c)
    return powers[n] / (earlier + later + noise_power)


def sic_decode(op: OrderedPowers) -> DecodeOutcome:
    p = np.asarray(op.powers, dtype=float)
    m = len(p)
    sinrs = np.empty(m)
    decoded = np.zeros(m, dtype=bool)
    # suffix[n] = sum of powers strictly after n
    suffix = np.concatenate([np.cumsum(p[::-1])[::-1][1:], [0.0]]) if m else p
    residual = 0.0  # power of earlier signals that failed and stay in the mix
    ok = True
    for n in range(m):
        sinrs[n] = p[n] / (residual + suffix[n] + op.noise_power)
        if ok and geq(sinrs[n], op.gamma):
            decoded[n] = True
        else:
            ok = False
            residual += p[n]
    return DecodeOutcome(sinrs=sinrs, decoded=decoded, m_t=int(decoded.sum()))


def chain_feasible(op: OrderedPowers) -> bool:
    """Sufficient ratio-chain test for decoding every signal.

    Adjacent ratios up to the second-to-last pair must be at least ``1 + gamma``;
    the last pair must satisfy ``p[M-2] >= (p[M-1] + noise) * gamma``; and the
    last signal must clear the threshold against noise alone.
    """
    p, s2, g = op.powers, op.noise_power, op.gamma
    m = len(p)
    if m == 0:
        return True
    for n in range(m - 2):
        if not geq(p[n], (1 + g) * p[n + 1]):
            return False
    if m >= 2 and not geq(p[m - 2], (p[m - 1] + s2) * g):
        return False
    return geq(p[m - 1], s2 * g)


def min_power_assignment(p_max_desc: Sequence[float], noise_power: float, gamma: float) -> Optional[list[float]]:
    """Smallest received powers that decode every signal in the given order.

    Filled from the last signal backwards, each one exactly at the threshold
    against the already-fixed later signals. Returns None if some signal would
    need more than its budget.
    """
    if any(not p > 0 for p in p_max_desc):
        raise ValueError("p_max_desc entries must be > 0")
    m = len(p_max_desc)
    out = [0.0] * m
    tail = 0.0
    for n in range(m - 1, -1, -1):
        need = gamma * (tail + noise_power)
        if not geq(p_max_desc[n], need):
            return None
        out[n] = need
        tail += need
    return out


def max_decodable_count(p_r_1: float, noise_power: float, gamma: float) -> int:
    """Upper bound on simultaneously decodable signals when the strongest is ``p_r_1``."""
    if not p_r_1 > 0:
        raise ValueError("p_r_1 must be > 0")
    ratio = p_r_1 / (noise_power * gamma)
    if not geq(ratio, 1.0):
        return 0
    x = math.log(ratio) / math.log1p(gamma) + 1.0
    return int(math.floor(x + 1e-9))


def joining_ratio_upper_bound(p_r_1: float, noise_power: float, gamma: float, n_total: int) -> float:
    if n_total < 1:
        raise ValueError("n_total must be >= 1")
    return min(1.0, max_decodable_count(p_r_1, noise_power, gamma) / n_total)

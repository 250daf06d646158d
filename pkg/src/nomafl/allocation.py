"""Vehicle selection and uplink power control for one NOMA slot.

Every allocator takes a :class:`~nomafl.channel.ChannelSnapshot` and returns a
:class:`SelectionResult` whose received powers decode fully under SIC.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSnapshot
from .noma import DecodeOutcome, OrderedPowers, geq, min_power_assignment, sic_decode

ORACLE_LIMIT = 8


class AllocationError(RuntimeError):
    """An allocator produced powers that do not decode; always a bug."""


@dataclass(frozen=True)
class PowerAllocation:
    order: tuple[int, ...]
    received: np.ndarray
    transmit: np.ndarray
    surplus: np.ndarray


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple[int, ...]
    allocation: PowerAllocation
    m_t: int
    n_total: int
    noise_power: float
    gamma: float

    @property
    def joining_ratio(self) -> float:
        return self.m_t / self.n_total if self.n_total else 0.0

    @property
    def selected_set(self) -> frozenset[int]:
        return frozenset(self.selected)

    def decode(self) -> DecodeOutcome:
        """SIC at the base station, strongest received signal first."""
        rx = np.sort(self.allocation.received)[::-1]
        return sic_decode(OrderedPowers(rx, self.noise_power, self.gamma))

    def received_by_id(self) -> dict[int, float]:
        return dict(zip(self.allocation.order, self.allocation.received.tolist()))

    def transmit_by_id(self) -> dict[int, float]:
        return dict(zip(self.allocation.order, self.allocation.transmit.tolist()))


def _descending_order(snap: ChannelSnapshot) -> list[int]:
    # ties broken by vehicle id
    return sorted(range(len(snap)), key=lambda k: (-snap.p_r_max[k], snap.ids[k]))


def _build(snap: ChannelSnapshot, gamma: float, idx: list[int], received, surplus=None) -> SelectionResult:
    idx = list(idx)
    received = np.asarray(received, dtype=float)
    p_r_max = snap.p_r_max[idx]
    gains = snap.gains[idx]
    p_t_max = snap.p_t_max[idx]
    if surplus is None:
        surplus = p_r_max - received
    # full-power vehicles keep their exact budget instead of rx / g round-off
    transmit = np.where(received >= p_r_max, p_t_max, received / gains) if idx else np.empty(0)
    alloc = PowerAllocation(
        order=tuple(snap.ids[k] for k in idx),
        received=received,
        transmit=transmit,
        surplus=np.maximum(np.asarray(surplus, dtype=float), 0.0),
    )
    result = SelectionResult(
        selected=alloc.order,
        allocation=alloc,
        m_t=len(idx),
        n_total=len(snap),
        noise_power=snap.noise_power,
        gamma=float(gamma),
    )
    if result.m_t and not result.decode().all_decoded:
        raise AllocationError(f"allocation for slot {snap.slot} fails SIC decoding: {received.tolist()}")
    return result


def _empty(snap: ChannelSnapshot, gamma: float) -> SelectionResult:
    return _build(snap, gamma, [], [])


def _check_gamma(gamma):
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")


def select_and_allocate(snap: ChannelSnapshot, gamma: float, redistribute: bool = True) -> SelectionResult:
    """Greedy NOMA selection with chain power control.

    Vehicles are visited strongest-budget first. Each admitted vehicle is
    targeted at ``prev / (1 + gamma)`` and capped at its own budget. Capped
    vehicles leave a deficit ``eps``; with ``redistribute`` on, up to
    ``eps * (1 + 1/gamma)`` of extra power is handed back, first come first
    served, to earlier vehicles that were holding unused headroom.
    Admission stops once the chain target no longer exceeds ``noise * gamma``.
    """
    _check_gamma(gamma)
    order = _descending_order(snap)
    budget = snap.p_r_max[order]
    floor = snap.noise_power * gamma
    tol = 1e-12 * snap.noise_power
    if not order or not geq(budget[0], floor):
        return _empty(snap, gamma)

    rx = [float(budget[0])]
    phi = [0.0]
    holders: deque[int] = deque()  # positions with unused headroom, FIFO
    for n in range(1, len(order)):
        target = rx[n - 1] / (gamma + 1)
        if not target > floor:
            break
        if not geq(min(target, budget[n]), floor):
            break
        if target < budget[n]:
            rx.append(target)
            phi.append(float(budget[n]) - target)
            if phi[n] > tol:
                holders.append(n)
        else:
            rx.append(float(budget[n]))
            phi.append(0.0)
            eps = target - float(budget[n])
            while redistribute and holders and eps > tol:
                j = holders[0]
                lift = eps * (1 + 1 / gamma)
                if phi[j] > lift:
                    rx[j] += lift
                    phi[j] -= lift
                    eps = 0.0
                else:
                    rx[j] += phi[j]
                    eps -= phi[j] * gamma / (1 + gamma)
                    phi[j] = 0.0
                    holders.popleft()
    m = len(rx)
    return _build(snap, gamma, order[:m], rx, phi)


def oma_select(snap: ChannelSnapshot, gamma: float) -> SelectionResult:
    """Orthogonal access: only the strongest vehicle, at full power."""
    _check_gamma(gamma)
    order = _descending_order(snap)
    if not order or not geq(snap.p_r_max[order[0]], snap.noise_power * gamma):
        return _empty(snap, gamma)
    return _build(snap, gamma, order[:1], snap.p_r_max[order[:1]])


def full_set_allocate(snap: ChannelSnapshot, gamma: float) -> SelectionResult:
    """All vehicles at minimal SIC powers, or nobody (outage)."""
    _check_gamma(gamma)
    order = _descending_order(snap)
    if not order:
        return _empty(snap, gamma)
    assign = min_power_assignment(snap.p_r_max[order].tolist(), snap.noise_power, gamma)
    if assign is None:
        return _empty(snap, gamma)
    return _build(snap, gamma, order, assign)


def oracle_max_selection(snap: ChannelSnapshot, gamma: float, n_limit: int = ORACLE_LIMIT) -> SelectionResult:
    """Exhaustive maximum-cardinality selection for small instances.

    Every subset is tried with its members decoded strongest-budget first and
    powered by :func:`~nomafl.noma.min_power_assignment`. Among the largest
    feasible subsets the lexicographically smallest id set wins.
    """
    _check_gamma(gamma)
    n = len(snap)
    if n > n_limit:
        raise ValueError(f"oracle limited to {n_limit} vehicles, got {n}")
    best_key = None
    best = None
    for mask in range(1, 1 << n):
        members = [k for k in range(n) if mask >> k & 1]
        sub = sorted(members, key=lambda k: (-snap.p_r_max[k], snap.ids[k]))
        assign = min_power_assignment(snap.p_r_max[sub].tolist(), snap.noise_power, gamma)
        if assign is None:
            continue
        key = (-len(sub), tuple(sorted(snap.ids[k] for k in sub)))
        if best_key is None or key < best_key:
            best_key, best = key, (sub, assign)
    if best is None:
        return _empty(snap, gamma)
    return _build(snap, gamma, *best)


ALLOCATORS = {
    "nfl": select_and_allocate,
    "oma": oma_select,
    "fullset": full_set_allocate,
    "oracle": oracle_max_selection,
}


def get_allocator(name: str):
    try:
        return ALLOCATORS[name]
    except KeyError:
        raise ValueError(f"unknown allocator {name!r}; choose from {sorted(ALLOCATORS)}") from None

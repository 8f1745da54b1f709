"""Parameter vector, network topology and frame positions."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, NamedTuple, Sequence


class ParamIssue(NamedTuple):
    param: str
    constraint: str

    def __str__(self) -> str:
        return f"{self.param}: {self.constraint} fails"


@dataclass(frozen=True)
class ProtocolParams:
    """Static configuration of a gMAC network.

    Clock speeds are integer real-time units between successive hardware
    ticks, so a ratio such as 350/351 is ``tick_min=350, tick_max=351``.
    """

    n_nodes: int
    slots_per_frame: int
    active_slots: int
    tx_slot: tuple[int, ...]
    ticks_per_slot: int
    guard: int
    switch_time: int
    tick_min: tuple[int, ...]
    tick_max: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tx_slot", tuple(self.tx_slot))
        object.__setattr__(self, "tick_min", tuple(self.tick_min))
        object.__setattr__(self, "tick_max", tuple(self.tick_max))

    @property
    def frame_ticks(self) -> int:
        return self.slots_per_frame * self.ticks_per_slot

    @property
    def sending_ticks(self) -> int:
        return self.ticks_per_slot - 2 * self.guard

    @property
    def adjust_slot(self) -> int:
        # middle of the sleeping period; with no sleeping slots, the last slot
        n, c = self.active_slots, self.slots_per_frame
        return min(n + (c - n) // 2, c - 1)

    @property
    def adjust_position(self) -> int:
        return self.adjust_slot * self.ticks_per_slot

    @property
    def phase_capacity(self) -> int:
        return max(self.n_nodes - 1, 0)


def validate_params(p: ProtocolParams) -> list[ParamIssue]:
    """Check the basic parameter constraints; an empty list means admissible."""
    issues: list[ParamIssue] = []

    def need(ok: bool, param: str, constraint: str) -> None:
        if not ok:
            issues.append(ParamIssue(param, constraint))

    need(p.n_nodes > 0, "n_nodes", "0 < n_nodes")
    need(p.slots_per_frame > 0, "slots_per_frame", "0 < slots_per_frame")
    need(0 < p.active_slots <= p.slots_per_frame, "active_slots",
         "0 < active_slots <= slots_per_frame")
    need(p.ticks_per_slot > 0, "ticks_per_slot", "0 < ticks_per_slot")
    need(p.guard > 0, "guard", "0 < guard")
    need(p.switch_time >= 0, "switch_time", "0 <= switch_time")

    for name in ("tx_slot", "tick_min", "tick_max"):
        seq = getattr(p, name)
        need(len(seq) == p.n_nodes, name, f"len({name}) == n_nodes")
    for i, tsn in enumerate(p.tx_slot):
        need(tsn >= 0, f"tx_slot[{i}]", f"0 <= tx_slot[{i}]")
        need(tsn < p.active_slots, f"tx_slot[{i}]", f"tx_slot[{i}] < active_slots")
    for i, lo in enumerate(p.tick_min):
        need(lo > 0, f"tick_min[{i}]", f"0 < tick_min[{i}]")
    for i, (lo, hi) in enumerate(zip(p.tick_min, p.tick_max)):
        need(lo <= hi, f"tick_max[{i}]", f"tick_min[{i}] <= tick_max[{i}]")
    return issues


def check_model_limits(p: ProtocolParams) -> list[ParamIssue]:
    """Extra bounds the executable model needs beyond the basic constraints.

    The transmission must last at least one tick, and a radio switch must fit
    inside a single slot so that every controller predicate has a position.
    """
    issues: list[ParamIssue] = []
    if p.sending_ticks < 1:
        issues.append(ParamIssue("guard", "2*guard < ticks_per_slot"))
    if p.switch_time > p.ticks_per_slot:
        issues.append(ParamIssue("switch_time", "switch_time <= ticks_per_slot"))
    if p.switch_time - p.guard >= p.ticks_per_slot:
        issues.append(ParamIssue("switch_time", "switch_time - guard < ticks_per_slot"))
    return issues


def require_valid(p: ProtocolParams) -> None:
    issues = validate_params(p) + check_model_limits(p)
    if issues:
        raise ValueError("; ".join(str(i) for i in issues))


@dataclass(frozen=True)
class Topology:
    """Undirected, irreflexive neighbor relation over nodes ``0..n_nodes-1``."""

    n_nodes: int
    edges: frozenset[tuple[int, int]]
    _adj: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        norm = set()
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop on node {a}")
            if not (0 <= a < self.n_nodes and 0 <= b < self.n_nodes):
                raise ValueError(f"edge {a}-{b} outside 0..{self.n_nodes - 1}")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(norm))
        adj: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for a, b in norm:
            adj[a].append(b)
            adj[b].append(a)
        object.__setattr__(self, "_adj", tuple(tuple(sorted(x)) for x in adj))

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterable[tuple[int, int]]) -> Topology:
        return cls(n_nodes, frozenset(edges))

    @classmethod
    def clique(cls, n_nodes: int) -> Topology:
        return cls(n_nodes, frozenset(combinations(range(n_nodes), 2)))

    @classmethod
    def line(cls, n_nodes: int) -> Topology:
        return cls(n_nodes, frozenset((i, i + 1) for i in range(n_nodes - 1)))

    def neighbor(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._adj[i]

    def degree(self, i: int) -> int:
        return len(self._adj[i])

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def relabel(self, perm: Sequence[int]) -> Topology:
        """Return the topology with node ``i`` renamed to ``perm[i]``."""
        return Topology(self.n_nodes, frozenset((perm[a], perm[b]) for a, b in self.edges))


def validate_slot_allocation(p: ProtocolParams, t: Topology) -> list[tuple[int, int]]:
    """Neighbor pairs that share a TX slot."""
    return [(a, b) for a, b in t.sorted_edges() if p.tx_slot[a] == p.tx_slot[b]]


class FramePosition(NamedTuple):
    slot: int
    tick: int

    def linear(self, ticks_per_slot: int) -> int:
        return self.slot * ticks_per_slot + self.tick

    @classmethod
    def from_linear(cls, pos: int, ticks_per_slot: int, slots_per_frame: int) -> FramePosition:
        slot, tick = divmod(pos % (ticks_per_slot * slots_per_frame), ticks_per_slot)
        return cls(slot, tick)

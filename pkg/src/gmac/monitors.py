"""Invariant monitors.

INV1: whenever a node is sending, every neighbor is receiving.
INV2: no node has two distinct neighbors sending at the same time.
INV3: no reachable state is a deadlock (explorer only).

Radio phases only change on events, so evaluating the properties at event
boundaries is equivalent to evaluating them on every interval in between.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .core import Topology
from .protocol import NodeState, Radio


@dataclass(frozen=True)
class Violation:
    invariant: str
    time: int
    witnesses: tuple[int, ...]
    description: str
    trace_index: int = 0  # length of the trace prefix leading to the violation

    def to_line(self) -> str:
        nodes = " ".join(str(w) for w in self.witnesses)
        return f"{self.invariant},{self.time},{nodes},{self.description}"


def check_inv1(states: Sequence[NodeState], topology: Topology, time: int = 0) -> Optional[Violation]:
    for i, s in enumerate(states):
        if s.radio != Radio.SENDING:
            continue
        for j in topology.neighbors(i):
            if states[j].radio != Radio.RECEIVING:
                return Violation(
                    "INV1", time, (i, j),
                    f"node {i} sending while neighbor {j} is {states[j].radio.name.lower()}",
                )
    return None


def check_inv2(states: Sequence[NodeState], topology: Topology, time: int = 0) -> Optional[Violation]:
    senders = [i for i, s in enumerate(states) if s.radio == Radio.SENDING]
    if len(senders) < 2:
        return None
    for k in range(topology.n_nodes):
        hits = [i for i in senders if topology.neighbor(i, k)]
        if len(hits) >= 2:
            i, j = hits[0], hits[1]
            return Violation(
                "INV2", time, (i, j, k),
                f"nodes {i} and {j} sending simultaneously to common neighbor {k}",
            )
    return None


def check_progress(successors: Iterable[object], time: int = 0) -> Optional[Violation]:
    """INV3 for the explorer: a state with no successor is a deadlock."""
    for _ in successors:
        return None
    return Violation("INV3", time, (), "reachable state has no successor")


Monitor = Callable[[Sequence[NodeState], Topology, int], Optional[Violation]]

MONITORS: dict[str, Monitor] = {"inv1": check_inv1, "inv2": check_inv2}


def resolve(names: Iterable[str]) -> tuple[Monitor, ...]:
    out = []
    for name in names:
        key = name.lower()
        if key not in MONITORS:
            raise ValueError(f"unknown monitor {name!r}; choose from {sorted(MONITORS)}")
        out.append(MONITORS[key])
    return tuple(out)


def first_violation(monitors: Sequence[Monitor], states: Sequence[NodeState],
                    topology: Topology, time: int) -> Optional[Violation]:
    for check in monitors:
        v = check(states, topology, time)
        if v is not None:
            return v
    return None

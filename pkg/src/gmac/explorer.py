"""Bounded explicit-state exploration over every admissible tick interval.

A state holds, per node, the time remaining until its next tick plus its
protocol state; absolute time is dropped so that states reached at different
instants can be merged.  One exploration step processes one global instant:
the end-of-transmission deliveries of the nodes ticking now, then their
ticks in ascending id order, then every combination of next intervals for
those nodes.  A verdict is bounded: ``exhausted-ok`` only covers the
explored depth.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import product
from typing import NamedTuple, Optional, Sequence

from .core import ProtocolParams, Topology, require_valid, validate_slot_allocation
from .engine import DELIVERY_POLICIES, Trace, delivered
from .monitors import Violation, check_progress, first_violation, resolve
from .protocol import NodeState, PhaseBufferOverflow, Radio, initial_state, step


class CanonicalState(NamedTuple):
    deltas: tuple[int, ...]
    nodes: tuple[NodeState, ...]
    coverage: tuple[Optional[frozenset[int]], ...]  # listeners of each active transmission


@dataclass
class ExploreResult:
    status: str  # "exhausted-ok", "violation" or "inconclusive"
    depth: int  # instants fully explored
    states: int
    transitions: int
    violation: Optional[Violation] = None
    path: Optional[Trace] = None
    complete: bool = False  # frontier emptied before the depth bound
    schedule: Optional[tuple[tuple[int, ...], ...]] = None  # per-node intervals along the path

    @property
    def ok(self) -> bool:
        return self.status == "exhausted-ok"

    def summary(self) -> str:
        base = f"{self.status.upper()} depth={self.depth} states={self.states} transitions={self.transitions}"
        if self.violation is not None:
            base += f" {self.violation.to_line()}"
        return base


class _Instant(NamedTuple):
    delta: int
    ticking: tuple[int, ...]
    nodes: tuple[NodeState, ...]
    coverage: tuple[Optional[frozenset[int]], ...]
    violation: Optional[Violation]


class Explorer:
    def __init__(
        self,
        params: ProtocolParams,
        topology: Topology,
        *,
        delivery: str = "end-instant",
        monitors: Sequence[str] = ("inv1", "inv2"),
        start_delays: Optional[Sequence[int]] = None,
        max_states: int = 2_000_000,
    ) -> None:
        require_valid(params)
        if validate_slot_allocation(params, topology):
            raise ValueError("neighbors share a TX slot")
        if delivery not in DELIVERY_POLICIES:
            raise ValueError(f"unknown delivery policy {delivery!r}")
        self.p = params
        self.t = topology
        self.delivery = delivery
        self.monitors = resolve(monitors)
        self.start_delays = tuple(start_delays) if start_delays is not None else (0,) * params.n_nodes
        self.max_states = max_states
        self.choices = [tuple(range(lo, hi + 1)) for lo, hi in zip(params.tick_min, params.tick_max)]

    # -- semantics ----------------------------------------------------------

    def initial_states(self) -> list[CanonicalState]:
        node = initial_state(self.p)
        n = self.p.n_nodes
        out = []
        for combo in product(*self.choices):
            deltas = tuple(d + c for d, c in zip(self.start_delays, combo))
            out.append(CanonicalState(deltas, (node,) * n, (None,) * n))
        return out

    def _instant(self, s: CanonicalState, time: int = 0, trace: Optional[Trace] = None) -> _Instant:
        p, k0 = self.p, self.p.ticks_per_slot
        delta = min(s.deltas)
        ticking = tuple(i for i, d in enumerate(s.deltas) if d == delta)
        nodes = list(s.nodes)
        cov = list(s.coverage)
        for i in ticking:
            if nodes[i].radio == Radio.SENDING and nodes[i].remaining == 1:
                listeners = cov[i] or frozenset()
                for j in self.t.neighbors(i):
                    nj = nodes[j]
                    if not delivered(self.delivery, nj, j in listeners):
                        continue
                    if len(nj.phase_errors) + len(nj.pending) >= p.phase_capacity:
                        raise PhaseBufferOverflow(f"node {j}: phase-error buffer full")
                    if trace is not None:
                        trace.add(time, j, "message_received", *divmod(nj.pos, k0))
                    nodes[j] = nj._replace(pending=nj.pending + (i,))
        for i in ticking:
            old = nodes[i]
            out = step(old, i, p)
            nodes[i] = new = out.state
            at = new.pos if out.offset is None else (new.pos - out.offset) % p.frame_ticks
            for label in out.labels:
                if trace is not None:
                    trace.add(time, i, label, *divmod(at, k0))
                if label == "sending":
                    cov[i] = frozenset(j for j in self.t.neighbors(i) if nodes[j].radio == Radio.RECEIVING)
                elif label == "end_sending":
                    cov[i] = None
                elif label == "end_receiving":
                    cov = [c - {i} if c is not None else None for c in cov]
            if out.offset is not None and trace is not None:
                trace.offset(time, i, out.offset)
            if new.radio != old.radio:
                v = first_violation(self.monitors, nodes, self.t, time)
                if v is not None:
                    idx = len(trace) if trace is not None else 0
                    v = Violation(v.invariant, v.time, v.witnesses, v.description, idx)
                    return _Instant(delta, ticking, tuple(nodes), tuple(cov), v)
        return _Instant(delta, ticking, tuple(nodes), tuple(cov), None)

    def _expand(self, s: CanonicalState, inst: _Instant) -> list[tuple[tuple[int, ...], CanonicalState]]:
        base = [d - inst.delta for d in s.deltas]
        out = []
        for combo in product(*(self.choices[i] for i in inst.ticking)):
            deltas = list(base)
            for i, c in zip(inst.ticking, combo):
                deltas[i] = c
            out.append((combo, CanonicalState(tuple(deltas), inst.nodes, inst.coverage)))
        return out

    def successors(self, s: CanonicalState) -> list[CanonicalState]:
        """All states one instant later (empty if the instant violates a monitor)."""
        inst = self._instant(s)
        if inst.violation is not None:
            return []
        return [nxt for _, nxt in self._expand(s, inst)]

    # -- search -------------------------------------------------------------

    def explore(self, depth: int) -> ExploreResult:
        """Breadth-first search up to ``depth`` instants; the first violation
        found lies on a shortest violating path."""
        parent: dict[CanonicalState, Optional[tuple[CanonicalState, tuple[int, ...]]]] = {}
        frontier: deque[tuple[CanonicalState, int]] = deque()
        for s0 in self.initial_states():
            if s0 not in parent:
                parent[s0] = None
                frontier.append((s0, 0))
        transitions = 0
        reached = 0
        while frontier:
            s, d = frontier.popleft()
            if d >= depth:
                reached = depth
                continue
            inst = self._instant(s)
            if inst.violation is not None:
                path, v, schedule = self._replay(s, parent)
                return ExploreResult("violation", d, len(parent), transitions, v, path, schedule=schedule)
            nxt = self._expand(s, inst)
            dead = check_progress(nxt, d)
            assert dead is None, "a tick is always enabled"
            for combo, s2 in nxt:
                transitions += 1
                if s2 in parent:
                    continue
                parent[s2] = (s, combo)
                frontier.append((s2, d + 1))
                if len(parent) > self.max_states:
                    return ExploreResult("inconclusive", d, len(parent), transitions)
            reached = max(reached, d + 1)
        return ExploreResult("exhausted-ok", reached, len(parent), transitions, complete=reached < depth)

    def _replay(self, last: CanonicalState, parent: dict) -> tuple[Trace, Violation, tuple]:
        """Re-run the path ending in ``last`` with absolute time and a trace;
        also return the interval schedule that drives an engine along it."""
        chain = [last]
        combos = []
        while parent[chain[-1]] is not None:
            prev, combo = parent[chain[-1]]
            combos.append(combo)
            chain.append(prev)
        chain.reverse()
        combos.reverse()
        first = chain[0].deltas
        schedule = [[d - delay] for d, delay in zip(first, self.start_delays)]
        trace = Trace()
        time = 0
        for k, s in enumerate(chain):
            time += min(s.deltas)
            inst = self._instant(s, time, trace)
            if k < len(combos):
                for i, c in zip(inst.ticking, combos[k]):
                    schedule[i].append(c)
        assert inst.violation is not None
        return trace, inst.violation, tuple(tuple(x) for x in schedule)

    def unique_path(self, depth: int) -> Trace:
        """Trace of the only path when every node has a single interval choice."""
        if any(len(c) != 1 for c in self.choices):
            raise ValueError("unique_path needs tick_min == tick_max for every node")
        (s,) = self.initial_states()
        trace = Trace()
        time = 0
        for _ in range(depth):
            delta = min(s.deltas)
            time += delta
            inst = self._instant(s, time, trace)
            if inst.violation is not None:
                break
            ((_, s),) = self._expand(s, inst)
        return trace


def frames_to_depth(p: ProtocolParams, frames: int) -> int:
    """Instants needed for node 0 to finish ``frames`` frames after the
    initial partial slot, bounded for drifting clocks."""
    ticks = (frames * p.slots_per_frame + 1) * p.ticks_per_slot
    if len(set(p.tick_min) | set(p.tick_max)) == 1:
        return ticks
    per_tick = sum(-(-p.tick_max[0] // lo) for lo in p.tick_min)
    return ticks * per_tick


def explore(params: ProtocolParams, topology: Topology, depth: int,
            monitors: Sequence[str] = ("inv1", "inv2"), **kwargs) -> ExploreResult:
    return Explorer(params, topology, monitors=monitors, **kwargs).explore(depth)


def explore_frames(params: ProtocolParams, topology: Topology, frames: int, **kwargs) -> ExploreResult:
    return explore(params, topology, frames_to_depth(params, frames), **kwargs)

"""Discrete-event scheduler for a gMAC network.

Global time is an integer.  Each node ticks after an interval drawn from its
drift policy; events at equal time are processed deliveries first, then
ticks in ascending node id.  In the default fast mode a node is only woken
on ticks that can change something (controller predicates, radio counters,
frame wrap, clock adjustment); the ticks in between are accounted for
arithmetically.  ``skip_quiet=False`` processes every tick and serves as the
reference the fast mode is checked against.
"""

from __future__ import annotations

import heapq
import logging
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from itertools import accumulate, islice
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .core import ProtocolParams, Topology, require_valid, validate_slot_allocation
from .monitors import Violation, first_violation, resolve
from .protocol import (
    NodeState,
    PhaseBufferOverflow,
    Radio,
    initial_state,
    interesting_positions,
    phase_error,
    quiet_ticks,
    skip_quiet,
    step,
)

log = logging.getLogger(__name__)

END_OF_TRANSMISSION = 0
TICK = 1

DELIVERY_POLICIES = ("end-instant", "full-overlap")


class Event(NamedTuple):
    time: int
    kind: int  # END_OF_TRANSMISSION sorts before TICK
    seq: int  # node id: the sender for deliveries, the ticking node otherwise


# -- drift policies ---------------------------------------------------------

@dataclass(frozen=True)
class Perfect:
    """Every node ticks with the same period (the largest ``tick_min``)."""


@dataclass(frozen=True)
class FixedRate:
    cycles: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "cycles", tuple(self.cycles))


@dataclass(frozen=True)
class SeededJitter:
    """Each interval drawn uniformly from ``[tick_min, tick_max]``."""

    seed: int


@dataclass(frozen=True)
class Scripted:
    """Explicit inter-tick intervals per node; the last one repeats after
    the script runs out.  Used to replay schedules found by the explorer."""

    intervals: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "intervals", tuple(tuple(x) for x in self.intervals))


DriftScheduler = Union[Perfect, FixedRate, SeededJitter, Scripted]


class _ConstantSource:
    def __init__(self, period: int) -> None:
        self.period = period

    def times(self, start: int, k: int) -> list[int]:
        d = self.period
        return list(range(start + d, start + d * k + 1, d))


class _JitterSource:
    CHUNK = 512

    def __init__(self, lo: int, hi: int, seed: int, node: int) -> None:
        self.lo, self.hi = lo, hi
        self.rng = np.random.default_rng([seed, node])
        self.buf: list[int] = []
        self.i = 0

    def _draw(self, k: int) -> list[int]:
        out: list[int] = []
        while k:
            if self.i == len(self.buf):
                self.buf = self.rng.integers(self.lo, self.hi, endpoint=True, size=self.CHUNK).tolist()
                self.i = 0
            take = min(k, len(self.buf) - self.i)
            out.extend(self.buf[self.i:self.i + take])
            self.i += take
            k -= take
        return out

    def times(self, start: int, k: int) -> list[int]:
        return list(islice(accumulate(self._draw(k), initial=start), 1, None))


class _ScriptSource:
    def __init__(self, intervals: Sequence[int]) -> None:
        self.intervals = list(intervals)
        self.i = 0

    def times(self, start: int, k: int) -> list[int]:
        out = []
        for _ in range(k):
            if self.i < len(self.intervals):
                d = self.intervals[self.i]
                self.i += 1
            else:
                d = self.intervals[-1]
            start += d
            out.append(start)
        return out


def make_sources(policy: DriftScheduler, p: ProtocolParams) -> list:
    if isinstance(policy, Perfect):
        period = max(p.tick_min)
        if period > min(p.tick_max):
            raise ValueError("perfect clocks need a period inside every [tick_min, tick_max]")
        return [_ConstantSource(period) for _ in range(p.n_nodes)]
    if isinstance(policy, FixedRate):
        if len(policy.cycles) != p.n_nodes:
            raise ValueError(f"expected {p.n_nodes} cycle lengths, got {len(policy.cycles)}")
        for i, c in enumerate(policy.cycles):
            if not p.tick_min[i] <= c <= p.tick_max[i]:
                raise ValueError(f"cycle {c} of node {i} outside [{p.tick_min[i]}, {p.tick_max[i]}]")
        return [_ConstantSource(c) for c in policy.cycles]
    if isinstance(policy, SeededJitter):
        return [_JitterSource(p.tick_min[i], p.tick_max[i], policy.seed, i) for i in range(p.n_nodes)]
    if isinstance(policy, Scripted):
        if len(policy.intervals) != p.n_nodes:
            raise ValueError(f"expected {p.n_nodes} interval scripts, got {len(policy.intervals)}")
        for i, script in enumerate(policy.intervals):
            if not script:
                raise ValueError(f"empty interval script for node {i}")
            if any(not p.tick_min[i] <= d <= p.tick_max[i] for d in script):
                raise ValueError(f"interval of node {i} outside [{p.tick_min[i]}, {p.tick_max[i]}]")
        return [_ScriptSource(script) for script in policy.intervals]
    raise TypeError(f"unknown drift policy {policy!r}")


# -- trace ------------------------------------------------------------------

@dataclass
class Trace:
    """Append-only record of radio transitions, deliveries and offsets."""

    capacity: Optional[int] = None
    records: list[tuple] = field(default_factory=list)
    truncated: bool = False

    def add(self, time: int, node: int, label: str, slot: int, tick: int) -> None:
        self._push((time, node, label, slot, tick))

    def offset(self, time: int, node: int, value: int) -> None:
        self._push((time, node, "OFFSET", value))

    def _push(self, rec: tuple) -> None:
        if self.capacity is not None and len(self.records) >= self.capacity:
            self.truncated = True
            return
        self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    def lines(self) -> list[str]:
        return [",".join(str(x) for x in rec) for rec in self.records]

    def text(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    def until(self, time: int) -> list[tuple]:
        return [r for r in self.records if r[0] <= time]


def parse_trace(text: str) -> list[tuple]:
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        parts = line.split(",")
        if parts[2] == "OFFSET":
            out.append((int(parts[0]), int(parts[1]), "OFFSET", int(parts[3])))
        else:
            out.append((int(parts[0]), int(parts[1]), parts[2], int(parts[3]), int(parts[4])))
    return out


# -- metrics ----------------------------------------------------------------

def circular_distance(a: int, b: int, frame_ticks: int) -> int:
    d = abs(a - b) % frame_ticks
    return min(d, frame_ticks - d)


def max_phase_spread(positions: Sequence[int], frame_ticks: int) -> int:
    """Largest pairwise circular distance between linear frame positions."""
    best = 0
    for i in range(len(positions)):
        for j in range(i + 1, len(positions)):
            d = circular_distance(positions[i], positions[j], frame_ticks)
            if d > best:
                best = d
    return best


def delivered(policy: str, receiver: NodeState, covered: bool) -> bool:
    """Does a receiver get a message whose transmission ends now?

    ``covered`` tells whether the receiver was already receiving when the
    transmission started and has been ever since.
    """
    if receiver.radio != Radio.RECEIVING:
        return False
    if policy == "end-instant":
        return True
    if policy == "full-overlap":
        return covered
    raise ValueError(f"unknown delivery policy {policy!r}")


# -- run --------------------------------------------------------------------

@dataclass
class RunResult:
    verdict: str  # "ok" or "violation"
    frames: int  # frames completed on node 0 (frame index of the violation otherwise)
    end_time: int
    max_spread: int
    trace: Trace
    violation: Optional[Violation] = None
    stored_errors: list[tuple[int, int, int]] = field(default_factory=list)  # (node, sender, value)
    offsets: list[tuple[int, int, int]] = field(default_factory=list)  # (time, node, value)
    # (time, node, phase errors the synchronizer saw, offset applied)
    corrections: list[tuple[int, int, tuple[int, ...], int]] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    samples: list[tuple[int, ...]] = field(default_factory=list)  # per frame of node 0

    @property
    def ok(self) -> bool:
        return self.verdict == "ok"

    def summary(self) -> str:
        if self.violation is None:
            return f"OK frames={self.frames} max_spread={self.max_spread}"
        return f"VIOLATION frame={self.frames} {self.violation.to_line()}"


class Engine:
    def __init__(
        self,
        params: ProtocolParams,
        topology: Topology,
        drift: DriftScheduler = Perfect(),
        *,
        delivery: str = "end-instant",
        monitors: Sequence[str] = ("inv1", "inv2"),
        start_delays: Optional[Sequence[int]] = None,
        skip_quiet: bool = True,
        check_every_event: bool = False,
        trace_capacity: Optional[int] = None,
    ) -> None:
        require_valid(params)
        if topology.n_nodes != params.n_nodes:
            raise ValueError("topology and params disagree on the node count")
        conflicts = validate_slot_allocation(params, topology)
        if conflicts:
            raise ValueError(f"neighbors share a TX slot: {conflicts}")
        if delivery not in DELIVERY_POLICIES:
            raise ValueError(f"unknown delivery policy {delivery!r}")
        self.p = params
        self.t = topology
        self.drift = drift
        self.delivery = delivery
        self.monitors = resolve(monitors)
        self.start_delays = tuple(start_delays) if start_delays is not None else (0,) * params.n_nodes
        if len(self.start_delays) != params.n_nodes or min(self.start_delays) < 0:
            raise ValueError("start_delays must give a non-negative delay per node")
        self.skip_quiet = skip_quiet
        self.check_every_event = check_every_event
        self.trace_capacity = trace_capacity

    def run(self, horizon: int) -> RunResult:
        return _Run(self).go(horizon)


class _Run:
    def __init__(self, e: Engine) -> None:
        p = e.p
        self.e = e
        self.p = p
        self.frame = p.frame_ticks
        self.k0 = p.ticks_per_slot
        self.nbrs = [e.t.neighbors(i) for i in range(p.n_nodes)]
        self.sources = make_sources(e.drift, p)
        self.positions = [interesting_positions(i, p) for i in range(p.n_nodes)]
        self.states = [initial_state(p) for _ in range(p.n_nodes)]
        self.future: list[list[int]] = [[] for _ in range(p.n_nodes)]
        self.coverage: dict[int, set[int]] = {}
        self.heap: list[Event] = []
        self.trace = Trace(e.trace_capacity)
        self.result = RunResult("ok", 0, 0, 0, self.trace)
        self.wraps = 0
        # errors stored early by the fast path, keyed by the tick that would
        # have stored them; dropped if the run stops before that tick
        self.early: list[tuple[Event, int]] = []
        self.half_sleep = (p.slots_per_frame - p.active_slots) * self.k0 // 2

    def go(self, horizon: int) -> RunResult:
        for i in range(self.p.n_nodes):
            self._schedule(i, self.e.start_delays[i])
        res = self.result
        now = None
        while self.heap:
            ev = heapq.heappop(self.heap)
            if ev.time != now:
                if now is not None:
                    self._sample(now)
                now = ev.time
            if len(self.early) > 64:
                self.early = [e for e in self.early if e[0] > ev]
            if ev.kind == END_OF_TRANSMISSION:
                self._deliver(ev.seq, ev.time)
                changed = False
            else:
                changed = self._tick(ev.seq, ev.time)
            if changed or self.e.check_every_event:
                v = first_violation(self.e.monitors, self.states, self.e.t, ev.time)
                if v is not None:
                    res.verdict = "violation"
                    res.violation = Violation(v.invariant, v.time, v.witnesses, v.description, len(self.trace))
                    res.frames = self.wraps
                    res.end_time = ev.time
                    return self._finish(ev)
            if ev.kind == TICK:
                if ev.seq == 0 and self.wraps > horizon:
                    res.frames = horizon
                    res.end_time = ev.time
                    return self._finish(ev)
                self._schedule(ev.seq, ev.time)
        raise AssertionError("event queue drained; a tick is always enabled")

    def _schedule(self, i: int, base: int) -> None:
        s = self.states[i]
        k = quiet_ticks(s, self.positions[i], self.p) + 1 if self.e.skip_quiet else 1
        times = self.sources[i].times(base, k)
        self.future[i] = times
        when = times[-1]
        heapq.heappush(self.heap, Event(when, TICK, i))
        if s.radio == Radio.SENDING and s.remaining == k:
            heapq.heappush(self.heap, Event(when, END_OF_TRANSMISSION, i))

    def _tick(self, i: int, t: int) -> bool:
        p = self.p
        old = self.states[i]
        s = skip_quiet(old, len(self.future[i]) - 1, p)
        out = step(s, i, p)
        new = out.state
        self.states[i] = new
        at = new.pos if out.offset is None else (new.pos - out.offset) % self.frame
        slot, tick = divmod(at, self.k0)
        for label in out.labels:
            self.trace.add(t, i, label, slot, tick)
            if label == "sending":
                self.coverage[i] = {j for j in self.nbrs[i] if self.states[j].radio == Radio.RECEIVING}
            elif label == "end_receiving":
                for cov in self.coverage.values():
                    cov.discard(i)
        for sender, v in out.stored:
            self.result.stored_errors.append((i, sender, v))
        if out.offset is not None:
            self.trace.offset(t, i, out.offset)
            self.result.offsets.append((t, i, out.offset))
            seen = s.phase_errors + tuple(v for _, v in out.stored)
            self.result.corrections.append((t, i, seen, out.offset))
            if abs(out.offset) > self.half_sleep:
                msg = f"t={t} node {i}: offset {out.offset} exceeds half the sleeping period"
                log.warning(msg)
                self.result.diagnostics.append(msg)
        if i == 0 and at == 0:
            self.wraps += 1
            self.result.samples.append(self._sample_row(t))
        return new.radio != old.radio

    def _deliver(self, sender: int, t: int) -> None:
        p = self.p
        cov = self.coverage.get(sender, set())
        for j in self.nbrs[sender]:
            s = self.states[j]
            if not delivered(self.e.delivery, s, j in cov):
                continue
            fut = self.future[j]
            idx = bisect_left(fut, t)
            self.trace.add(t, j, "message_received", *divmod((s.pos + idx) % self.frame, self.k0))
            if idx == len(fut) - 1:
                if len(s.phase_errors) + len(s.pending) >= p.phase_capacity:
                    raise PhaseBufferOverflow(f"node {j}: phase-error buffer full at t={t}")
                self.states[j] = s._replace(pending=s.pending + (sender,))
            else:
                # the next tick of j is a quiet one, so store right away
                if len(s.phase_errors) >= p.phase_capacity:
                    raise PhaseBufferOverflow(f"node {j}: phase-error buffer full at t={t}")
                value = phase_error((s.pos + idx + 1) % self.frame, sender, p)
                self.states[j] = s._replace(phase_errors=s.phase_errors + (value,))
                self.early.append((Event(fut[idx], TICK, j), len(self.result.stored_errors)))
                self.result.stored_errors.append((j, sender, value))

    def _finish(self, last: Event) -> RunResult:
        late = {k for due, k in self.early if due > last}
        if late:
            errs = self.result.stored_errors
            self.result.stored_errors = [e for k, e in enumerate(errs) if k not in late]
        return self.result

    def position_at(self, i: int, t: int) -> int:
        """Linear position of node ``i`` counting all its ticks up to ``t``."""
        return (self.states[i].pos + bisect_right(self.future[i], t)) % self.frame

    def _sample(self, t: int) -> None:
        spread = max_phase_spread([self.position_at(i, t) for i in range(self.p.n_nodes)], self.frame)
        if spread > self.result.max_spread:
            self.result.max_spread = spread

    def _sample_row(self, t: int) -> tuple[int, ...]:
        pos = [self.states[0].pos] + [self.position_at(i, t) for i in range(1, self.p.n_nodes)]
        return (t, *pos, max_phase_spread(pos, self.frame))


def run_simulation(
    params: ProtocolParams,
    topology: Topology,
    drift: DriftScheduler = Perfect(),
    horizon: int = 100,
    monitors: Sequence[str] = ("inv1", "inv2"),
    **kwargs,
) -> RunResult:
    return Engine(params, topology, drift, monitors=monitors, **kwargs).run(horizon)

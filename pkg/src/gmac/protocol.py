"""Per-node transition logic: clock, controller, sender/receiver radio and
the Median synchronizer.

Everything here is a pure function of ``(state, node, params)``; global time
and message delivery belong to the engine.  Node state keeps the frame
position as a single linear tick index ``slot * ticks_per_slot + tick``.
"""

from __future__ import annotations

import math
from enum import IntEnum
from fractions import Fraction
from typing import NamedTuple, Sequence

from .core import FramePosition, ProtocolParams

GAIN = Fraction(1, 2)


class PhaseBufferOverflow(RuntimeError):
    """More messages arrived in one frame than the phase-error buffer holds."""


class Radio(IntEnum):
    IDLE = 0
    SWITCHING_TO_SEND = 1
    SENDING = 2
    SWITCHING_TO_RECEIVE = 3
    RECEIVING = 4


COUNTING = (Radio.SWITCHING_TO_SEND, Radio.SENDING, Radio.SWITCHING_TO_RECEIVE)
LISTENING = (Radio.SWITCHING_TO_RECEIVE, Radio.RECEIVING)


class NodeState(NamedTuple):
    pos: int
    radio: Radio = Radio.IDLE
    remaining: int = 0
    phase_errors: tuple[int, ...] = ()
    pending: tuple[int, ...] = ()
    adjusted: bool = False

    @property
    def msg_counter(self) -> int:
        return len(self.phase_errors)

    def position(self, p: ProtocolParams) -> FramePosition:
        return FramePosition(*divmod(self.pos, p.ticks_per_slot))


class Step(NamedTuple):
    """Outcome of one local clock tick."""

    state: NodeState
    labels: tuple[str, ...]
    offset: int | None  # set when the synchronizer adjusted the clock
    stored: tuple[tuple[int, int], ...]  # (sender, phase error) stored on this tick


def initial_state(p: ProtocolParams) -> NodeState:
    return NodeState(pos=(p.slots_per_frame - 1) * p.ticks_per_slot)


def _slot_tick(s: NodeState, p: ProtocolParams) -> tuple[int, int]:
    return divmod(s.pos, p.ticks_per_slot)


def send_position(node: int, p: ProtocolParams) -> int:
    """Linear position at which the controller must start the sender."""
    k0, g, r, c = p.ticks_per_slot, p.guard, p.switch_time, p.slots_per_frame
    tsn = p.tx_slot[node]
    if r > g:
        return ((tsn + c - 1) % c) * k0 + k0 - (r - g)
    return tsn * k0 + g - r


def go_send(s: NodeState, node: int, p: ProtocolParams) -> bool:
    k0, g, r, c = p.ticks_per_slot, p.guard, p.switch_time, p.slots_per_frame
    slot, tick = _slot_tick(s, p)
    tsn = p.tx_slot[node]
    if r > g:
        return slot == (tsn + c - 1) % c and tick == k0 - (r - g)
    return slot == tsn and tick == g - r


def go_receive(s: NodeState, node: int, p: ProtocolParams) -> bool:
    k0, r, c, n = p.ticks_per_slot, p.switch_time, p.slots_per_frame, p.active_slots
    slot, tick = _slot_tick(s, p)
    tsn = p.tx_slot[node]
    return (
        (r > 0 and tsn != 0 and slot == c - 1 and tick == k0 - r)
        or (r == 0 and tsn != 0 and slot == 0 and tick == 0)
        or (0 < slot < n and slot - 1 == tsn and tick == 0)
    )


def go_sleep(s: NodeState, p: ProtocolParams) -> bool:
    return _slot_tick(s, p)[0] == p.active_slots


def receive_positions(node: int, p: ProtocolParams) -> tuple[int, ...]:
    """Every linear position at which go_receive holds for ``node``."""
    k0, r, c, n = p.ticks_per_slot, p.switch_time, p.slots_per_frame, p.active_slots
    tsn = p.tx_slot[node]
    out = []
    if tsn != 0:
        out.append((c - 1) * k0 + k0 - r if r > 0 else 0)
    if 0 < tsn + 1 < n:
        out.append((tsn + 1) * k0)
    return tuple(out)


def store_phase_error(s: NodeState, sender: int, p: ProtocolParams) -> NodeState:
    """Append expected-minus-actual end-of-transmission reading for ``sender``."""
    if len(s.phase_errors) >= p.phase_capacity:
        raise PhaseBufferOverflow(
            f"phase-error buffer full ({p.phase_capacity}) when storing message of {sender}"
        )
    return s._replace(phase_errors=s.phase_errors + (phase_error(s.pos, sender, p),))


def phase_error(reading: int, sender: int, p: ProtocolParams) -> int:
    k0 = p.ticks_per_slot
    return (p.tx_slot[sender] * k0 + k0 - p.guard) - reading


def compute_phase_correction(errors: Sequence[int]) -> int:
    """Median rule: nothing heard gives 0, one or two messages use the first,
    three or more the (lower) median; the choice is scaled by the gain and
    truncated toward zero."""
    if not errors:
        return 0
    if len(errors) <= 2:
        chosen = errors[0]
    else:
        chosen = sorted(errors)[(len(errors) - 1) // 2]
    return math.trunc(chosen * GAIN)


def apply_clock_adjustment(s: NodeState, offset: int, p: ProtocolParams) -> NodeState:
    return s._replace(
        pos=(s.pos + offset) % p.frame_ticks,
        phase_errors=(),
        pending=(),
        adjusted=True,
    )


def clock_tick(s: NodeState, p: ProtocolParams) -> NodeState:
    """Advance the hardware clock one tick (no controller or synchronizer)."""
    return _clock(s, p, [])[0]


def _clock(s: NodeState, p: ProtocolParams, labels: list[str]) -> tuple[NodeState, tuple]:
    pos = s.pos + 1
    if pos == p.frame_ticks:
        pos = 0
    adjusted = s.adjusted and pos != 0
    errors = s.phase_errors
    stored: tuple = ()
    if s.pending:
        if len(errors) + len(s.pending) > p.phase_capacity:
            raise PhaseBufferOverflow(
                f"phase-error buffer full ({p.phase_capacity}) at position {pos}"
            )
        stored = tuple((sender, phase_error(pos, sender, p)) for sender in s.pending)
        errors = errors + tuple(v for _, v in stored)
    radio, rem = s.radio, s.remaining
    if radio in COUNTING:
        rem -= 1
        if rem == 0:
            if radio == Radio.SWITCHING_TO_SEND:
                radio, rem = Radio.SENDING, p.sending_ticks
                labels.append("sending")
            elif radio == Radio.SENDING:
                radio = Radio.IDLE
                labels.append("end_sending")
            else:
                radio = Radio.RECEIVING
                labels.append("receiving")
    return NodeState(pos, radio, rem, errors, (), adjusted), stored


def step(s: NodeState, node: int, p: ProtocolParams) -> Step:
    """One local tick of the composed Clock/Sender/Receiver/Controller/
    Synchronizer automata.

    Controller signals are urgent, so each predicate acts on the exact tick
    at which it becomes true.
    """
    labels: list[str] = []
    s, stored = _clock(s, p, labels)
    radio, rem = s.radio, s.remaining
    if go_send(s, node, p):
        if radio in LISTENING:
            labels.append("end_receiving")
            radio = Radio.IDLE
        if radio == Radio.IDLE:
            labels.append("start_sending")
            if p.switch_time == 0:
                radio, rem = Radio.SENDING, p.sending_ticks
                labels.append("sending")
            else:
                radio, rem = Radio.SWITCHING_TO_SEND, p.switch_time
    elif radio in LISTENING and go_sleep(s, p) and s.pos % p.ticks_per_slot == 0:
        labels.append("end_receiving")
        radio, rem = Radio.IDLE, 0
    # not an elif: sleeping and the pre-frame receive start can share a tick
    if radio == Radio.IDLE and go_receive(s, node, p):
        labels.append("start_receiving")
        if p.switch_time == 0:
            radio, rem = Radio.RECEIVING, 0
            labels.append("receiving")
        else:
            radio, rem = Radio.SWITCHING_TO_RECEIVE, p.switch_time
    if radio != s.radio or rem != s.remaining:
        s = s._replace(radio=radio, remaining=rem)

    offset = None
    if s.pos == p.adjust_position and not s.adjusted:
        offset = compute_phase_correction(s.phase_errors)
        s = apply_clock_adjustment(s, offset, p)
    return Step(s, tuple(labels), offset, stored)


def skip_quiet(s: NodeState, k: int, p: ProtocolParams) -> NodeState:
    """Apply ``k`` ticks known to trigger nothing (see :func:`quiet_ticks`)."""
    if k == 0:
        return s
    rem = s.remaining - k if s.radio in COUNTING else s.remaining
    return s._replace(pos=(s.pos + k) % p.frame_ticks, remaining=rem)


def interesting_positions(node: int, p: ProtocolParams) -> tuple[int, ...]:
    """Sorted linear positions where a tick of ``node`` may act regardless of
    radio counters: controller predicates, frame wrap and adjustment."""
    pts = {0, send_position(node, p), p.adjust_position, *receive_positions(node, p)}
    if p.active_slots < p.slots_per_frame:
        pts.add(p.active_slots * p.ticks_per_slot)
    return tuple(sorted(pts))


def quiet_ticks(s: NodeState, positions: Sequence[int], p: ProtocolParams) -> int:
    """Number of upcoming ticks of ``s`` that are guaranteed to be no-ops, so
    the tick after them is the next one that can change observable state."""
    frame = p.frame_ticks
    best = frame
    for q in positions:
        d = (q - s.pos) % frame or frame
        if d < best:
            best = d
    if s.radio in COUNTING and s.remaining < best:
        best = s.remaining
    if s.pending:
        best = 1
    return best - 1

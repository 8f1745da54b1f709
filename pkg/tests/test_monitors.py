from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from gmac.core import Topology
from gmac.monitors import MONITORS, check_inv1, check_inv2, check_progress, first_violation, resolve
from gmac.protocol import NodeState, Radio

R = Radio


def states(*radios):
    return [NodeState(0, radio) for radio in radios]


def test_inv1_sender_with_idle_neighbor():
    t = Topology.line(3)
    assert check_inv1(states(R.SENDING, R.RECEIVING, R.IDLE), t) is None  # 2 is not a neighbor of 0
    v = check_inv1(states(R.RECEIVING, R.SENDING, R.SWITCHING_TO_RECEIVE), t, time=7)
    assert v.invariant == "INV1" and v.witnesses == (1, 2) and v.time == 7
    assert "switching_to_receive" in v.description


def test_inv2_names_the_triple():
    # 0 and 2 are hidden from each other and share neighbor 1
    t = Topology.line(3)
    v = check_inv2(states(R.SENDING, R.RECEIVING, R.SENDING), t, time=3)
    assert v.witnesses == (0, 2, 1)
    assert v.to_line() == "INV2,3,0 2 1,nodes 0 and 2 sending simultaneously to common neighbor 1"


def test_inv2_line_end_senders_share_no_neighbor():
    # the two slot-1 senders at the ends of a 4-line have no common neighbor
    t = Topology.line(4)
    assert check_inv2(states(R.SENDING, R.RECEIVING, R.RECEIVING, R.SENDING), t) is None


def test_progress_monitor():
    assert check_progress([1]) is None
    assert check_progress([]).invariant == "INV3"


def test_resolve():
    assert resolve(["INV1", "inv2"]) == (check_inv1, check_inv2)
    with pytest.raises(ValueError):
        resolve(["inv9"])


def brute_inv1(radios, t):
    return any(radios[i] == R.SENDING and radios[j] != R.RECEIVING
               for i in range(t.n_nodes) for j in range(t.n_nodes) if t.neighbor(i, j))


def brute_inv2(radios, t):
    return any(radios[i] == R.SENDING and radios[j] == R.SENDING and t.neighbor(i, k) and t.neighbor(j, k)
               for i in range(t.n_nodes) for j in range(t.n_nodes) for k in range(t.n_nodes) if i != j)


@given(st.integers(2, 6).flatmap(lambda n: st.tuples(
    st.just(n),
    st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] != e[1])),
    st.lists(st.sampled_from(list(R)), min_size=n, max_size=n),
)))
def test_monitors_match_brute_force(case):
    n, edges, radios = case
    t = Topology.from_edges(n, edges)
    s = [NodeState(0, x) for x in radios]
    assert (check_inv1(s, t) is not None) == brute_inv1(radios, t)
    assert (check_inv2(s, t) is not None) == brute_inv2(radios, t)
    v = first_violation(tuple(MONITORS.values()), s, t, 0)
    assert (v is not None) == (brute_inv1(radios, t) or brute_inv2(radios, t))

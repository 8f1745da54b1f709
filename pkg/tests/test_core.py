from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from gmac.core import (
    FramePosition,
    ProtocolParams,
    Topology,
    check_model_limits,
    require_valid,
    validate_params,
    validate_slot_allocation,
)

from conftest import make_params

# (N, n, topology, g, r, min, max) for every configuration row of the two
# experiment tables, transcribed by hand
EXPERIMENT_ROWS = [
    (3, 3, "clique", 2, 0, 1, 1), (3, 3, "clique", 2, 0, 100000, 100001),
    (3, 3, "clique", 2, 1, 1, 1), (3, 3, "line", 2, 0, 1, 1),
    (3, 3, "line", 2, 0, 100000, 100000), (3, 3, "line", 2, 1, 1, 1),
    (3, 3, "line", 2, 1, 100000, 100000), (3, 3, "clique", 3, 0, 1, 1),
    (3, 3, "clique", 3, 0, 100000, 100001), (3, 3, "clique", 4, 0, 350, 351),
    (3, 3, "clique", 4, 0, 351, 352), (3, 3, "clique", 3, 2, 1, 1),
    (3, 3, "clique", 3, 2, 100000, 100001), (3, 3, "clique", 4, 2, 100000, 100001),
    (3, 3, "clique", 5, 2, 587, 588), (3, 3, "clique", 5, 2, 588, 589),
    (3, 3, "clique", 3, 5, 1, 1), (3, 3, "line", 3, 0, 1, 1),
    (3, 3, "line", 3, 0, 451, 452), (3, 3, "line", 3, 0, 452, 453),
    (3, 3, "line", 3, 2, 1, 1), (3, 3, "line", 3, 2, 100000, 100001),
    (3, 3, "line", 4, 2, 100000, 100001), (3, 3, "line", 5, 2, 453, 454),
    (3, 3, "line", 5, 2, 454, 455), (3, 3, "line", 3, 5, 1, 1),
    (4, 4, "clique", 3, 0, 1, 1), (4, 4, "clique", 3, 0, 450, 451),
    (4, 4, "clique", 3, 2, 1, 1), (4, 4, "clique", 3, 2, 100000, 100001),
    (4, 3, "line", 3, 0, 1, 1), (4, 3, "line", 3, 0, 450, 451),
    (4, 3, "line", 3, 2, 1, 1), (4, 3, "line", 3, 2, 100000, 100001),
    (5, 5, "clique", 3, 0, 1, 1), (5, 5, "clique", 3, 2, 1, 1),
    (5, 3, "line", 3, 0, 1, 1), (5, 3, "line", 3, 2, 1, 1),
    (6, 3, "line", 3, 0, 1, 1), (6, 3, "line", 3, 2, 1, 1),
    (7, 3, "line", 3, 0, 1, 1), (7, 3, "line", 3, 2, 1, 1),
]
COMMUNITY_ROWS = [(2, 0, 1, 1), (2, 0, 99, 100), (2, 1, 99, 100), (3, 0, 99, 100), (3, 2, 1, 1),
                  (3, 2, 99, 100), (3, 2, 451, 452), (3, 2, 452, 453), (4, 0, 99, 100),
                  (4, 1, 99, 100), (4, 2, 99, 100)]
TWO_TRIANGLES = [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)]


@pytest.mark.parametrize("row", EXPERIMENT_ROWS)
def test_experiment_rows_are_admissible(row):
    n, active, topo, g, r, lo, hi = row
    p = make_params(n, [i % active for i in range(n)], g, r, lo, hi, active=active)
    t = Topology.clique(n) if topo == "clique" else Topology.line(n)
    assert validate_params(p) == []
    assert check_model_limits(p) == []
    assert validate_slot_allocation(p, t) == []


@pytest.mark.parametrize("row", COMMUNITY_ROWS)
def test_community_rows_are_admissible(row):
    g, r, lo, hi = row
    p = make_params(6, (0, 1, 2, 3, 1, 0), g, r, lo, hi, active=4)
    assert validate_params(p) == []
    assert validate_slot_allocation(p, Topology.from_edges(6, TWO_TRIANGLES)) == []


def test_guard_must_be_positive():
    issues = validate_params(make_params(3, (0, 1, 2), 0, 0))
    assert [i.param for i in issues] == ["guard"]
    assert "0 < guard" in str(issues[0])
    with pytest.raises(ValueError, match="0 < guard"):
        require_valid(make_params(3, (0, 1, 2), 0, 0))


@pytest.mark.parametrize("kwargs,param", [
    (dict(n_nodes=0), "n_nodes"),
    (dict(active_slots=11), "active_slots"),
    (dict(switch_time=-1), "switch_time"),
    (dict(tx_slot=(0, 1, 3)), "tx_slot[2]"),
    (dict(tick_min=(2, 1, 1)), "tick_max[0]"),
    (dict(tick_min=(0, 1, 1), tick_max=(0, 1, 1)), "tick_min[0]"),
    (dict(tx_slot=(0, 1)), "tx_slot"),
])
def test_violated_constraint_is_named(kwargs, param):
    base = dict(n_nodes=3, slots_per_frame=10, active_slots=3, tx_slot=(0, 1, 2), ticks_per_slot=29,
                guard=2, switch_time=0, tick_min=(1, 1, 1), tick_max=(1, 1, 1))
    base.update(kwargs)
    issues = validate_params(ProtocolParams(**base))
    assert param in [i.param for i in issues]


def test_model_limits():
    assert check_model_limits(make_params(2, (0, 1), 14, 0)) == []
    assert [i.param for i in check_model_limits(make_params(2, (0, 1), 15, 0))] == ["guard"]
    assert [i.param for i in check_model_limits(make_params(2, (0, 1), 2, 30))] == ["switch_time"]
    assert len(check_model_limits(make_params(2, (0, 1), 2, 31))) == 2


def test_derived_quantities():
    p = make_params(3, (0, 1, 2), 2, 0)
    assert p.frame_ticks == 290
    assert p.sending_ticks == 25
    assert p.adjust_slot == 6  # middle of sleeping slots 3..9
    assert p.phase_capacity == 2
    assert make_params(10, range(10), 2, 0).adjust_slot == 9


def test_topology_rejects_bad_edges():
    with pytest.raises(ValueError):
        Topology.from_edges(3, [(1, 1)])
    with pytest.raises(ValueError):
        Topology.from_edges(3, [(0, 3)])


def test_topology_shapes():
    c = Topology.clique(4)
    assert len(c.edges) == 6 and all(c.degree(i) == 3 for i in range(4))
    ln = Topology.line(4)
    assert ln.sorted_edges() == [(0, 1), (1, 2), (2, 3)]
    assert Topology.from_edges(2, [(1, 0)]) == Topology.from_edges(2, [(0, 1)])
    assert ln.neighbors(1) == (0, 2)
    assert not ln.neighbor(0, 2)


def test_slot_allocation_conflicts():
    p = make_params(3, (0, 1, 0), 2, 0)
    assert validate_slot_allocation(p, Topology.line(3)) == []  # 0 and 2 are not adjacent
    assert validate_slot_allocation(p, Topology.clique(3)) == [(0, 2)]


@given(st.integers(1, 40), st.integers(1, 40), st.data())
def test_frame_position_roundtrip(k0, c, data):
    pos = data.draw(st.integers(0, k0 * c - 1))
    fp = FramePosition.from_linear(pos, k0, c)
    assert 0 <= fp.slot < c and 0 <= fp.tick < k0
    assert fp.linear(k0) == pos


@given(st.integers(2, 7), st.data())
def test_relabel_preserves_degrees(n, data):
    edges = data.draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))
                              .filter(lambda e: e[0] != e[1])))
    t = Topology.from_edges(n, edges)
    perm = data.draw(st.permutations(range(n)))
    u = t.relabel(perm)
    assert sorted(t.degree(i) for i in range(n)) == sorted(u.degree(i) for i in range(n))
    assert len(u.edges) == len(t.edges)

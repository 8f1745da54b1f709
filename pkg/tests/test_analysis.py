from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from gmac.analysis import (
    MAX_COMMUNITY_NODES,
    SWEEP_HEADER,
    SweepRow,
    adversarial_search,
    community_counterexample,
    community_rates,
    effective_sync_graph,
    extremal_rates,
    find_disjoint_communities,
    is_community,
    run_sweep,
    weak_components,
)
from gmac.core import Topology
from gmac.engine import FixedRate, run_simulation
from gmac.scenario import read_scenario

from conftest import clique, make_params

TWO_TRIANGLES = [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)]


@st.composite
def graphs(draw, max_nodes=7):
    n = draw(st.integers(1, max_nodes))
    pairs = list(itertools.combinations(range(n), 2))
    edges = draw(st.sets(st.sampled_from(pairs))) if pairs else set()
    return Topology.from_edges(n, edges)


def brute_communities(t):
    found = []
    for size in range(1, t.n_nodes + 1):
        for members in itertools.combinations(range(t.n_nodes), size):
            inside = set(members)
            if all(sum(j in inside for j in t.neighbors(i)) > sum(j not in inside for j in t.neighbors(i))
                   for i in inside):
                found.append(inside)
    return found


@settings(max_examples=150)
@given(graphs())
def test_community_search_matches_brute_force(t):
    every = brute_communities(t)
    for members in every:
        assert is_community(t, members)
    has_pair = any(not (a & b) for a, b in itertools.combinations(every, 2))
    pair = find_disjoint_communities(t)
    assert (pair is not None) == has_pair
    if pair is not None:
        a, b = pair
        assert not (a & b) and is_community(t, a) and is_community(t, b)
        assert len(a) == min(len(c) for c in every)


def test_community_examples():
    assert find_disjoint_communities(Topology.clique(3)) is None
    assert find_disjoint_communities(Topology.line(3)) is None
    assert find_disjoint_communities(Topology.from_edges(4, [(0, 1), (2, 3)])) == ({0, 1}, {2, 3})
    assert find_disjoint_communities(Topology.from_edges(6, TWO_TRIANGLES)) == ({0, 1, 2}, {3, 4, 5})
    assert not is_community(Topology.clique(3), [])


def test_community_search_is_bounded():
    with pytest.raises(ValueError):
        find_disjoint_communities(Topology.line(MAX_COMMUNITY_NODES + 1))


def test_sync_graph_of_partitioned_line():
    # ends hear their only neighbor; the middle nodes take the first message
    # of the frame, which comes from the outside neighbor in each case
    p = make_params(4, (1, 2, 3, 1), 3, 0, active=4)
    g = effective_sync_graph(p, Topology.line(4))
    assert g.edges == {(1, 0), (0, 1), (3, 2), (2, 3)}
    assert g.components == ({0, 1}, {2, 3})
    assert g.partitioned


def test_sync_graph_of_connected_line():
    p = make_params(4, (0, 1, 2, 3), 3, 0, active=4)
    g = effective_sync_graph(p, Topology.line(4))
    assert g.components == ({0, 1, 2, 3},) and not g.partitioned


def test_sync_graph_uses_every_neighbor_from_three_up():
    p, t = clique(4, 3, 0)
    g = effective_sync_graph(p, t)
    assert len(g.edges) == 12
    p, t = clique(3, 3, 0)
    assert effective_sync_graph(p, t).edges == {(1, 0), (0, 1), (0, 2)}


def test_two_triangles_stay_coupled_through_the_bridge():
    p = make_params(6, (0, 1, 2, 3, 1, 0), 3, 0, active=4)
    g = effective_sync_graph(p, Topology.from_edges(6, TWO_TRIANGLES))
    assert not g.partitioned


@settings(max_examples=80)
@given(graphs(), st.data())
def test_sync_components_survive_relabelling(t, data):
    # distinct slots, so the earliest neighbor never ties
    n = t.n_nodes
    p = make_params(n, range(n), 2, 0, slots=max(n, 2))
    perm = data.draw(st.permutations(range(n)))
    tsn = [0] * n
    for i in range(n):
        tsn[perm[i]] = i
    q = make_params(n, tsn, 2, 0, active=n, slots=max(n, 2))
    a = effective_sync_graph(p, t)
    b = effective_sync_graph(q, t.relabel(perm))
    assert sorted(len(c) for c in a.components) == sorted(len(c) for c in b.components)
    assert {frozenset(perm[i] for i in c) for c in a.components} == set(b.components)


def test_weak_components():
    assert weak_components(4, [(0, 1), (3, 2)]) == ({0, 1}, {2, 3})
    assert weak_components(3, []) == ({0}, {1}, {2})


def test_extremal_rates():
    p = make_params(3, (0, 1, 2), 2, 0, 10, 11)
    rates = extremal_rates(p)
    assert len(rates) == 8 and FixedRate((10, 11, 10)) in rates
    assert extremal_rates(make_params(2, (0, 1), 2, 0, 7, 7)) == [FixedRate((7, 7))]


def test_community_rates():
    t = Topology.from_edges(6, TWO_TRIANGLES)
    drift = community_rates(t, frozenset({0, 1, 2}), frozenset({3, 4, 5}), 100, 99)
    assert drift == FixedRate((100, 100, 100, 99, 99, 99))


def test_two_communities_drift_apart():
    p = make_params(6, (0, 1, 2, 3, 1, 0), 3, 0, 99, 100, active=4)
    res = community_counterexample(p, Topology.from_edges(6, TWO_TRIANGLES), horizon=20)
    assert res is not None and res.violation is not None
    assert community_counterexample(*clique(3, 3, 0, 99, 100), horizon=5) is None


def test_partitioned_line_fails_at_small_drift():
    p = make_params(4, (1, 2, 3, 1), 3, 0, 1000, 1001, active=4)
    t = Topology.line(4)
    for rates in ((1001, 1001, 1000, 1000), (1000, 1000, 1001, 1001)):
        res = run_simulation(p, t, FixedRate(rates), horizon=40)
        assert res.verdict == "violation" and res.frames == 11


def test_connected_line_holds_at_the_same_drift():
    p = make_params(4, (0, 1, 2, 3), 3, 0, 1000, 1001, active=4)
    res = run_simulation(p, Topology.line(4), FixedRate((1001, 1001, 1000, 1000)), horizon=200)
    assert res.ok and res.max_spread <= 4


def test_adversarial_search_finds_large_drift():
    p, t = clique(3, 2, 0, 99, 100)
    out = adversarial_search(p, t, frames=10, jitter_runs=3)
    assert out.found and out.runs <= 8 + 3
    assert "violation" in out.summary()


def test_adversarial_search_reports_nothing_without_drift():
    p, t = clique(3, 2, 0)
    out = adversarial_search(p, t, frames=5, jitter_runs=2)
    assert not out.found and out.runs == 3
    assert out.summary() == "no violation in 3 runs"


def test_sweep_row_format():
    row = SweepRow("a", "simulate", "ok", None, 0, "ok", True)
    assert row.to_line() == "a,simulate,ok,OK,0,ok,yes"
    row = SweepRow("b", "explore", "violation", None, None, "ok", False)
    assert row.to_line() == "b,explore,violation,,,ok,NO"
    assert len(SWEEP_HEADER.split(",")) == 7


def test_sweep_order_and_workers(scenario_dir):
    names = ["line4-partition-g3-r0", "communities-g3-r0", "clique3-g3-r5"]
    scs = [read_scenario(scenario_dir / f"{n}.scn") for n in names]
    serial = run_sweep(scs)
    assert [r.scenario for r in serial] == [names[0], names[1], names[2], names[2]]
    assert all(r.match for r in serial)
    assert run_sweep(scs, workers=2) == serial
    assert run_sweep([]) == []

"""Topology analysis and experiment orchestration.

Community search is exhaustive over node subsets, which is fine for the
small networks the model targets.  The effective sync graph predicts which
nodes can pull on each other's clocks under the Median rule: a node with at
most two neighbors only ever uses the first message of a frame, so its clock
follows a single neighbor.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .core import ProtocolParams, Topology
from .engine import FixedRate, RunResult, SeededJitter, run_simulation
from .explorer import explore

log = logging.getLogger(__name__)

MAX_COMMUNITY_NODES = 16


def is_community(t: Topology, members: Iterable[int]) -> bool:
    """Every member has strictly more neighbors inside than outside."""
    inside = set(members)
    if not inside:
        return False
    for i in inside:
        nbrs = t.neighbors(i)
        k = sum(1 for j in nbrs if j in inside)
        if k <= len(nbrs) - k:
            return False
    return True


def _community_masks(t: Topology) -> set[int]:
    n = t.n_nodes
    adj = [sum(1 << j for j in t.neighbors(i)) for i in range(n)]
    deg = [t.degree(i) for i in range(n)]
    found = set()
    for mask in range(1, 1 << n):
        m = mask
        ok = True
        while m:
            low = m & -m
            i = low.bit_length() - 1
            if 2 * bin(adj[i] & mask).count("1") <= deg[i]:
                ok = False
                break
            m ^= low
        if ok:
            found.add(mask)
    return found


def _members(mask: int) -> frozenset[int]:
    return frozenset(i for i in range(mask.bit_length()) if mask >> i & 1)


def find_disjoint_communities(t: Topology) -> Optional[tuple[frozenset[int], frozenset[int]]]:
    """Two disjoint communities, or None.

    Among all candidates the first community is the smallest (ties broken
    by lowest node ids), and the second the smallest inside its complement.
    """
    if t.n_nodes > MAX_COMMUNITY_NODES:
        raise ValueError(f"community search is exhaustive; limit is {MAX_COMMUNITY_NODES} nodes")
    masks = _community_masks(t)
    full = (1 << t.n_nodes) - 1

    def order(m: int) -> tuple[int, list[int]]:
        return (bin(m).count("1"), sorted(_members(m)))

    for a in sorted(masks, key=order):
        rest = full & ~a
        inside = [b for b in masks if b & rest == b]
        if inside:
            b = min(inside, key=order)
            return _members(a), _members(b)
    return None


@dataclass(frozen=True)
class SyncGraph:
    edges: frozenset[tuple[int, int]]  # (j, i): i's offset can depend on j
    components: tuple[frozenset[int], ...]

    @property
    def partitioned(self) -> bool:
        return len(self.components) >= 2


def effective_sync_graph(p: ProtocolParams, t: Topology) -> SyncGraph:
    edges = set()
    for i in range(t.n_nodes):
        nbrs = t.neighbors(i)
        if not nbrs:
            continue
        if len(nbrs) >= 3:
            edges.update((j, i) for j in nbrs)
        else:
            # buffers reset mid-sleep, so the first message is from the
            # neighbor transmitting earliest in the active period
            first = min(nbrs, key=lambda j: (p.tx_slot[j], j))
            edges.add((first, i))
    return SyncGraph(frozenset(edges), weak_components(t.n_nodes, edges))


def weak_components(n: int, edges: Iterable[tuple[int, int]]) -> tuple[frozenset[int], ...]:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, set[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), set()).add(i)
    return tuple(frozenset(g) for _, g in sorted(groups.items()))


# -- adversarial drift search ---------------------------------------------------

@dataclass
class SearchOutcome:
    found: bool
    policy: object = None
    result: Optional[RunResult] = None
    runs: int = 0

    def summary(self) -> str:
        if not self.found:
            return f"no violation in {self.runs} runs"
        return f"violation with {self.policy} after {self.runs} runs: {self.result.summary()}"


def extremal_rates(p: ProtocolParams) -> list[FixedRate]:
    """Every assignment of each node to its fastest or slowest clock."""
    options = [sorted({lo, hi}) for lo, hi in zip(p.tick_min, p.tick_max)]
    return [FixedRate(c) for c in itertools.product(*options)]


def adversarial_search(
    p: ProtocolParams,
    t: Topology,
    *,
    frames: int = 200,
    jitter_runs: int = 1000,
    seed: int = 0,
    stop_at_first: bool = True,
    **engine_kwargs,
) -> SearchOutcome:
    """Look for a violation over extremal fixed rates, then seeded jitter.

    This samples schedules; finding nothing is evidence, not proof.
    """
    policies: list = extremal_rates(p) + [SeededJitter(seed + k) for k in range(jitter_runs)]
    out = SearchOutcome(False)
    for policy in policies:
        res = run_simulation(p, t, policy, horizon=frames, **engine_kwargs)
        out.runs += 1
        if not res.ok and not out.found:
            out.found, out.policy, out.result = True, policy, res
            if stop_at_first:
                break
    return out


def community_rates(t: Topology, slow: frozenset[int], fast: frozenset[int],
                    slow_cycle: int, fast_cycle: int, others: Optional[int] = None) -> FixedRate:
    """Fixed cycle lengths with one community slow and the other fast."""
    others = slow_cycle if others is None else others
    return FixedRate(tuple(
        slow_cycle if i in slow else fast_cycle if i in fast else others for i in range(t.n_nodes)
    ))


def community_counterexample(p: ProtocolParams, t: Topology, horizon: int, **engine_kwargs) -> Optional[RunResult]:
    """Run the community split at the extreme rates of ``p``; the first
    violating run, or None (also when no two communities exist)."""
    pair = find_disjoint_communities(t)
    if pair is None:
        return None
    a, b = pair
    fast, slow = min(p.tick_min), max(p.tick_max)
    for s_set, f_set in ((a, b), (b, a)):
        for others in (slow, fast):
            drift = community_rates(t, s_set, f_set, slow, fast, others)
            res = run_simulation(p, t, drift, horizon=horizon, **engine_kwargs)
            if not res.ok:
                return res
    return None


# -- sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    scenario: str
    mode: str
    verdict: str
    frames: Optional[int]  # frames to violation, None when OK
    max_spread: Optional[int]
    expected: Optional[str]
    match: bool

    def to_line(self) -> str:
        cells = [
            self.scenario, self.mode, self.verdict,
            "OK" if self.verdict == "ok" else "" if self.frames is None else str(self.frames),
            "" if self.max_spread is None else str(self.max_spread),
            self.expected or "", "yes" if self.match else "NO",
        ]
        return ",".join(cells)


SWEEP_HEADER = "scenario,mode,verdict,frames_to_violation,max_phase_spread,expected,match"


def _matches(expected: Optional[str], verdict: str, invariant: Optional[str]) -> bool:
    if expected is None:
        return True
    if expected == "ok":
        return verdict == "ok"
    if expected == "violation":
        return verdict == "violation"
    return verdict == "violation" and invariant is not None and invariant.lower() == expected


def run_scenario(sc) -> list[SweepRow]:
    rows = []
    if sc.mode in ("simulate", "both"):
        res = sc.simulate()
        inv = res.violation.invariant if res.violation else None
        rows.append(SweepRow(sc.name, "simulate", res.verdict,
                             None if res.ok else res.frames, res.max_spread,
                             sc.expect, _matches(sc.expect, res.verdict, inv)))
    if sc.mode in ("explore", "both"):
        res = sc.explore()
        verdict = {"exhausted-ok": "ok"}.get(res.status, res.status)
        inv = res.violation.invariant if res.violation else None
        rows.append(SweepRow(sc.name, "explore", verdict, None, None,
                             sc.expect, _matches(sc.expect, verdict, inv)))
    return rows


def run_sweep(scenarios: Sequence, workers: int = 1) -> list[SweepRow]:
    """Run every scenario; rows come back in input order whatever ``workers`` is."""
    if workers > 1 and len(scenarios) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run_scenario, scenarios))
    else:
        chunks = [run_scenario(sc) for sc in scenarios]
    return [row for chunk in chunks for row in chunk]


__all__ = [
    "MAX_COMMUNITY_NODES", "SearchOutcome", "SweepRow", "SyncGraph", "SWEEP_HEADER",
    "adversarial_search", "community_counterexample", "community_rates",
    "effective_sync_graph", "explore", "extremal_rates", "find_disjoint_communities",
    "is_community", "run_scenario", "run_sweep", "weak_components",
]

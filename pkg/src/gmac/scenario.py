"""Scenario files: a small line-oriented ``key = value`` format.

    [nodes]
    count = 3
    tx_slot = 0 1 2
    slots = 10
    active = 3
    ticks_per_slot = 29
    guard = 2
    switch = 0

    [topology]
    kind = clique            # clique, line or edges
    edges = 0-1 1-2          # only with kind = edges

    [clocks]
    min = 1                  # one value for every node, or one per node
    max = 1
    policy = perfect         # perfect, fixed or jitter
    cycles = 100 100 99 99   # fixed only
    seed = 0                 # jitter only
    phase = 0 0 0            # per-node start delay in time units

    [run]
    name = clique3
    mode = simulate          # simulate, explore or both
    horizon = 100            # frames
    depth_frames = 3         # explorer bound; or depth = <instants>
    delivery = end-instant
    monitors = inv1 inv2
    expect = ok              # ok, violation, inv1 or inv2

Everything after ``#`` is a comment.  Errors carry the line number and key.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .core import ProtocolParams, Topology, check_model_limits, validate_params, validate_slot_allocation
from .engine import DELIVERY_POLICIES, FixedRate, Perfect, RunResult, SeededJitter, run_simulation
from .explorer import ExploreResult, Explorer, frames_to_depth
from .monitors import MONITORS

MODES = ("simulate", "explore", "both")
EXPECTATIONS = ("ok", "violation", "inv1", "inv2")

KEYS: dict[str, tuple[str, ...]] = {
    "nodes": ("count", "tx_slot", "slots", "active", "ticks_per_slot", "guard", "switch"),
    "topology": ("kind", "edges"),
    "clocks": ("min", "max", "policy", "cycles", "seed", "phase"),
    "run": ("name", "mode", "horizon", "depth", "depth_frames", "delivery", "monitors", "expect"),
}

# where a failing parameter constraint is reported
_PARAM_KEY = {
    "n_nodes": ("nodes", "count"), "slots_per_frame": ("nodes", "slots"),
    "active_slots": ("nodes", "active"), "tx_slot": ("nodes", "tx_slot"),
    "ticks_per_slot": ("nodes", "ticks_per_slot"), "guard": ("nodes", "guard"),
    "switch_time": ("nodes", "switch"), "tick_min": ("clocks", "min"),
    "tick_max": ("clocks", "max"),
}


class ScenarioError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None) -> None:
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.key = key


@dataclass(frozen=True)
class Scenario:
    params: ProtocolParams
    topology: Topology
    drift: object = Perfect()
    start_delays: tuple[int, ...] = ()
    name: str = "scenario"
    mode: str = "simulate"
    horizon: int = 100
    depth: Optional[int] = None
    depth_frames: int = 3
    delivery: str = "end-instant"
    monitors: tuple[str, ...] = ("inv1", "inv2")
    expect: Optional[str] = None

    def explore_depth(self) -> int:
        return self.depth if self.depth is not None else frames_to_depth(self.params, self.depth_frames)

    def simulate(self, horizon: Optional[int] = None, **kwargs) -> RunResult:
        return run_simulation(
            self.params, self.topology, self.drift,
            horizon=self.horizon if horizon is None else horizon,
            monitors=self.monitors, delivery=self.delivery,
            start_delays=self.start_delays or None, **kwargs,
        )

    def explorer(self, **kwargs) -> Explorer:
        return Explorer(self.params, self.topology, delivery=self.delivery, monitors=self.monitors,
                        start_delays=self.start_delays or None, **kwargs)

    def explore(self, depth: Optional[int] = None, **kwargs) -> ExploreResult:
        return self.explorer(**kwargs).explore(self.explore_depth() if depth is None else depth)


# -- parsing -----------------------------------------------------------------

_EDGE = re.compile(r"^(\d+)-(\d+)$")


def _ints(text: str, line: int, key: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise ScenarioError(f"expected integers, got {text!r}", line, key) from None


def _int(text: str, line: int, key: str) -> int:
    vals = _ints(text, line, key)
    if len(vals) != 1:
        raise ScenarioError(f"expected one integer, got {text!r}", line, key)
    return vals[0]


def _per_node(text: str, n: int, line: int, key: str) -> tuple[int, ...]:
    vals = _ints(text, line, key)
    if len(vals) == 1:
        return tuple(vals * n)
    if len(vals) != n:
        raise ScenarioError(f"need 1 or {n} values, got {len(vals)}", line, key)
    return tuple(vals)


def _choice(text: str, options, line: int, key: str) -> str:
    if text not in options:
        raise ScenarioError(f"{text!r} is not one of {', '.join(options)}", line, key)
    return text


def _read(text: str) -> dict[str, dict[str, tuple[str, int]]]:
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("[") and body.endswith("]"):
            current = body[1:-1].strip()
            if current not in KEYS:
                raise ScenarioError(f"unknown section [{current}]", lineno)
            if current in sections:
                raise ScenarioError(f"duplicate section [{current}]", lineno)
            sections[current] = {}
            continue
        if "=" not in body:
            raise ScenarioError(f"expected 'key = value', got {body!r}", lineno)
        key, value = (x.strip() for x in body.split("=", 1))
        if current is None:
            raise ScenarioError("key outside of any section", lineno, key)
        if key not in KEYS[current]:
            raise ScenarioError(f"unknown key in [{current}]", lineno, key)
        if key in sections[current]:
            raise ScenarioError("duplicate key", lineno, key)
        sections[current][key] = (value, lineno)
    return sections


def load_scenario(text: str) -> Scenario:
    sec = _read(text)
    for name in ("nodes", "topology"):
        if name not in sec:
            raise ScenarioError(f"missing section [{name}]")

    def get(section: str, key: str, default: Optional[str] = None) -> tuple[Optional[str], Optional[int]]:
        value, line = sec.get(section, {}).get(key, (default, None))
        return value, line

    def need(section: str, key: str) -> tuple[str, Optional[int]]:
        value, line = get(section, key)
        if value is None:
            raise ScenarioError(f"missing in [{section}]", None, key)
        return value, line

    v, ln = need("nodes", "count")
    n = _int(v, ln, "count")
    if n < 1:
        raise ScenarioError("need at least one node", ln, "count")
    v, ln = need("nodes", "tx_slot")
    tx = _per_node(v, n, ln, "tx_slot")
    nums = {}
    for key, default in (("slots", "10"), ("active", None), ("ticks_per_slot", "29"),
                         ("guard", None), ("switch", "0")):
        v, ln = get("nodes", key, default)
        if v is None:
            raise ScenarioError("missing in [nodes]", None, key)
        nums[key] = _int(v, ln, key)
    v, ln_min = get("clocks", "min", "1")
    lo = _per_node(v, n, ln_min, "min")
    v, ln_max = get("clocks", "max", None)
    hi = lo if v is None else _per_node(v, n, ln_max, "max")

    params = ProtocolParams(n, nums["slots"], nums["active"], tx, nums["ticks_per_slot"],
                            nums["guard"], nums["switch"], lo, hi)
    issues = validate_params(params) + check_model_limits(params)
    if issues:
        issue = issues[0]
        section, key = _PARAM_KEY[issue.param.split("[")[0]]
        raise ScenarioError(f"constraint {issue.constraint} fails", get(section, key)[1], key)

    kind, ln = need("topology", "kind")
    _choice(kind, ("clique", "line", "edges"), ln, "kind")
    ev, eln = get("topology", "edges")
    if kind == "edges":
        if ev is None:
            raise ScenarioError("kind = edges needs an edge list", ln, "edges")
        edges = []
        for tok in ev.replace(",", " ").split():
            m = _EDGE.match(tok)
            if not m:
                raise ScenarioError(f"malformed edge {tok!r}, expected i-j", eln, "edges")
            edges.append((int(m.group(1)), int(m.group(2))))
        try:
            topology = Topology.from_edges(n, edges)
        except ValueError as exc:
            raise ScenarioError(str(exc), eln, "edges") from None
    else:
        if ev is not None:
            raise ScenarioError(f"edges given with kind = {kind}", eln, "edges")
        topology = Topology.clique(n) if kind == "clique" else Topology.line(n)
    clash = validate_slot_allocation(params, topology)
    if clash:
        raise ScenarioError(f"neighbors {clash[0][0]} and {clash[0][1]} share a TX slot",
                            get("nodes", "tx_slot")[1], "tx_slot")

    policy, ln = get("clocks", "policy", "perfect")
    _choice(policy, ("perfect", "fixed", "jitter"), ln, "policy")
    cyc, cln = get("clocks", "cycles")
    seed, sln = get("clocks", "seed")
    if policy != "fixed" and cyc is not None:
        raise ScenarioError("cycles only apply to policy = fixed", cln, "cycles")
    if policy != "jitter" and seed is not None:
        raise ScenarioError("seed only applies to policy = jitter", sln, "seed")
    if policy == "perfect":
        if max(lo) > min(hi):
            raise ScenarioError("perfect clocks need a common period inside every [min, max]", ln, "policy")
        drift: object = Perfect()
    elif policy == "fixed":
        if cyc is None:
            raise ScenarioError("policy = fixed needs cycles", ln, "cycles")
        cycles = _per_node(cyc, n, cln, "cycles")
        for i, c in enumerate(cycles):
            if not lo[i] <= c <= hi[i]:
                raise ScenarioError(f"cycle {c} of node {i} outside [{lo[i]}, {hi[i]}]", cln, "cycles")
        drift = FixedRate(cycles)
    else:
        drift = SeededJitter(_int(seed, sln, "seed") if seed is not None else 0)

    v, ln = get("clocks", "phase")
    delays = () if v is None else _per_node(v, n, ln, "phase")
    if any(d < 0 for d in delays):
        raise ScenarioError("start delays must be non-negative", ln, "phase")

    run = {}
    for key in ("horizon", "depth", "depth_frames"):
        v, ln = get("run", key)
        if v is not None:
            run[key] = _int(v, ln, key)
            if run[key] < 0:
                raise ScenarioError("must be non-negative", ln, key)
    v, ln = get("run", "mode", "simulate")
    mode = _choice(v, MODES, ln, "mode")
    v, ln = get("run", "delivery", "end-instant")
    delivery = _choice(v, DELIVERY_POLICIES, ln, "delivery")
    v, ln = get("run", "monitors", "inv1 inv2")
    monitors = tuple(v.replace(",", " ").split())
    for m in monitors:
        _choice(m, tuple(MONITORS), ln, "monitors")
    v, ln = get("run", "expect")
    expect = None if v is None else _choice(v, EXPECTATIONS, ln, "expect")
    name = get("run", "name", "scenario")[0]
    return Scenario(params, topology, drift, delays, name, mode, monitors=monitors,
                    delivery=delivery, expect=expect, **run)


def dump_scenario(sc: Scenario) -> str:
    p = sc.params

    def ints(xs) -> str:
        return " ".join(str(x) for x in xs)

    lines = [
        "[nodes]",
        f"count = {p.n_nodes}",
        f"tx_slot = {ints(p.tx_slot)}",
        f"slots = {p.slots_per_frame}",
        f"active = {p.active_slots}",
        f"ticks_per_slot = {p.ticks_per_slot}",
        f"guard = {p.guard}",
        f"switch = {p.switch_time}",
        "",
        "[topology]",
        "kind = edges",
        f"edges = {' '.join(f'{a}-{b}' for a, b in sc.topology.sorted_edges())}",
        "",
        "[clocks]",
        f"min = {ints(p.tick_min)}",
        f"max = {ints(p.tick_max)}",
    ]
    if isinstance(sc.drift, FixedRate):
        lines += ["policy = fixed", f"cycles = {ints(sc.drift.cycles)}"]
    elif isinstance(sc.drift, SeededJitter):
        lines += ["policy = jitter", f"seed = {sc.drift.seed}"]
    else:
        lines.append("policy = perfect")
    if sc.start_delays:
        lines.append(f"phase = {ints(sc.start_delays)}")
    lines += [
        "",
        "[run]",
        f"name = {sc.name}",
        f"mode = {sc.mode}",
        f"horizon = {sc.horizon}",
        f"depth_frames = {sc.depth_frames}",
    ]
    if sc.depth is not None:
        lines.append(f"depth = {sc.depth}")
    lines += [f"delivery = {sc.delivery}", f"monitors = {' '.join(sc.monitors)}"]
    if sc.expect is not None:
        lines.append(f"expect = {sc.expect}")
    return "\n".join(lines) + "\n"


def read_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        try:
            return load_scenario(fh.read())
        except ScenarioError as exc:
            raise ScenarioError(f"{path}: {exc}") from None

"""Command-line front end.

Exit status: 0 when the run is OK (or a sweep matches every expectation),
1 on a violation or an expectation mismatch, 2 on usage or configuration
errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .analysis import SWEEP_HEADER, effective_sync_graph, find_disjoint_communities, run_sweep
from .core import validate_slot_allocation
from .explorer import frames_to_depth
from .scenario import ScenarioError, read_scenario

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2
SCENARIO_SUFFIX = ".scn"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits with 2 already; keep it explicit
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write(path: Optional[str], text: str) -> None:
    if path is None:
        return
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_simulate(args) -> int:
    sc = read_scenario(args.scenario)
    res = sc.simulate(args.horizon, skip_quiet=not args.reference)
    print(f"{sc.name}: {res.summary()}")
    for line in res.diagnostics:
        print(f"diagnostic: {line}")
    _write(args.trace, res.trace.text())
    if args.plot:
        n = sc.params.n_nodes
        rows = [",".join(["time", *(f"pos{i}" for i in range(n)), "spread"])]
        rows += [",".join(str(x) for x in row) for row in res.samples]
        _write(args.plot, "\n".join(rows) + "\n")
    return EXIT_OK if res.ok else EXIT_VIOLATION


def cmd_explore(args) -> int:
    sc = read_scenario(args.scenario)
    ex = sc.explorer(max_states=args.max_states)
    if args.depth is not None:
        depth = args.depth
    elif args.frames is not None:
        depth = frames_to_depth(sc.params, args.frames)
    else:
        depth = sc.explore_depth()
    res = ex.explore(depth)
    print(f"{sc.name}: {res.summary()}")
    if res.path is not None:
        if args.trace:
            _write(args.trace, res.path.text())
        else:
            sys.stdout.write(res.path.text())
    # an inconclusive search (state budget hit) is not a pass
    return EXIT_OK if res.ok else EXIT_VIOLATION


def cmd_analyze(args) -> int:
    sc = read_scenario(args.scenario)
    p, t = sc.params, sc.topology
    print(f"scenario: {sc.name}")
    print(f"nodes: {p.n_nodes}  edges: {' '.join(f'{a}-{b}' for a, b in t.sorted_edges())}")
    print(f"slot conflicts: {validate_slot_allocation(p, t) or 'none'}")
    try:
        pair = find_disjoint_communities(t)
    except ValueError as exc:
        print(f"communities: skipped ({exc})")
    else:
        if pair is None:
            print("communities: no disjoint pair")
        else:
            a, b = pair
            print(f"communities: {sorted(a)} {sorted(b)}")
    g = effective_sync_graph(p, t)
    print(f"sync edges: {' '.join(f'{j}->{i}' for j, i in sorted(g.edges)) or 'none'}")
    print(f"sync components: {' '.join(str(sorted(c)) for c in g.components)}")
    if g.partitioned:
        print("prediction: clocks can drift apart between components")
    return EXIT_OK


def cmd_sweep(args) -> int:
    root = Path(args.dir)
    if not root.is_dir():
        raise ScenarioError(f"{root} is not a directory")
    scenarios = [read_scenario(f) for f in sorted(root.glob(f"*{SCENARIO_SUFFIX}"))]
    rows = run_sweep(scenarios, workers=args.workers)
    print(SWEEP_HEADER)
    for row in rows:
        print(row.to_line())
    return EXIT_OK if all(r.match for r in rows) else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="gmac", description="Simulate and explore the gMAC TDMA protocol.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run the discrete-event engine")
    s.add_argument("--scenario", required=True)
    s.add_argument("--trace", help="write the transition trace here ('-' for stdout)")
    s.add_argument("--horizon", type=int, help="frames to run (default from the scenario)")
    s.add_argument("--plot", help="write per-frame positions and phase spread as CSV")
    s.add_argument("--reference", action="store_true", help="process every tick (slow)")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("explore", help="bounded exploration over all tick intervals")
    e.add_argument("--scenario", required=True)
    depth = e.add_mutually_exclusive_group()
    depth.add_argument("--depth", type=int, help="depth bound in global instants")
    depth.add_argument("--frames", type=int, help="depth bound in frames")
    e.add_argument("--trace", help="write the violating path here")
    e.add_argument("--max-states", type=int, default=2_000_000)
    e.set_defaults(func=cmd_explore)

    a = sub.add_parser("analyze", help="community and sync-graph report")
    a.add_argument("--scenario", required=True)
    a.set_defaults(func=cmd_analyze)

    w = sub.add_parser("sweep", help=f"run every *{SCENARIO_SUFFIX} file in a directory")
    w.add_argument("--dir", required=True)
    w.add_argument("--workers", type=int, default=1)
    w.set_defaults(func=cmd_sweep)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

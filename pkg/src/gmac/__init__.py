"""Deterministic discrete-event model of the gMAC TDMA protocol and its
Median clock synchronizer, with invariant monitors, a bounded explorer and
topology analysis."""

from .core import FramePosition, ProtocolParams, Topology, require_valid, validate_params, validate_slot_allocation
from .engine import Engine, FixedRate, Perfect, RunResult, SeededJitter, Trace, run_simulation
from .explorer import Explorer, ExploreResult, explore, explore_frames, frames_to_depth
from .monitors import Violation, check_inv1, check_inv2
from .protocol import NodeState, Radio, compute_phase_correction, step
from .scenario import Scenario, ScenarioError, dump_scenario, load_scenario

__all__ = [
    "Engine", "ExploreResult", "Explorer", "FixedRate", "FramePosition", "NodeState", "Perfect",
    "ProtocolParams", "Radio", "RunResult", "Scenario", "ScenarioError", "SeededJitter",
    "Topology", "Trace", "Violation", "check_inv1", "check_inv2", "compute_phase_correction",
    "dump_scenario", "explore", "explore_frames", "frames_to_depth", "load_scenario",
    "require_valid", "run_simulation", "step", "validate_params", "validate_slot_allocation",
]

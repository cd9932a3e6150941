"""Step-by-step strategy demonstrations for the tutoring client.

A demo rolls a policy out on a seeded instance and rewrites the trace as an
ordered list of Click/Move steps, each tagged with the phase it belongs to
(goal-setting, path-planning, or the step right after a goal switch). The
curriculum argument truncates the episode for staged teaching: goal
selection alone, path planning alone, or the complete strategy.
"""

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..beliefs import GOAL_SETTING, INSPECT, SWITCH, TERM, rollout
from ..envs import EnvSpec, resolve_env, sample_instance
from ..policies import PolicyConfig, make_policy

CURRICULUM_STEPS = ("goal-only", "path-only", "full")
BUILTIN_POLICIES = ("greedy_hier", "greedy_flat")


@dataclass
class DemoStep:
    kind: str                  # "click" or "move"
    node: int
    revealed: float | None     # clicked value; None for moves
    annotation: str            # goal-setting | path-planning | switch


@dataclass
class DemoTrace:
    env: str
    seed: int
    curriculum: str
    steps: list[DemoStep]
    score: float               # rr of the full demonstrated episode
    path: tuple[int, ...]
    clicks: int
    switches: int
    committed_goals: list[int] = field(default_factory=list)

    def to_jsonable(self) -> dict:
        d = dataclasses.asdict(self)
        d["path"] = list(self.path)
        return d

    @classmethod
    def from_jsonable(cls, d: dict) -> "DemoTrace":
        steps = [DemoStep(**s) for s in d["steps"]]
        return cls(d["env"], d["seed"], d["curriculum"], steps, d["score"],
                   tuple(d["path"]), d["clicks"], d["switches"],
                   list(d["committed_goals"]))

    def to_json(self) -> str:
        return json.dumps(self.to_jsonable())


def resolve_policy(policy) -> PolicyConfig:
    """Accept a PolicyConfig, a builtin policy name, or a saved-config path."""
    if isinstance(policy, PolicyConfig):
        return policy
    if policy in BUILTIN_POLICIES:
        return PolicyConfig(policy)
    path = Path(str(policy))
    if path.exists():
        return PolicyConfig.load(path)
    raise ValueError(f"unknown policy {policy!r}: not a builtin "
                     f"{BUILTIN_POLICIES} and no such file")


def get_demo(env, policy, seed: int, step: str = "full") -> DemoTrace:
    """Roll out a policy on a seeded instance and package it for playback."""
    if step not in CURRICULUM_STEPS:
        raise ValueError(f"step must be one of {CURRICULUM_STEPS}, "
                         f"got {step!r}")
    spec = resolve_env(env) if isinstance(env, str) else env
    config = resolve_policy(policy)
    pol = make_policy(config, spec)  # raises on policy/env mismatch
    if step != "full" and not pol.hierarchical:
        raise ValueError(f"{step} demos need a hierarchical policy; "
                         f"{config.kind} plans in one phase")
    truth = sample_instance(spec, seed)
    trace = rollout(pol, spec, truth, hierarchical=pol.hierarchical)

    steps: list[DemoStep] = []
    pending_switch = False
    first_low_index = None
    first_commit_end = None
    for comp in trace.computations:
        if comp["kind"] == SWITCH:
            pending_switch = True
            continue
        if comp["kind"] == TERM:
            if comp["phase"] == GOAL_SETTING:
                if first_commit_end is None:
                    first_commit_end = len(steps)
            continue
        if comp["kind"] == INSPECT:
            if comp["phase"] == GOAL_SETTING:
                annotation = "goal-setting"
            else:
                annotation = "path-planning"
                if first_low_index is None:
                    first_low_index = len(steps)
            if pending_switch:
                annotation = "switch"
                pending_switch = False
            steps.append(DemoStep("click", comp["node"],
                                  comp["revealed"], annotation))
    committed = _committed_goals(trace)
    for node in trace.path:
        annotation = "switch" if pending_switch else "path-planning"
        pending_switch = False
        steps.append(DemoStep("move", node, None, annotation))

    if step == "goal-only":
        steps = steps[:first_commit_end or 0]
        committed = committed[:1]
    elif step == "path-only":
        cut = first_low_index
        if cut is None:  # no low-level clicks: just the moves
            cut = len(steps) - len(trace.path)
        steps = steps[cut:]

    return DemoTrace(spec.name, seed, step, steps, trace.rr, trace.path,
                     trace.clicks, trace.switches, committed)


def _committed_goals(trace) -> list[int]:
    """Goal chosen at each goal-setting termination, read off the trace."""
    out = []
    comps = trace.computations
    for i, comp in enumerate(comps):
        if comp["kind"] != TERM or comp["phase"] != GOAL_SETTING:
            continue
        for later in comps[i + 1:]:
            if later["goal"] is not None:
                out.append(later["goal"])
                break
        else:
            out.append(trace.path[-1])
    return out


def replay_demo(demo: DemoTrace, spec: EnvSpec, truth=None) -> float:
    """Re-derive the episode score from the steps; full demos must match.

    Verifies every click against the instance and rebuilds rr as route
    return minus click fees. Only meaningful for curriculum step "full",
    where the steps cover the whole episode.
    """
    if truth is None:
        truth = sample_instance(spec, demo.seed)
    clicks = 0
    for s in demo.steps:
        if s.kind == "click":
            if truth.values[s.node] != s.revealed:
                raise ValueError(f"step for node {s.node} shows "
                                 f"{s.revealed}, instance has "
                                 f"{truth.values[s.node]}")
            clicks += 1
    path = tuple(s.node for s in demo.steps if s.kind == "move")
    return truth.path_return(path) - spec.click_cost * clicks

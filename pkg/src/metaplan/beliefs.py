"""Belief states over node rewards, legal computations, and episode rollouts.

A belief tracks which nodes have been inspected and the values revealed.
Planning proceeds in phases: ``flat`` (inspect anything), or the two-level
pair ``goal_setting`` (inspect goal nodes, then commit to the best-looking
goal) and ``goal_achievement`` (inspect nodes inside the committed goal's
subgraph, with the final route restricted to that goal). Rollouts drive a
computation-selection policy until it terminates, then score the chosen path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .envs import EnvSpec, RewardAssignment, enumerate_paths, goal_sets

FLAT = "flat"
GOAL_SETTING = "goal_setting"
GOAL_ACHIEVEMENT = "goal_achievement"

INSPECT = "inspect"
TERM = "term"
SWITCH = "switch"  # hierarchical policies only: hand control back to goal setting


@dataclass(frozen=True)
class Computation:
    kind: str                # inspect | term | switch
    node: int | None = None  # inspected node for kind == inspect

    def __repr__(self):
        return f"inspect({self.node})" if self.kind == INSPECT else self.kind


TERMINATE = Computation(TERM)
SWITCH_GOAL = Computation(SWITCH)


def inspect(node: int) -> Computation:
    return Computation(INSPECT, node)


# ---------------------------------------------------------------------------
# Per-spec path tables (computed once, stashed on the spec object)
# ---------------------------------------------------------------------------

class PathTable:
    """Path incidence matrix and prior means for fast expected-return maths."""

    def __init__(self, spec: EnvSpec):
        self.paths = enumerate_paths(spec)
        self.matrix = np.zeros((len(self.paths), spec.node_count))
        for i, p in enumerate(self.paths):
            for n in p:
                self.matrix[i, n] = 1.0
        self.prior_means = np.zeros(spec.node_count)
        for n in range(spec.node_count):
            if n != spec.root:
                self.prior_means[n] = spec.prior_mean(n)
        self.rows_to_goal = {g: np.array([i for i, p in enumerate(self.paths)
                                          if p[-1] == g])
                             for g in spec.goals}
        self.rows_not_to_goal = {g: np.array([i for i, p in enumerate(self.paths)
                                              if p[-1] != g])
                                 for g in spec.goals}
        self.members = {gs.goal: gs.members for gs in goal_sets(spec)}
        # best prior-mean route cost to each goal, goal value excluded
        self.prior_route_cost = {}
        for g in spec.goals:
            sums = [float(sum(self.prior_means[n] for n in p[:-1]))
                    for p in self.paths if p[-1] == g]
            self.prior_route_cost[g] = max(sums)


def path_table(spec: EnvSpec) -> PathTable:
    table = getattr(spec, "_path_table", None)
    if table is None:
        table = PathTable(spec)
        spec._path_table = table
    return table


# ---------------------------------------------------------------------------
# Belief state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BeliefState:
    observed: tuple[tuple[int, float], ...] = ()  # sorted by node id
    clicks_made: int = 0
    phase: str = FLAT
    goal: int | None = None  # committed goal during goal_achievement
    commits: tuple[int, ...] = ()  # goals committed so far this episode

    @cached_property
    def observed_map(self) -> dict[int, float]:
        return dict(self.observed)

    def is_observed(self, node: int) -> bool:
        return node in self.observed_map

    def value_of(self, node: int) -> float | None:
        return self.observed_map.get(node)

    def key(self) -> tuple:
        return (self.phase, self.goal, self.observed)


def init_belief(spec: EnvSpec, phase: str = FLAT) -> BeliefState:
    if phase not in (FLAT, GOAL_SETTING):
        raise ValueError(f"initial phase must be flat or goal_setting, got {phase}")
    return BeliefState(phase=phase)


def believed_means(b: BeliefState, spec: EnvSpec) -> np.ndarray:
    """Per-node expected value under the belief (root entry stays 0)."""
    means = path_table(spec).prior_means.copy()
    for n, v in b.observed:
        means[n] = v
    return means


def inspectable(spec: EnvSpec, node: int) -> bool:
    """Fixed-value nodes reveal nothing, so inspecting them is not offered."""
    return len(spec.priors[node]) > 1


def available_computations(b: BeliefState, spec: EnvSpec) -> list[Computation]:
    table = path_table(spec)
    if b.phase == FLAT:
        pool = (n for n in range(spec.node_count) if n != spec.root)
    elif b.phase == GOAL_SETTING:
        pool = iter(spec.goals)
    elif b.phase == GOAL_ACHIEVEMENT:
        pool = iter(table.members[b.goal])
    else:
        raise ValueError(f"unknown phase {b.phase!r}")
    out = [inspect(n) for n in pool
           if not b.is_observed(n) and inspectable(spec, n)]
    out.append(TERMINATE)
    return out


def observe(b: BeliefState, c: Computation, truth: RewardAssignment,
            spec: EnvSpec | None = None) -> BeliefState:
    if c.kind != INSPECT:
        raise ValueError(f"observe takes an inspection, got {c!r}")
    if b.is_observed(c.node):
        raise ValueError(f"node {c.node} already observed")
    if spec is not None and c not in available_computations(b, spec):
        raise ValueError(f"{c!r} is not legal in phase {b.phase}")
    entry = (c.node, float(truth.values[c.node]))
    merged = tuple(sorted(b.observed + (entry,)))
    return BeliefState(merged, b.clicks_made + 1, b.phase, b.goal, b.commits)


def termination_value(b: BeliefState, spec: EnvSpec, level: str,
                      goal: int | None = None) -> float:
    """Expected return of acting now: best path (or best goal) by belief."""
    table = path_table(spec)
    means = believed_means(b, spec)
    if level == "high":
        return float(max(means[g] for g in spec.goals))
    sums = table.matrix @ means
    if level == "low":
        g = goal if goal is not None else b.goal
        if g is None:
            raise ValueError("low-level termination value needs a goal")
        return float(sums[table.rows_to_goal[g]].max())
    if level == "flat":
        return float(sums.max())
    raise ValueError(f"unknown level {level!r}")


def best_alternative(b: BeliefState, spec: EnvSpec, committed: int) -> float:
    """Believed value of the best route to any goal other than ``committed``.

    For a route never inspected this is the goal's believed value plus the
    prior-mean cost of reaching it; anything learned about a route (say,
    before an earlier goal switch) stays priced in, which keeps the
    comparison honest when a previously abandoned goal comes up as the
    alternative.
    """
    table = path_table(spec)
    rows = table.rows_not_to_goal[committed]
    if rows.size == 0:
        return float("-inf")
    sums = table.matrix[rows] @ believed_means(b, spec)
    return float(sums.max())


def best_path(b: BeliefState, spec: EnvSpec,
              restrict_goal: int | None = None) -> tuple[int, ...]:
    """Highest-expected-return path; ties go to the lexicographically first."""
    table = path_table(spec)
    sums = table.matrix @ believed_means(b, spec)
    if restrict_goal is not None:
        rows = table.rows_to_goal[restrict_goal]
        return table.paths[rows[int(np.argmax(sums[rows]))]]
    return table.paths[int(np.argmax(sums))]


def believed_goal_value(b: BeliefState, spec: EnvSpec, g: int) -> float:
    v = b.value_of(g)
    return float(v) if v is not None else spec.prior_mean(g)


def commit_goal(b: BeliefState, spec: EnvSpec) -> int:
    """Goal-setting termination rule: commit to the goal whose believed best
    route pays the most (goal value plus route under the belief); lowest id
    wins ties. Judging routes rather than bare goal values is what lets a
    re-commit after a switch steer away from a goal whose access path has
    revealed a catastrophe.
    """
    return max(sorted(spec.goals),
               key=lambda g: (termination_value(b, spec, "low", goal=g), -g))


def rr_score(path_return: float, clicks: int, click_cost: float) -> float:
    return float(path_return) - click_cost * clicks


# ---------------------------------------------------------------------------
# Rollouts
# ---------------------------------------------------------------------------

@dataclass
class Trace:
    computations: list[dict] = field(default_factory=list)
    path: tuple[int, ...] = ()
    path_return: float = 0.0
    clicks: int = 0
    rr: float = 0.0
    switches: int = 0

    def to_json(self) -> str:
        d = dict(computations=self.computations, path=list(self.path),
                 path_return=self.path_return, clicks=self.clicks,
                 rr=self.rr, switches=self.switches)
        return json.dumps(d)

    @classmethod
    def from_json(cls, s: str) -> "Trace":
        d = json.loads(s)
        return cls(d["computations"], tuple(d["path"]), d["path_return"],
                   d["clicks"], d["rr"], d["switches"])


def rollout(policy, spec: EnvSpec, truth: RewardAssignment,
            hierarchical: bool = False) -> Trace:
    """Drive a policy to termination and score the chosen route.

    ``policy(belief)`` returns the next Computation. Terminating in
    goal_setting commits to the best-believed goal and drops to
    goal_achievement; terminating in flat or goal_achievement ends the
    episode. A ``switch`` computation re-enters goal_setting keeping all
    observations. The final route is restricted to the committed goal when
    the episode ends in goal_achievement.
    """
    b = init_belief(spec, GOAL_SETTING if hierarchical else FLAT)
    trace = Trace()
    legal_budget = 4 * spec.node_count + 8 * len(spec.goals) + 16
    for _ in range(legal_budget):
        c = policy(b)
        if c.kind == INSPECT:
            if c not in available_computations(b, spec):
                raise RuntimeError(
                    f"policy chose illegal computation {c!r} in phase "
                    f"{b.phase} (observed={sorted(b.observed_map)})")
            b = observe(b, c, truth)
            trace.computations.append(dict(
                kind=INSPECT, node=c.node,
                revealed=float(truth.values[c.node]), phase=b.phase,
                goal=b.goal))
            continue
        if c.kind == SWITCH:
            if b.phase != GOAL_ACHIEVEMENT:
                raise RuntimeError("switch is only legal in goal_achievement")
            trace.switches += 1
            trace.computations.append(dict(
                kind=SWITCH, node=None, revealed=None, phase=GOAL_SETTING,
                goal=b.goal))
            b = BeliefState(b.observed, b.clicks_made, GOAL_SETTING, None,
                            b.commits)
            continue
        if c.kind == TERM:
            trace.computations.append(dict(
                kind=TERM, node=None, revealed=None, phase=b.phase,
                goal=b.goal))
            if b.phase == GOAL_SETTING:
                g = commit_goal(b, spec)
                b = BeliefState(b.observed, b.clicks_made,
                                GOAL_ACHIEVEMENT, g, b.commits + (g,))
                continue
            restrict = b.goal if b.phase == GOAL_ACHIEVEMENT else None
            trace.path = best_path(b, spec, restrict_goal=restrict)
            trace.clicks = b.clicks_made
            trace.path_return = truth.path_return(trace.path)
            trace.rr = rr_score(trace.path_return, trace.clicks,
                                spec.click_cost)
            return trace
        raise RuntimeError(f"policy returned unknown computation {c!r}")
    raise RuntimeError("rollout exceeded its computation budget; "
                       "the policy does not terminate")

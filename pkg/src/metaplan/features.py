"""Value-of-computation features and their weighted combination.

Three information-value features price a candidate inspection:

* ``voi1`` — expected improvement of the best route if the agent inspects
  this one node and then acts immediately.
* ``vpi`` — expected improvement if every remaining node were revealed at
  once (computation independent: an upper bound for any inspection).
* ``vpi_sub`` — expected improvement if every node sharing a path with the
  inspected node were revealed; everything else stays at its believed mean.

A linear mix of the three minus a cost term scores each computation. The
cost term is either the plain click fee or a weighted count of the nodes
each feature pretends to reveal ("weighted" mode).

At the low level (planning within a committed goal) the features price
termination as the better of the committed goal's best route and the best
believed route to any *other* goal. That outside option is what makes it
worth inspecting a node that every in-goal route passes through: such a node
cannot change the routing inside the goal, but learning it is catastrophic
re-prices the whole goal against the alternative, which is what lets the
goal-switching metacontroller react. The alternative enters as a scalar at
current believed values; information hypothesised by a feature never updates
it (goal subgraphs are disjoint wherever the two-level scheme is allowed,
so in-goal revelations cannot touch other goals' routes anyway).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beliefs import (
    BeliefState,
    Computation,
    INSPECT,
    believed_means,
    inspectable,
    path_table,
)
from .contraction import exec_contraction, plan_contraction, recursive_max_path_dist
from .dists import SUPPORT_CAP, Dist, max_dists, point
from .envs import EnvSpec

FLAT_LEVEL = "flat"
HIGH_LEVEL = "high"
LOW_LEVEL = "low"

_CACHE_LIMIT = 500_000  # entries across all memo tables before a reset


@dataclass(frozen=True)
class Weights:
    """Feature mix on the probability simplex plus a cost multiplier."""

    level: str                # flat | high | low
    mix: tuple[float, ...]    # (w_voi1, w_vpi, w_vpi_sub); high omits vpi_sub
    scale: float              # cost multiplier, within [1, scale_cap(...)]

    def __post_init__(self):
        want = 2 if self.level == HIGH_LEVEL else 3
        if len(self.mix) != want:
            raise ValueError(f"{self.level} weights need {want} mix entries")
        if any(w < -1e-9 for w in self.mix):
            raise ValueError("mix weights must be nonnegative")
        if abs(sum(self.mix) - 1.0) > 1e-9:
            raise ValueError("mix weights must sum to 1")
        if self.scale < 1.0 - 1e-9:
            raise ValueError("cost multiplier must be >= 1")

    def to_jsonable(self) -> dict:
        return {"level": self.level, "mix": list(self.mix),
                "scale": self.scale}

    @classmethod
    def from_jsonable(cls, d: dict) -> "Weights":
        return cls(d["level"], tuple(d["mix"]), d["scale"])


def scale_cap(spec: EnvSpec, level: str, goal: int | None = None) -> float:
    """Upper bound for the cost multiplier: the computation count at its level."""
    table = path_table(spec)
    if level == HIGH_LEVEL:
        return float(len(spec.goals))
    if level == LOW_LEVEL:
        return float(len(table.members[goal]))
    count = sum(1 for n in range(spec.node_count)
                if n != spec.root and inspectable(spec, n))
    return float(count + 1)


class FeatureEngine:
    """Feature evaluation for one environment, with memoization.

    Contraction plans are built per graph (full and per goal) and reused for
    every belief; a belief only changes which distributions feed the plan.
    ``use_contraction=False`` swaps in the pre-reduction recursive evaluator,
    kept for timing comparisons.
    """

    def __init__(self, spec: EnvSpec, support_cap: int = SUPPORT_CAP,
                 use_contraction: bool = True):
        self.spec = spec
        self.table = path_table(spec)
        self.support_cap = support_cap
        self.use_contraction = use_contraction
        self._plans: dict = {}
        self._scope_cache: dict = {}
        self._rows_cache: dict = {}
        self._memo: dict = {}
        self._points: dict[float, Dist] = {}
        self.counters = {"voc": 0, "voi1": 0, "vpi_exec": 0,
                         "vpi_sub_exec": 0}
        self._nonroot = tuple(n for n in range(spec.node_count)
                              if n != spec.root)

    # -- plumbing ----------------------------------------------------------

    def reset_counters(self):
        for k in self.counters:
            self.counters[k] = 0

    def _plan(self, goal: int | None):
        if goal not in self._plans:
            self._plans[goal] = plan_contraction(self.spec, goal=goal)
        return self._plans[goal]

    def _remember(self, key, value):
        if len(self._memo) > _CACHE_LIMIT:
            self._memo.clear()
        self._memo[key] = value
        return value

    def _mean_of_max(self, dists: dict[int, Dist], goal: int | None,
                     floor: float = -np.inf) -> float:
        if self.use_contraction:
            d = exec_contraction(self._plan(goal), dists,
                                 support_cap=self.support_cap)
        else:
            d = recursive_max_path_dist(self.spec, dists=dists, goal=goal)
        if len(d.support) == 1:
            v = float(d.support[0])
            return v if floor == -np.inf else max(v, floor)
        if floor == -np.inf:
            return d.mean()
        return float(np.maximum(d.support, floor) @ d.probs)

    def _point(self, v: float) -> Dist:
        got = self._points.get(v)
        if got is None:
            got = self._points[v] = point(v)
        return got

    def _belief_dist(self, b: BeliefState, n: int) -> Dist:
        v = b.value_of(n)
        return self._point(v) if v is not None else self.spec.priors[n]

    def _belief_value(self, b: BeliefState, n: int):
        """Observed value as a float, else the node's prior."""
        v = b.value_of(n)
        return float(v) if v is not None else self.spec.priors[n]

    def _term_value(self, b: BeliefState, level: str,
                    goal: int | None) -> float:
        """termination_value via the engine's cached believed path sums."""
        sums = self._sums(b)
        if level == LOW_LEVEL:
            return float(sums[self.table.rows_to_goal[goal]].max())
        return float(sums.max())

    def _relevant(self, restrict: int | None):
        """Nodes a (possibly goal-restricted) evaluation ranges over."""
        return (self.table.members[restrict] if restrict is not None
                else self._nonroot)

    def _split_rows(self, goal: int | None, n: int):
        """Path rows through / not through ``n`` (structure-only, cached)."""
        key = (goal, n)
        got = self._rows_cache.get(key)
        if got is None:
            rows = (self.table.rows_to_goal[goal] if goal is not None
                    else np.arange(len(self.table.paths)))
            on = self.table.matrix[rows, n] == 1.0
            got = self._rows_cache[key] = (rows[on], rows[~on])
        return got

    def scope(self, c: Computation, goal: int | None) -> frozenset[int]:
        """Nodes sharing some (goal-restricted) path with the inspected node."""
        key = (c.node, goal)
        got = self._scope_cache.get(key)
        if got is None:
            rows = (self.table.rows_to_goal[goal] if goal is not None
                    else np.arange(len(self.table.paths)))
            through = rows[self.table.matrix[rows, c.node] == 1.0]
            members = np.flatnonzero(self.table.matrix[through].any(axis=0))
            got = frozenset(int(n) for n in members)
            self._scope_cache[key] = got
        return got

    def _sums(self, b: BeliefState) -> np.ndarray:
        key = ("sums", b.observed)
        got = self._memo.get(key)
        if got is None:
            got = self._remember(key, self.table.matrix
                                 @ believed_means(b, self.spec))
        return got

    def outside_option(self, b: BeliefState, goal: int) -> float:
        """Believed value of the best route to any goal other than ``goal``."""
        rows = self.table.rows_not_to_goal[goal]
        if rows.size == 0:
            return -np.inf
        return float(self._sums(b)[rows].max())

    # -- the three information features -------------------------------------

    def voi1(self, c: Computation, b: BeliefState, level: str,
             goal: int | None = None) -> float:
        if c.kind != INSPECT:
            return 0.0
        self.counters["voi1"] += 1
        n = c.node
        d = self._belief_dist(b, n)
        if level == HIGH_LEVEL:
            mine = d.mean()
            others = [b.value_of(g) if b.is_observed(g)
                      else self.spec.prior_mean(g)
                      for g in self.spec.goals if g != n]
            best_other = max(others) if others else -np.inf
            base = max(mine, best_other)
            post = float(np.maximum(d.support, best_other) @ d.probs)
            return max(0.0, post - base)
        sums = self._sums(b)
        on_rows, off_rows = self._split_rows(
            goal if level == LOW_LEVEL else None, n)
        best_through = sums[on_rows].max() if on_rows.size else -np.inf
        best_avoid = sums[off_rows].max() if off_rows.size else -np.inf
        if level == LOW_LEVEL:
            best_avoid = max(best_avoid, self.outside_option(b, goal))
        base = max(best_through, best_avoid)
        shifted = best_through + d.support - d.mean()
        post = float(np.maximum(shifted, best_avoid) @ d.probs)
        return max(0.0, post - base)

    def vpi(self, b: BeliefState, level: str, goal: int | None = None) -> float:
        if level == HIGH_LEVEL:
            key = ("vpi_high", tuple(sorted(
                (g, b.value_of(g)) for g in self.spec.goals
                if b.is_observed(g))))
            got = self._memo.get(key)
            if got is None:
                self.counters["vpi_exec"] += 1
                acc = self._belief_dist(b, self.spec.goals[0])
                for g in self.spec.goals[1:]:
                    acc = max_dists(acc, self._belief_dist(b, g))
                base = max(self._belief_dist(b, g).mean()
                           for g in self.spec.goals)
                got = self._remember(key, max(0.0, acc.mean() - base))
            return got
        restrict = goal if level == LOW_LEVEL else None
        belief_key = ("vpikey", restrict, b.observed)
        key = self._memo.get(belief_key)
        if key is None:
            relevant = self._relevant(restrict)
            alt = (self.outside_option(b, goal)
                   if level == LOW_LEVEL else -np.inf)
            key = self._remember(belief_key, (
                "vpi", restrict, alt,
                tuple((n, b.value_of(n)) for n in relevant
                      if b.is_observed(n))))
        got = self._memo.get(key)
        if got is None:
            self.counters["vpi_exec"] += 1
            alt = key[2]
            dists = {n: self._belief_value(b, n)
                     for n in self._relevant(restrict)}
            full = self._mean_of_max(dists, restrict, floor=alt)
            base = max(self._term_value(b, level, goal), alt)
            got = self._remember(key, max(0.0, full - base))
        return got

    def vpi_sub(self, c: Computation, b: BeliefState, level: str,
                goal: int | None = None) -> float:
        if c.kind != INSPECT:
            return 0.0
        restrict = goal if level == LOW_LEVEL else None
        scope = self.scope(c, restrict)
        key = ("vpi_sub", restrict, scope, b.observed)
        got = self._memo.get(key)
        if got is None:
            self.counters["vpi_sub_exec"] += 1
            alt = (self.outside_option(b, goal)
                   if level == LOW_LEVEL else -np.inf)
            base_key = ("pinned", restrict, b.observed)
            pinned = self._memo.get(base_key)
            if pinned is None:
                means = believed_means(b, self.spec)
                pinned = {n: float(means[n])
                          for n in self._relevant(restrict)
                          if n != self.spec.root}
                self._remember(base_key, pinned)
            dists = dict(pinned)
            for n in scope:
                if n in dists and not b.is_observed(n):
                    dists[n] = self.spec.priors[n]
            full = self._mean_of_max(dists, restrict, floor=alt)
            base = max(self._term_value(b, level, goal), alt)
            got = self._remember(key, max(0.0, full - base))
        return got

    # -- cost features -------------------------------------------------------

    def _unobserved_inspectable(self, b: BeliefState, nodes) -> list[int]:
        return [n for n in nodes
                if not b.is_observed(n) and inspectable(self.spec, n)]

    def weighted_cost(self, c: Computation, b: BeliefState, w: Weights,
                      level: str, goal: int | None = None) -> float:
        """Per-feature count of the unobserved nodes that feature reveals."""
        lam = self.spec.click_cost
        restrict = goal if level == LOW_LEVEL else None
        unob_key = ("unob", restrict, b.observed)
        unob = self._memo.get(unob_key)
        if unob is None:
            unob = self._remember(unob_key, self._unobserved_inspectable(
                b, self._relevant(restrict)))
        scope = self.scope(c, restrict)
        n_voi1 = 1
        n_vpi = len(unob)
        n_sub = sum(1 for n in unob if n in scope)
        return lam * (w.mix[0] * n_voi1 + w.mix[1] * n_vpi + w.mix[2] * n_sub)

    # -- the scored mixture ---------------------------------------------------

    def voc_hat(self, c: Computation, b: BeliefState, w: Weights, level: str,
                goal: int | None = None, cost_mode: str = "plain") -> float:
        """Weighted VOC estimate; terminations score exactly 0."""
        if c.kind != INSPECT:
            return 0.0
        self.counters["voc"] += 1
        lam = self.spec.click_cost
        if level == HIGH_LEVEL:
            value = (w.mix[0] * self.voi1(c, b, HIGH_LEVEL)
                     + w.mix[1] * self.vpi(b, HIGH_LEVEL))
            return value - w.scale * lam
        value = (w.mix[0] * self.voi1(c, b, level, goal)
                 + w.mix[1] * self.vpi(b, level, goal)
                 + w.mix[2] * self.vpi_sub(c, b, level, goal))
        if cost_mode == "weighted":
            cost = self.weighted_cost(c, b, w, level, goal)
        elif cost_mode == "plain":
            cost = lam
        else:
            raise ValueError(f"unknown cost mode {cost_mode!r}")
        return value - w.scale * cost

    def feature_vector(self, c: Computation, b: BeliefState, level: str,
                       goal: int | None = None) -> dict:
        if c.kind != INSPECT:
            return {"voi1": 0.0, "vpi": 0.0, "vpi_sub": 0.0, "cost": 0.0}
        out = {"voi1": self.voi1(c, b, level, goal),
               "vpi": self.vpi(b, level, goal),
               "cost": self.spec.click_cost}
        if level != HIGH_LEVEL:
            out["vpi_sub"] = self.vpi_sub(c, b, level, goal)
        return out

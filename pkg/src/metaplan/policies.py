"""Computation-selection policies.

* flat BMPS — scores every inspectable node with the weighted VOC mixture.
* hierarchical BMPS — goal-setting phase prices goal inspections only, then a
  goal-achievement phase plans inside the committed goal's subgraph; an
  optional metacontroller hands control back to goal setting whenever the
  committed goal stops looking best ("switching").
* greedy myopic — inspect while some single inspection is worth its fee.
* random — uniform over whatever is currently legal.

Policies are pure functions of the belief (the random policy carries an rng),
so one policy instance can serve many rollouts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .beliefs import (
    GOAL_ACHIEVEMENT,
    GOAL_SETTING,
    INSPECT,
    SWITCH_GOAL,
    TERMINATE,
    BeliefState,
    available_computations,
    best_alternative,
    termination_value,
)
from .envs import EnvSpec
from .features import FLAT_LEVEL, HIGH_LEVEL, LOW_LEVEL, FeatureEngine, Weights

MAX_COMMITS_PER_GOAL = 2  # after that, the low level must finish the episode


@dataclass(frozen=True)
class PolicyConfig:
    kind: str  # flat_bmps | hier_bmps | greedy_flat | greedy_hier | random | search
    flat: Weights | None = None
    high: Weights | None = None
    low: Weights | None = None
    switching: bool = True
    flat_cost_mode: str = "plain"    # plain click fee vs per-feature counting
    low_cost_mode: str = "weighted"
    seed: int | None = None          # random policy stream
    search: dict | None = None       # {"kind": ..., "aspiration": ...}

    def to_jsonable(self) -> dict:
        d: dict = {"kind": self.kind, "switching": self.switching,
                   "flat_cost_mode": self.flat_cost_mode,
                   "low_cost_mode": self.low_cost_mode}
        for name in ("flat", "high", "low"):
            w = getattr(self, name)
            if w is not None:
                d[name] = w.to_jsonable()
        if self.seed is not None:
            d["seed"] = self.seed
        if self.search is not None:
            d["search"] = dict(self.search)
        return d

    @classmethod
    def from_jsonable(cls, d: dict) -> "PolicyConfig":
        kw = {k: d[k] for k in ("switching", "flat_cost_mode",
                                "low_cost_mode", "seed", "search") if k in d}
        for name in ("flat", "high", "low"):
            if name in d:
                kw[name] = Weights.from_jsonable(d[name])
        return cls(d["kind"], **kw)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_jsonable(), indent=2))

    @classmethod
    def load(cls, path) -> "PolicyConfig":
        return cls.from_jsonable(json.loads(Path(path).read_text()))


def greedy_weights(level: str) -> Weights:
    """Pure myopic scoring: full weight on voi1, unit cost multiplier."""
    mix = (1.0, 0.0) if level == HIGH_LEVEL else (1.0, 0.0, 0.0)
    return Weights(level, mix, 1.0)


def _argmax_inspection(cands, score) -> tuple:
    """Best inspection by score; ties keep the lowest node id (scan order)."""
    best_c, best_v = None, 0.0
    for c in cands:
        if c.kind != INSPECT:
            continue
        v = score(c)
        if best_c is None or v > best_v + 1e-12:
            best_c, best_v = c, v
    return best_c, best_v


def select_flat(b: BeliefState, spec: EnvSpec, w: Weights,
                engine: FeatureEngine, cost_mode: str = "plain"):
    cands = available_computations(b, spec)
    c, v = _argmax_inspection(
        cands, lambda c: engine.voc_hat(c, b, w, FLAT_LEVEL,
                                        cost_mode=cost_mode))
    return c if c is not None and v > 0.0 else TERMINATE


def wants_switch(b: BeliefState, spec: EnvSpec) -> bool:
    """True when the committed goal's route now looks strictly beaten."""
    g = b.goal
    if b.commits.count(g) >= MAX_COMMITS_PER_GOAL:
        return False
    committed_value = termination_value(b, spec, "low", goal=g)
    return committed_value < best_alternative(b, spec, g) - 1e-12


def select_hier(b: BeliefState, spec: EnvSpec, w_high: Weights,
                w_low: Weights, engine: FeatureEngine, switching: bool = True,
                low_cost_mode: str = "weighted"):
    if b.phase == GOAL_SETTING:
        cands = available_computations(b, spec)
        c, v = _argmax_inspection(
            cands, lambda c: engine.voc_hat(c, b, w_high, HIGH_LEVEL))
        return c if c is not None and v > 0.0 else TERMINATE
    if b.phase != GOAL_ACHIEVEMENT:
        raise ValueError(f"hierarchical policy got phase {b.phase!r}")
    if switching and wants_switch(b, spec):
        return SWITCH_GOAL
    cands = available_computations(b, spec)
    c, v = _argmax_inspection(
        cands, lambda c: engine.voc_hat(c, b, w_low, LOW_LEVEL, goal=b.goal,
                                        cost_mode=low_cost_mode))
    return c if c is not None and v > 0.0 else TERMINATE


@dataclass
class Policy:
    """A computation selector bound to one environment."""

    config: PolicyConfig
    spec: EnvSpec
    engine: FeatureEngine
    hierarchical: bool
    _rng: np.random.Generator | None = field(default=None, repr=False)
    _search_fn: object = field(default=None, repr=False)

    def __call__(self, b: BeliefState):
        cfg = self.config
        if cfg.kind == "flat_bmps":
            return select_flat(b, self.spec, cfg.flat, self.engine,
                               cost_mode=cfg.flat_cost_mode)
        if cfg.kind == "hier_bmps":
            return select_hier(b, self.spec, cfg.high, cfg.low, self.engine,
                               switching=cfg.switching,
                               low_cost_mode=cfg.low_cost_mode)
        if cfg.kind == "greedy_flat":
            return select_flat(b, self.spec, greedy_weights(FLAT_LEVEL),
                               self.engine)
        if cfg.kind == "greedy_hier":
            return select_hier(b, self.spec, greedy_weights(HIGH_LEVEL),
                               greedy_weights(LOW_LEVEL), self.engine,
                               switching=False, low_cost_mode="plain")
        if cfg.kind == "random":
            cands = available_computations(b, self.spec)
            return cands[int(self._rng.integers(len(cands)))]
        if cfg.kind == "search":
            return self._search_fn(b)
        raise ValueError(f"unknown policy kind {self.config.kind!r}")


def make_policy(config: PolicyConfig, spec: EnvSpec,
                engine: FeatureEngine | None = None) -> Policy:
    hierarchical = config.kind in ("hier_bmps", "greedy_hier")
    if hierarchical and not spec.hierarchical_compatible:
        raise ValueError(f"{spec.name} is not hierarchically decomposable")
    if config.kind == "hier_bmps" and (config.high is None or config.low is None):
        raise ValueError("hier_bmps needs high and low weights")
    if config.kind == "flat_bmps" and config.flat is None:
        raise ValueError("flat_bmps needs flat weights")
    if engine is None:
        engine = FeatureEngine(spec)
    pol = Policy(config, spec, engine, hierarchical)
    if config.kind == "random":
        pol._rng = np.random.default_rng(config.seed or 0)
    if config.kind == "search":
        from .search import search_selector
        pol._search_fn = search_selector(config.search["kind"],
                                         config.search["aspiration"], spec)
    return pol


def default_policy_set(flat_w: Weights, high_w: Weights, low_w: Weights,
                       low_cost_mode: str = "weighted") -> dict[str, PolicyConfig]:
    """The comparison battery used by the benchmark tables."""
    return {
        "flat_bmps": PolicyConfig("flat_bmps", flat=flat_w),
        "hier_bmps_switch": PolicyConfig(
            "hier_bmps", high=high_w, low=low_w, switching=True,
            low_cost_mode=low_cost_mode),
        "hier_bmps_noswitch": PolicyConfig(
            "hier_bmps", high=high_w, low=low_w, switching=False,
            low_cost_mode=low_cost_mode),
        "greedy_flat": PolicyConfig("greedy_flat"),
        "greedy_hier": PolicyConfig("greedy_hier"),
        "random": PolicyConfig("random", seed=0),
    }

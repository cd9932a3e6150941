"""Uninformed search baselines: fixed traversal orders with aspiration stops.

Each baseline inspects nodes in a traversal order determined only by the
graph (never by revealed values) and terminates as soon as some path's
expected return — observed values plus prior means for the rest — reaches its
aspiration threshold, or when everything is observed. The aspiration is the
only tuned quantity.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .beliefs import TERMINATE, inspect, inspectable, path_table, \
    termination_value
from .envs import EnvSpec, sample_instance

KINDS = ("DFS", "BFS", "Backward", "Bidirectional")


@dataclass(frozen=True)
class SearchConfig:
    kind: str
    aspiration: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")

    def to_jsonable(self) -> dict:
        return {"kind": self.kind, "aspiration": self.aspiration}

    @classmethod
    def from_jsonable(cls, d: dict) -> "SearchConfig":
        return cls(d["kind"], d["aspiration"])


# ---------------------------------------------------------------------------
# Traversal orders (graph-only, deterministic)
# ---------------------------------------------------------------------------

def forward_bfs_order(spec: EnvSpec) -> list[int]:
    order, seen = [], {spec.root}
    queue = deque([spec.root])
    while queue:
        n = queue.popleft()
        for c in spec.children[n]:
            if c not in seen:
                seen.add(c)
                order.append(c)
                queue.append(c)
    return order


def forward_dfs_order(spec: EnvSpec) -> list[int]:
    order, seen = [], set()

    def walk(n):
        for c in spec.children[n]:
            if c in seen:
                continue
            seen.add(c)
            order.append(c)
            walk(c)

    walk(spec.root)
    return order


def backward_order(spec: EnvSpec) -> list[int]:
    """Goals in id order, then their predecessors layer by layer."""
    order, seen = [], set()
    layer = sorted(spec.goals)
    while layer:
        fresh = [n for n in layer if n not in seen and n != spec.root]
        for n in fresh:
            seen.add(n)
            order.append(n)
        nxt = {p for n in fresh for p in spec.parents[n]
               if p not in seen and p != spec.root}
        layer = sorted(nxt)
    return order


def bidirectional_order(spec: EnvSpec) -> list[int]:
    """One forward (breadth-first) step, one backward step, repeat."""
    fwd, bwd = forward_bfs_order(spec), backward_order(spec)
    order, seen = [], set()
    i = j = 0
    take_forward = True
    while i < len(fwd) or j < len(bwd):
        src, k = (fwd, i) if take_forward else (bwd, j)
        while k < len(src) and src[k] in seen:
            k += 1
        if k < len(src):
            seen.add(src[k])
            order.append(src[k])
            k += 1
        if take_forward:
            i = k
        else:
            j = k
        take_forward = not take_forward
    return order


_ORDERS = {"DFS": forward_dfs_order, "BFS": forward_bfs_order,
           "Backward": backward_order, "Bidirectional": bidirectional_order}


def traversal_order(kind: str, spec: EnvSpec) -> list[int]:
    if kind not in _ORDERS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    return _ORDERS[kind](spec)


# ---------------------------------------------------------------------------
# The policy
# ---------------------------------------------------------------------------

def search_selector(kind: str, aspiration: float, spec: EnvSpec):
    """Computation selector: next node in traversal order, aspiration stop.

    The threshold is only consulted once at least one inspection has been
    made, so even aspiration = -inf buys a single look.
    """
    order = [n for n in traversal_order(kind, spec) if inspectable(spec, n)]

    def select(b):
        if b.clicks_made > 0 and \
                termination_value(b, spec, "flat") >= aspiration:
            return TERMINATE
        for n in order:
            if not b.is_observed(n):
                return inspect(n)
        return TERMINATE

    return select


def aspiration_bounds(spec: EnvSpec) -> tuple[float, float]:
    """Range of conceivable path returns, bracketing useful aspirations."""
    table = path_table(spec)
    lo = np.zeros(spec.node_count)
    hi = np.zeros(spec.node_count)
    for n in range(spec.node_count):
        if n == spec.root:
            continue
        lo[n] = min(spec.priors[n].support)
        hi[n] = max(spec.priors[n].support)
    return float((table.matrix @ lo).min()), float((table.matrix @ hi).max())


def tune_aspiration(kind: str, spec: EnvSpec, budget: int = 40, seed: int = 0,
                    episodes: int = 300) -> SearchConfig:
    """Pick the aspiration maximizing mean RR over sampled instances."""
    from .beliefs import rollout
    from .optimize import Constraint, OptimizeSpec, optimize

    if budget < 10:
        raise ValueError("tuning budget must be at least 10")
    lo, hi = aspiration_bounds(spec)
    instances = [sample_instance(spec, 900_000 + seed * 10_000 + k)
                 for k in range(episodes)]

    def objective(x):
        sel = search_selector(kind, float(x[0]), spec)
        return sum(rollout(sel, spec, inst).rr
                   for inst in instances) / len(instances)

    result = optimize(OptimizeSpec(Constraint(simplex=0, box=(lo, hi)),
                                   objective, iterations=budget, seed=seed))
    return SearchConfig(kind, float(result.best_weights[0]))

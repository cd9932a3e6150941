"""Graph contraction for distributions of the best root-to-goal path sum.

The reduction plan for a graph structure is computed once and then executed
against any assignment of node distributions. Three operations suffice:

* Add       — a parent with a single child whose child has a single parent
              merges by convolution.
* Maximise  — two nodes sharing one identical parent and one identical child
              merge by distribution-max.
* Split     — a node with several parents is duplicated per parent; the plan
              for the duplicated graph is executed once per support atom with
              the node pinned to that value, and the results recombine as a
              probability mixture. Only used when Add/Maximise are stuck.

A virtual sink (point mass 0) below all goals gives every node a common
child, and the root contributes a point mass 0.
"""

from __future__ import annotations

import hashlib
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .dists import (Dist, MERGE_TOL, SUPPORT_CAP, add_dists, make_dist,
                    max_dists, mix_dists, point)
from .envs import EnvSpec, enumerate_paths, goal_sets

OP_ADD = 0
OP_MAX = 1
OP_SPLIT = 2

MAX_SPLIT_DEPTH = 50
NAIVE_OUTCOME_CAP = 10_000_000


@dataclass(frozen=True)
class ContractionPlan:
    """Reduction recipe for one graph structure (optionally goal-restricted)."""

    steps: tuple          # nested (op, ...) tuples, see module docstring
    final: int            # node id holding the result after execution
    nodes: tuple[int, ...]  # graph nodes whose distributions exec expects
    root: int
    sink: int
    structure_hash: str
    split_count: int
    op_count: int


def _graph_for(spec: EnvSpec, goal: int | None):
    """Planning graph: members + root + virtual sink, edges induced."""
    if goal is None:
        members = sorted(set(range(spec.node_count)) - {spec.root})
        goals = set(spec.goals)
    else:
        gs = {g.goal: g for g in goal_sets(spec)}
        if goal not in gs:
            raise ValueError(f"{goal} is not a goal node")
        members = list(gs[goal].members)
        goals = {goal}
    sink = spec.node_count  # virtual id
    keep = set(members) | {spec.root}
    children: dict[int, set[int]] = {n: set() for n in keep}
    parents: dict[int, set[int]] = {n: set() for n in keep}
    children[sink], parents[sink] = set(), set()
    for a, b in spec.edges:
        if a in keep and b in keep:
            children[a].add(b)
            parents[b].add(a)
    for g in goals:
        children[g].add(sink)
        parents[sink].add(g)
    return children, parents, members, sink


def _plan(children, parents, sizes, alive, next_id, depth):
    """Recursive reduction; returns (steps, final_node, next_id, splits)."""
    if depth > MAX_SPLIT_DEPTH:
        raise RuntimeError("graph not reducible: split recursion too deep")
    steps: list[tuple] = []
    splits = 0
    progress = True
    while progress and len(alive) > 1:
        progress = False
        # Add: parent with single child, child with single parent
        for p in sorted(alive):
            if p not in alive:
                continue
            cs = children[p]
            if len(cs) != 1:
                continue
            c = next(iter(cs))
            if len(parents[c]) != 1:
                continue
            steps.append((OP_ADD, p, c, p))
            sizes[p] = sizes[p] * sizes[c]
            children[p] = set(children[c])
            for gc in children[c]:
                parents[gc].discard(c)
                parents[gc].add(p)
            alive.discard(c)
            children.pop(c, None)
            parents.pop(c, None)
            progress = True
        # Maximise: nodes grouped by their (single parent, single child).
        # Childless nodes (the terminal, or pinned copies of it) group by
        # parent alone: each carries the whole remaining-path value, so
        # siblings combine by dist-max just like parallel single-node arms.
        groups: dict[tuple[int, int], list[int]] = {}
        for n in sorted(alive):
            if len(parents[n]) == 1 and len(children[n]) <= 1:
                c = next(iter(children[n])) if children[n] else -1
                groups.setdefault((next(iter(parents[n])), c), []).append(n)
        for (p, c), group in sorted(groups.items()):
            if len(group) < 2:
                continue
            head = group[0]
            for other in group[1:]:
                steps.append((OP_MAX, head, other, head))
                sizes[head] = sizes[head] + sizes[other]
                alive.discard(other)
                children[p].discard(other)
                if c >= 0:
                    parents[c].discard(other)
                children.pop(other, None)
                parents.pop(other, None)
            progress = True
    if len(alive) == 1:
        return steps, next(iter(alive)), next_id, splits
    # Stuck: split the multi-parent node with the smallest support estimate.
    # A stuck graph always has one (a DAG where every node has <= 1 parent is
    # an out-tree, which the sweeps above always reduce).
    candidates = [n for n in sorted(alive) if len(parents[n]) > 1]
    if not candidates:
        raise RuntimeError("graph not reducible and no split candidate; "
                           "the environment validator should have caught this")
    x = min(candidates, key=lambda n: (sizes[n], n))
    copies = []
    for par in sorted(parents[x]):
        cid = next_id
        next_id += 1
        copies.append((cid, par))
        children[par].discard(x)
        children[par].add(cid)
        children[cid] = set(children[x])
        parents[cid] = {par}
        sizes[cid] = 1  # pinned to a point at execution time
        for c in children[x]:
            parents[c].add(cid)
    for c in children[x]:
        parents[c].discard(x)
    alive.discard(x)
    alive.update(cid for cid, _ in copies)
    children.pop(x, None)
    parents.pop(x, None)
    sub_steps, final, next_id, sub_splits = _plan(
        children, parents, sizes, alive, next_id, depth + 1)
    steps.append((OP_SPLIT, x, tuple(copies), tuple(sub_steps), final))
    return steps, final, next_id, splits + 1 + sub_splits


def plan_contraction(spec: EnvSpec, goal: int | None = None) -> ContractionPlan:
    """Build the reduction plan for spec's graph (or one goal's subgraph)."""
    children, parents, members, sink = _graph_for(spec, goal)
    sizes = {n: len(spec.priors[n]) for n in members}
    sizes[spec.root] = 1
    sizes[sink] = 1
    alive = set(members) | {spec.root, sink}
    edges_repr = sorted((a, b) for a, cs in children.items() for b in cs)
    h = hashlib.sha256(repr(edges_repr).encode()).hexdigest()
    steps, final, _, splits = _plan(dict(children), dict(parents), sizes,
                                    alive, sink + 1, 0)

    def count(ss) -> int:
        total = 0
        for st in ss:
            total += 1
            if st[0] == OP_SPLIT:
                total += count(st[3])
        return total

    return ContractionPlan(tuple(steps), final, tuple(members), spec.root,
                           sink, h, splits, count(steps))


def _run(steps, final, dists, cap):
    # Point masses travel as plain floats; real distributions as Dist.
    for st in steps:
        op = st[0]
        if op == OP_ADD:
            a, b = dists[st[1]], dists[st[2]]
            if isinstance(a, float):
                r = a + b if isinstance(b, float) else Dist(b.support + a,
                                                            b.probs)
            elif isinstance(b, float):
                r = Dist(a.support + b, a.probs)
            else:
                r = add_dists(a, b, cap)
            dists[st[3]] = r
        elif op == OP_MAX:
            a, b = dists[st[1]], dists[st[2]]
            if isinstance(a, float):
                r = max(a, b) if isinstance(b, float) else _max_point(a, b)
            elif isinstance(b, float):
                r = _max_point(b, a)
            else:
                r = max_dists(a, b, cap)
            dists[st[3]] = r
        else:  # OP_SPLIT: pin each copy to each atom, reduce, and mix
            _, x, copies, sub_steps, sub_final = st
            xd = dists[x]
            atoms = ([(xd, 1.0)] if isinstance(xd, float)
                     else zip(xd.support.tolist(), xd.probs.tolist()))
            parts = []
            weights = []
            for v, p in atoms:
                sub = dict(dists)
                for cid, _ in copies:
                    sub[cid] = v
                parts.append(_run(sub_steps, sub_final, sub, cap))
                weights.append(p)
            parts = [point(r) if isinstance(r, float) else r for r in parts]
            dists[sub_final] = mix_dists(parts, weights, cap)
    return dists[final]


def _max_point(c: float, d: Dist, cap: int = SUPPORT_CAP):
    """max(c, X) for X ~ d: mass at or below c collapses onto one atom."""
    sup = d.support
    edge = c + MERGE_TOL
    if edge >= sup[-1]:
        return c
    if len(sup) <= 64:
        sv = sup.tolist()
        idx = bisect_left(sv, edge)
        if idx == 0:
            return d
        pv = d.probs.tolist()
        return Dist(np.array([c] + sv[idx:]),
                    np.array([sum(pv[:idx])] + pv[idx:]))
    idx = int(np.searchsorted(sup, edge))
    if idx == 0:
        return d
    vals = np.concatenate(([c], sup[idx:]))
    probs = np.concatenate(([d.probs[:idx].sum()], d.probs[idx:]))
    return Dist(vals, probs)


def exec_contraction(plan: ContractionPlan, dists: dict[int, Dist],
                     support_cap: int = SUPPORT_CAP) -> Dist:
    """Execute a plan against one assignment of node distributions.

    ``dists`` must cover every node in ``plan.nodes``; the root and the
    virtual sink are supplied automatically as point masses at 0. Entries
    may be plain floats as shorthand for point masses.
    """
    state: dict[int, object] = {plan.root: 0.0, plan.sink: 0.0}
    for n in plan.nodes:
        d = dists[n]
        if isinstance(d, float):
            state[n] = d
        else:
            state[n] = float(d.support[0]) if len(d.support) == 1 else d
    out = _run(plan.steps, plan.final, state, support_cap)
    return point(out) if isinstance(out, float) else out


# ---------------------------------------------------------------------------
# Oracles / alternative backends
# ---------------------------------------------------------------------------

def naive_max_path_dist(spec: EnvSpec, dists: dict[int, Dist] | None = None,
                        goal: int | None = None) -> Dist:
    """Brute-force distribution of the best path sum via joint enumeration.

    Enumerates the full product of stochastic supports (vectorized); the
    joint outcome count must not exceed NAIVE_OUTCOME_CAP.
    """
    if dists is None:
        dists = spec.priors
    paths = enumerate_paths(spec)
    if goal is not None:
        paths = [p for p in paths if p[-1] == goal]
    nodes = sorted({n for p in paths for n in p})
    stoch = [n for n in nodes if len(dists[n]) > 1]
    total = 1
    for n in stoch:
        total *= len(dists[n])
        if total > NAIVE_OUTCOME_CAP:
            raise ValueError(f"joint outcome count exceeds {NAIVE_OUTCOME_CAP}")
    shape = tuple(len(dists[n]) for n in stoch)
    axis = {n: i for i, n in enumerate(stoch)}

    def node_grid(n: int) -> np.ndarray:
        sh = [1] * len(stoch)
        sh[axis[n]] = len(dists[n])
        return dists[n].support.reshape(sh)

    best = None
    for p in paths:
        fixed = sum(float(dists[n].support[0]) for n in p if len(dists[n]) == 1)
        arr = np.full(shape or (1,), fixed)
        for n in p:
            if len(dists[n]) > 1:
                arr = arr + node_grid(n)
        best = arr if best is None else np.maximum(best, arr)
    probs = np.ones(shape or (1,))
    for n in stoch:
        sh = [1] * len(stoch)
        sh[axis[n]] = len(dists[n])
        probs = probs * dists[n].probs.reshape(sh)
    return make_dist(best.ravel(), probs.ravel(), cap=max(total, 1))


# Pure-python dict distributions for the pre-contraction comparator.
def _dadd(a: dict, b: dict) -> dict:
    out: dict[float, float] = {}
    for va, pa in a.items():
        for vb, pb in b.items():
            v = va + vb
            out[v] = out.get(v, 0.0) + pa * pb
    return out


def _dmax(a: dict, b: dict) -> dict:
    out: dict[float, float] = {}
    for va, pa in a.items():
        for vb, pb in b.items():
            v = va if va >= vb else vb
            out[v] = out.get(v, 0.0) + pa * pb
    return out


def recursive_max_path_dist(spec: EnvSpec, dists: dict[int, Dist] | None = None,
                            goal: int | None = None,
                            combo_cap: int = 1_000_000) -> Dist:
    """Exact best-path-sum distribution by per-call recursive reduction.

    The straightforward implementation one writes before planning
    contractions: condition on every convergent (multi-parent) node and its
    stochastic descendants, then reduce the remaining tree recursively with
    dictionary convolutions. No plans, no caching across calls. Entries of
    ``dists`` may be plain floats as shorthand for point masses.
    """
    if dists is None:
        dists = spec.priors
    else:
        dists = {n: point(d) if isinstance(d, float) else d
                 for n, d in dists.items()}
    if goal is None:
        members = set(range(spec.node_count)) - {spec.root}
    else:
        gs = {g.goal: g for g in goal_sets(spec)}
        members = set(gs[goal].members)
    keep = members | {spec.root}
    children = {n: tuple(c for c in spec.children[n] if c in keep)
                for n in keep}
    parents_count = {n: sum(1 for p in spec.parents[n] if p in keep)
                     for n in keep}

    shared = {n for n in members if parents_count[n] > 1}
    visited: set[int] = set()
    stack = list(shared)
    while stack:  # stochastic descendants of shared nodes must be pinned too
        n = stack.pop()
        if n in visited:
            continue
        visited.add(n)
        stack.extend(children[n])
    cond = {n for n in visited if len(dists[n]) > 1}
    combos = 1
    for n in cond:
        combos *= len(dists[n])
        if combos > combo_cap:
            raise ValueError("conditioning set too large for recursive backend")

    order = sorted(cond)
    pinned: dict[int, float] = {}

    def tree_value(n: int, memo: dict) -> dict:
        got = memo.get(n)
        if got is not None:
            return got
        if n == spec.root:
            own = {0.0: 1.0}
        elif n in pinned:
            own = {pinned[n]: 1.0}
        else:
            d = dists[n]
            own = {float(v): float(p) for v, p in zip(d.support, d.probs)}
        kids = children[n]
        if kids:
            acc = tree_value(kids[0], memo)
            for c in kids[1:]:
                acc = _dmax(acc, tree_value(c, memo))
            own = _dadd(own, acc)
        memo[n] = own
        return own

    def conditioned(i: int) -> dict:
        if i == len(order):
            return tree_value(spec.root, {})
        n = order[i]
        d = dists[n]
        out: dict[float, float] = {}
        for v, p in zip(d.support, d.probs):
            pinned[n] = float(v)
            for val, q in conditioned(i + 1).items():
                out[val] = out.get(val, 0.0) + float(p) * q
        del pinned[n]
        return out

    result = conditioned(0)
    vals = np.array(sorted(result))
    probs = np.array([result[v] for v in vals])
    return make_dist(vals, probs, cap=max(len(vals), 1))

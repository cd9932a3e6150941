"""Environment model: plannable reward graphs with probabilistic node values.

An environment is a rooted DAG. Every non-root node carries a finite reward
distribution (its prior); goal nodes are the childless leaves. An episode
samples one value per node (a RewardAssignment); a planner inspects nodes at a
per-click cost and finally commits to one root-to-goal path.
"""

from __future__ import annotations

import bisect
import hashlib
import json
from dataclasses import dataclass, field
from itertools import accumulate
from pathlib import Path

import numpy as np

from .dists import Dist, discretize_normal, make_dist, point

DEFAULT_BINS = 4


@dataclass(frozen=True)
class GoalSet:
    """A goal node together with every node on some root-to-goal path to it."""

    goal: int
    members: tuple[int, ...]  # sorted, goal included, root excluded


@dataclass
class EnvSpec:
    """Static description of one environment."""

    node_count: int
    root: int
    edges: tuple[tuple[int, int], ...]
    priors: dict[int, Dist]        # every non-root node
    goals: tuple[int, ...]
    click_cost: float
    name: str = "env"

    # --- derived structure (filled in __post_init__) ---
    children: dict[int, tuple[int, ...]] = field(init=False, repr=False)
    parents: dict[int, tuple[int, ...]] = field(init=False, repr=False)
    hierarchical_compatible: bool = field(init=False, repr=False)

    def __post_init__(self):
        ch: dict[int, list[int]] = {n: [] for n in range(self.node_count)}
        pa: dict[int, list[int]] = {n: [] for n in range(self.node_count)}
        for a, b in self.edges:
            ch[a].append(b)
            pa[b].append(a)
        self.children = {n: tuple(sorted(c)) for n, c in ch.items()}
        self.parents = {n: tuple(sorted(p)) for n, p in pa.items()}
        if self._has_cycle():
            # leave path-derived structure to validate_env's report
            self.hierarchical_compatible = False
            return
        sets = goal_sets(self)
        seen: set[int] = set()
        compatible = True
        for gs in sets:
            overlap = seen & set(gs.members)
            if overlap:
                compatible = False
            seen |= set(gs.members)
        if seen != set(range(self.node_count)) - {self.root}:
            compatible = False
        self.hierarchical_compatible = compatible

    def _has_cycle(self) -> bool:
        indeg = {n: len(self.parents[n]) for n in range(self.node_count)}
        queue = [n for n, d in indeg.items() if d == 0]
        seen = 0
        while queue:
            n = queue.pop()
            seen += 1
            for c in self.children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        return seen != self.node_count

    def prior_mean(self, node: int) -> float:
        return self.priors[node].mean()

    def canonical_json(self) -> str:
        return json.dumps(env_to_jsonable(self), sort_keys=True,
                          separators=(",", ":"))

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


@dataclass(frozen=True)
class RewardAssignment:
    """One sampled ground truth: a value for every non-root node."""

    values: dict[int, float]
    seed: int

    def path_return(self, path) -> float:
        return float(sum(self.values[n] for n in path))


def validate_env(spec: EnvSpec) -> list[str]:
    """Return a list of violations (empty when the spec is well formed)."""
    v: list[str] = []
    nodes = set(range(spec.node_count))
    for a, b in spec.edges:
        if a not in nodes or b not in nodes:
            v.append(f"edge ({a},{b}) references unknown node")
    if spec.root not in nodes:
        v.append(f"root {spec.root} is not a node")
        return v
    if spec.parents[spec.root]:
        v.append("root has parents")
    # acyclicity + reachability via DFS from root
    order, state = [], {n: 0 for n in nodes}

    def dfs(n: int) -> bool:
        state[n] = 1
        for c in spec.children[n]:
            if state[c] == 1:
                return False
            if state[c] == 0 and not dfs(c):
                return False
        state[n] = 2
        order.append(n)
        return True

    if not dfs(spec.root):
        v.append("graph contains a cycle")
        return v
    unreachable = [n for n in nodes if state[n] == 0]
    if unreachable:
        v.append(f"nodes unreachable from root: {sorted(unreachable)}")
    leaves = {n for n in nodes if not spec.children[n] and n != spec.root}
    if set(spec.goals) != leaves:
        v.append(f"goals {sorted(spec.goals)} != childless leaves {sorted(leaves)}")
    for g in spec.goals:
        if spec.children.get(g):
            v.append(f"goal {g} has children")
    missing = nodes - {spec.root} - set(spec.priors)
    if missing:
        v.append(f"nodes without priors: {sorted(missing)}")
    if spec.root in spec.priors:
        v.append("root must not carry a prior")
    if spec.click_cost < 0:
        v.append("click_cost must be non-negative")
    return v


def enumerate_paths(spec: EnvSpec) -> list[tuple[int, ...]]:
    """All root-to-goal paths (root excluded), in lexicographic node order."""
    out: list[tuple[int, ...]] = []

    def walk(n: int, acc: list[int]):
        if not spec.children[n]:
            out.append(tuple(acc))
            return
        for c in spec.children[n]:  # children already sorted by id
            acc.append(c)
            walk(c, acc)
            acc.pop()

    walk(spec.root, [])
    return out


def goal_sets(spec: EnvSpec) -> list[GoalSet]:
    """Per-goal node sets: every node on some root-to-goal path, per goal."""
    members: dict[int, set[int]] = {g: set() for g in spec.goals}
    for path in enumerate_paths(spec):
        members[path[-1]].update(path)
    return [GoalSet(g, tuple(sorted(members[g]))) for g in spec.goals]


def sample_instance(spec: EnvSpec, seed: int) -> RewardAssignment:
    """Draw one value per non-root node from its prior (deterministic in seed)."""
    rng = np.random.default_rng(seed)
    u = rng.random(spec.node_count)  # one uniform per node, inverse-CDF lookup
    values: dict[int, float] = {}
    for n in range(spec.node_count):
        if n == spec.root:
            continue
        d = spec.priors[n]
        if len(d.support) == 1:
            values[n] = float(d.support[0])
            continue
        cum = list(accumulate(d.probs.tolist()))
        idx = min(bisect.bisect_right(cum, u[n]), len(cum) - 1)
        values[n] = float(d.support[idx])
    return RewardAssignment(values, seed)


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def gen_increasing_variance(num_goals: int = 2, bins: int = DEFAULT_BINS,
                            click_cost: float = 1.0) -> EnvSpec:
    """Multi-goal env whose reward spread doubles with depth.

    Per goal: 17 intermediate nodes forming 10 distinct 5-step paths —
    one entry node, 2 nodes at depth 2, 4 at depth 3, and 10 at depth 4
    (fan-out 3,3,2,2 from the depth-3 nodes), all converging on the goal.
    Intermediates at depth d are Normal(0, 5·2^(d-1)); goal g is
    Normal(0, 100 + 20·(g-1)).
    """
    if not 2 <= num_goals <= 5:
        raise ValueError("num_goals must be in 2..5")
    edges: list[tuple[int, int]] = []
    priors: dict[int, Dist] = {}
    goals: list[int] = []
    fan = (3, 3, 2, 2)
    for k in range(num_goals):
        base = 1 + 18 * k
        entry = base
        d2 = [base + 1, base + 2]
        d3 = [base + 3, base + 4, base + 5, base + 6]
        d4 = list(range(base + 7, base + 17))
        goal = base + 17
        edges.append((0, entry))
        edges += [(entry, n) for n in d2]
        edges += [(d2[0], d3[0]), (d2[0], d3[1]), (d2[1], d3[2]), (d2[1], d3[3])]
        i = 0
        for b, f in zip(d3, fan):
            for _ in range(f):
                edges.append((b, d4[i]))
                i += 1
        edges += [(n, goal) for n in d4]
        priors[entry] = discretize_normal(0.0, 5.0, bins)
        for n in d2:
            priors[n] = discretize_normal(0.0, 10.0, bins)
        for n in d3:
            priors[n] = discretize_normal(0.0, 20.0, bins)
        for n in d4:
            priors[n] = discretize_normal(0.0, 40.0, bins)
        priors[goal] = discretize_normal(0.0, 100.0 + 20.0 * k, bins)
        goals.append(goal)
    return EnvSpec(1 + 18 * num_goals, 0, tuple(edges), priors, tuple(goals),
                   click_cost, f"increasing{num_goals}")


def gen_high_risk(click_cost: float = 10.0) -> EnvSpec:
    """Four-goal env where each goal sits behind a rarely-catastrophic node.

    Each of four parallel subgraphs: a fixed-0 entry, three parallel 2-node
    chains, one cut-vertex node with {-1500: 0.1, 0: 0.9}, two parallel 3-node
    chains, and a goal with equiprobable {0, 25, 75, 100}. All root-to-goal
    paths take 8 steps.
    """
    edges: list[tuple[int, int]] = []
    priors: dict[int, Dist] = {}
    goals: list[int] = []
    step = make_dist([-10.0, -5.0, 5.0, 10.0], [0.25] * 4)
    risk = make_dist([-1500.0, 0.0], [0.1, 0.9])
    goal_d = make_dist([0.0, 25.0, 75.0, 100.0], [0.25] * 4)
    for k in range(4):
        b = 15 * k
        entry, rk, goal = b + 1, b + 8, b + 15
        edges.append((0, entry))
        for head in (b + 2, b + 4, b + 6):
            edges += [(entry, head), (head, head + 1), (head + 1, rk)]
        for head in (b + 9, b + 12):
            edges += [(rk, head), (head, head + 1), (head + 1, head + 2),
                      (head + 2, goal)]
        priors[entry] = point(0.0)
        for n in range(b + 2, b + 8):
            priors[n] = step
        priors[rk] = risk
        for n in range(b + 9, b + 15):
            priors[n] = step
        priors[goal] = goal_d
        goals.append(goal)
    return EnvSpec(61, 0, tuple(edges), priors, tuple(goals), click_cost,
                   "highrisk")


def gen_random_small(max_nodes: int = 12, max_goals: int = 3,
                     seed: int = 0) -> EnvSpec:
    """Small random DAG with integer-valued categorical priors (for oracles)."""
    if max_nodes > 14:
        raise ValueError("max_nodes must be <= 14")
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, max_nodes + 1))
    edges: set[tuple[int, int]] = set()
    for i in range(1, n):
        n_par = int(rng.integers(1, min(i, 3) + 1))
        for p in rng.choice(i, size=n_par, replace=False):
            edges.add((int(p), i))
    # childless interior nodes become goals only if allowed; otherwise wire on
    def leaves() -> list[int]:
        with_children = {a for a, _ in edges}
        return [i for i in range(1, n) if i not in with_children]

    while len(leaves()) > max_goals:
        lv = leaves()
        src = lv[int(rng.integers(0, len(lv) - 1))]  # keep the last leaf a leaf
        later = [j for j in lv if j > src]
        edges.add((src, int(rng.choice(later))))
    goals = tuple(sorted(leaves()))
    priors: dict[int, Dist] = {}
    for i in range(1, n):
        k = int(rng.integers(1, 5))
        vals = rng.choice(np.arange(-12, 13), size=k, replace=False)
        probs = rng.integers(1, 5, size=k).astype(float)
        priors[i] = make_dist(np.sort(vals).astype(float), probs / probs.sum())
    return EnvSpec(n, 0, tuple(sorted(edges)), priors, goals, 1.0,
                   f"random{seed}")


def gen_branching(branch: int = 3, depth: int = 3, seed: int = 7) -> EnvSpec:
    """Full branching tree used for contraction timing studies.

    Interior nodes get 3-atom categorical priors; the leaves (goals) get
    distinct fixed values so the naive joint enumeration stays feasible.
    """
    rng = np.random.default_rng(seed)
    edges: list[tuple[int, int]] = []
    priors: dict[int, Dist] = {}
    level = [0]
    next_id = 1
    for d in range(depth):
        new_level = []
        for parent in level:
            for _ in range(branch):
                edges.append((parent, next_id))
                if d < depth - 1:
                    vals = np.sort(rng.choice(np.arange(-8, 9), 3, replace=False))
                    priors[next_id] = make_dist(vals.astype(float), [1 / 3] * 3)
                new_level.append(next_id)
                next_id += 1
        level = new_level
    leaf_values = rng.choice(np.arange(-60, 61), size=len(level), replace=False)
    for leaf, v in zip(level, leaf_values):
        priors[leaf] = point(float(v))
    return EnvSpec(next_id, 0, tuple(edges), priors, tuple(level), 1.0,
                   f"branching{branch}x{depth}")


def gen_toy_two_goal() -> EnvSpec:
    """Two goals directly under the root, each 0 or 100 with equal odds."""
    d = make_dist([0.0, 100.0], [0.5, 0.5])
    return EnvSpec(3, 0, ((0, 1), (0, 2)), {1: d, 2: d}, (1, 2), 1.0,
                   "toy2goal")


def gen_feedback_demo() -> EnvSpec:
    """Small 3-step, 6-destination env for the feedback tutor.

    Uncertainty sits on the first step and the destinations; the middle layer
    is fixed so the exact solver's belief space stays tiny.
    """
    edges = [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6),
             (3, 7), (3, 8), (4, 9), (5, 10), (6, 11), (6, 12)]
    wide = make_dist([-24.0, 24.0], [0.5, 0.5])
    priors = {
        1: make_dist([-4.0, 4.0], [0.5, 0.5]),
        2: make_dist([-4.0, 4.0], [0.5, 0.5]),
        3: point(-3.0), 4: point(3.0), 5: point(2.0), 6: point(-2.0),
        7: wide, 8: wide, 9: wide, 10: wide, 11: wide, 12: wide,
    }
    return EnvSpec(13, 0, tuple(edges), priors, (7, 8, 9, 10, 11, 12), 1.0,
                   "feedback_demo")


# Tiny envs whose exact metalevel solution is cheap; used to audit policies.
def gen_tiny(index: int) -> EnvSpec:
    if index == 1:
        return gen_toy_two_goal()
    if index == 2:
        # single chain: inspecting can never change the route
        priors = {1: make_dist([-20.0, 20.0], [0.5, 0.5]),
                  2: make_dist([-10.0, 0.0, 10.0], [0.25, 0.5, 0.25])}
        return EnvSpec(3, 0, ((0, 1), (1, 2)), priors, (2,), 1.0, "tiny_chain")
    if index == 3:
        # diamond: two parallel mid nodes feeding one goal
        priors = {1: make_dist([-10.0, 10.0], [0.5, 0.5]),
                  2: make_dist([-10.0, 10.0], [0.5, 0.5]),
                  3: make_dist([-2.0, 2.0], [0.5, 0.5])}
        return EnvSpec(4, 0, ((0, 1), (0, 2), (1, 3), (2, 3)), priors, (3,),
                       1.0, "tiny_diamond")
    if index == 4:
        # two length-2 routes with informative middles and spread goals
        priors = {1: make_dist([-10.0, 10.0], [0.5, 0.5]),
                  2: make_dist([-10.0, 10.0], [0.5, 0.5]),
                  3: make_dist([-50.0, 50.0], [0.5, 0.5]),
                  4: make_dist([-50.0, 50.0], [0.5, 0.5])}
        return EnvSpec(5, 0, ((0, 1), (0, 2), (1, 3), (2, 4)), priors,
                       (3, 4), 2.0, "tiny_tworoutes")
    if index == 5:
        # three goals with unequal spreads
        priors = {1: make_dist([0.0, 30.0], [0.5, 0.5]),
                  2: make_dist([-40.0, 40.0], [0.5, 0.5]),
                  3: make_dist([-60.0, 20.0, 60.0], [0.25, 0.5, 0.25])}
        return EnvSpec(4, 0, ((0, 1), (0, 2), (0, 3)), priors, (1, 2, 3),
                       1.0, "tiny_threegoals")
    raise ValueError(f"no tiny env #{index}")


# ---------------------------------------------------------------------------
# JSON round-trip and selectors
# ---------------------------------------------------------------------------

def _dist_to_json(d: Dist) -> dict:
    if d.is_point:
        return {"fixed": float(d.support[0])}
    return {"categorical": {"values": [float(v) for v in d.support],
                            "probs": [float(p) for p in d.probs]}}


def env_to_jsonable(spec: EnvSpec) -> dict:
    nodes = {}
    for n in range(spec.node_count):
        if n == spec.root:
            nodes[str(n)] = {"root": True}
        else:
            nodes[str(n)] = _dist_to_json(spec.priors[n])
    return {
        "name": spec.name,
        "root": spec.root,
        "nodes": nodes,
        "edges": [[a, b] for a, b in spec.edges],
        "goals": list(spec.goals),
        "click_cost": spec.click_cost,
    }


def _dist_from_json(obj: dict) -> Dist:
    if "fixed" in obj:
        return point(obj["fixed"])
    if "categorical" in obj:
        c = obj["categorical"]
        return make_dist(c["values"], c["probs"])
    if "normal" in obj:
        n = obj["normal"]
        return discretize_normal(n["mu"], n["sigma"], n.get("bins", DEFAULT_BINS))
    raise ValueError(f"unknown distribution object: {obj}")


def env_from_jsonable(obj: dict) -> EnvSpec:
    nodes = obj["nodes"]
    count = len(nodes)
    root = obj["root"]
    priors = {int(k): _dist_from_json(v) for k, v in nodes.items()
              if int(k) != root}
    spec = EnvSpec(count, root, tuple(tuple(e) for e in obj["edges"]), priors,
                   tuple(obj["goals"]), obj["click_cost"],
                   obj.get("name", "env"))
    problems = validate_env(spec)
    if problems:
        raise ValueError("invalid environment: " + "; ".join(problems))
    return spec


def save_env(spec: EnvSpec, path: str | Path):
    Path(path).write_text(json.dumps(env_to_jsonable(spec), indent=2))


def load_env(path: str | Path) -> EnvSpec:
    return env_from_jsonable(json.loads(Path(path).read_text()))


BUILTINS = {
    "increasing2": lambda: gen_increasing_variance(2),
    "increasing3": lambda: gen_increasing_variance(3),
    "increasing4": lambda: gen_increasing_variance(4),
    "increasing5": lambda: gen_increasing_variance(5),
    "highrisk": gen_high_risk,
    "toy2goal": gen_toy_two_goal,
    "branching333": lambda: gen_branching(3, 3),
    "feedback_demo": gen_feedback_demo,
    "tiny1": lambda: gen_tiny(1),
    "tiny2": lambda: gen_tiny(2),
    "tiny3": lambda: gen_tiny(3),
    "tiny4": lambda: gen_tiny(4),
    "tiny5": lambda: gen_tiny(5),
}


def resolve_env(selector: str) -> EnvSpec:
    """Resolve ``builtin:<name>`` or a JSON file path to an EnvSpec."""
    if selector.startswith("builtin:"):
        name = selector.split(":", 1)[1]
        if name not in BUILTINS:
            raise ValueError(f"unknown builtin env {name!r}; "
                             f"have {sorted(BUILTINS)}")
        return BUILTINS[name]()
    return load_env(selector)

"""Exact metalevel solution of small environments by backward induction.

The belief space of a flat metalevel MDP is the product over stochastic
nodes of (unobserved | one of its support atoms). For small enough spaces we
enumerate it exactly, giving ground-truth optimal values for policy audits
and per-click feedback with exact regret.
"""

import pickle
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .beliefs import (
    TERMINATE,
    BeliefState,
    Computation,
    inspect,
    inspectable,
    path_table,
    termination_value,
)
from .envs import EnvSpec

BELIEF_SPACE_CAP = 1_000_000
_CACHE_MAGIC = b"MPORACLE1\n"


def belief_space_size(spec: EnvSpec) -> int:
    total = 1
    for n in range(spec.node_count):
        if n == spec.root or not inspectable(spec, n):
            continue
        total *= len(spec.priors[n]) + 1
    return total


@dataclass
class OracleSolution:
    """Optimal value, Q, and policy over every reachable belief.

    Beliefs are keyed by a sorted tuple of (node, support-index) pairs, so
    lookups are exact — no float comparisons.
    """

    env_hash: str
    click_cost: float
    supports: dict[int, tuple[float, ...]]
    value: dict
    q: dict
    policy: dict

    def key_for(self, b: BeliefState) -> tuple:
        out = []
        for n, v in b.observed:
            sup = self.supports.get(n)
            if sup is None:
                continue  # a fixed node someone "observed"; carries nothing
            hits = [i for i, s in enumerate(sup) if abs(s - v) < 1e-9]
            if not hits:
                raise ValueError(f"value {v} is not in node {n}'s support")
            out.append((n, hits[0]))
        return tuple(sorted(out))

    def v_init(self) -> float:
        return self.value[()]


def solve_exact(spec: EnvSpec, cache_dir=None) -> OracleSolution:
    """Backward induction over all reachable beliefs of the flat MDP.

    Ties prefer termination, then the lowest node id. Results can be cached
    on disk keyed by the environment's content hash.
    """
    if cache_dir is not None:
        cached = _load_cached(spec, cache_dir)
        if cached is not None:
            return cached
    size = belief_space_size(spec)
    if size > BELIEF_SPACE_CAP:
        raise ValueError(f"belief space has {size} states "
                         f"(cap {BELIEF_SPACE_CAP})")
    table = path_table(spec)
    lam = spec.click_cost
    nodes = [n for n in range(spec.node_count)
             if n != spec.root and inspectable(spec, n)]
    supports = {n: tuple(float(v) for v in spec.priors[n].support)
                for n in nodes}
    probs = {n: tuple(float(p) for p in spec.priors[n].probs) for n in nodes}
    prior_means = table.prior_means
    matrix = table.matrix

    value: dict = {}
    q: dict = {}
    policy: dict = {}

    def solve(key: tuple) -> float:
        got = value.get(key)
        if got is not None:
            return got
        means = prior_means.copy()
        for n, i in key:
            means[n] = supports[n][i]
        tv = float((matrix @ means).max())
        q[(key, TERMINATE)] = tv
        best_v, best_c = tv, TERMINATE
        observed = {n for n, _ in key}
        for n in nodes:
            if n in observed:
                continue
            qq = -lam
            for i, p in enumerate(probs[n]):
                child = tuple(sorted(key + ((n, i),)))
                qq += p * solve(child)
            c = inspect(n)
            q[(key, c)] = qq
            if qq > best_v + 1e-12:
                best_v, best_c = qq, c
        value[key] = best_v
        policy[key] = best_c
        return best_v

    solve(())
    sol = OracleSolution(spec.content_hash(), lam, supports, value, q, policy)
    if cache_dir is not None:
        _save_cached(sol, spec, cache_dir)
    return sol


# ---------------------------------------------------------------------------
# Feedback
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeedbackRecord:
    is_optimal: bool
    optimal_computation: Computation
    regret: float
    penalty_ms: int


def optimal_feedback(b: BeliefState, chosen: Computation,
                     sol: OracleSolution,
                     penalty_per_unit: float = 500.0) -> FeedbackRecord:
    """Grade one chosen computation against the oracle at belief b.

    An inspection the oracle never considered (a fixed-value node, or a node
    already observed) is pure waste: it pays the click fee and reveals
    nothing, so its regret is exactly the fee.
    """
    key = sol.key_for(b)
    v = sol.value.get(key)
    if v is None:
        raise ValueError("belief is outside the solved space")
    qv = sol.q.get((key, chosen))
    if qv is None:
        if chosen.kind != "inspect":
            raise ValueError(f"unknown computation {chosen!r}")
        qv = v - sol.click_cost
    regret = v - qv
    return FeedbackRecord(
        is_optimal=regret <= 1e-9,
        optimal_computation=sol.policy[key],
        regret=regret,
        penalty_ms=int(round(penalty_per_unit * regret)),
    )


# ---------------------------------------------------------------------------
# Disk cache
# ---------------------------------------------------------------------------

def _cache_path(spec: EnvSpec, cache_dir) -> Path:
    return Path(cache_dir) / f"oracle_{spec.content_hash()[:16]}.bin"


def save_solution(sol: OracleSolution, path):
    payload = {
        "env_hash": sol.env_hash, "click_cost": sol.click_cost,
        "supports": sol.supports, "value": sol.value,
        "q": sol.q, "policy": sol.policy,
    }
    Path(path).write_bytes(_CACHE_MAGIC + pickle.dumps(payload))


def load_solution(path) -> OracleSolution:
    raw = Path(path).read_bytes()
    if not raw.startswith(_CACHE_MAGIC):
        raise ValueError(f"{path} is not an oracle cache file (bad header)")
    payload = pickle.loads(raw[len(_CACHE_MAGIC):])
    return OracleSolution(**payload)


def _load_cached(spec: EnvSpec, cache_dir) -> OracleSolution | None:
    path = _cache_path(spec, cache_dir)
    if not path.exists():
        return None
    try:
        sol = load_solution(path)
    except (ValueError, pickle.UnpicklingError, EOFError):
        return None
    if sol.env_hash != spec.content_hash():
        return None
    return sol


def _save_cached(sol: OracleSolution, spec: EnvSpec, cache_dir):
    Path(cache_dir).mkdir(parents=True, exist_ok=True)
    save_solution(sol, _cache_path(spec, cache_dir))

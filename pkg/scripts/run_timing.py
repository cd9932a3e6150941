"""Measure the evaluation-speed comparisons behind the timing table.

Per-episode evaluation time strips one speedup at a time: the hierarchical
policy with path-distribution contraction, the same policy on the
pre-contraction recursive evaluator, and the flat policy (which predates
contraction entirely) on that same evaluator. A microbenchmark then pits one
full-information path-value evaluation against naive joint enumeration on
the 27-node branching tree. Absolute numbers are machine-specific; the
ratios are the claim.

    python3 scripts/run_timing.py --env builtin:increasing2
"""

import argparse
import time

from metaplan.bench import machine_descriptor, time_evaluation
from metaplan.contraction import (
    exec_contraction,
    naive_max_path_dist,
    plan_contraction,
    recursive_max_path_dist,
)
from metaplan.envs import gen_branching, resolve_env
from metaplan.features import FeatureEngine, Weights
from metaplan.policies import PolicyConfig, make_policy


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--env", default="builtin:increasing2")
    ap.add_argument("--episodes", type=int, default=20)
    args = ap.parse_args()

    spec = resolve_env(args.env)
    flat = PolicyConfig("flat_bmps", flat=Weights("flat", (1/3, 1/3, 1/3), 1.0))
    hier = PolicyConfig("hier_bmps", high=Weights("high", (0.5, 0.5), 1.0),
                        low=Weights("low", (1/3, 1/3, 1/3), 1.0))
    hier_nc = make_policy(hier, spec, FeatureEngine(spec, use_contraction=False))
    flat_nc = make_policy(flat, spec, FeatureEngine(spec, use_contraction=False))

    print(machine_descriptor())
    t_hier = time_evaluation(hier, spec, episodes=args.episodes)
    t_slow = time_evaluation(hier_nc, spec, episodes=args.episodes)
    t_flat = time_evaluation(flat_nc, spec, episodes=args.episodes)
    print(f"{spec.name}: per-episode seconds")
    print(f"  hier + contraction    {t_hier.seconds_per_episode:8.4f}")
    print(f"  hier, no contraction  {t_slow.seconds_per_episode:8.4f}  "
          f"({t_slow.seconds_per_episode / t_hier.seconds_per_episode:.1f}x)")
    print(f"  flat, no contraction  {t_flat.seconds_per_episode:8.4f}  "
          f"({t_flat.seconds_per_episode / t_slow.seconds_per_episode:.1f}x "
          f"over hier)")

    tree = gen_branching(3, 3)
    plan = plan_contraction(tree)
    exec_contraction(plan, tree.priors)  # warm
    reps = 5
    t0 = time.perf_counter()
    for _ in range(reps):
        exec_contraction(plan, tree.priors)
    fast = (time.perf_counter() - t0) / reps
    t0 = time.perf_counter()
    for _ in range(reps):
        recursive_max_path_dist(tree)
    recur = (time.perf_counter() - t0) / reps
    t0 = time.perf_counter()
    for _ in range(reps):
        naive_max_path_dist(tree)
    naive = (time.perf_counter() - t0) / reps
    print(f"{tree.name}: one full-information path-value distribution")
    print(f"  contraction {1e3 * fast:7.3f} ms   naive enumeration "
          f"{1e3 * naive:7.3f} ms ({naive / fast:.0f}x)   "
          f"recursive {1e3 * recur:7.3f} ms ({recur / fast:.1f}x)")


if __name__ == "__main__":
    main()

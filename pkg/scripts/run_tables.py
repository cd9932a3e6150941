"""Reproduce the headline benchmark tables.

Runs the full policy battery (trained VOC mixtures, greedy-myopic
baselines, tuned classical searches, random) on the risky four-goal
environment and the 2-goal increasing-variance environment with common
random numbers, writing report.csv / report.json / traces.jsonl per env.

    python3 scripts/run_tables.py --episodes 5000 --out runs/tables
"""

import argparse
import time
from pathlib import Path

from metaplan.bench import run_benchmark
from metaplan.envs import resolve_env
from metaplan.policies import PolicyConfig
from metaplan.search import KINDS, tune_aspiration


def battery(spec, with_searches=True):
    pols = {
        "flat_bmps": PolicyConfig("flat_bmps"),
        "hier_bmps_switch": PolicyConfig("hier_bmps", switching=True),
        "hier_bmps_noswitch": PolicyConfig("hier_bmps", switching=False),
        "greedy_flat": PolicyConfig("greedy_flat"),
        "greedy_hier": PolicyConfig("greedy_hier"),
        "random": PolicyConfig("random", seed=0),
    }
    if with_searches:
        for kind in KINDS:
            cfg = tune_aspiration(kind, spec)
            pols[f"search_{kind.lower()}"] = PolicyConfig(
                "search", search=cfg.to_jsonable())
    return pols


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--envs", nargs="+",
                    default=["builtin:highrisk", "builtin:increasing2"])
    ap.add_argument("--episodes", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--train-iters", type=int, default=100)
    ap.add_argument("--out", default="runs/tables")
    ap.add_argument("--no-searches", action="store_true",
                    help="skip the tuned classical-search baselines")
    args = ap.parse_args()

    for selector in args.envs:
        spec = resolve_env(selector)
        out = Path(args.out) / spec.name
        t0 = time.time()
        rep = run_benchmark(spec, battery(spec, not args.no_searches),
                            episodes=args.episodes, seed=args.seed,
                            out_dir=out, train_iterations=args.train_iters)
        print(f"== {spec.name} ({args.episodes} episodes, "
              f"{time.time() - t0:.0f}s) -> {out}")
        for row in rep.rows:
            if row.error:
                print(f"  {row.policy:22s} ERROR {row.error}")
                continue
            print(f"  {row.policy:22s} rr {row.mean_rr:8.2f} "
                  f"(sd {row.std_rr:7.2f})  clicks {row.mean_clicks:5.1f}  "
                  f"switches {row.mean_switches:.3f}")


if __name__ == "__main__":
    main()

"""Exploration: train BMPS on both benchmark envs, preview table bands."""
import json, time
import numpy as np
from metaplan.envs import gen_high_risk, gen_increasing_variance, sample_instance
from metaplan.optimize import train_bmps
from metaplan.bench import run_benchmark, episode_seeds
from metaplan.policies import PolicyConfig
import dataclasses

def preview(name, spec, episodes=1000):
    t0 = time.time()
    flat = train_bmps(spec, "flat", iterations=100, episodes_per_eval=100,
                      seed=0, opt_mode="gp", out_dir=f"runs/{name}")
    t1 = time.time()
    print(f"[{name}] flat trained in {t1-t0:.0f}s: {flat.flat}", flush=True)
    hier = train_bmps(spec, "hier", iterations=100, episodes_per_eval=100,
                      seed=0, opt_mode="gp", out_dir=f"runs/{name}")
    t2 = time.time()
    print(f"[{name}] hier trained in {t2-t1:.0f}s: high={hier.high} low={hier.low}", flush=True)
    battery = {
        "flat_bmps": flat,
        "hier_sw": hier,
        "hier_ns": dataclasses.replace(hier, switching=False),
        "greedy_flat": PolicyConfig("greedy_flat"),
        "greedy_hier": PolicyConfig("greedy_hier"),
        "random": PolicyConfig("random", seed=0),
    }
    rep = run_benchmark(spec, battery, episodes, 0, out_dir=f"runs/{name}/bench")
    for r in rep.rows:
        se = (r.std_rr / np.sqrt(r.episodes)) if r.std_rr is not None else None
        print(f"[{name}] {r.policy:12s} mean {r.mean_rr and round(r.mean_rr,2)} "
              f"se {se and round(se,2)} clicks {r.mean_clicks and round(r.mean_clicks,1)} "
              f"switches {r.mean_switches} err {r.error}", flush=True)
    print(f"[{name}] total {time.time()-t0:.0f}s", flush=True)

preview("highrisk", gen_high_risk())
preview("iv2", gen_increasing_variance(2))

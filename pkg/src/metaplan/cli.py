"""Command-line entry points: benchmarking, training, the tutor service."""

import argparse
import json
import sys
from pathlib import Path

from .bench import run_benchmark, report_to_csv, time_evaluation
from .envs import resolve_env
from .optimize import train_bmps
from .policies import PolicyConfig

BATTERY = {
    "flat_bmps": lambda: PolicyConfig("flat_bmps"),
    "hier_bmps_switch": lambda: PolicyConfig("hier_bmps", switching=True),
    "hier_bmps_noswitch": lambda: PolicyConfig("hier_bmps", switching=False),
    "greedy_flat": lambda: PolicyConfig("greedy_flat"),
    "greedy_hier": lambda: PolicyConfig("greedy_hier"),
    "random": lambda: PolicyConfig("random", seed=0),
}


def parse_policy_token(token: str, spec) -> tuple[str, PolicyConfig]:
    """One --policies entry: battery name, search:<Kind>:<asp|auto>, or file."""
    if token in BATTERY:
        return token, BATTERY[token]()
    if token.startswith("search:"):
        parts = token.split(":")
        if len(parts) != 3:
            raise ValueError(f"search token must look like "
                             f"search:<Kind>:<aspiration|auto>, got {token!r}")
        _, kind, asp = parts
        from .search import SearchConfig, tune_aspiration
        if asp == "auto":
            cfg = tune_aspiration(kind, spec)
        else:
            cfg = SearchConfig(kind, float(asp))
        return (f"search_{kind.lower()}",
                PolicyConfig("search", search=cfg.to_jsonable()))
    path = Path(token)
    if path.exists():
        return path.stem, PolicyConfig.load(path)
    raise ValueError(f"unknown policy {token!r}: not a battery name "
                     f"{sorted(BATTERY)}, a search:... token, or a file")


def cmd_bench_run(args) -> int:
    spec = resolve_env(args.env)
    policies = dict(parse_policy_token(t, spec)
                    for t in args.policies.split(","))
    report = run_benchmark(spec, policies, args.episodes, args.seed,
                           out_dir=args.out, workers=args.workers,
                           train_iterations=args.train_iters,
                           train_episodes=args.train_episodes,
                           opt_mode=args.opt_mode)
    sys.stdout.write(report_to_csv(report))
    return 1 if any(r.error for r in report.rows) else 0


def cmd_bench_time(args) -> int:
    spec = resolve_env(args.env)
    _, config = parse_policy_token(args.policy, spec)
    result = time_evaluation(config, spec, episodes=args.episodes,
                             seed=args.seed)
    print(f"{result.seconds_per_episode:.6f} s/episode over "
          f"{result.episodes} episodes on {result.machine}")
    return 0


def cmd_bench_train(args) -> int:
    spec = resolve_env(args.env)
    out = Path(args.out)
    config = train_bmps(spec, mode=args.mode, iterations=args.iters,
                        episodes_per_eval=args.episodes_per_eval,
                        seed=args.seed, opt_mode=args.opt_mode,
                        out_dir=out.parent if out.suffix else out)
    if out.suffix:  # explicit file name beats the default per-env name
        config.save(out)
    print(json.dumps(config.to_jsonable(), indent=2))
    return 0


def cmd_tutor_serve(args) -> int:
    import uvicorn
    from .tutor import ServiceConfig, create_app
    app = create_app(ServiceConfig(data_dir=args.data_dir))
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_tutor_solve(args) -> int:
    from .tutor import prepare_oracle
    from .tutor.service import default_data_dir
    data_dir = args.data_dir or default_data_dir()
    sol = prepare_oracle(args.env, data_dir)
    print(f"solved {args.env}: V(init) = {sol.v_init():.4f}, "
          f"{len(sol.value)} belief states, cached under {data_dir}/oracles")
    return 0


def cmd_demo(args) -> int:
    from .tutor import get_demo
    demo = get_demo(args.env, args.policy, args.seed, args.step)
    print(demo.to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metaplan",
        description="strategy discovery, benchmarking, and tutoring for "
                    "plannable environments")
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="benchmark and train policies")
    bsub = bench.add_subparsers(dest="bench_command", required=True)

    run = bsub.add_parser("run", help="compare policies on shared instances")
    run.add_argument("--env", required=True)
    run.add_argument("--policies", required=True,
                     help="comma-separated battery names, search:<Kind>:"
                          "<aspiration|auto> tokens, or policy files")
    run.add_argument("--episodes", type=int, default=3000)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default=None)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--train-iters", type=int, default=100)
    run.add_argument("--train-episodes", type=int, default=100)
    run.add_argument("--opt-mode", choices=("gp", "random"), default="gp")
    run.set_defaults(func=cmd_bench_run)

    timing = bsub.add_parser("time", help="per-episode evaluation time")
    timing.add_argument("--env", required=True)
    timing.add_argument("--policy", required=True)
    timing.add_argument("--episodes", type=int, default=20)
    timing.add_argument("--seed", type=int, default=0)
    timing.set_defaults(func=cmd_bench_time)

    train = bsub.add_parser("train", help="fit VOC-mixture weights")
    train.add_argument("--env", required=True)
    train.add_argument("--mode", choices=("flat", "hier"), default="flat")
    train.add_argument("--iters", type=int, default=100)
    train.add_argument("--episodes-per-eval", type=int, default=100)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--opt-mode", choices=("gp", "random"), default="gp")
    train.add_argument("--out", required=True,
                       help="weights file (or directory for default names)")
    train.set_defaults(func=cmd_bench_train)

    tutor = sub.add_parser("tutor", help="demonstration/feedback service")
    tsub = tutor.add_subparsers(dest="tutor_command", required=True)

    serve = tsub.add_parser("serve", help="run the HTTP tutor")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--data-dir", default=None,
                       help="session/oracle storage (default $TUTOR_DATA_DIR)")
    serve.set_defaults(func=cmd_tutor_serve)

    solve = tsub.add_parser("solve", help="cache an exact solution so "
                                          "feedback sessions can grade clicks")
    solve.add_argument("--env", required=True)
    solve.add_argument("--data-dir", default=None)
    solve.set_defaults(func=cmd_tutor_solve)

    demo = sub.add_parser("demo", help="print one strategy demonstration")
    demo.add_argument("--env", required=True)
    demo.add_argument("--policy", default="greedy_hier")
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--step", default="full",
                      choices=("goal-only", "path-only", "full"))
    demo.set_defaults(func=cmd_demo)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

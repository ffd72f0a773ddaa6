"""Command-line front end: extraction dumps, generation, evaluation,
companion ranking, training, the ablation grid, and the episode server."""

from __future__ import annotations

import argparse
import json
import socket
import sys
from pathlib import Path

import numpy as np

from . import data as bundled
from .env import Env, EnvConfig, episode_rollout, load_config, trace_to_jsonl
from .errors import (
    ContradictionError,
    LodegenError,
    PlacementFailedError,
    RetryBudgetExceededError,
)
from .grid_runner import load_manifest, parse_grid_config, run_grid
from .levels import parse_level, render_level
from .metrics import batch_evaluate, tp_kldiv
from .patterns import dump_json, exclude_rare, extract_patterns, learn_adjacency
from .playability import analyze
from .policies import (
    ESConfig,
    LinearPolicy,
    LinearPolicyParams,
    RemotePolicy,
    es_train,
    frequency_random_policy,
    greedy_lookahead_policy,
)
from .server import serve_stdio, serve_tcp


def _read_levels(paths):
    return [parse_level(Path(p).read_text(encoding="utf-8")) for p in paths]


def _resolve_inputs(args) -> list[str]:
    if getattr(args, "manifest", None):
        return load_manifest(bundled.manifest_path(args.manifest))
    return list(args.inputs)


def cmd_extract(args) -> int:
    paths = _resolve_inputs(args)
    try:
        grids = _read_levels(paths)
    except (OSError, LodegenError) as err:
        print(f"error reading inputs: {err}", file=sys.stderr)
        return 1
    ps = extract_patterns(grids, args.n)
    if args.exclude_rare:
        ps = exclude_rare(ps, keep_player_patterns=True)
    rules = learn_adjacency(ps, grids, args.adjacency)
    payload = dump_json(ps, rules)
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
    else:
        print(payload)
    print(f"patterns: {len(ps)}", file=sys.stderr)
    return 0


def _policy_from_spec(spec: str, env: Env):
    if spec == "random":
        return frequency_random_policy(env.patterns)
    if spec == "greedy":
        return greedy_lookahead_policy(env)
    if spec.startswith("es:"):
        params = LinearPolicyParams.load(spec[3:])
        return LinearPolicy(params, env.patterns)
    if spec.startswith("remote:tcp:"):
        host, _, port = spec[len("remote:tcp:"):].rpartition(":")
        conn = socket.create_connection((host or "127.0.0.1", int(port)))
        reader = conn.makefile("r", encoding="utf-8")
        writer = conn.makefile("w", encoding="utf-8")

        def transport(request: dict) -> dict:
            writer.write(json.dumps(request, separators=(",", ":")) + "\n")
            writer.flush()
            return json.loads(reader.readline())

        return RemotePolicy(transport)
    raise LodegenError(f"unknown policy spec: {spec!r}")


def _apply_overrides(cfg: EnvConfig, args) -> EnvConfig:
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "exclude_rare", False):
        cfg.exclude_rare = True
    if getattr(args, "random_collapse", False):
        cfg.random_collapse = True
    if getattr(args, "adjacency", None):
        cfg.adjacency_mode = args.adjacency
    return cfg.validate()


def cmd_generate(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    env = Env(cfg)
    policy = _policy_from_spec(args.policy, env)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    episodes = []
    failures = []
    for i in range(args.count):
        seed = int(np.random.SeedSequence((cfg.seed, i)).generate_state(1)[0])
        try:
            outcome, trace = episode_rollout(policy, env, seed)
        except (PlacementFailedError, RetryBudgetExceededError) as err:
            failures.append({"episode": i, "seed": seed, "cause": f"{type(err).__name__}: {err}"})
            continue
        (out / f"episode_{i:04d}.trace.jsonl").write_text(
            trace_to_jsonl(trace), encoding="utf-8"
        )
        if isinstance(outcome, ContradictionError):
            failures.append({"episode": i, "seed": seed, "cause": f"Contradiction: {outcome}"})
            episodes.append((outcome, trace))
            continue
        (out / f"level_{i:04d}.txt").write_bytes(render_level(outcome, "text"))
        episodes.append((outcome, trace))
    (out / "failures.json").write_text(
        json.dumps(failures, indent=2, sort_keys=True), encoding="utf-8"
    )
    if episodes:
        report = batch_evaluate(episodes, n=cfg.n)
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    print(f"episodes: {len(episodes)} completed={sum(1 for o, _ in episodes if not isinstance(o, ContradictionError))} failures={len(failures)}")
    return 0


def cmd_evaluate(args) -> int:
    reports = []
    for path in args.levels:
        grid = parse_level(Path(path).read_text(encoding="utf-8"))
        rep = analyze(grid)
        reports.append(
            {
                "level": str(path),
                "playable": rep.playable,
                "gold_total": rep.gold_total,
                "gold_reachable": rep.gold_reachable,
                "any_gold_reachable": rep.any_gold_reachable,
                "spawn": list(rep.spawn) if rep.spawn else None,
            }
        )
    print(json.dumps(reports, indent=2, sort_keys=True))
    return 0


def cmd_rank_companions(args) -> int:
    base = parse_level(Path(args.base).read_text(encoding="utf-8"))
    scored = []
    for path in sorted(Path(args.pool).glob("*.txt")):
        if Path(args.base).resolve() == path.resolve():
            continue
        grid = parse_level(path.read_text(encoding="utf-8"))
        score = (tp_kldiv(base, grid, args.n) + tp_kldiv(grid, base, args.n)) / 2
        scored.append({"level": str(path), "tp_kldiv": round(score, 6)})
    scored.sort(key=lambda r: r["tp_kldiv"])
    print(json.dumps(scored, indent=2, sort_keys=True))
    return 0


def cmd_train_es(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    env = Env(cfg)
    es = ESConfig(
        population=args.population,
        sigma=args.sigma,
        alpha=args.alpha,
        generations=args.generations,
        episodes_per_eval=args.episodes_per_eval,
        seed=cfg.seed,
    )
    params, curve = es_train(env, es)
    params.save(args.out)
    if args.curve:
        Path(args.curve).write_text(
            json.dumps(curve, indent=2, sort_keys=True), encoding="utf-8"
        )
    print(
        f"trained {es.generations} generations; "
        f"gen0 mean {curve[0]['mean_return']:.3f} -> final mean {curve[-1]['mean_return']:.3f}"
    )
    return 0


def cmd_run_grid(args) -> int:
    path = Path(args.grid)
    cfg = parse_grid_config(path.read_text(encoding="utf-8"), base_dir=path.parent)
    if args.seed is not None:
        cfg.master_seed = args.seed
    csv_path = run_grid(cfg, args.out)
    print(f"grid results: {csv_path}")
    return 0


def cmd_serve(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.transport == "stdio":
        serve_stdio(Env(cfg))
        return 0
    if args.transport.startswith("tcp:"):
        port = int(args.transport[4:])
        server = serve_tcp(lambda: Env(cfg), port)
        host, bound_port = server.server_address
        print(f"listening on {host}:{bound_port}", file=sys.stderr)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        return 0
    print(f"unknown transport {args.transport!r}", file=sys.stderr)
    return 1


def cmd_replay(args) -> int:
    cfg = load_config(args.config)
    env = Env(cfg)
    actions = json.loads(Path(args.actions).read_text(encoding="utf-8"))
    obs, mask, loc = env.reset(args.seed)
    print(json.dumps({"mask_popcount": int(mask.sum()), "loc": list(loc)}, separators=(",", ":")))
    for action in actions:
        result = env.step(int(action))
        print(
            json.dumps(
                {
                    "reward": result.reward,
                    "done": result.done,
                    "mask_popcount": int(result.mask.sum()),
                },
                separators=(",", ":"),
            )
        )
        if result.done:
            break
    return 0


def cmd_render(args) -> int:
    grid = parse_level(Path(args.level).read_text(encoding="utf-8"))
    png = render_level(grid, "image", scale=args.scale)
    Path(args.out).write_bytes(png)
    print(f"wrote {args.out} ({grid.width * args.scale}x{grid.height * args.scale} px)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lodegen",
        description="Constraint-learned Lode-Runner-style level generation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract patterns and adjacency rules")
    p.add_argument("inputs", nargs="*", help="level text files")
    p.add_argument("--manifest", choices=("si", "mi", "div_mi"), help="use a bundled input set")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--exclude-rare", action="store_true")
    p.add_argument("--adjacency", choices=("observed", "overlap"), default="observed")
    p.add_argument("--out", help="write the JSON dump here instead of stdout")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("generate", help="generate levels with a policy")
    p.add_argument("--config", required=True)
    p.add_argument("--policy", default="random", help="random | greedy | es:PARAMS.json | remote:tcp:HOST:PORT")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--exclude-rare", action="store_true")
    p.add_argument("--random-collapse", action="store_true")
    p.add_argument("--adjacency", choices=("observed", "overlap"))
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="playability report for levels")
    p.add_argument("levels", nargs="+")
    p.add_argument("--playability", action="store_true", default=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rank-companions", help="rank pool levels by divergence from a base level")
    p.add_argument("--base", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--n", type=int, default=3)
    p.set_defaults(func=cmd_rank_companions)

    p = sub.add_parser("train-es", help="train linear policy weights")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--curve", help="write per-generation returns here")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--population", type=int, default=16)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--generations", type=int, default=12)
    p.add_argument("--episodes-per-eval", type=int, default=6)
    p.add_argument("--exclude-rare", action="store_true")
    p.add_argument("--random-collapse", action="store_true")
    p.add_argument("--adjacency", choices=("observed", "overlap"))
    p.set_defaults(func=cmd_train_es)

    p = sub.add_parser("run-grid", help="run the 12-cell ablation grid")
    p.add_argument("--grid", required=True, help="grid config file")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_run_grid)

    p = sub.add_parser("serve", help="serve episodes over NDJSON frames")
    p.add_argument("--config", required=True)
    p.add_argument("--transport", default="stdio", help="stdio | tcp:PORT")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="replay an action list and print rewards")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--actions", required=True, help="JSON list of action ids")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("render", help="render a level to PNG")
    p.add_argument("level")
    p.add_argument("--out", required=True)
    p.add_argument("--scale", type=int, default=8)
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LodegenError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Headless command line: train, oracle, experiment, inspect, serve.

Everything except `serve` runs without a server or browser; given the
same flags and seed, outputs are byte-identical across runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from . import bridge as bridge_mod
from . import experiment as experiment_mod
from . import learn, maze
from .learn import Hyperparams, QTable, VisitCounts
from .maze import Action, MazeConfig
from .rng import CountedRng
from .session import Session, SnapshotError, dump_canonical

ARROWS = {Action.UP: "^", Action.DOWN: "v", Action.LEFT: "<", Action.RIGHT: ">"}

ENV_HOST = "QCOACH_HOST"
ENV_PORT = "QCOACH_PORT"
ENV_BRIDGE_URL = "QCOACH_BRIDGE_URL"
ENV_STEP_INTERVAL_MS = "QCOACH_STEP_INTERVAL_MS"


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (maze.MazeError, SnapshotError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcoach",
        description="Treasure-hunt Q-learning: batch training, oracle solving, "
        "teaching experiments, snapshot inspection, live serving.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run headless Q-learning episodes")
    _add_config_flag(p_train)
    p_train.add_argument("--episodes", type=int, default=1000)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--alpha", type=float, default=0.05)
    p_train.add_argument("--gamma", type=float, default=0.9)
    p_train.add_argument("--epsilon", type=float, default=0.3)
    p_train.add_argument("--out", required=True, help="session snapshot path (.json); the learning "
                         "curve lands next to it as <out>.curve.csv")
    p_train.add_argument("--bridge", default=None, help="drive a robot bridge at this URL too")
    p_train.set_defaults(func=cmd_train)

    p_oracle = sub.add_parser("oracle", help="solve the maze by value iteration")
    _add_config_flag(p_oracle)
    p_oracle.add_argument("--gamma", type=float, default=0.9)
    p_oracle.add_argument("--tol", type=float, default=1e-8)
    p_oracle.add_argument("--out", required=True, help="Q-table export path (.json)")
    p_oracle.set_defaults(func=cmd_oracle)

    p_exp = sub.add_parser("experiment", help="advised vs autonomous sample complexity")
    _add_config_flag(p_exp)
    p_exp.add_argument("--num-seeds", type=int, default=50)
    p_exp.add_argument("--seed-base", type=int, default=0)
    p_exp.add_argument("--episodes", type=int, default=300, help="episode cap per arm")
    p_exp.add_argument("--advice-episodes", type=int, default=10, help="teacher advises this many first episodes")
    p_exp.add_argument("--advice-probability", type=float, default=1.0)
    p_exp.add_argument("--alpha", type=float, default=0.05)
    p_exp.add_argument("--gamma", type=float, default=0.9)
    p_exp.add_argument("--epsilon", type=float, default=0.3)
    p_exp.add_argument("--out", required=True, help="report CSV path; per-episode curves land "
                       "next to it as <out>.curves.csv")
    p_exp.set_defaults(func=cmd_experiment)

    p_inspect = sub.add_parser("inspect", help="pretty-print a snapshot or Q-table export")
    p_inspect.add_argument("path")
    p_inspect.set_defaults(func=cmd_inspect)

    p_serve = sub.add_parser("serve", help="launch the session server plus a bridge simulator")
    _add_config_flag(p_serve)
    p_serve.add_argument("--host", default=None)
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--bridge", default=None, help="use this bridge URL instead of simulating one")
    p_serve.add_argument("--bridge-port", type=int, default=0, help="port for the simulated bridge (0 = ephemeral)")
    p_serve.add_argument("--step-interval-ms", type=int, default=None)
    p_serve.add_argument("--no-bridge", action="store_true", help="do not launch or use any bridge")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def _add_config_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="maze config JSON (defaults to the built-in 3x3 layout)")


def _load_config(args) -> MazeConfig:
    if args.config is None:
        return MazeConfig()
    return maze.load_config(args.config)


def cmd_train(args) -> int:
    config = _load_config(args)
    hp = Hyperparams(alpha=args.alpha, gamma=args.gamma, epsilon=args.epsilon)
    if args.bridge:
        session = Session(config, hp, seed=args.seed, step_interval_ms=0, bridge_url=args.bridge)
        while session.loop.episode_index < args.episodes:
            if session.loop.run_cycle() == "parked":
                raise RuntimeError("headless training should never park")
    else:
        session = Session(config, hp, seed=args.seed, step_interval_ms=0)
        rng = session.loop.rng
        for i in range(args.episodes):
            log = learn.run_episode(config, session.loop.q, session.loop.counts, hp, rng, episode_index=i)
            session.loop.episodes.append(log)
        session.loop.episode_index = args.episodes
    session.save(args.out)
    curve_path = args.out + ".curve.csv"
    learn.write_learning_curve(curve_path, session.loop.episodes)
    print(f"trained {args.episodes} episodes (seed {args.seed})")
    print(f"snapshot: {args.out}")
    print(f"learning curve: {curve_path}")
    return 0


def cmd_oracle(args) -> int:
    config = _load_config(args)
    q = learn.value_iteration(config, args.gamma, tol=args.tol)
    hp = Hyperparams(alpha=0.05, gamma=args.gamma, epsilon=0.0)
    payload = learn.export_qtable(q, VisitCounts.for_config(config), hp, config, seed=None)
    learn.save_qtable(args.out, payload)
    trace = learn.greedy_trace(q, config)
    cells = " -> ".join(f"({s.pos.row},{s.pos.col})" for s, _, _ in trace)
    final = trace[-1][2].next.pos if trace else config.start
    print(f"oracle solved in {len(trace)} greedy steps: {cells} -> ({final.row},{final.col})")
    print(f"export: {args.out}")
    return 0


def cmd_experiment(args) -> int:
    config = _load_config(args)
    spec = experiment_mod.ExperimentSpec(
        config=config,
        seeds=list(range(args.seed_base, args.seed_base + args.num_seeds)),
        episodes=args.episodes,
        teacher=experiment_mod.OracleAdviceSpec(
            first_k_episodes=args.advice_episodes,
            advice_probability=args.advice_probability,
        ),
        hp=Hyperparams(alpha=args.alpha, gamma=args.gamma, epsilon=args.epsilon),
    )
    report = experiment_mod.run_experiment(spec)
    experiment_mod.write_report_csv(args.out, report)
    experiment_mod.write_curves_csv(args.out + ".curves.csv", report)
    for line in report.summary_lines():
        print(line)
    print(f"report: {args.out}")
    return 0


def cmd_inspect(args) -> int:
    try:
        with open(args.path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        print(f"error: cannot parse {args.path}: {exc.msg} at byte {exc.pos}", file=sys.stderr)
        return 1
    kind = data.get("kind")
    if kind == "session":
        return _inspect_session(data)
    if kind == "qtable":
        return _inspect_qtable(data)
    print(f"error: {args.path} is neither a session snapshot nor a Q-table export", file=sys.stderr)
    return 1


def _inspect_session(data: dict) -> int:
    config = MazeConfig.from_dict(data["config"])
    q = QTable.from_lists(data["qtable"])
    counts = VisitCounts.from_lists(data["visit_counts"])
    hp = data["hyperparams"]
    print(f"session snapshot (schema v{data['schema_version']})")
    print(f"hyperparams: alpha={hp['alpha']} gamma={hp['gamma']} epsilon={hp['epsilon']}")
    print(f"rng: seed={data['rng']['seed']} draws={data['rng']['draws']}")
    _print_tables(config, q, counts)
    episodes = data.get("episodes", [])
    completed = [e for e in episodes if not e["aborted"]]
    print(f"episodes: {len(completed)} completed, {len(episodes) - len(completed)} aborted")
    for e in completed[-10:]:
        print(
            f"  #{e['episode_index']:>4}  score {e['score']:>8.1f}  steps {len(e['records']):>3}  "
            f"treasure {'yes' if e['found_treasure'] else 'no ':<3} ended {e['terminated_by']}"
        )
    return 0


def _inspect_qtable(data: dict) -> int:
    config = MazeConfig.from_dict(data["config"])
    q = QTable.from_lists(data["values"])
    counts = VisitCounts.from_lists(data["visit_counts"])
    hp = data["hyperparams"]
    print(f"Q-table export (schema v{data['schema_version']}, config {data['config_digest']})")
    print(f"hyperparams: alpha={hp['alpha']} gamma={hp['gamma']} epsilon={hp['epsilon']}")
    _print_tables(config, q, counts)
    return 0


def _print_tables(config: MazeConfig, q: QTable, counts: VisitCounts) -> None:
    policy = learn.greedy_policy(q, config)
    for flag, label in ((False, "before treasure"), (True, "after treasure")):
        print(f"greedy arrows, {label} (cell value = best Q):")
        for row in range(config.height):
            line = []
            for col in range(config.width):
                state = maze.EnvState(maze.GridPos(row, col), flag)
                s = maze.state_index(state, config)
                if maze.GridPos(row, col) == config.exit:
                    line.append("  [exit]  ")
                    continue
                best = max(float(q.values[s][a]) for a in maze.legal_actions(state, config))
                line.append(f" {ARROWS[policy[s]]}{best:>7.2f} ")
            print("   " + "|".join(line))
    trace = learn.greedy_trace(q, config)
    if trace and trace[-1][2].next.pos == config.exit:
        path = " -> ".join(f"({s.pos.row},{s.pos.col})" for s, _, _ in trace)
        print(f"greedy path: {path} -> ({config.exit.row},{config.exit.col})")
    print("visit counts (sum over actions, before/after treasure):")
    for row in range(config.height):
        line = []
        for col in range(config.width):
            cell = row * config.width + col
            total = int(counts.counts[cell].sum() + counts.counts[cell + config.num_cells].sum())
            line.append(f"{total:>6}")
        print("   " + " ".join(line))
    marks = {config.start: "start", config.treasure: "treasure", config.exit: "exit"}
    print("layout: " + ", ".join(f"{name}=({p.row},{p.col})" for p, name in marks.items()))
    if config.walls:
        walls = "; ".join(
            f"({w.a.row},{w.a.col})-({w.b.row},{w.b.col})"
            for w in sorted(config.walls, key=lambda w: (w.a, w.b))
        )
        print(f"walls: {walls}")


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app
    from .session import DEFAULT_STEP_INTERVAL_MS, SessionManager

    config = _load_config(args)
    host = args.host or os.environ.get(ENV_HOST, "127.0.0.1")
    port = args.port if args.port is not None else int(os.environ.get(ENV_PORT, "8000"))
    interval = (
        args.step_interval_ms
        if args.step_interval_ms is not None
        else int(os.environ.get(ENV_STEP_INTERVAL_MS, str(DEFAULT_STEP_INTERVAL_MS)))
    )

    bridge_server = None
    bridge_url = None
    if not args.no_bridge:
        bridge_url = args.bridge or os.environ.get(ENV_BRIDGE_URL)
        if bridge_url is None:
            bridge_server = bridge_mod.serve(config, host=host, port=args.bridge_port)
            bridge_url = bridge_server.url
            print(f"bridge simulator: {bridge_url}")
        else:
            print(f"using bridge: {bridge_url}")

    app = create_app(
        SessionManager(), default_bridge_url=bridge_url, default_step_interval_ms=interval
    )
    print(f"session server: http://{host}:{port}")
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        if bridge_server is not None:
            bridge_server.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())

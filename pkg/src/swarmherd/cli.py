"""Command-line interface: train, evaluate, simulate, sweep, inspect.

Configuration comes from an INI file with sections [graph], [env],
[learner], [train], [sweep]; unknown sections or keys are rejected.
Overrides apply last-wins: config file < SWHERD_* environment variables <
command-line flags. All data files are written atomically and contain no
timestamps, so repeated invocations with the same seed are byte-identical;
timestamps live only in the .meta.json sidecar.

Exit codes: 0 ok, 2 configuration error, 3 I/O failure, 4 table/environment
compatibility error.
"""

from __future__ import annotations

import argparse
import configparser
import copy
import json
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .environment import (
    Action,
    EnvConfig,
    HerdingEnv,
    format_float,
    mse,
    reward,
    trace_header,
    trace_row,
)
from .errors import CompatibilityError, ConfigError
from .harness import (
    SweepCell,
    TrainConfig,
    check_compatible,
    derive_seed,
    evaluate,
    sweep,
    train,
)
from .learner import (
    LearnerConfig,
    load_qtable,
    save_qtable,
    select_action_index,
    sidecar_path,
)

ENV_PREFIX = "SWHERD_"


# ---------------------------------------------------------------------------
# Configuration file handling
# ---------------------------------------------------------------------------

def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(x.strip()) for x in text.split(","))


def _parse_ints(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(x.strip()) for x in text.split(","))


def _parse_strs(text: str) -> tuple[str, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(x.strip() for x in text.split(","))


SCHEMA = {
    "graph": {"rows": int, "cols": int},
    "env": {
        "num_agents": int,
        "beta": float,
        "bins": int,
        "mu": float,
        "backend": str,
        "max_iterations": int,
        "initial_dist": _parse_floats,
        "target_dist": _parse_floats,
    },
    "learner": {
        "algorithm": str,
        "alpha": float,
        "gamma": float,
        "epsilon": float,
        "epsilon_decay": _parse_bool,
        "epsilon_final": float,
    },
    "train": {"episodes": int, "max_iters": int, "seed": int},
    "sweep": {
        "name": str,
        "algorithms": _parse_strs,
        "n_train": _parse_ints,
        "n_test": _parse_ints,
        "betas": _parse_floats,
        "mus": _parse_floats,
        "bins": _parse_ints,
        "runs": int,
        "eval_max_iters": int,
        "epsilon_eval": float,
        "episodes": int,
        "max_iters": int,
    },
}

# Replicates the headline experiment: 2x2 grid, 100 agents, beta 0.1,
# 10 bins, mu 0.0025, 5000 episodes of up to 5000 iterations.
DEFAULTS = {
    "graph": {"rows": 2, "cols": 2},
    "env": {
        "num_agents": 100,
        "beta": 0.1,
        "bins": 10,
        "mu": 0.0025,
        "backend": "dtmc",
        "max_iterations": 5000,
        "initial_dist": (0.4, 0.1, 0.1, 0.4),
        "target_dist": (0.1, 0.4, 0.4, 0.1),
    },
    "learner": {
        "algorithm": "qlearning",
        "alpha": 0.3,
        "gamma": 0.9,
        "epsilon": 0.1,
        "epsilon_decay": False,
        "epsilon_final": 0.01,
    },
    "train": {"episodes": 5000, "max_iters": 5000, "seed": 12345},
    "sweep": {
        "name": "sweep",
        "algorithms": ("qlearning",),
        "n_train": (100,),
        "n_test": (),
        "betas": (0.1,),
        "mus": (0.0025,),
        "bins": (10,),
        "runs": 1000,
        "eval_max_iters": 1000,
        "epsilon_eval": 0.0,
        "episodes": 0,  # 0 means: use [train] episodes
        "max_iters": 0,  # 0 means: use [train] max_iters
    },
}


def load_config(path: str | None) -> dict:
    """Parse the config file over the defaults, then apply SWHERD_* variables."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}] in {path}")
            for key, raw in parser.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key '{key}' in section [{section}]")
                try:
                    cfg[section][key] = SCHEMA[section][key](raw)
                except ValueError as exc:
                    raise ConfigError(f"bad value for {section}.{key}: {exc}") from None
    for name, raw in sorted(os.environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        section, _, key = rest.partition("_")
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown environment override {name}")
        try:
            cfg[section][key] = SCHEMA[section][key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {name}: {exc}") from None
    return cfg


def build_env_config(cfg: dict, num_agents: int | None = None, backend: str | None = None) -> EnvConfig:
    env = cfg["env"]
    return EnvConfig(
        rows=cfg["graph"]["rows"],
        cols=cfg["graph"]["cols"],
        num_agents=env["num_agents"] if num_agents is None else num_agents,
        beta=env["beta"],
        bins=env["bins"],
        mu=env["mu"],
        initial_dist=env["initial_dist"],
        target_dist=env["target_dist"],
        max_iterations=env["max_iterations"],
        backend=env["backend"] if backend is None else backend,
    )


def build_learner_config(cfg: dict) -> LearnerConfig:
    lrn = cfg["learner"]
    return LearnerConfig(
        alpha=lrn["alpha"],
        gamma=lrn["gamma"],
        epsilon=lrn["epsilon"],
        algorithm=lrn["algorithm"],
        epsilon_decay=lrn["epsilon_decay"],
        epsilon_final=lrn["epsilon_final"],
    )


def build_train_config(cfg: dict, backend: str | None = None) -> TrainConfig:
    return TrainConfig(
        env=build_env_config(cfg, backend=backend),
        learner=build_learner_config(cfg),
        episodes=cfg["train"]["episodes"],
        max_iters_per_episode=cfg["train"]["max_iters"],
        seed=cfg["train"]["seed"],
    )


def expand_sweep(cfg: dict, master_seed: int) -> list[SweepCell]:
    """Cartesian sweep grid in algorithm, n_train, beta, mu, bins, n_test order.

    Cells with the same training parameters (differing only in n_test) share
    one training seed so the trained table is reused across test populations.
    """
    sw = cfg["sweep"]
    episodes = sw["episodes"] or cfg["train"]["episodes"]
    max_iters = sw["max_iters"] or cfg["train"]["max_iters"]
    base_env = build_env_config(cfg)
    base_learner = build_learner_config(cfg)
    cells = []
    index = 0
    group = 0
    for algorithm in sw["algorithms"]:
        for n_train in sw["n_train"]:
            for beta in sw["betas"]:
                for mu_value in sw["mus"]:
                    for bins in sw["bins"]:
                        env = replace(
                            base_env, num_agents=n_train, beta=beta, mu=mu_value, bins=bins
                        )
                        learner = replace(base_learner, algorithm=algorithm)
                        train_cfg = TrainConfig(
                            env=env,
                            learner=learner,
                            episodes=episodes,
                            max_iters_per_episode=max_iters,
                            seed=derive_seed(master_seed, 0, group),
                        )
                        group += 1
                        for n_test in sw["n_test"] or (n_train,):
                            cells.append(SweepCell(index, train_cfg, n_test))
                            index += 1
    return cells


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

RUNS_HEADER = "cell,run,converged,iterations,final_mse,seed"
AGGREGATE_HEADER = "algorithm,N_train,N_test,beta,mu,D,mean_iters,std_iters,conv_rate,runs"


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _save_table_atomic(table, path: Path, extra_meta: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    save_qtable(table, tmp, extra_meta)
    os.replace(tmp, path)
    os.replace(sidecar_path(tmp), sidecar_path(path))


def _run_line(cell: int, record) -> str:
    return (
        f"{cell},{record.run},{'true' if record.converged else 'false'},"
        f"{record.iterations},{format_float(record.final_mse)},{record.seed}"
    )


def _aggregate_line(algorithm, n_train, n_test, beta, mu_value, bins,
                    mean_iters, std_iters, conv_rate, runs) -> str:
    return (
        f"{algorithm},{n_train},{n_test},{format_float(beta)},{format_float(mu_value)},{bins},"
        f"{format_float(mean_iters)},{format_float(std_iters)},"
        f"{format_float(conv_rate)},{runs}"
    )


def _row_key(algorithm, n_train, n_test, beta, mu, bins) -> tuple[str, ...]:
    return (str(algorithm), str(n_train), str(n_test), format_float(beta), format_float(mu), str(bins))


def _training_meta(tc: TrainConfig) -> dict:
    return {
        "training": {
            "algorithm": tc.learner.algorithm,
            "alpha": tc.learner.alpha,
            "gamma": tc.learner.gamma,
            "epsilon": tc.learner.epsilon,
            "epsilon_decay": tc.learner.epsilon_decay,
            "epsilon_final": tc.learner.epsilon_final,
            "beta": tc.env.beta,
            "mu": tc.env.mu,
            "num_agents": tc.env.num_agents,
            "bins": tc.env.bins,
            "rows": tc.env.rows,
            "cols": tc.env.cols,
            "backend": tc.env.backend,
            "initial_dist": list(tc.env.initial_dist),
            "target_dist": list(tc.env.target_dist),
            "episodes": tc.episodes,
            "max_iters_per_episode": tc.max_iters_per_episode,
            "seed": tc.seed,
        },
        "created_at": datetime.now(timezone.utc).isoformat(),
    }


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["train"]["seed"] = args.seed
    train_cfg = build_train_config(cfg, backend=args.backend)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = train(train_cfg)
    table_path = out / "qtable.swhq"
    _save_table_atomic(result.table, table_path, _training_meta(train_cfg))
    log_lines = ["episode,length,cumulative_reward"]
    log_lines += [
        f"{s.episode},{s.length},{format_float(s.cumulative_reward)}" for s in result.episodes
    ]
    _write_atomic(out / "train_log.csv", "\n".join(log_lines) + "\n")
    tail = result.episodes[-100:]
    mean_len = sum(s.length for s in tail) / len(tail)
    print(f"trained {train_cfg.learner.algorithm} for {train_cfg.episodes} episodes")
    print(f"mean episode length over last {len(tail)} episodes: {mean_len:.1f}")
    print(f"wrote {table_path}")
    return 0


def cmd_evaluate(args) -> int:
    table = load_qtable(args.table)
    cfg = load_config(args.config)
    seed = cfg["train"]["seed"] if args.seed is None else args.seed
    env_cfg = build_env_config(cfg, num_agents=args.n_test, backend=args.backend)
    records, agg = evaluate(
        table,
        env_cfg,
        runs=args.runs,
        eval_max_iters=args.eval_max_iters,
        epsilon_eval=args.epsilon_eval,
        seed=seed,
    )
    try:
        meta = json.loads(sidecar_path(args.table).read_text()).get("training", {})
    except (OSError, json.JSONDecodeError):
        meta = {}
    algorithm = meta.get("algorithm", "unknown")
    n_train = meta.get("num_agents", 0)
    out = Path(args.out_dir)
    runs_lines = [RUNS_HEADER] + [_run_line(0, r) for r in records]
    _write_atomic(out / "eval_runs.csv", "\n".join(runs_lines) + "\n")
    agg_line = _aggregate_line(
        algorithm, n_train, env_cfg.num_agents, env_cfg.beta, env_cfg.mu, env_cfg.bins,
        agg.mean_iterations, agg.std_iterations, agg.convergence_rate, agg.runs,
    )
    _write_atomic(out / "eval_aggregate.csv", AGGREGATE_HEADER + "\n" + agg_line + "\n")
    print(
        f"runs={agg.runs} mean_iterations={format_float(agg.mean_iterations)} "
        f"std_iterations={format_float(agg.std_iterations)} "
        f"convergence_rate={format_float(agg.convergence_rate)}"
    )
    return 0


def render_frame(env: HerdingEnv, iteration, action, followers, leader, mse_value) -> str:
    """Plain-text frame: the grid with per-cell occupancy and a leader marker."""
    cfg = env.cfg
    arr = np.asarray(followers)
    if np.issubdtype(arr.dtype, np.integer):
        labels = [str(int(x)) for x in arr]
    else:
        labels = [f"{float(x):.3f}" for x in arr]
    width = max(len(s) for s in labels) + 2
    name = Action(action).label if action is not None else "-"
    lines = [
        f"k={iteration} action={name} leader=v{leader.vertex} flag={leader.flag} "
        f"mse={format_float(mse_value)}"
    ]
    border = "+" + "+".join("-" * (width + 1) for _ in range(cfg.cols)) + "+"
    lines.append(border)
    for r in range(cfg.rows):
        cells = []
        for c in range(cfg.cols):
            v = r * cfg.cols + c
            marker = "L" if v == leader.vertex else " "
            cells.append(f"{marker}{labels[v]:>{width}}")
        lines.append("|" + "|".join(cells) + "|")
        lines.append(border)
    lines.append("target: " + " ".join(format_float(x) for x in cfg.target_dist))
    return "\n".join(lines)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    seed = cfg["train"]["seed"] if args.seed is None else args.seed
    env_cfg = build_env_config(cfg, backend=args.backend)
    table = None
    if args.policy == "greedy":
        if args.table is None:
            raise ConfigError("greedy policy needs a table path (or use --policy random)")
        table = load_qtable(args.table)
        check_compatible(table, env_cfg)
    env = HerdingEnv(env_cfg)
    rng = np.random.default_rng(seed)
    followers, leader = env.reset(rng)
    density = env.observe(followers)
    lines = [trace_header(env_cfg)]
    r0 = reward(density, env.target)
    m0 = mse(density, env.target)
    terminal = m0 < env_cfg.mu
    lines.append(trace_row(0, leader, None, followers, r0, m0, terminal))
    frames = [render_frame(env, 0, None, followers, leader, m0)] if args.frames else []
    for k in range(1, env_cfg.max_iterations + 1):
        if terminal:
            break
        valid = env.actions[leader.vertex]
        if table is None:
            action = valid[int(rng.integers(len(valid)))]
        else:
            s = env.state_index(followers, leader.vertex)
            action = select_action_index(table.values, s, valid, args.epsilon_eval, rng)
        followers, leader, r, terminal = env.step(followers, leader, action, rng)
        m = env.mse_to_target(followers)
        lines.append(trace_row(k, leader, action, followers, r, m, terminal))
        if args.frames:
            frames.append(render_frame(env, k, action, followers, leader, m))
    out = Path(args.out_dir)
    _write_atomic(out / "trace.csv", "\n".join(lines) + "\n")
    if args.frames:
        print("\n\n".join(frames))
    print(f"wrote {out / 'trace.csv'} ({len(lines) - 1} iterations)")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    master_seed = cfg["train"]["seed"] if args.seed is None else args.seed
    cells = expand_sweep(cfg, master_seed)
    if not cells:
        raise ConfigError("sweep grid is empty")
    sw = cfg["sweep"]
    out = Path(args.out_dir)
    agg_path = out / f"{sw['name']}_aggregate.csv"
    runs_path = out / f"{sw['name']}_runs.csv"

    def cell_key(cell: SweepCell) -> tuple[str, ...]:
        t = cell.train
        return _row_key(
            t.learner.algorithm, t.env.num_agents, cell.n_test, t.env.beta, t.env.mu, t.env.bins
        )

    done_rows: dict[tuple[str, ...], str] = {}
    done_runs: dict[int, list[str]] = {}
    if args.resume and agg_path.exists():
        for line in agg_path.read_text().splitlines()[1:]:
            parts = line.split(",")
            done_rows[tuple(parts[:6])] = line
        if runs_path.exists():
            for line in runs_path.read_text().splitlines()[1:]:
                done_runs.setdefault(int(line.split(",", 1)[0]), []).append(line)
    pending = [c for c in cells if cell_key(c) not in done_rows]
    if pending:
        rows, records = sweep(
            pending,
            runs=sw["runs"],
            eval_max_iters=sw["eval_max_iters"],
            epsilon_eval=sw["epsilon_eval"],
            master_seed=master_seed,
            jobs=args.jobs,
        )
    else:
        rows, records = [], []
    produced = {r.index: r for r in rows}
    agg_lines = [AGGREGATE_HEADER]
    run_lines = []
    for cell in cells:
        if cell.index in produced:
            r = produced[cell.index]
            agg_lines.append(
                _aggregate_line(
                    r.algorithm, r.n_train, r.n_test, r.beta, r.mu, r.bins,
                    r.mean_iterations, r.std_iterations, r.convergence_rate, r.runs,
                )
            )
        elif cell_key(cell) in done_rows:
            agg_lines.append(done_rows[cell_key(cell)])
            run_lines.extend(done_runs.get(cell.index, []))
    for index, record in records:
        run_lines.append(_run_line(index, record))
    # Re-sort the per-run section by (cell, run) so resumed output matches a
    # from-scratch invocation byte for byte.
    run_lines.sort(key=lambda s: (int(s.split(",")[0]), int(s.split(",")[1])))
    _write_atomic(agg_path, "\n".join(agg_lines) + "\n")
    _write_atomic(runs_path, "\n".join([RUNS_HEADER] + run_lines) + "\n")
    print(f"wrote {agg_path} ({len(agg_lines) - 1} cells)")
    return 0


def cmd_inspect(args) -> int:
    table = load_qtable(args.table)
    values = table.values
    nonzero = int(np.count_nonzero(values))
    print(f"magic: SWHQ  version: 1")
    print(
        f"grid: {table.rows}x{table.cols}  vertices: {table.num_vertices}  "
        f"bins: {table.bins}  actions: {table.num_actions}"
    )
    print(f"states: {table.state_count}  entries: {values.size}")
    print(
        f"min: {format_float(values.min())}  max: {format_float(values.max())}  "
        f"mean: {format_float(values.mean())}"
    )
    print(f"nonzero entries: {nonzero} ({nonzero / values.size:.1%})")
    meta_file = sidecar_path(args.table)
    if meta_file.exists():
        print(f"sidecar: {meta_file}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing and dispatch
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides [train] seed)")
    p.add_argument("--out-dir", default=".", help="directory for output artifacts")
    p.add_argument("--backend", choices=["dtmc", "mean-field"], default=None,
                   help="follower backend override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmherd",
        description="Train and evaluate leader policies that herd a swarm to a target distribution.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a leader policy and write the Q-table")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a trained table over many runs")
    p.add_argument("table", help="path to a .swhq table file")
    _add_common(p)
    p.add_argument("--runs", type=int, default=1000, help="number of evaluation episodes")
    p.add_argument("--eval-max-iters", type=int, default=1000,
                   help="iteration cap per evaluation episode")
    p.add_argument("--epsilon-eval", type=float, default=0.0,
                   help="exploration rate during evaluation (default: pure greedy)")
    p.add_argument("--n-test", type=int, default=None,
                   help="evaluate with this agent count instead of the configured one")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="trace a single episode to CSV")
    p.add_argument("table", nargs="?", default=None, help="table for the greedy policy")
    _add_common(p)
    p.add_argument("--policy", choices=["greedy", "random"], default="greedy")
    p.add_argument("--epsilon-eval", type=float, default=0.0)
    p.add_argument("--frames", action="store_true", help="print a text frame per iteration")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="train and evaluate a grid of configurations")
    _add_common(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel training workers")
    p.add_argument("--resume", action="store_true",
                   help="skip cells already present in the aggregate output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("inspect", help="print a table's header and summary statistics")
    p.add_argument("table")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CompatibilityError as exc:
        print(f"compatibility error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())

"""Training and evaluation protocols: episode loops, multi-run statistics,
and hyperparameter sweeps (with optional cross-population testing).

Everything is deterministic for a fixed seed: per-run streams derive from
(master seed, cell index, run index) through numpy's SeedSequence, so
results do not depend on scheduling or on how a sweep is split up.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .environment import EnvConfig, HerdingEnv
from .errors import CompatibilityError, ConfigError
from .learner import (
    LearnerConfig,
    QTable,
    max_action_value,
    select_action_index,
)


def derive_seed(*path: int) -> int:
    """Deterministic 64-bit seed from a tuple of integers."""
    return int(np.random.SeedSequence(tuple(int(x) for x in path)).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class TrainConfig:
    env: EnvConfig
    learner: LearnerConfig
    episodes: int
    max_iters_per_episode: int
    seed: int

    def __post_init__(self):
        if self.episodes < 1:
            raise ConfigError("episodes must be at least 1")
        if self.max_iters_per_episode < 1:
            raise ConfigError("max_iters_per_episode must be at least 1")


@dataclass(frozen=True)
class EpisodeStats:
    episode: int
    length: int
    cumulative_reward: float


@dataclass(frozen=True)
class TrainResult:
    table: QTable
    episodes: list[EpisodeStats]


@dataclass(frozen=True)
class RunRecord:
    run: int
    converged: bool
    iterations: int
    final_mse: float
    seed: int


@dataclass(frozen=True)
class EvalAggregate:
    mean_iterations: float
    std_iterations: float
    convergence_rate: float
    runs: int


@dataclass(frozen=True)
class SweepCell:
    """One sweep grid point: a training configuration evaluated at n_test agents."""

    index: int
    train: TrainConfig
    n_test: int


@dataclass(frozen=True)
class SweepRow:
    """Aggregate outcome for one sweep cell."""

    index: int
    algorithm: str
    n_train: int
    n_test: int
    beta: float
    mu: float
    bins: int
    mean_iterations: float
    std_iterations: float
    convergence_rate: float
    runs: int


def train(cfg: TrainConfig) -> TrainResult:
    """Run the episodic training loop and return the table plus per-episode stats.

    Each episode resets the environment, then alternates ε-greedy action
    selection, an environment step, and a TD update until the terminal test
    fires or the per-episode iteration cap is hit. SARSA bootstraps from the
    action actually selected at the successor; Q-Learning from the best
    valid successor action. Deterministic for a fixed seed.
    """
    env = HerdingEnv(cfg.env)
    table = QTable.zeros(cfg.env.bins, cfg.env.rows, cfg.env.cols)
    rng = np.random.default_rng(cfg.seed)
    if cfg.learner.algorithm == "sarsa":
        stats = _train_sarsa(env, table, cfg, rng)
    else:
        stats = _train_qlearning(env, table, cfg, rng)
    return TrainResult(table, stats)


def _train_sarsa(env, table, cfg, rng) -> list[EpisodeStats]:
    values = table.values
    alpha = cfg.learner.alpha
    gamma = cfg.learner.gamma
    max_iters = cfg.max_iters_per_episode
    actions = env.actions
    stats = []
    for episode in range(cfg.episodes):
        epsilon = cfg.learner.episode_epsilon(episode, cfg.episodes)
        followers, leader = env.reset(rng)
        total = 0.0
        length = 0
        if env.mse_to_target(followers) < cfg.env.mu:
            stats.append(EpisodeStats(episode, 0, 0.0))
            continue
        s = env.state_index(followers, leader.vertex)
        a = select_action_index(values, s, actions[leader.vertex], epsilon, rng)
        for t in range(1, max_iters + 1):
            followers, leader, r, terminal = env.step(followers, leader, a, rng)
            total += r
            length = t
            if terminal:
                values[s, a] += alpha * (r - values[s, a])
                break
            s2 = env.state_index(followers, leader.vertex)
            a2 = select_action_index(values, s2, actions[leader.vertex], epsilon, rng)
            values[s, a] += alpha * (r + gamma * values[s2, a2] - values[s, a])
            s, a = s2, a2
        stats.append(EpisodeStats(episode, length, total))
    return stats


def _train_qlearning(env, table, cfg, rng) -> list[EpisodeStats]:
    values = table.values
    alpha = cfg.learner.alpha
    gamma = cfg.learner.gamma
    max_iters = cfg.max_iters_per_episode
    actions = env.actions
    stats = []
    for episode in range(cfg.episodes):
        epsilon = cfg.learner.episode_epsilon(episode, cfg.episodes)
        followers, leader = env.reset(rng)
        total = 0.0
        length = 0
        if env.mse_to_target(followers) < cfg.env.mu:
            stats.append(EpisodeStats(episode, 0, 0.0))
            continue
        s = env.state_index(followers, leader.vertex)
        for t in range(1, max_iters + 1):
            a = select_action_index(values, s, actions[leader.vertex], epsilon, rng)
            followers, leader, r, terminal = env.step(followers, leader, a, rng)
            total += r
            length = t
            if terminal:
                values[s, a] += alpha * (r - values[s, a])
                break
            s2 = env.state_index(followers, leader.vertex)
            values[s, a] += alpha * (
                r + gamma * max_action_value(values, s2, actions[leader.vertex]) - values[s, a]
            )
            s = s2
        stats.append(EpisodeStats(episode, length, total))
    return stats


def check_compatible(table: QTable, env_cfg: EnvConfig) -> None:
    """Raise CompatibilityError unless the table can drive this environment."""
    if (
        table.rows != env_cfg.rows
        or table.cols != env_cfg.cols
        or table.bins != env_cfg.bins
        or table.num_vertices != env_cfg.num_vertices
    ):
        raise CompatibilityError(
            f"table (grid {table.rows}x{table.cols}, bins {table.bins}) does not match "
            f"environment (grid {env_cfg.rows}x{env_cfg.cols}, bins {env_cfg.bins})"
        )


def evaluate(
    table: QTable,
    env_cfg: EnvConfig,
    runs: int,
    eval_max_iters: int = 1000,
    epsilon_eval: float = 0.0,
    seed: int = 0,
) -> tuple[list[RunRecord], EvalAggregate]:
    """Run independent greedy (or ε-greedy) episodes with a frozen table.

    Runs that fail to converge within eval_max_iters are recorded at the cap
    and included in the mean; the convergence rate reports the censoring.
    Discretization makes the table agnostic to the agent count, so env_cfg
    may use a different population than the table was trained on.
    """
    if runs < 1:
        raise ConfigError("runs must be at least 1")
    check_compatible(table, env_cfg)
    env = HerdingEnv(env_cfg)
    values = table.values
    actions = env.actions
    mu = env_cfg.mu
    records = []
    for run in range(runs):
        run_seed = derive_seed(seed, run)
        rng = np.random.default_rng(run_seed)
        followers, leader = env.reset(rng)
        final_mse = env.mse_to_target(followers)
        iterations = 0
        converged = final_mse < mu
        if not converged:
            for t in range(1, eval_max_iters + 1):
                s = env.state_index(followers, leader.vertex)
                a = select_action_index(values, s, actions[leader.vertex], epsilon_eval, rng)
                followers, leader, _, terminal = env.step(followers, leader, a, rng)
                iterations = t
                if terminal:
                    converged = True
                    break
            final_mse = env.mse_to_target(followers)
        records.append(RunRecord(run, converged, iterations, final_mse, run_seed))
    iters = np.array([r.iterations for r in records], dtype=np.float64)
    aggregate = EvalAggregate(
        mean_iterations=float(iters.mean()),
        std_iterations=float(iters.std()),
        convergence_rate=float(np.mean([r.converged for r in records])),
        runs=runs,
    )
    return records, aggregate


def _sweep_group(args) -> list[tuple[SweepRow, list[RunRecord]]]:
    train_cfg, members, runs, eval_max_iters, epsilon_eval, master_seed = args
    result = train(train_cfg)
    out = []
    for index, n_test in members:
        env_cfg = replace(train_cfg.env, num_agents=n_test)
        records, agg = evaluate(
            result.table,
            env_cfg,
            runs=runs,
            eval_max_iters=eval_max_iters,
            epsilon_eval=epsilon_eval,
            seed=derive_seed(master_seed, 1, index),
        )
        row = SweepRow(
            index=index,
            algorithm=train_cfg.learner.algorithm,
            n_train=train_cfg.env.num_agents,
            n_test=n_test,
            beta=train_cfg.env.beta,
            mu=train_cfg.env.mu,
            bins=train_cfg.env.bins,
            mean_iterations=agg.mean_iterations,
            std_iterations=agg.std_iterations,
            convergence_rate=agg.convergence_rate,
            runs=agg.runs,
        )
        out.append((row, records))
    return out


def sweep(
    cells: Sequence[SweepCell],
    runs: int,
    eval_max_iters: int = 1000,
    epsilon_eval: float = 0.0,
    master_seed: int = 0,
    jobs: int = 1,
) -> tuple[list[SweepRow], list[tuple[int, RunRecord]]]:
    """Train and evaluate every sweep cell.

    Cells that share a training configuration (cross-population testing)
    reuse one trained table. Work is parallelized per training group up to
    ``jobs`` workers; outputs are ordered by cell index regardless of
    completion order.
    """
    if not cells:
        raise ConfigError("sweep grid is empty")
    groups: dict[TrainConfig, list[tuple[int, int]]] = {}
    for cell in cells:
        groups.setdefault(cell.train, []).append((cell.index, cell.n_test))
    tasks = [
        (train_cfg, members, runs, eval_max_iters, epsilon_eval, master_seed)
        for train_cfg, members in groups.items()
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            grouped = list(pool.map(_sweep_group, tasks))
    else:
        grouped = [_sweep_group(task) for task in tasks]
    rows: list[SweepRow] = []
    records: list[tuple[int, RunRecord]] = []
    for group in grouped:
        for row, cell_records in group:
            rows.append(row)
            records.extend((row.index, rec) for rec in cell_records)
    rows.sort(key=lambda r: r.index)
    records.sort(key=lambda item: (item[0], item[1].run))
    return rows, records

"""Shared configuration builders for the test suite."""

from __future__ import annotations

from swarmherd import EnvConfig, LearnerConfig, TrainConfig

# The headline experiment: herd 100 agents on a 2x2 grid from a corner-heavy
# distribution to its mirror image.
HEADLINE_INITIAL = (0.4, 0.1, 0.1, 0.4)
HEADLINE_TARGET = (0.1, 0.4, 0.4, 0.1)


def headline_env(**overrides) -> EnvConfig:
    base = dict(
        rows=2,
        cols=2,
        num_agents=100,
        beta=0.1,
        bins=10,
        mu=0.0025,
        initial_dist=HEADLINE_INITIAL,
        target_dist=HEADLINE_TARGET,
        max_iterations=5000,
        backend="dtmc",
    )
    base.update(overrides)
    return EnvConfig(**base)


def smoke_env(**overrides) -> EnvConfig:
    """Two-vertex task small enough to train in well under a second.

    All mass starts on vertex 0 and must be pushed to vertex 1; with N=10
    and mu=0.01 the terminal test is satisfied only by the exact target
    counts, and beta=0.4 keeps reachable densities clear of bin boundaries.
    """
    base = dict(
        rows=1,
        cols=2,
        num_agents=10,
        beta=0.4,
        bins=2,
        mu=0.01,
        initial_dist=(1.0, 0.0),
        target_dist=(0.0, 1.0),
        max_iterations=200,
        backend="dtmc",
    )
    base.update(overrides)
    return EnvConfig(**base)


def smoke_train(algorithm="qlearning", episodes=50, seed=5, env=None, **env_overrides) -> TrainConfig:
    return TrainConfig(
        env=env if env is not None else smoke_env(**env_overrides),
        learner=LearnerConfig(alpha=0.3, gamma=0.9, epsilon=0.1, algorithm=algorithm),
        episodes=episodes,
        max_iters_per_episode=200,
        seed=seed,
    )

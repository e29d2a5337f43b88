"""Leader-based swarm herding on grid graphs with tabular SARSA / Q-Learning.

A single leader agent repels anonymous follower agents off its vertex; the
follower population evolves as a Markov chain over the graph (or as its
deterministic mean-field limit), and a tabular TD-learned policy steers the
leader so the population reaches a target distribution in as few iterations
as possible.
"""

from .dynamics import (
    LeaderState,
    TransitionRates,
    empirical_distribution,
    follower_transition_probs,
    mean_field_step,
    step_dtmc,
)
from .environment import (
    Action,
    DiscretizedState,
    EnvConfig,
    HerdingEnv,
    apply_leader_action,
    decode_state,
    discretize,
    encode_state,
    env_step,
    largest_remainder_counts,
    mse,
    num_states,
    reset,
    reward,
    valid_actions,
)
from .graph import Graph, is_strongly_connected, make_grid, out_neighbors
from .harness import (
    EvalAggregate,
    EpisodeStats,
    RunRecord,
    SweepCell,
    SweepRow,
    TrainConfig,
    TrainResult,
    derive_seed,
    evaluate,
    sweep,
    train,
)
from .learner import (
    LearnerConfig,
    QTable,
    load_qtable,
    q_lookup,
    save_qtable,
    select_action,
    update_qlearning,
    update_sarsa,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "DiscretizedState",
    "EnvConfig",
    "EpisodeStats",
    "EvalAggregate",
    "Graph",
    "HerdingEnv",
    "LeaderState",
    "LearnerConfig",
    "QTable",
    "RunRecord",
    "SweepCell",
    "SweepRow",
    "TrainConfig",
    "TrainResult",
    "TransitionRates",
    "apply_leader_action",
    "decode_state",
    "derive_seed",
    "discretize",
    "empirical_distribution",
    "encode_state",
    "env_step",
    "evaluate",
    "follower_transition_probs",
    "is_strongly_connected",
    "largest_remainder_counts",
    "load_qtable",
    "make_grid",
    "mean_field_step",
    "mse",
    "num_states",
    "out_neighbors",
    "q_lookup",
    "reset",
    "reward",
    "save_qtable",
    "select_action",
    "step_dtmc",
    "sweep",
    "train",
    "update_qlearning",
    "update_sarsa",
    "valid_actions",
]

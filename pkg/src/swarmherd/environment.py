"""Episodic herding environment.

Leader action semantics, per-iteration update order, reward, state
discretization and encoding, terminal test, and reset — over either
follower backend ("dtmc" agent counts or "mean-field" densities).

One iteration applies the leader's action first and then lets the
followers react to the leader's new position and flag, so a Stay action
repels immediately. The reward and the terminal test use the realized
post-step distribution.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple, Sequence

import numpy as np

from .dynamics import (
    SIMPLEX_ATOL,
    LeaderState,
    TransitionRates,
    follower_transition_probs,
    mean_field_step,
)
from .errors import ConfigError, EncodingError, InvalidActionError
from .graph import Graph, make_grid

BACKENDS = ("dtmc", "mean-field")


class Action(IntEnum):
    """Leader actions in canonical order; the enum value is the action index."""

    LEFT = 0
    RIGHT = 1
    UP = 2
    DOWN = 3
    STAY = 4

    @property
    def label(self) -> str:
        return self.name.capitalize()


NUM_ACTIONS = len(Action)

_MOVES = {
    Action.LEFT: (0, -1),
    Action.RIGHT: (0, 1),
    Action.UP: (-1, 0),
    Action.DOWN: (1, 0),
}


def valid_actions(g: Graph, vertex: int) -> tuple[Action, ...]:
    """Actions available at ``vertex``: grid moves that exist, plus Stay.

    The order is the canonical [Left, Right, Up, Down, Stay] filtered to
    existing neighbors; Stay is always last and always present.
    """
    if g.rows is None or g.cols is None:
        raise ValueError("valid_actions needs a grid graph (rows/cols unknown)")
    if not 0 <= vertex < g.num_vertices:
        raise IndexError(f"vertex {vertex} out of range")
    r, c = divmod(vertex, g.cols)
    acts = []
    if c > 0:
        acts.append(Action.LEFT)
    if c + 1 < g.cols:
        acts.append(Action.RIGHT)
    if r > 0:
        acts.append(Action.UP)
    if r + 1 < g.rows:
        acts.append(Action.DOWN)
    acts.append(Action.STAY)
    return tuple(acts)


def apply_leader_action(g: Graph, leader: LeaderState, action: Action) -> LeaderState:
    """Deterministic leader transition.

    Stay keeps the vertex and raises the repelling flag; a directional move
    goes to the corresponding grid neighbor with the flag down. Moves that
    leave the grid raise InvalidActionError.
    """
    action = Action(action)
    if action is Action.STAY:
        return LeaderState(leader.vertex, 1)
    if action not in valid_actions(g, leader.vertex):
        raise InvalidActionError(f"{action.label} is not available at vertex {leader.vertex}")
    dr, dc = _MOVES[action]
    r, c = divmod(leader.vertex, g.cols)
    return LeaderState((r + dr) * g.cols + (c + dc), 0)


def reward(current: np.ndarray, target: np.ndarray) -> float:
    """Negative squared Euclidean distance between the two distributions.

    Always <= 0, and 0 exactly when the distributions coincide.
    """
    diff = np.asarray(current, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return -float(np.dot(diff, diff))


def mse(current: np.ndarray, target: np.ndarray) -> float:
    """Per-vertex mean of the squared distribution error.

    An episode is terminal once this drops below the configured threshold;
    ``reward == -M * mse`` by construction.
    """
    diff = np.asarray(current, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return float(np.dot(diff, diff)) / float(len(diff))


def discretize(density: np.ndarray, bins: int) -> np.ndarray:
    """Quantize vertex fractions to integers in [0, bins].

    Uses round-half-away-from-zero, so a fraction of 0.24 with bins=10 maps
    to 2 and a fraction of 0.05 maps to 1.
    """
    density = np.asarray(density, dtype=np.float64)
    f = np.floor(bins * density + 0.5).astype(np.int64)
    return np.clip(f, 0, bins)


class DiscretizedState(NamedTuple):
    """Quantized population fractions plus the leader's vertex."""

    fractions: tuple[int, ...]
    leader_vertex: int


def num_states(bins: int, num_vertices: int) -> int:
    """Size of the encoded state space: (bins+1)^M * M."""
    return (bins + 1) ** num_vertices * num_vertices


def encode_state(state: DiscretizedState, bins: int, num_vertices: int) -> int:
    """Bijective mixed-radix index of a discretized state.

    index = leader_vertex + M * sum_v fractions[v] * (bins+1)^v
    """
    if len(state.fractions) != num_vertices:
        raise EncodingError(
            f"expected {num_vertices} fraction components, got {len(state.fractions)}"
        )
    if not 0 <= state.leader_vertex < num_vertices:
        raise EncodingError(f"leader vertex {state.leader_vertex} out of range")
    radix = bins + 1
    idx = 0
    for v in reversed(range(num_vertices)):
        f = state.fractions[v]
        if not 0 <= f <= bins:
            raise EncodingError(f"fraction component {f} outside [0, {bins}]")
        idx = idx * radix + f
    return state.leader_vertex + num_vertices * idx


def decode_state(index: int, bins: int, num_vertices: int) -> DiscretizedState:
    """Inverse of :func:`encode_state`."""
    if not 0 <= index < num_states(bins, num_vertices):
        raise EncodingError(f"state index {index} out of range")
    radix = bins + 1
    rest, leader_vertex = divmod(index, num_vertices)
    fractions = []
    for _ in range(num_vertices):
        rest, f = divmod(rest, radix)
        fractions.append(f)
    return DiscretizedState(tuple(fractions), leader_vertex)


def largest_remainder_counts(density: np.ndarray, num_agents: int) -> np.ndarray:
    """Integer apportionment of num_agents proportional to density.

    Largest-remainder method; remainder ties go to the lower vertex index.
    The result always sums to num_agents exactly.
    """
    density = np.asarray(density, dtype=np.float64)
    shares = density * num_agents
    counts = np.floor(shares).astype(np.int64)
    leftover = num_agents - int(counts.sum())
    by_remainder = sorted(range(len(density)), key=lambda v: (-(shares[v] - counts[v]), v))
    for v in by_remainder[:leftover]:
        counts[v] += 1
    return counts


@dataclass(frozen=True)
class EnvConfig:
    """Parameters of one herding task.

    ``beta`` is the per-edge departure rate (uniform over edges), ``bins``
    the number of discretization intervals per vertex fraction, and ``mu``
    the mean-squared-error threshold that ends an episode.
    """

    rows: int
    cols: int
    num_agents: int
    beta: float
    bins: int
    mu: float
    initial_dist: tuple[float, ...]
    target_dist: tuple[float, ...]
    max_iterations: int = 5000
    backend: str = "dtmc"

    def __post_init__(self):
        object.__setattr__(self, "initial_dist", tuple(float(x) for x in self.initial_dist))
        object.__setattr__(self, "target_dist", tuple(float(x) for x in self.target_dist))
        if self.rows < 1 or self.cols < 1 or self.rows * self.cols < 2:
            raise ConfigError(f"invalid grid dimensions {self.rows}x{self.cols}")
        if self.num_agents < 1:
            raise ConfigError("num_agents must be at least 1")
        if self.bins < 1:
            raise ConfigError("bins must be at least 1")
        if self.mu <= 0.0:
            raise ConfigError("mu must be positive")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be at least 1")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        max_degree = min(2, self.rows - 1) + min(2, self.cols - 1)
        if not 0.0 < self.beta or not self.beta * max_degree < 1.0:
            raise ConfigError(
                f"beta={self.beta} invalid: need 0 < beta and beta * {max_degree} < 1"
            )
        for name, dist in (("initial_dist", self.initial_dist), ("target_dist", self.target_dist)):
            if len(dist) != self.num_vertices:
                raise ConfigError(f"{name} must have {self.num_vertices} entries")
            if min(dist) < 0.0 or abs(sum(dist) - 1.0) > SIMPLEX_ATOL:
                raise ConfigError(f"{name} is not a probability distribution")

    @property
    def num_vertices(self) -> int:
        return self.rows * self.cols


class HerdingEnv:
    """Grid graph, rates, and per-vertex lookup tables bundled for fast stepping.

    Instances hold no episode state: :meth:`reset` and :meth:`step` take and
    return the (followers, leader) pair explicitly, so one env can serve any
    number of concurrent episodes as long as each uses its own random stream.
    """

    def __init__(self, cfg: EnvConfig):
        self.cfg = cfg
        self.graph = make_grid(cfg.rows, cfg.cols)
        self.rates = TransitionRates.uniform(self.graph, cfg.beta)
        self.initial = np.asarray(cfg.initial_dist, dtype=np.float64)
        self.target = np.asarray(cfg.target_dist, dtype=np.float64)
        m = self.graph.num_vertices
        self.actions = tuple(valid_actions(self.graph, v) for v in range(m))
        self._next_leader = tuple(
            {a: apply_leader_action(self.graph, LeaderState(v, 0), a) for a in self.actions[v]}
            for v in range(m)
        )
        # Outflow categories per vertex, identical to follower_transition_probs
        # under a repelling leader so both stepping paths share one multinomial.
        self._repel_probs = tuple(
            follower_transition_probs(self.graph, self.rates, LeaderState(v, 1), v)
            for v in range(m)
        )
        self._initial_counts = largest_remainder_counts(self.initial, cfg.num_agents)
        self._counts_backend = cfg.backend == "dtmc"
        self._m = float(m)
        self._m_int = m

    def reset(self, rng: np.random.Generator) -> tuple[np.ndarray, LeaderState]:
        """Fresh episode: followers at the initial distribution, leader uniform, flag down.

        With the dtmc backend the initial counts are the largest-remainder
        apportionment of num_agents over initial_dist.
        """
        leader = LeaderState(int(rng.integers(self._m_int)), 0)
        if self._counts_backend:
            return self._initial_counts.copy(), leader
        return self.initial.copy(), leader

    def step(
        self,
        followers: np.ndarray,
        leader: LeaderState,
        action: Action,
        rng: np.random.Generator,
    ) -> tuple[np.ndarray, LeaderState, float, bool]:
        """One iteration: move the leader, let followers react, score the result.

        Returns (followers', leader', reward, terminal). The reward is the
        negative squared distance of the post-step distribution from the
        target; terminal once its per-vertex mean drops below mu.
        """
        try:
            leader = self._next_leader[leader.vertex][action]
        except KeyError:
            raise InvalidActionError(
                f"{Action(action).label} is not available at vertex {leader.vertex}"
            ) from None
        if leader.flag == 1:
            v = leader.vertex
            if self._counts_backend:
                draw = rng.multinomial(int(followers[v]), self._repel_probs[v])
                followers = followers.copy()
                followers[v] = draw[-1]
                for i, t in enumerate(self.graph.neighbors[v]):
                    followers[t] += draw[i]
            else:
                followers = mean_field_step(self.graph, self.rates, leader, followers)
        else:
            followers = followers.copy()
        current = followers / self.cfg.num_agents if self._counts_backend else followers
        diff = current - self.target
        sq = float(np.dot(diff, diff))
        return followers, leader, -sq, (sq / self._m) < self.cfg.mu

    def observe(self, followers: np.ndarray) -> np.ndarray:
        """The distribution the leader sees: empirical fractions or the density itself."""
        if self._counts_backend:
            return followers / self.cfg.num_agents
        return np.asarray(followers, dtype=np.float64)

    def mse_to_target(self, followers: np.ndarray) -> float:
        diff = self.observe(followers) - self.target
        return float(np.dot(diff, diff)) / self._m

    def state_index(self, followers: np.ndarray, leader_vertex: int) -> int:
        """Encoded table index of the discretized observation.

        Matches encode_state(DiscretizedState(discretize(observe(...)), v))
        bit for bit; kept as explicit arithmetic because it runs once per
        training step.
        """
        bins = self.cfg.bins
        radix = bins + 1
        n = self.cfg.num_agents
        counts = self._counts_backend
        idx = 0
        for v in range(self._m_int - 1, -1, -1):
            x = float(followers[v])
            if counts:
                x /= n
            f = int(bins * x + 0.5)
            if f > bins:
                f = bins
            idx = idx * radix + f
        return leader_vertex + self._m_int * idx


@functools.lru_cache(maxsize=64)
def _shared_env(cfg: EnvConfig) -> HerdingEnv:
    return HerdingEnv(cfg)


def reset(cfg: EnvConfig, rng: np.random.Generator) -> tuple[np.ndarray, LeaderState]:
    """Initial (followers, leader) pair for an episode (see HerdingEnv.reset)."""
    return _shared_env(cfg).reset(rng)


def env_step(
    cfg: EnvConfig,
    followers: np.ndarray,
    leader: LeaderState,
    action: Action,
    rng: np.random.Generator,
) -> tuple[np.ndarray, LeaderState, float, bool]:
    """One environment iteration (see HerdingEnv.step)."""
    return _shared_env(cfg).step(followers, leader, action, rng)


def format_float(x: float) -> str:
    """Shortest decimal that round-trips, keeping data files byte-stable."""
    return repr(float(x))


def trace_header(cfg: EnvConfig) -> str:
    """Column names for the per-iteration trace format."""
    kind = "count" if cfg.backend == "dtmc" else "density"
    cells = ",".join(f"{kind}_{v}" for v in range(cfg.num_vertices))
    return f"iteration,leader_vertex,leader_flag,action,{cells},reward,mse,terminal"


def trace_row(
    iteration: int,
    leader: LeaderState,
    action: Action | None,
    followers: Sequence[float] | np.ndarray,
    reward_value: float,
    mse_value: float,
    terminal: bool,
) -> str:
    """One comma-separated trace line; iteration 0 uses an empty action field."""
    arr = np.asarray(followers)
    if np.issubdtype(arr.dtype, np.integer):
        cells = ",".join(str(int(x)) for x in arr)
    else:
        cells = ",".join(format_float(x) for x in arr)
    name = Action(action).label if action is not None else ""
    return (
        f"{iteration},{leader.vertex},{leader.flag},{name},{cells},"
        f"{format_float(reward_value)},{format_float(mse_value)},"
        f"{'true' if terminal else 'false'}"
    )

"""Tabular state-action values with SARSA / Q-Learning updates and ε-greedy selection.

The table is a dense (num_states, num_actions) float64 array indexed by the
mixed-radix state encoding; argmax and max always range over the actions
valid at the relevant leader vertex, never the full action set.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .environment import NUM_ACTIONS, Action, DiscretizedState, encode_state, num_states
from .errors import (
    ConfigError,
    QTableDimensionError,
    QTableFormatError,
    QTableTruncatedError,
)

ALGORITHMS = ("sarsa", "qlearning")

MAGIC = b"SWHQ"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIII")  # magic, version, M, bins, actions, rows, cols


@dataclass
class QTable:
    """Dense state-action value table plus the metadata needed to index it."""

    values: np.ndarray
    bins: int
    num_vertices: int
    num_actions: int
    rows: int
    cols: int

    @classmethod
    def zeros(cls, bins: int, rows: int, cols: int, actions: int = NUM_ACTIONS) -> "QTable":
        """Freshly initialized table; unexplored entries read as 0."""
        m = rows * cols
        return cls(
            values=np.zeros((num_states(bins, m), actions)),
            bins=bins,
            num_vertices=m,
            num_actions=actions,
            rows=rows,
            cols=cols,
        )

    @property
    def state_count(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class LearnerConfig:
    """TD-learning hyperparameters.

    ``epsilon`` is the exploration threshold; with ``epsilon_decay`` it falls
    linearly to ``epsilon_final`` over the training episodes, otherwise it
    stays constant.
    """

    alpha: float = 0.3
    gamma: float = 0.9
    epsilon: float = 0.1
    algorithm: str = "qlearning"
    epsilon_decay: bool = False
    epsilon_final: float = 0.01

    def __post_init__(self):
        for name in ("alpha", "gamma", "epsilon", "epsilon_final"):
            x = getattr(self, name)
            if not 0.0 <= x <= 1.0:
                raise ConfigError(f"{name}={x} outside [0, 1]")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")

    def episode_epsilon(self, episode: int, episodes: int) -> float:
        """Exploration threshold for a given 0-based episode index."""
        if not self.epsilon_decay or episodes <= 1:
            return self.epsilon
        frac = episode / (episodes - 1)
        return self.epsilon + (self.epsilon_final - self.epsilon) * frac


def q_lookup(q: QTable, state: DiscretizedState, action: Action | int) -> float:
    """Stored value for (state, action); fresh tables return 0."""
    a = int(action)
    if not 0 <= a < q.num_actions:
        raise IndexError(f"action index {a} out of range for {q.num_actions} actions")
    return float(q.values[encode_state(state, q.bins, q.num_vertices), a])


def greedy_action_index(
    values: np.ndarray, state_index: int, valid: Sequence[Action]
) -> Action:
    """Argmax over the valid actions, ties to the lowest canonical action index.

    ``valid`` must be in canonical order, as produced by ``valid_actions``.
    """
    row = values[state_index]
    best = valid[0]
    best_value = row[best]
    for a in valid[1:]:
        v = row[a]
        if v > best_value:
            best = a
            best_value = v
    return best


def max_action_value(values: np.ndarray, state_index: int, valid: Sequence[Action]) -> float:
    """Largest stored value among the valid actions at a state."""
    row = values[state_index]
    best = row[valid[0]]
    for a in valid[1:]:
        v = row[a]
        if v > best:
            best = v
    return float(best)


def select_action_index(
    values: np.ndarray,
    state_index: int,
    valid: Sequence[Action],
    epsilon: float,
    rng: np.random.Generator,
) -> Action:
    """ε-greedy selection working directly on a values array and state index.

    Draws X uniform on [0, 1) first and the explore index second, so every
    caller consumes the random stream in the same order.
    """
    if rng.random() > epsilon:
        return greedy_action_index(values, state_index, valid)
    return valid[int(rng.integers(len(valid)))]


def select_action(
    q: QTable,
    state: DiscretizedState,
    valid: Sequence[Action],
    epsilon: float,
    rng: np.random.Generator,
) -> Action:
    """ε-greedy selection over the valid actions.

    Exploits (greedy with canonical tie-break) when the uniform draw exceeds
    epsilon, otherwise picks a valid action uniformly at random.
    """
    if not valid:
        raise ValueError("no valid actions to select from")
    return select_action_index(
        q.values, encode_state(state, q.bins, q.num_vertices), valid, epsilon, rng
    )


def update_sarsa(
    q: QTable,
    state: DiscretizedState,
    action: Action | int,
    reward_value: float,
    next_state: DiscretizedState | None,
    next_action: Action | int | None,
    cfg: LearnerConfig,
    terminal: bool = False,
) -> QTable:
    """On-policy update: Q(s,a) += alpha * (r + gamma * Q(s',a') - Q(s,a)).

    Modifies exactly one entry, in place. With ``terminal`` the bootstrap
    term is dropped (terminal successors carry no value).
    """
    s = encode_state(state, q.bins, q.num_vertices)
    a = int(action)
    target = reward_value
    if not terminal:
        s2 = encode_state(next_state, q.bins, q.num_vertices)
        target = reward_value + cfg.gamma * float(q.values[s2, int(next_action)])
    q.values[s, a] += cfg.alpha * (target - q.values[s, a])
    return q


def update_qlearning(
    q: QTable,
    state: DiscretizedState,
    action: Action | int,
    reward_value: float,
    next_state: DiscretizedState | None,
    next_valid: Sequence[Action],
    cfg: LearnerConfig,
    terminal: bool = False,
) -> QTable:
    """Off-policy update: Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)).

    The max ranges only over the actions valid at the successor's leader
    vertex. Modifies exactly one entry, in place.
    """
    s = encode_state(state, q.bins, q.num_vertices)
    a = int(action)
    target = reward_value
    if not terminal:
        s2 = encode_state(next_state, q.bins, q.num_vertices)
        target = reward_value + cfg.gamma * max_action_value(q.values, s2, next_valid)
    q.values[s, a] += cfg.alpha * (target - q.values[s, a])
    return q


def save_qtable(q: QTable, destination, extra_meta: Mapping | None = None) -> None:
    """Write the binary table and a human-readable .meta.json sidecar.

    Layout: magic "SWHQ", then little-endian u32 fields (format version, M,
    bins, action count, grid rows, grid cols), then the values as
    little-endian float64 in state-major, action-minor order.
    """
    path = Path(destination)
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, q.num_vertices, q.bins, q.num_actions, q.rows, q.cols
    )
    payload = np.ascontiguousarray(q.values, dtype="<f8").tobytes()
    path.write_bytes(header + payload)
    meta = {
        "magic": MAGIC.decode("ascii"),
        "format_version": FORMAT_VERSION,
        "num_vertices": q.num_vertices,
        "bins": q.bins,
        "num_actions": q.num_actions,
        "rows": q.rows,
        "cols": q.cols,
    }
    if extra_meta:
        meta.update(extra_meta)
    sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n")


def sidecar_path(table_path) -> Path:
    return Path(str(table_path) + ".meta.json")


def load_qtable(source) -> QTable:
    """Read a table written by :func:`save_qtable`.

    Raises QTableFormatError for a bad magic/version/header,
    QTableDimensionError for inconsistent dimensions or trailing bytes, and
    QTableTruncatedError when the payload is short.
    """
    data = Path(source).read_bytes()
    if len(data) < _HEADER.size:
        raise QTableFormatError("file shorter than the fixed header")
    magic, version, m, bins, actions, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise QTableFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise QTableFormatError(f"unsupported format version {version}")
    if not (1 <= m <= 64 and 1 <= bins <= 65535 and 1 <= actions <= 64):
        raise QTableDimensionError(f"implausible dimensions M={m} bins={bins} actions={actions}")
    if rows < 1 or cols < 1 or rows * cols != m:
        raise QTableDimensionError(f"grid {rows}x{cols} inconsistent with M={m}")
    expected = num_states(bins, m) * actions * 8
    got = len(data) - _HEADER.size
    if got < expected:
        raise QTableTruncatedError(f"payload holds {got} bytes, header promises {expected}")
    if got > expected:
        raise QTableDimensionError(f"{got - expected} trailing bytes after the payload")
    values = (
        np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
        .reshape(num_states(bins, m), actions)
        .astype(np.float64)
    )
    return QTable(
        values=values,
        bins=bins,
        num_vertices=m,
        num_actions=actions,
        rows=rows,
        cols=cols,
    )

"""Follower-population propagators.

The swarm carries no agent identities: it is represented either as an
integer count per vertex (stochastic stepping, one multinomial split per
iteration) or as a probability density over vertices (the deterministic
large-population limit of the same process). Both propagators move mass
only out of the leader's vertex, and only while the leader's behavioral
flag is raised.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from .errors import EmptySwarmError, InvalidRatesError, SimplexError
from .graph import Graph, out_neighbors

SIMPLEX_ATOL = 1e-9


class LeaderState(NamedTuple):
    """Leader position and behavioral flag (1 = repelling, 0 = passive)."""

    vertex: int
    flag: int


@dataclass(frozen=True)
class TransitionRates:
    """Departure probabilities along non-self edges.

    ``per_vertex[v][i]`` is the per-iteration probability that a follower at
    v hops to ``graph.neighbors[v][i]`` while the leader repels at v. The
    remaining probability mass stays put, so each per-vertex row must sum to
    strictly less than 1. All experiments use a single uniform rate, but the
    representation keeps one value per edge.
    """

    per_vertex: tuple[tuple[float, ...], ...]

    @classmethod
    def uniform(cls, g: Graph, rate: float) -> "TransitionRates":
        """The same rate on every non-self edge."""
        return cls.from_edge_rates(
            g, {(v, t): rate for v in range(g.num_vertices) for t in g.neighbors[v]}
        )

    @classmethod
    def from_edge_rates(
        cls, g: Graph, rates: Mapping[tuple[int, int], float]
    ) -> "TransitionRates":
        """Build from a mapping of (source, target) -> rate covering every non-self edge."""
        per_vertex = []
        for v in range(g.num_vertices):
            try:
                row = tuple(float(rates[(v, t)]) for t in g.neighbors[v])
            except KeyError as missing:
                raise InvalidRatesError(f"no rate given for edge {missing}") from None
            if any(b <= 0.0 for b in row):
                raise InvalidRatesError(f"transition rates must be positive (vertex {v})")
            if sum(row) >= 1.0:
                raise InvalidRatesError(
                    f"outgoing rates at vertex {v} sum to {sum(row)}; must stay below 1"
                )
            per_vertex.append(row)
        return cls(tuple(per_vertex))

    def stay_probability(self, v: int) -> float:
        return 1.0 - sum(self.per_vertex[v])


def follower_transition_probs(
    g: Graph, rates: TransitionRates, leader: LeaderState, v: int
) -> np.ndarray:
    """Per-iteration move distribution for followers at v.

    Categories are the sorted non-self neighbors of v followed by v itself
    (staying). Followers only leave when the leader repels at v; in every
    other leader configuration all mass stays. The returned vector sums to
    exactly 1.
    """
    nbrs = out_neighbors(g, v)
    probs = np.zeros(len(nbrs) + 1)
    if leader.vertex == v and leader.flag == 1:
        row = rates.per_vertex[v]
        probs[: len(nbrs)] = row
        probs[len(nbrs)] = 1.0 - sum(row)
    else:
        probs[len(nbrs)] = 1.0
    return probs


def step_dtmc(
    g: Graph,
    rates: TransitionRates,
    leader: LeaderState,
    counts: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Advance the agent-count state by one iteration.

    When the leader repels at vertex v, the counts[v] agents are split by a
    single multinomial draw over (sorted neighbors of v, stay); this is a
    sequence of binomial draws in canonical category order, so results are
    reproducible for a seeded stream. The draw is taken even when
    counts[v] == 0 so stream consumption depends only on the leader
    trajectory. Total agent count is conserved exactly, and only the
    leader's vertex and its out-neighbors can change.
    """
    counts = np.asarray(counts, dtype=np.int64)
    out = counts.copy()
    if leader.flag != 1:
        return out
    v = leader.vertex
    probs = follower_transition_probs(g, rates, leader, v)
    draw = rng.multinomial(int(counts[v]), probs)
    out[v] = draw[-1]
    for i, t in enumerate(g.neighbors[v]):
        out[t] += draw[i]
    return out


def assert_simplex(density: np.ndarray, atol: float = SIMPLEX_ATOL) -> None:
    """Raise SimplexError unless density is non-negative and sums to 1 within atol."""
    if float(density.min()) < 0.0 or abs(float(density.sum()) - 1.0) > atol:
        raise SimplexError(
            f"density off the probability simplex (sum={float(density.sum())!r})"
        )


def mean_field_step(
    g: Graph, rates: TransitionRates, leader: LeaderState, density: np.ndarray
) -> np.ndarray:
    """Deterministic one-iteration update of the population density.

    The large-population limit of :func:`step_dtmc`: with a repelling leader
    at v, ``rate * density[v]`` flows along each outgoing non-self edge and
    the remainder stays at v; every other vertex keeps its mass. Total mass
    and non-negativity are preserved.
    """
    density = np.asarray(density, dtype=np.float64)
    assert_simplex(density)
    out = density.copy()
    if leader.flag != 1:
        return out
    v = leader.vertex
    mass = density[v]
    row = rates.per_vertex[v]
    for i, t in enumerate(g.neighbors[v]):
        out[t] += row[i] * mass
    out[v] = (1.0 - sum(row)) * mass
    return out


def empirical_distribution(counts: np.ndarray) -> np.ndarray:
    """Fraction of agents at each vertex (counts / total)."""
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    if total <= 0:
        raise EmptySwarmError("empirical distribution needs at least one agent")
    return counts / total

"""Follower dynamics demo: agent counts versus the mean-field limit.

A repelling leader parked on a vertex pushes followers along the grid
edges. Stepping integer agent counts is stochastic; stepping the
population density is deterministic. As the population grows, the
empirical distribution of the stochastic chain tracks the density ever
more closely.

Run: python demos/propagators.py
"""

import numpy as np

from swarmherd import (
    LeaderState,
    TransitionRates,
    apply_leader_action,
    largest_remainder_counts,
    make_grid,
    mean_field_step,
    step_dtmc,
    valid_actions,
)

## A 2x2 grid: vertices 0..3 in row-major order, every vertex has a self-edge.
g = make_grid(2, 2)
print("vertices:", g.num_vertices)
print("neighbors per vertex:", g.neighbors)

## Uniform departure rate 0.1 per outgoing edge while the leader repels.
rates = TransitionRates.uniform(g, 0.1)
initial = np.array([0.4, 0.1, 0.1, 0.4])

## One deterministic density step with a repelling leader at vertex 0:
## 10% of the local mass leaves along each edge, the rest stays.
leader = LeaderState(0, 1)
print("\ndensity before:", initial)
print("density after: ", mean_field_step(g, rates, leader, initial))

## The same step on 100 integer agents is a multinomial draw.
rng = np.random.default_rng(7)
counts = largest_remainder_counts(initial, 100)
print("\ncounts before:", counts)
print("counts after: ", step_dtmc(g, rates, leader, counts, rng))

## Run both propagators for 100 iterations under one leader script and
## measure the largest per-vertex gap, averaged over 20 random streams.
def final_gap(num_agents, seed):
    rng = np.random.default_rng(seed)
    counts = largest_remainder_counts(initial, num_agents)
    density = initial.copy()
    leader = LeaderState(0, 0)
    for k in range(100):
        acts = valid_actions(g, leader.vertex)
        leader = apply_leader_action(g, leader, acts[k % len(acts)])
        counts = step_dtmc(g, rates, leader, counts, rng)
        density = mean_field_step(g, rates, leader, density)
    return np.max(np.abs(counts / num_agents - density))

print("\npopulation   mean L-inf gap after 100 iterations")
for n in (100, 1_000, 10_000, 100_000):
    gap = np.mean([final_gap(n, seed) for seed in range(20)])
    print(f"{n:>10}   {gap:.5f}")

"""Explicit graph construction and the coupon exploration run on it.

Running the exploration on a concrete Erdos-Renyi graph gives an
independent realization whose (A, B) reduction must be distributed exactly
as the chain layer; tests check this equivalence empirically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import ModelParams, Trajectory

__all__ = ["Graph", "ExplorationState", "generate_er", "explore", "write_edge_list"]

UNEXPLORED, NAMED, HOLDER, INTERVIEWED = 0, 1, 2, 3


@dataclass
class Graph:
    """Undirected simple graph as per-vertex sorted neighbor arrays."""

    n_vertices: int
    adjacency: list[np.ndarray]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def check_symmetry(self) -> None:
        for u in range(self.n_vertices):
            for v in self.adjacency[u]:
                if u == v:
                    raise ValueError(f"self-loop at {u}")
                if u not in self.adjacency[v]:
                    raise ValueError(f"asymmetric edge ({u}, {v})")


@dataclass
class ExplorationState:
    """Bookkeeping of one exploration run on a concrete graph."""

    labels: np.ndarray
    interview_order: list[int] = field(default_factory=list)
    referral_edges: list[tuple[int, int]] = field(default_factory=list)

    def counts(self) -> tuple[int, int, int, int]:
        """(interviewed, holders, named, unexplored) label totals."""
        interviewed = int(np.count_nonzero(self.labels == INTERVIEWED))
        holders = int(np.count_nonzero(self.labels == HOLDER))
        named = int(np.count_nonzero(self.labels == NAMED))
        unexplored = int(np.count_nonzero(self.labels == UNEXPLORED))
        return interviewed, holders, named, unexplored


class _Pool:
    """Set of vertex ids with O(1) uniform removal (swap-pop)."""

    def __init__(self, n: int):
        self.items: list[int] = []
        self.pos = np.full(n, -1, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.items)

    def add(self, v: int) -> None:
        self.pos[v] = len(self.items)
        self.items.append(v)

    def remove(self, v: int) -> None:
        i = self.pos[v]
        last = self.items[-1]
        self.items[i] = last
        self.pos[last] = i
        self.items.pop()
        self.pos[v] = -1

    def pop_random(self, rng: np.random.Generator) -> int:
        v = self.items[int(rng.integers(len(self.items)))]
        self.remove(v)
        return v


def generate_er(N: int, lam: float, rng: np.random.Generator) -> Graph:
    """Sample G(N, lam/N) with a geometric-skip sweep over the vertex pairs.

    Expected cost is O(lam * N) rather than O(N^2): successive present
    edges are located by skipping a geometric number of absent pairs.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if not 0.0 <= lam <= N:
        raise ValueError(f"lam must be in [0, N], got {lam}")
    p = lam / N
    sources: list[int] = []
    targets: list[int] = []
    if p >= 1.0:
        for v in range(1, N):
            for w in range(v):
                sources.append(v)
                targets.append(w)
    elif p > 0.0:
        # Batagelj-Brandes skip over pairs (v, w), w < v, in row order
        log_q = math.log1p(-p)
        v, w = 1, -1
        while v < N:
            r = rng.random()
            w += 1 + int(math.log1p(-r) / log_q)
            while w >= v and v < N:
                w -= v
                v += 1
            if v < N:
                sources.append(v)
                targets.append(w)
    deg = np.zeros(N, dtype=np.int64)
    for u, w in zip(sources, targets):
        deg[u] += 1
        deg[w] += 1
    adjacency = [np.empty(d, dtype=np.int64) for d in deg]
    fill = np.zeros(N, dtype=np.int64)
    for u, w in zip(sources, targets):
        adjacency[u][fill[u]] = w
        fill[u] += 1
        adjacency[w][fill[w]] = u
        fill[w] += 1
    for arr in adjacency:
        arr.sort()
    return Graph(N, adjacency)


def explore(
    graph: Graph,
    params: ModelParams,
    rng: np.random.Generator,
    horizon: int | None = None,
    record_state: bool = False,
):
    """Run the coupon-referral exploration on a concrete graph.

    At each step one coupon holder is interviewed (uniformly chosen); its
    eligible neighbors are the unexplored and named-without-coupon ones, of
    which min(c, #eligible) receive coupons uniformly at random and the
    remaining newly seen ones become named.  With no holder left, a fresh
    uniform unexplored vertex is seeded and interviewed.  Halts cleanly
    when nobody can be interviewed any more.

    Returns the (A, B) Trajectory; with ``record_state`` also the final
    ExplorationState.
    """
    N = graph.n_vertices
    if params.N != N:
        raise ValueError(f"params.N={params.N} != graph.n_vertices={N}")
    horizon = N if horizon is None else int(horizon)

    labels = np.zeros(N, dtype=np.uint8)
    holders = _Pool(N)
    named = _Pool(N)
    unexplored = _Pool(N)
    init = rng.choice(N, size=params.a0_count + params.b0_count, replace=False)
    for v in init[: params.a0_count]:
        labels[v] = HOLDER
        holders.add(int(v))
    for v in init[params.a0_count :]:
        labels[v] = NAMED
        named.add(int(v))
    for v in range(N):
        if labels[v] == UNEXPLORED:
            unexplored.add(v)

    state = ExplorationState(labels)
    A = [len(holders)]
    B = [len(named)]
    reseeds: list[int] = []
    tau: int | None = None

    for n in range(horizon):
        if len(holders):
            v = holders.pop_random(rng)
        elif len(unexplored):
            v = unexplored.pop_random(rng)
            reseeds.append(n + 1)
        elif len(named):
            # fully depleted pool: fall back to seeding a named individual
            v = named.pop_random(rng)
            reseeds.append(n + 1)
        else:
            break
        labels[v] = INTERVIEWED
        state.interview_order.append(v)

        elig = [u for u in graph.adjacency[v] if labels[u] <= NAMED]
        m = min(params.c, len(elig))
        if m:
            recipients = rng.choice(len(elig), size=m, replace=False)
            recip_set = {elig[i] for i in recipients}
        else:
            recip_set = set()
        for u in elig:
            if u in recip_set:
                if labels[u] == UNEXPLORED:
                    unexplored.remove(u)
                else:
                    named.remove(u)
                labels[u] = HOLDER
                holders.add(u)
                state.referral_edges.append((v, u))
            elif labels[u] == UNEXPLORED:
                unexplored.remove(u)
                labels[u] = NAMED
                named.add(u)
        A.append(len(holders))
        B.append(len(named))
        if tau is None and not len(holders):
            tau = n + 1

    traj = Trajectory(
        params,
        np.asarray(A, dtype=np.int64),
        np.asarray(B, dtype=np.int64),
        tuple(reseeds),
        tau,
    )
    if record_state:
        return traj, state
    return traj


def write_edge_list(graph: Graph, path) -> None:
    """Dump the edge set as 'u v' lines, 0-indexed, u < v."""
    with open(path, "w") as fh:
        for u in range(graph.n_vertices):
            for v in graph.adjacency[u]:
                if u < v:
                    fh.write(f"{u} {v}\n")

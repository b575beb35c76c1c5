"""Time-varying undirected communication topology: base graph plus i.i.d. link drops."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence


@dataclass(frozen=True)
class BaseGraph:
    """Connected undirected base topology over nodes 0..n-1."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for a, b in self.edges:
            if a == b or not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"invalid edge ({a},{b}) for {self.n} nodes")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValueError(f"duplicate edge ({a},{b})")
            seen.add(key)
        if self.n > 1 and not self._connected():
            raise ValueError("base graph must be connected")

    def _connected(self) -> bool:
        adj = [[] for _ in range(self.n)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        stack = [0]
        seen = {0}
        while stack:
            for j in adj[stack.pop()]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == self.n

    @staticmethod
    def path(n: int) -> "BaseGraph":
        return BaseGraph(n, tuple((i, i + 1) for i in range(n - 1)))

    @staticmethod
    def ring(n: int) -> "BaseGraph":
        if n < 3:
            return BaseGraph.path(n)
        return BaseGraph(n, tuple((i, (i + 1) % n) for i in range(n)))

    @staticmethod
    def complete(n: int) -> "BaseGraph":
        return BaseGraph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))

    @staticmethod
    def from_config(topology, n: int) -> "BaseGraph":
        if topology == "path":
            return BaseGraph.path(n)
        if topology == "ring":
            return BaseGraph.ring(n)
        if topology == "complete":
            return BaseGraph.complete(n)
        if isinstance(topology, (list, tuple)):
            return BaseGraph(n, tuple((int(a), int(b)) for a, b in topology))
        raise ValueError(f"unknown topology: {topology!r}")


@dataclass(frozen=True)
class CommSnapshot:
    """Surviving edges and neighbor sets at one step (self never a neighbor)."""

    t: int
    n: int
    edges: tuple[tuple[int, int], ...]
    neighbors: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        omega = [[] for _ in range(self.n)]
        for a, b in self.edges:
            omega[a].append(b)
            omega[b].append(a)
        object.__setattr__(
            self, "neighbors", tuple(tuple(sorted(o)) for o in omega)
        )

    def closed_neighborhood(self, i: int) -> tuple[int, ...]:
        """Lambda_i(t): neighbors plus self, ascending."""
        return tuple(sorted(self.neighbors[i] + (i,)))

    def dropped_count(self, base: BaseGraph) -> int:
        return len(base.edges) - len(self.edges)


def snapshot_from_uniforms(
    base: BaseGraph, drop_prob: float, t: int, uniforms: Sequence[float]
) -> CommSnapshot:
    """Keep base edge k iff uniforms[k] >= drop_prob (drop with probability drop_prob)."""
    kept = tuple(
        e for e, u in zip(base.edges, uniforms) if u >= drop_prob
    )
    return CommSnapshot(t, base.n, kept)


def sample_graph(base: BaseGraph, drop_prob: float, t: int, rng) -> CommSnapshot:
    """Each base edge independently survives with probability 1 - drop_prob."""
    if not 0.0 <= drop_prob <= 1.0:
        raise ValueError(f"drop probability must be in [0,1], got {drop_prob}")
    u = rng.random(len(base.edges)) if base.edges else []
    return snapshot_from_uniforms(base, drop_prob, t, [float(x) for x in u])


def degree(snapshot: CommSnapshot, i: int) -> int:
    """|Lambda_i(t)|: neighbor count plus one for the node itself."""
    return len(snapshot.neighbors[i]) + 1

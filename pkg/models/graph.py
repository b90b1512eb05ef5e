from dataclasses import dataclass, field
from itertools import combinations
from typing import FrozenSet, Iterable, Iterator, Tuple

import networkx as nx
import numpy as np

Edge = Tuple[int, int]


def canonical_edge(i: int, j: int) -> Edge:
    """Orders an unordered pair as (min, max)."""
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Graph:
    """Undirected graph on ``d`` vertices without self-loops.

    Args:
        d (int): number of vertices.
        edges (Iterable[Tuple[int, int]]): unordered pairs; stored as (i, j) with i < j.
    """

    d: int
    edges: FrozenSet[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.d < 0:
            raise ValueError(f"Invalid vertex count: {self.d}")
        normalized = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"Self-loop ({i}, {j}) is not an edge")
            if not (0 <= i < self.d and 0 <= j < self.d):
                raise ValueError(f"Edge ({i}, {j}) has an endpoint outside [0, {self.d})")
            normalized.add(canonical_edge(i, j))
        object.__setattr__(self, "edges", frozenset(normalized))

    def __len__(self) -> int:
        return len(self.edges)

    def __contains__(self, pair) -> bool:
        return canonical_edge(*pair) in self.edges

    def sorted_edges(self) -> Iterator[Edge]:
        return iter(sorted(self.edges))

    def all_pairs(self) -> Iterator[Edge]:
        return combinations(range(self.d), 2)

    def degree(self, i: int) -> int:
        return sum(1 for e in self.edges if i in e)

    @property
    def max_degree(self) -> int:
        """Maximum vertex degree s."""
        if self.d == 0:
            return 0
        return int(self.adjacency().sum(axis=0).max())

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.d, self.d), dtype=bool)
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = True
        return adj

    @classmethod
    def from_adjacency(cls, adj: np.ndarray) -> "Graph":
        adj = np.asarray(adj)
        rows, cols = np.nonzero(np.triu(adj, k=1))
        return cls(adj.shape[0], frozenset(zip(rows.tolist(), cols.tolist())))

    @classmethod
    def from_edges(cls, d: int, edges: Iterable[Edge]) -> "Graph":
        return cls(d, frozenset(edges))

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.d))
        g.add_edges_from(self.edges)
        return g

"""Group-structured parameter storage.

A pairwise family has one parameter block per vertex and one per unordered
pair. ``ParamBlocks`` stores them sparsely (an absent edge block is exactly
zero), ``BlockLayout`` fixes a flat ordering of all groups, and ``ColumnView``
exposes the column-stacked view theta_{.,i} in which every edge block appears
once in each of its two columns.
"""
from functools import cached_property
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from models.basis import BasisSpec
from models.errors import DimensionMismatchError
from models.graph import Graph, canonical_edge

Key = Union[int, Tuple[int, int]]


def is_vertex(key: Key) -> bool:
    return not isinstance(key, tuple)


class BlockLayout:
    """Canonical flat ordering of the groups of a pairwise family.

    Vertices ``0..d-1`` come first, then edges ``(i, j)`` in lexicographic
    order. Columns share one length ``p = vertex_dim + (d - 1) * edge_dim``.

    Args:
        d (int): number of vertices.
        vertex_dim (int): length of a vertex block.
        edge_dim (int): length of an edge block.
    """

    def __init__(self, d: int, vertex_dim: int, edge_dim: int):
        if d < 1:
            raise ValueError(f"Invalid vertex count: {d}")
        self.d = d
        self.vertex_dim = vertex_dim
        self.edge_dim = edge_dim

        self.keys: List[Key] = list(range(d)) + [(i, j) for i in range(d) for j in range(i + 1, d)]
        self.offsets: Dict[Key, int] = {}
        sizes = []
        offset = 0
        for key in self.keys:
            self.offsets[key] = offset
            size = vertex_dim if is_vertex(key) else edge_dim
            sizes.append(size)
            offset += size
        self.size = offset
        self.group_sizes = np.asarray(sizes)
        self.group_index = np.repeat(np.arange(len(self.keys)), self.group_sizes)
        self.copies = np.where([is_vertex(k) for k in self.keys], 1, 2)

    @classmethod
    def for_basis(cls, d: int, basis: BasisSpec) -> "BlockLayout":
        return cls(d, basis.vertex_dim, basis.edge_dim)

    @property
    def n_groups(self) -> int:
        return len(self.keys)

    @property
    def column_dim(self) -> int:
        return self.vertex_dim + (self.d - 1) * self.edge_dim

    def block_slice(self, key: Key) -> slice:
        key = key if is_vertex(key) else canonical_edge(*key)
        start = self.offsets[key]
        return slice(start, start + (self.vertex_dim if is_vertex(key) else self.edge_dim))

    def column_layout(self, i: int) -> List[Tuple[Key, int]]:
        """(block key, offset within the column) for column ``i``, vertex block first."""
        layout = [(i, 0)]
        offset = self.vertex_dim
        for j in range(self.d):
            if j == i:
                continue
            layout.append((canonical_edge(i, j), offset))
            offset += self.edge_dim
        return layout

    @cached_property
    def column_index(self) -> np.ndarray:
        """(d, p) array: flat index of every column-copy entry."""
        index = np.empty((self.d, self.column_dim), dtype=np.int64)
        for i in range(self.d):
            pos = 0
            for key, _ in self.column_layout(i):
                block = self.block_slice(key)
                width = block.stop - block.start
                index[i, pos:pos + width] = np.arange(block.start, block.stop)
                pos += width
        return index

    def weights(self, edge_weight: float = 1.0, penalize_vertices: bool = True) -> np.ndarray:
        """Per-group penalty weight w_g."""
        vertex_weight = 1.0 if penalize_vertices else 0.0
        return np.where(self.copies == 1, vertex_weight, edge_weight).astype(float)

    def group_norms(self, vector: np.ndarray) -> np.ndarray:
        return np.sqrt(np.bincount(self.group_index, weights=vector * vector, minlength=self.n_groups))


def group_weights(basis: BasisSpec, d: int, penalize_vertices: bool = True) -> np.ndarray:
    """Penalty weights of ``basis`` in ``BlockLayout`` order."""
    return BlockLayout.for_basis(d, basis).weights(basis.edge_weight, penalize_vertices)


class ParamBlocks:
    """Parameter vector theta of a pairwise family, one block per group.

    Every vertex block is always present. Edge blocks that are not stored are
    exactly zero, so memory scales with the number of active edges.

    Args:
        d (int): number of vertices.
        vertex_dim (int): vertex block length m.
        edge_dim (int): edge block length.
        blocks (Optional[Dict]): initial blocks keyed by vertex index or unordered pair.
    """

    def __init__(self, d: int, vertex_dim: int, edge_dim: int, blocks: Optional[Dict[Key, Sequence[float]]] = None):
        self.d = d
        self.vertex_dim = vertex_dim
        self.edge_dim = edge_dim
        self.blocks: Dict[Key, np.ndarray] = {}
        for i in range(d):
            self.blocks[i] = np.zeros(vertex_dim)
        for key, value in (blocks or {}).items():
            self.set(key, value)

    @classmethod
    def zeros(cls, d: int, basis: BasisSpec) -> "ParamBlocks":
        return cls(d, basis.vertex_dim, basis.edge_dim)

    @cached_property
    def layout(self) -> BlockLayout:
        return BlockLayout(self.d, self.vertex_dim, self.edge_dim)

    def _check_key(self, key: Key) -> Key:
        if is_vertex(key):
            if not 0 <= key < self.d:
                raise KeyError(f"Vertex {key} outside [0, {self.d})")
            return int(key)
        i, j = key
        if i == j:
            raise KeyError(f"Self pair {key}: use the vertex key {i}")
        if not (0 <= i < self.d and 0 <= j < self.d):
            raise KeyError(f"Edge {key} has an endpoint outside [0, {self.d})")
        return canonical_edge(int(i), int(j))

    def get(self, key: Key) -> np.ndarray:
        key = self._check_key(key)
        if key in self.blocks:
            return self.blocks[key]
        return np.zeros(self.edge_dim)

    def __getitem__(self, key: Key) -> np.ndarray:
        return self.get(key)

    def set(self, key: Key, value: Sequence[float]) -> None:
        key = self._check_key(key)
        value = np.array(value, dtype=float).reshape(-1)
        expected = self.vertex_dim if is_vertex(key) else self.edge_dim
        if value.shape[0] != expected:
            raise DimensionMismatchError(f"Block {key} needs length {expected}, got {value.shape[0]}")
        self.blocks[key] = value

    def __setitem__(self, key: Key, value: Sequence[float]) -> None:
        self.set(key, value)

    def items(self) -> Iterator[Tuple[Key, np.ndarray]]:
        return iter(self.blocks.items())

    def edge_keys(self) -> List[Tuple[int, int]]:
        return sorted(k for k in self.blocks if not is_vertex(k))

    def column(self, i: int) -> "ColumnView":
        return ColumnView(self, i)

    def copy(self) -> "ParamBlocks":
        return ParamBlocks(self.d, self.vertex_dim, self.edge_dim, {k: v.copy() for k, v in self.blocks.items()})

    def to_vector(self) -> np.ndarray:
        out = np.zeros(self.layout.size)
        for key, value in self.blocks.items():
            out[self.layout.block_slice(key)] = value
        return out

    @classmethod
    def from_vector(cls, vector: np.ndarray, layout: BlockLayout) -> "ParamBlocks":
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (layout.size,):
            raise DimensionMismatchError(f"Vector of shape {vector.shape} does not fit layout of size {layout.size}")
        theta = cls(layout.d, layout.vertex_dim, layout.edge_dim)
        for key in layout.keys:
            block = vector[layout.block_slice(key)]
            if is_vertex(key) or np.any(block != 0):
                theta.blocks[key] = block.copy()
        return theta

    def to_precision(self) -> np.ndarray:
        """Dense d x d matrix of a family with scalar blocks (the Gaussian precision)."""
        if self.vertex_dim != 1 or self.edge_dim != 1:
            raise DimensionMismatchError("Only scalar-block parameters map to a matrix")
        omega = np.zeros((self.d, self.d))
        for key, value in self.blocks.items():
            if is_vertex(key):
                omega[key, key] = value[0]
            else:
                i, j = key
                omega[i, j] = omega[j, i] = value[0]
        return omega

    @classmethod
    def from_precision(cls, omega: np.ndarray) -> "ParamBlocks":
        omega = np.asarray(omega, dtype=float)
        d = omega.shape[0]
        theta = cls(d, 1, 1)
        for i in range(d):
            theta.blocks[i] = np.array([omega[i, i]])
            for j in range(i + 1, d):
                if omega[i, j] != 0:
                    theta.blocks[(i, j)] = np.array([omega[i, j]])
        return theta

    @property
    def rho_star(self) -> float:
        """Smallest max-norm over the nonzero groups."""
        norms = [np.abs(v).max() for v in self.blocks.values() if np.any(v != 0)]
        return float(min(norms)) if norms else 0.0

    @property
    def kappa_1(self) -> float:
        """Largest l1 norm of a column theta_{.,i}."""
        return float(max(np.abs(self.column(i).to_array()).sum() for i in range(self.d)))

    def is_zero(self) -> bool:
        return all(not np.any(v) for v in self.blocks.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParamBlocks):
            return NotImplemented
        if (self.d, self.vertex_dim, self.edge_dim) != (other.d, other.vertex_dim, other.edge_dim):
            return False
        return bool(np.array_equal(self.to_vector(), other.to_vector()))

    def __repr__(self) -> str:
        return f"ParamBlocks(d={self.d}, vertex_dim={self.vertex_dim}, edge_dim={self.edge_dim}, edges={len(self.edge_keys())})"


class ColumnView:
    """Read/write projection theta_{.,i} of a ``ParamBlocks``.

    Entries are addressed either by flat position or by ``(j, u)``: entry ``u``
    of the block shared with vertex ``j`` (``j == i`` is the vertex block).
    Writes go to the owner's block, so column ``i`` entry ``(j, u)`` and column
    ``j`` entry ``(i, u)`` are the same storage.
    """

    def __init__(self, owner: ParamBlocks, i: int):
        if not 0 <= i < owner.d:
            raise IndexError(f"Column {i} outside [0, {owner.d})")
        self.owner = owner
        self.i = i
        self.layout = owner.layout.column_layout(i)

    def __len__(self) -> int:
        return self.owner.vertex_dim + (self.owner.d - 1) * self.owner.edge_dim

    def _locate(self, index) -> Tuple[Key, int]:
        if isinstance(index, tuple):
            j, u = index
            key = self.i if j == self.i else canonical_edge(self.i, j)
            return key, u
        if index < 0:
            index += len(self)
        if not 0 <= index < len(self):
            raise IndexError(f"Column entry {index} outside [0, {len(self)})")
        for key, offset in reversed(self.layout):
            if index >= offset:
                return key, index - offset
        raise IndexError(index)

    def __getitem__(self, index) -> float:
        key, u = self._locate(index)
        return float(self.owner.get(key)[u])

    def __setitem__(self, index, value: float) -> None:
        key, u = self._locate(index)
        block = self.owner.get(key).copy()
        block[u] = value
        self.owner.set(key, block)

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.owner.get(key) for key, _ in self.layout])


def group_norms(theta: ParamBlocks) -> Dict[Key, float]:
    """l2 norm of every stored block (absent edge blocks are zero and omitted)."""
    return {key: float(np.linalg.norm(value)) for key, value in theta.items()}


def penalty(theta: ParamBlocks, weights: Optional[np.ndarray] = None) -> float:
    """R(theta) = sum_g w_g ||theta_g||_2, unit weights by default."""
    norms = theta.layout.group_norms(theta.to_vector())
    if weights is None:
        return float(norms.sum())
    return float(np.dot(weights, norms))


def edge_set_of(theta: ParamBlocks, tol: float = 0.0) -> Graph:
    """Edges whose block norm exceeds ``tol``."""
    if tol < 0:
        raise ValueError(f"Invalid tolerance: {tol}")
    edges = [key for key, value in theta.items() if not is_vertex(key) and np.linalg.norm(value) > tol]
    return Graph(theta.d, frozenset(edges))


def truncation_index(old: BasisSpec, new: BasisSpec, d: int) -> np.ndarray:
    """Positions of the ``old`` basis coordinates inside the flat ``new`` layout.

    Vertex degrees 1..m1 are a prefix of 1..m1'; the edge grid (k, l), k, l <= m2
    sits in the top-left corner of the m2' x m2' grid.
    """
    if old.is_gaussian or new.is_gaussian or new.m1 < old.m1 or new.m2 < old.m2:
        raise ValueError(f"{new} does not enlarge {old}")
    old_layout = BlockLayout.for_basis(d, old)
    new_layout = BlockLayout.for_basis(d, new)
    grid = (np.arange(old.m2)[:, None] * new.m2 + np.arange(old.m2)[None, :]).reshape(-1)
    out = np.empty(old_layout.size, dtype=np.int64)
    for key in old_layout.keys:
        start = new_layout.offsets[key]
        local = np.arange(old.m1) if is_vertex(key) else grid
        out[old_layout.block_slice(key)] = start + local
    return out


def embed_truncation(theta: ParamBlocks, old: BasisSpec, new: BasisSpec) -> ParamBlocks:
    """Zero-pads ``theta`` from basis ``old`` into the larger basis ``new``."""
    new_layout = BlockLayout.for_basis(theta.d, new)
    vector = np.zeros(new_layout.size)
    vector[truncation_index(old, new, theta.d)] = theta.to_vector()
    return ParamBlocks.from_vector(vector, new_layout)

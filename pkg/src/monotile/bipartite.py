"""Bipartite graphs (A, B) with bitset adjacency on both sides."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitset import as_mask, bits, iter_bits


@dataclass
class BipartiteGraph:
    """Vertices of A and B are indexed from 0; ``nbrs[a]`` is a mask over B."""

    a_size: int
    b_size: int
    nbrs: list[int]

    def __post_init__(self):
        if len(self.nbrs) != self.a_size:
            raise ValueError("need one neighbourhood mask per A vertex")
        back = [0] * self.b_size
        for a, m in enumerate(self.nbrs):
            for b in iter_bits(m):
                if b >= self.b_size:
                    raise ValueError(f"neighbour {b} outside B")
                back[b] |= 1 << a
        self.back = back

    @classmethod
    def from_edges(cls, a_size: int, b_size: int, edges) -> "BipartiteGraph":
        nbrs = [0] * a_size
        for a, b in edges:
            nbrs[a] |= 1 << b
        return cls(a_size, b_size, nbrs)

    @classmethod
    def from_matrix(cls, mat) -> "BipartiteGraph":
        mat = np.asarray(mat, dtype=bool)
        nbrs = [int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little") for row in mat]
        return cls(mat.shape[0], mat.shape[1], nbrs)

    @classmethod
    def complete(cls, a_size: int, b_size: int) -> "BipartiteGraph":
        return cls(a_size, b_size, [(1 << b_size) - 1] * a_size)

    @classmethod
    def from_colouring(cls, g, a_vertices, b_vertices, colour: int) -> "BipartiteGraph":
        """Colour-``colour`` edges between host vertex lists A and B (in the given order)."""
        a_vertices = list(a_vertices)
        b_vertices = list(b_vertices)
        bpos = {v: j for j, v in enumerate(b_vertices)}
        bmask = as_mask(b_vertices)
        row = g.rows[colour]
        nbrs = []
        for u in a_vertices:
            m = 0
            for v in iter_bits(row[u] & bmask):
                m |= 1 << bpos[v]
            nbrs.append(m)
        return cls(len(a_vertices), len(b_vertices), nbrs)

    @property
    def num_edges(self) -> int:
        return sum(m.bit_count() for m in self.nbrs)

    def density(self) -> float:
        if self.a_size == 0 or self.b_size == 0:
            return 0.0
        return self.num_edges / (self.a_size * self.b_size)

    def degree(self, a: int) -> int:
        return self.nbrs[a].bit_count()

    def common_b(self, a_mask: int) -> int:
        """Common neighbourhood in B of a set of A vertices (all of B for the empty set)."""
        out = (1 << self.b_size) - 1
        for a in iter_bits(a_mask):
            out &= self.nbrs[a]
        return out

    def common_a(self, b_list) -> int:
        out = (1 << self.a_size) - 1
        for b in b_list:
            out &= self.back[b]
        return out

    def matrix(self, rows=None) -> np.ndarray:
        """0/1 float matrix, rows restricted to the given A indices."""
        rows = range(self.a_size) if rows is None else rows
        nbytes = (self.b_size + 7) // 8
        out = np.zeros((len(rows), self.b_size), dtype=np.float64)
        for i, a in enumerate(rows):
            raw = np.frombuffer(self.nbrs[a].to_bytes(nbytes, "little"), dtype=np.uint8)
            out[i] = np.unpackbits(raw, bitorder="little")[: self.b_size]
        return out

    def induced(self, a_keep: int, b_keep: int) -> tuple["BipartiteGraph", list[int], list[int]]:
        """Sub-graph on the kept A and B indices, re-indexed; returns the index maps too."""
        a_idx = bits(a_keep)
        b_idx = bits(b_keep)
        bpos = {b: j for j, b in enumerate(b_idx)}
        nbrs = []
        for a in a_idx:
            m = 0
            for b in iter_bits(self.nbrs[a] & b_keep):
                m |= 1 << bpos[b]
            nbrs.append(m)
        return BipartiteGraph(len(a_idx), len(b_idx), nbrs), a_idx, b_idx

"""Edge-coloured complete graphs: storage, generation, serialization."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .bitset import VertexSet, as_mask, full_mask, iter_bits


class GraphFormatError(ValueError):
    pass


def _pack_row(row: np.ndarray) -> int:
    return int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little")


class ColouredCompleteGraph:
    """An r-edge-colouring of K_n.

    ``matrix[u, v]`` is the colour of uv (diagonal is -1) and
    ``rows[c][v]`` is the bitmask of the colour-c neighbourhood of v.
    Instances are treated as immutable once built.
    """

    def __init__(self, n: int, r: int, matrix: np.ndarray):
        if n < 0 or r < 1:
            raise ValueError(f"need n >= 0 and r >= 1, got n={n}, r={r}")
        matrix = np.asarray(matrix, dtype=np.int16).reshape(n, n)
        off = ~np.eye(n, dtype=bool)
        if n > 1:
            vals = matrix[off]
            if vals.min() < 0 or vals.max() >= r:
                raise GraphFormatError(f"colour ids must lie in [0, {r})")
            if not np.array_equal(matrix, matrix.T):
                raise GraphFormatError("colour matrix is not symmetric")
        matrix = matrix.copy()
        np.fill_diagonal(matrix, -1)
        matrix.setflags(write=False)
        self.n = n
        self.r = r
        self.matrix = matrix
        self._lut = matrix.tolist()
        self.rows: list[list[int]] = [
            [_pack_row(matrix[v] == c) for v in range(n)] for c in range(r)
        ]

    # construction -----------------------------------------------------

    @classmethod
    def from_upper(cls, n: int, r: int, colours: Sequence[int]) -> "ColouredCompleteGraph":
        """Build from colour ids in row-major upper-triangle order."""
        expected = n * (n - 1) // 2
        if len(colours) != expected:
            raise GraphFormatError(f"expected {expected} colour ids for n={n}, got {len(colours)}")
        m = np.full((n, n), -1, dtype=np.int16)
        iu = np.triu_indices(n, 1)
        vals = np.asarray(colours, dtype=np.int64)
        if expected and (vals.min() < 0 or vals.max() >= r):
            raise GraphFormatError(f"colour id out of range [0, {r})")
        m[iu] = vals
        m.T[iu] = vals
        return cls(n, r, m)

    def upper(self) -> list[int]:
        iu = np.triu_indices(self.n, 1)
        return self.matrix[iu].astype(int).tolist()

    # queries ----------------------------------------------------------

    def colour_of(self, u: int, v: int) -> int:
        if u == v:
            raise ValueError("loops carry no colour")
        return self._lut[u][v]

    def neighbours(self, v: int, colour: int) -> int:
        return self.rows[colour][v]

    def vertex_set(self) -> VertexSet:
        return VertexSet(full_mask(self.n))

    def colour_counts(self, a, b=None) -> list[int]:
        """Edges of each colour inside ``a`` (b None) or between disjoint ``a`` and ``b``."""
        am = as_mask(a)
        if b is None:
            return [sum((self.rows[c][v] & am).bit_count() for v in iter_bits(am)) // 2
                    for c in range(self.r)]
        bm = as_mask(b)
        return [sum((self.rows[c][v] & bm).bit_count() for v in iter_bits(am))
                for c in range(self.r)]

    def most_frequent_colour(self, a, b=None) -> int:
        counts = self.colour_counts(a, b)
        return max(range(self.r), key=lambda c: (counts[c], -c))

    def induced_rows(self, colour: int, within) -> dict[int, int]:
        """Colour-``colour`` adjacency restricted to ``within``."""
        wm = as_mask(within)
        row = self.rows[colour]
        return {v: row[v] & wm for v in iter_bits(wm)}

    def __eq__(self, other) -> bool:
        if not isinstance(other, ColouredCompleteGraph):
            return NotImplemented
        return self.n == other.n and self.r == other.r and np.array_equal(self.matrix, other.matrix)

    def __repr__(self) -> str:
        return f"ColouredCompleteGraph(n={self.n}, r={self.r})"

    # serialization ----------------------------------------------------

    def to_text(self) -> str:
        up = self.upper()
        lines = [f"{self.n} {self.r}"]
        if up:
            lines.append(" ".join(map(str, up)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ColouredCompleteGraph":
        tokens = text.split()
        if len(tokens) < 2:
            raise GraphFormatError("missing 'n r' header")
        try:
            n, r = int(tokens[0]), int(tokens[1])
            colours = [int(t) for t in tokens[2:]]
        except ValueError as exc:
            raise GraphFormatError(f"non-integer token: {exc}") from None
        if n < 0 or r < 1:
            raise GraphFormatError(f"bad header n={n} r={r}")
        return cls.from_upper(n, r, colours)

    def to_json(self) -> dict:
        return {"n": self.n, "r": self.r, "colours": self.upper()}

    @classmethod
    def from_json(cls, data: dict) -> "ColouredCompleteGraph":
        try:
            return cls.from_upper(int(data["n"]), int(data["r"]), list(data["colours"]))
        except (KeyError, TypeError) as exc:
            raise GraphFormatError(f"malformed colouring JSON: {exc}") from None


def load(path) -> ColouredCompleteGraph:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphFormatError(str(exc)) from None
        return ColouredCompleteGraph.from_json(data)
    return ColouredCompleteGraph.from_text(text)


def save(g: ColouredCompleteGraph, path) -> None:
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(json.dumps(g.to_json(), separators=(",", ":")) + "\n")
    else:
        path.write_text(g.to_text())


GENERATOR_KINDS = ("uniform-random", "weighted-random", "single-colour", "blocks", "from-file")


def generate(kind: str, n: int = 0, r: int = 2, seed: int = 0, *, colour: int = 0,
             weights=None, parts=None, part_colours=None, path=None) -> ColouredCompleteGraph:
    """Build a colouring of K_n.

    ``weighted-random`` draws each edge colour from ``weights``; ``blocks``
    colours uv by ``part_colours[p(u)][p(v)]`` for the partition ``parts``.
    """
    if kind == "from-file":
        if path is None:
            raise ValueError("from-file needs a path")
        return load(path)
    if n < 0 or r < 1:
        raise ValueError(f"need n >= 0 and r >= 1, got n={n}, r={r}")
    m = n * (n - 1) // 2
    if kind == "uniform-random":
        rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
        return ColouredCompleteGraph.from_upper(n, r, rng.integers(0, r, size=m))
    if kind == "weighted-random":
        p = np.asarray(weights if weights is not None else [1.0] * r, dtype=float)
        if len(p) != r:
            raise ValueError("need one weight per colour")
        rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
        return ColouredCompleteGraph.from_upper(n, r, rng.choice(r, size=m, p=p / p.sum()))
    if kind == "single-colour":
        if not 0 <= colour < r:
            raise ValueError("colour out of range")
        return ColouredCompleteGraph.from_upper(n, r, [colour] * m)
    if kind == "blocks":
        if parts is None or part_colours is None:
            raise ValueError("blocks needs parts and part_colours")
        where = {}
        for p, block in enumerate(parts):
            for v in block:
                if v in where:
                    raise ValueError(f"vertex {v} in two parts")
                where[v] = p
        if sorted(where) != list(range(n)):
            raise ValueError("parts must partition range(n)")
        mat = np.full((n, n), -1, dtype=np.int16)
        for u in range(n):
            for v in range(u + 1, n):
                c = part_colours[where[u]][where[v]]
                mat[u, v] = mat[v, u] = c
        return ColouredCompleteGraph(n, r, mat)
    raise ValueError(f"unknown generator kind {kind!r}")


def common_neighbourhood_mask(g: ColouredCompleteGraph, s: int, colour: int, within: int) -> int:
    row = g.rows[colour]
    out = within & ~s
    for v in iter_bits(s):
        out &= row[v]
        if not out:
            break
    return out


def common_neighbourhood(g: ColouredCompleteGraph, s, colour: int, within=None) -> VertexSet:
    """Vertices of ``within`` outside ``s`` joined to all of ``s`` in ``colour``."""
    sm = as_mask(s)
    if sm == 0:
        raise ValueError("S must be nonempty")
    if not 0 <= colour < g.r:
        raise ValueError("colour out of range")
    wm = full_mask(g.n) if within is None else as_mask(within)
    return VertexSet(common_neighbourhood_mask(g, sm, colour, wm))

"""Down-closed hypergraphs, rich sets, and greedy hypergraph embeddings.

A :class:`NeighbourhoodHypergraph` is never materialized: a set S of at most
Delta vertices of U is an edge when it has at least ``threshold`` common
neighbours of one colour inside V.  Counting the Delta-edges through a set
uses 0/1 matrix products over the colour adjacency U x V.

Memoization in :class:`RichSetOracle` is not synchronized; an oracle belongs
to the single call that created it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .bitset import as_mask, bits
from .errors import MonotileError, PreconditionError, RetriesExhausted
from .rng import derive_seed, substream
from .sequence import DerivedMultiHypergraph

EXACT_SUPERSETS = 10**7
SAMPLES = 20000


class EmbeddingStuck(MonotileError):
    """Greedy embedding found no admissible vertex; ``prefix`` is the partial map."""

    def __init__(self, message, prefix=None):
        super().__init__(message)
        self.prefix = prefix or {}


class DownClosedHypergraph:
    """Shared rich-set arithmetic; subclasses supply edge tests and superset counts."""

    vertices: list[int]
    delta: int

    @property
    def n(self) -> int:
        return len(self.vertices)

    def is_edge(self, s) -> bool:
        raise NotImplementedError

    def count_superset_edges(self, s, rng=None) -> tuple[int, bool]:
        """Delta-edges containing ``s``; the flag is False when the count was sampled."""
        raise NotImplementedError

    def count_delta_edges(self) -> int:
        return self.count_superset_edges(())[0]

    def delta_edge_fraction(self) -> float:
        total = math.comb(self.n, self.delta)
        return self.count_delta_edges() / total if total else 1.0


class ExplicitDownClosed(DownClosedHypergraph):
    """Down-closure of an explicit list of generating sets over ``vertices``."""

    def __init__(self, vertices, delta: int, generators):
        self.vertices = list(vertices)
        self.delta = delta
        self._gens = [frozenset(g) for g in generators]
        for g in self._gens:
            if len(g) > delta:
                raise ValueError("generator larger than delta")

    @classmethod
    def complete(cls, vertices, delta):
        return cls(vertices, delta, combinations(list(vertices), delta))

    def is_edge(self, s) -> bool:
        s = frozenset(s)
        if len(s) > self.delta:
            return False
        return not s or any(s <= g for g in self._gens)

    def count_superset_edges(self, s, rng=None) -> tuple[int, bool]:
        s = frozenset(s)
        j = self.delta - len(s)
        if j < 0:
            return 0, True
        rest = [v for v in self.vertices if v not in s]
        full = set(g for g in self._gens if len(g) == self.delta)
        return sum(1 for extra in combinations(rest, j) if s.union(extra) in full), True


class NeighbourhoodHypergraph(DownClosedHypergraph):
    """Sets of U with at least ``threshold`` common ``colour``-neighbours inside V."""

    def __init__(self, g, u, v, colour: int, threshold: float, delta: int):
        self.vertices = bits(as_mask(u)) if not isinstance(u, (list, tuple)) else list(u)
        self.v_mask = as_mask(v)
        if as_mask(self.vertices) & self.v_mask:
            raise PreconditionError("U and V must be disjoint")
        self.colour = colour
        self.threshold = threshold
        self.delta = delta
        self.pos = {x: i for i, x in enumerate(self.vertices)}
        v_list = bits(self.v_mask)
        sub = g.matrix[np.ix_(self.vertices, v_list)] if self.vertices and v_list else \
            np.zeros((len(self.vertices), len(v_list)))
        self.mat = (sub == colour).astype(np.float32)
        self.v_size = len(v_list)
        self._edge_memo: dict[int, bool] = {}

    def common_count(self, s) -> int:
        col = np.ones(self.v_size, dtype=np.float32)
        for x in s:
            col *= self.mat[self.pos[x]]
        return int(col.sum())

    def is_edge(self, s) -> bool:
        s = tuple(s)
        if len(s) > self.delta:
            return False
        key = as_mask(s)
        hit = self._edge_memo.get(key)
        if hit is None:
            hit = self.common_count(s) >= self.threshold
            self._edge_memo[key] = hit
        return hit

    def count_superset_edges(self, s, rng=None) -> tuple[int, bool]:
        s = tuple(s)
        j = self.delta - len(s)
        if j < 0:
            return 0, True
        col = np.ones(self.v_size, dtype=np.float32)
        for x in s:
            col *= self.mat[self.pos[x]]
        others = [self.pos[x] for x in self.vertices if x not in s]
        mat = self.mat[others]
        need = self.threshold
        if j == 0:
            return int(col.sum() >= need), True
        if math.comb(len(others), j) > EXACT_SUPERSETS:
            rng = rng if rng is not None else substream(0, "rich-sample")
            hits = 0
            for _ in range(SAMPLES):
                idx = rng.sample(range(len(others)), j)
                c = col.copy()
                for i in idx:
                    c *= mat[i]
                hits += c.sum() >= need
            return round(hits / SAMPLES * math.comb(len(others), j)), False
        return _count_good(mat, col, j, need), True


def _count_good(mat: np.ndarray, col: np.ndarray, j: int, need: float) -> int:
    """j-subsets of rows whose product with ``col`` has at least ``need`` ones."""
    rows = mat.shape[0]
    if rows < j:
        return 0
    weighted = mat * col
    if j == 1:
        return int((weighted.sum(axis=1) >= need).sum())
    if j == 2:
        prod = weighted @ mat.T
        iu = np.triu_indices(rows, 1)
        return int((prod[iu] >= need).sum())
    total = 0
    for i in range(rows - j + 1):
        total += _count_good(mat[i + 1:], col * mat[i], j - 1, need)
    return total


class RichSetOracle:
    """Memoized rich/not-rich classification of small vertex sets."""

    def __init__(self, hypergraph: DownClosedHypergraph, lam: float, seed: int = 0):
        self.g = hypergraph
        self.lam = lam
        self.memo: dict[int, bool] = {}
        self.sampled: set[int] = set()
        self._rng = substream(seed, "rich-oracle")

    def threshold(self, size: int) -> float:
        d = self.g.delta
        return (1 - self.lam ** (d - size)) * math.comb(self.g.n - size, d - size)

    def is_rich(self, s) -> bool:
        s = tuple(s)
        if len(s) > self.g.delta:
            raise ValueError(f"rich sets have at most {self.g.delta} vertices")
        key = as_mask(s)
        hit = self.memo.get(key)
        if hit is None:
            count, exact = self.g.count_superset_edges(s, self._rng)
            hit = count > self.threshold(len(s))
            self.memo[key] = hit
            if not exact:
                self.sampled.add(key)
        return hit


def is_rich(oracle: RichSetOracle, s) -> bool:
    return oracle.is_rich(s)


def _check_embed_pre(h: DerivedMultiHypergraph, g: DownClosedHypergraph, density_exp: float):
    if h.m > g.n / 2:
        raise PreconditionError(f"need m <= n/2, got m={h.m}, n={g.n}")
    need = (1 - density_exp) * math.comb(g.n, g.delta)
    have = g.count_delta_edges()
    if have <= need:
        raise PreconditionError(f"{have} Delta-edges, need more than {need:.1f}")


def embed_hypergraph(h: DerivedMultiHypergraph, g: DownClosedHypergraph, lam: float,
                     seed: int = 0, *, check: bool = True, invariant: str = "rich",
                     oracle: RichSetOracle | None = None) -> dict[int, int]:
    """Greedy embedding keeping the image of every partial hyperedge rich.

    ``invariant="edge"`` only keeps partial images edges of ``g`` (a weaker,
    always necessary condition used when the density hypothesis is out of
    reach).  Returns ``{member vertex: vertex of g}``.
    """
    if invariant not in ("rich", "edge"):
        raise ValueError(f"unknown invariant {invariant!r}")
    if check:
        if not 0 < lam < 1 / (2 * g.delta):
            raise PreconditionError(f"need 0 < lambda < 1/(2 Delta), got {lam}")
        _check_embed_pre(h, g, lam**g.delta)
    if h.m > g.n:
        raise EmbeddingStuck("more member vertices than hypergraph vertices")
    oracle = oracle if oracle is not None else RichSetOracle(g, lam, seed)
    ok = oracle.is_rich if invariant == "rich" else g.is_edge
    rng = substream(seed, "embed-hypergraph")
    incident = {x: [] for x in h.vertices}
    for e in h.hyperedges:
        for x in set(e):
            incident[x].append(e)
    if invariant == "rich" and not ok(()):
        raise EmbeddingStuck("the empty set is not rich", {})
    image: dict[int, int] = {}
    used: set[int] = set()
    for x in h.vertices:
        cands = [u for u in g.vertices if u not in used]
        rng.shuffle(cands)
        placed = False
        for u in cands:
            good = True
            for e in incident[x]:
                part = tuple(image[y] for y in e if y in image) + (u,)
                if not ok(part):
                    good = False
                    break
            if good:
                image[x] = u
                used.add(u)
                placed = True
                break
        if not placed:
            raise EmbeddingStuck(f"no admissible image for member vertex {x}", dict(image))
    return image


def is_embedding(h: DerivedMultiHypergraph, g: DownClosedHypergraph, image: dict[int, int]) -> bool:
    if len(set(image.values())) != len(image):
        return False
    return all(g.is_edge(tuple(image[x] for x in e)) for e in h.hyperedges)


def count_edges_in(h: DerivedMultiHypergraph, image: dict[int, int], r) -> int:
    """Hyperedges (with multiplicity) whose image lies inside ``r``."""
    rm = as_mask(r)
    total = 0
    for e in h.hyperedges:
        m = 0
        for x in e:
            m |= 1 << image[x]
        if m & ~rm == 0:
            total += 1
    return total


def careful_threshold(h: DerivedMultiHypergraph, delta: int, r: int, base: int = 32) -> float:
    """e(H) / (Delta^2 (base*r)^Delta); ``base`` is 32 in the faithful setting."""
    return h.num_edges / (delta * delta * (base * r) ** delta)


@dataclass
class CarefulEmbedding:
    image: dict[int, int]
    counts: list[int]
    threshold: float
    retries: int
    unsatisfied: list[int] = field(default_factory=list)

    @property
    def satisfied(self) -> bool:
        return not self.unsatisfied


def embed_carefully(h: DerivedMultiHypergraph, g: DownClosedHypergraph, lam: float,
                    constraints, seed: int = 0, *, r: int = 2, threshold: float | None = None,
                    max_retries: int = 64, check: bool = True, invariant: str = "rich",
                    best_effort: bool = False) -> CarefulEmbedding:
    """Embedding with at least ``threshold`` hyperedges inside every constraint set.

    Resamples the candidate order until all constraints hold.  With
    ``best_effort`` the attempt satisfying the most constraints is returned
    and the failing indices are listed instead of raising.
    """
    masks = [as_mask(c) for c in constraints]
    if threshold is None:
        threshold = careful_threshold(h, g.delta, r)
    if check:
        if g.n < 16 * r * h.m:
            raise PreconditionError(f"need n >= 16 r m = {16 * r * h.m}, got {g.n}")
        gm = as_mask(g.vertices)
        for i, m in enumerate(masks):
            if (m & gm).bit_count() < g.n / (8 * r):
                raise PreconditionError(f"constraint {i} has fewer than n/(8r) vertices",
                                        detail={"constraint": i})
    oracle = RichSetOracle(g, lam, seed) if invariant == "rich" else None
    best = None
    starved = [0] * len(masks)
    for attempt in range(1, max_retries + 1):
        try:
            image = embed_hypergraph(h, g, lam, seed=derive_seed(seed, "careful", attempt),
                                     check=check and attempt == 1, invariant=invariant,
                                     oracle=oracle)
        except EmbeddingStuck:
            if attempt == max_retries and best is None:
                raise
            continue
        counts = [count_edges_in(h, image, m) for m in masks]
        bad = [i for i, c in enumerate(counts) if c < threshold]
        for i in bad:
            starved[i] += 1
        cand = CarefulEmbedding(image, counts, threshold, attempt, bad)
        if not bad:
            return cand
        if best is None or len(bad) < len(best.unsatisfied):
            best = cand
    if best_effort and best is not None:
        return best
    raise RetriesExhausted(f"no careful embedding within {max_retries} attempts",
                           {"starved": starved, "threshold": threshold})

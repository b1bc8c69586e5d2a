"""Bipartite Delta-bounded graph sequences F_1, F_2, ...

A sequence is never stored: ``member(spec, i)`` builds F_i on demand and is
a pure function of ``(spec, i)``.  Every member is normalized so that it has
at most one isolated vertex, and its bipartition is oriented so that the
X side carries no isolated vertex.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import UnsatisfiableFamily
from .rng import derive_seed

FAMILIES = ("path", "matching", "caterpillar", "blocky", "random")
_DEFAULT_DELTA = {"path": 2, "matching": 1}


@dataclass(frozen=True)
class SequenceSpec:
    family: str
    delta: int
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.delta < 1:
            raise ValueError("delta must be >= 1")

    def __str__(self) -> str:
        if self.family == "random":
            return f"random:D={self.delta}:seed={self.seed}"
        if self.family in _DEFAULT_DELTA and self.delta == _DEFAULT_DELTA[self.family]:
            return self.family
        return f"{self.family}:D={self.delta}"


def parse_spec(text: str | SequenceSpec) -> SequenceSpec:
    """Parse ``path``, ``matching``, ``caterpillar:D=3``, ``blocky:D=2``, ``random:D=3:seed=9``."""
    if isinstance(text, SequenceSpec):
        return text
    parts = text.strip().split(":")
    family = parts[0]
    opts = {}
    for p in parts[1:]:
        key, sep, val = p.partition("=")
        if not sep:
            raise ValueError(f"bad spec option {p!r} in {text!r}")
        opts[key.strip().lower()] = int(val)
    unknown = set(opts) - {"d", "seed"}
    if unknown:
        raise ValueError(f"unknown spec options {sorted(unknown)} in {text!r}")
    if "d" not in opts:
        if family not in _DEFAULT_DELTA:
            raise ValueError(f"family {family!r} needs D=<max degree>")
        opts["d"] = _DEFAULT_DELTA[family]
    return SequenceSpec(family, opts["d"], opts.get("seed", 0))


@dataclass(frozen=True)
class BipartiteMember:
    order: int
    edges: tuple[tuple[int, int], ...]
    x_side: tuple[int, ...]
    y_side: tuple[int, ...]
    degrees: tuple[int, ...]
    adj: tuple[tuple[int, ...], ...] = field(repr=False, compare=False)

    @property
    def max_degree(self) -> int:
        return max(self.degrees, default=0)

    def isolated(self) -> list[int]:
        return [v for v, d in enumerate(self.degrees) if d == 0]


@dataclass(frozen=True)
class DerivedMultiHypergraph:
    """Vertices are the X side of a member; one hyperedge N(y) per y on the Y side."""

    vertices: tuple[int, ...]
    hyperedges: tuple[tuple[int, ...], ...]
    owners: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.vertices)

    @property
    def num_edges(self) -> int:
        return len(self.hyperedges)

    def degrees(self) -> dict[int, int]:
        deg = {v: 0 for v in self.vertices}
        for e in self.hyperedges:
            for v in e:
                deg[v] += 1
        return deg

    def edges_at(self, v: int) -> list[int]:
        return [j for j, e in enumerate(self.hyperedges) if v in e]


def _path_edges(i, delta):
    if i >= 3 and delta < 2:
        raise UnsatisfiableFamily(f"P_{i} needs max degree 2 > {delta}")
    return [(j, j + 1) for j in range(i - 1)]


def _matching_edges(i, delta):
    return [(2 * j, 2 * j + 1) for j in range(i // 2)]


def _blocky_edges(i, delta):
    edges, start = [], 0
    while start < i:
        size = min(2 * delta, i - start)
        a = (size + 1) // 2
        left = range(start, start + a)
        right = range(start + a, start + size)
        edges.extend((u, v) for u in left for v in right)
        start += size
    return edges


def _random_edges(i, delta, seed):
    # Canonical sampler: left = [0, ceil(i/2)), right = rest; floor(i*delta/2)
    # uniform proposals (l, r), kept when both degrees stay <= delta and the
    # edge is new.
    rng = random.Random(derive_seed(seed, "random-bipartite", delta, i))
    a = (i + 1) // 2
    if i < 2:
        return []
    deg = [0] * i
    present = set()
    for _ in range(i * delta // 2):
        u = rng.randrange(a)
        v = a + rng.randrange(i - a)
        if deg[u] < delta and deg[v] < delta and (u, v) not in present:
            present.add((u, v))
            deg[u] += 1
            deg[v] += 1
    return sorted(present)


def _raw_edges(spec: SequenceSpec, i: int):
    if spec.family == "path":
        return _path_edges(i, spec.delta)
    if spec.family == "matching":
        return _matching_edges(i, spec.delta)
    if spec.family == "caterpillar":
        return _caterpillar_spine(i, spec.delta)
    if spec.family == "blocky":
        return _blocky_edges(i, spec.delta)
    return _random_edges(i, spec.delta, spec.seed)


def _caterpillar_spine(i, delta):
    if i >= 3 and delta < 2:
        raise UnsatisfiableFamily(f"caterpillar on {i} vertices needs delta >= 2")
    edges, deg, spine = [], [0] * i, 0
    for v in range(1, i):
        edges.append((spine, v))
        deg[v] += 1
        deg[spine] += 1
        # legs fill a spine vertex up to delta - 1; the edge using its last slot
        # makes v the next spine vertex
        if deg[spine] >= delta:
            spine = v
    return edges


def _two_colour(i, adj):
    side = [-1] * i
    for root in range(i):
        if side[root] != -1:
            continue
        side[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if side[w] == -1:
                    side[w] = 1 - side[u]
                    queue.append(w)
                elif side[w] == side[u]:
                    raise UnsatisfiableFamily("member is not bipartite")
    return side


def _normalize(i, edges, delta):
    """Pair up isolated vertices with fresh edges; leaves at most one isolated vertex."""
    deg = [0] * i
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    lonely = [v for v in range(i) if deg[v] == 0]
    edges = list(edges)
    for a, b in zip(lonely[0::2], lonely[1::2]):
        edges.append((a, b))
    return sorted((min(u, v), max(u, v)) for u, v in edges)


@lru_cache(maxsize=4096)
def member(spec: SequenceSpec, i: int) -> BipartiteMember:
    """F_i of the sequence described by ``spec``."""
    if i < 1:
        raise ValueError("member order must be >= 1")
    spec = parse_spec(spec)
    edges = _normalize(i, _raw_edges(spec, i), spec.delta)
    adj = [[] for _ in range(i)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    degrees = tuple(len(a) for a in adj)
    if max(degrees, default=0) > spec.delta:
        raise UnsatisfiableFamily(f"{spec} has no member of order {i} with max degree <= {spec.delta}")
    side = _two_colour(i, adj)
    xs = [v for v in range(i) if side[v] == 0 and degrees[v] > 0]
    ys = [v for v in range(i) if side[v] == 1 or degrees[v] == 0]
    return BipartiteMember(i, tuple(edges), tuple(xs), tuple(ys), degrees,
                           tuple(tuple(sorted(a)) for a in adj))


def derive_hypergraph(m: BipartiteMember) -> DerivedMultiHypergraph:
    """Multihypergraph on X' whose hyperedges are N(y), y in Y' (with repetition)."""
    return DerivedMultiHypergraph(m.x_side, tuple(m.adj[y] for y in m.y_side), m.y_side)

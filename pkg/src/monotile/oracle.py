"""Exact minimum monochromatic tilings of small coloured complete graphs."""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
from dataclasses import dataclass

from .bitset import bits, full_mask, iter_bits, lowest
from .embedder import embed
from .errors import BudgetExhausted, UnsatisfiableFamily
from .graph import ColouredCompleteGraph
from .ramsey import greedy_cover
from .rng import substream
from .sequence import member, parse_spec
from .tiling import Embedding, Tiling, singleton, verify_tiling

DEFAULT_CAP = 12
CSV_FIELDS = ["digest", "n", "r", "spec", "min_size", "optimal"]


def instance_digest(g: ColouredCompleteGraph) -> str:
    return hashlib.blake2b(g.to_text().encode(), digest_size=8).hexdigest()


@dataclass
class OracleResult:
    min_size: int
    tiling: Tiling
    nodes: int
    digest: str
    optimal: bool = True


def _lexmin_image(f, adj, allowed: int, budget: int = 10**5):
    """Lexicographically smallest host image in member order, or None if the budget runs out."""
    k = f.order
    image = [-1] * k
    nodes = 0

    def place(j: int, used: int) -> bool:
        nonlocal nodes
        if j == k:
            return True
        nodes += 1
        if nodes > budget:
            raise BudgetExhausted("lexmin")
        m = allowed & ~used
        for w in f.adj[j]:
            if w < j:
                m &= adj[image[w]]
        for v in iter_bits(m):
            image[j] = v
            if place(j + 1, used | (1 << v)):
                return True
        return False

    try:
        return tuple(image) if place(0, 0) else None
    except BudgetExhausted:
        return None


class _TileTable:
    """Memoized answer to: which monochromatic member spans exactly this vertex set?"""

    def __init__(self, g, spec):
        self.g = g
        self.spec = spec
        self.cache: dict[int, Embedding | None] = {}

    def spanning(self, s: int) -> Embedding | None:
        hit = self.cache.get(s, False)
        if hit is not False:
            return hit
        size = s.bit_count()
        out = None
        if size == 1:
            out = singleton(lowest(s), self.spec)
        else:
            try:
                f = member(self.spec, size)
            except UnsatisfiableFamily:
                f = None
            if f is not None:
                for c in range(self.g.r):
                    found = embed(f, self.g.rows[c], s, budget=10**7)
                    if found is not None:
                        found = _lexmin_image(f, self.g.rows[c], s) or found
                        out = Embedding(size, found, c, self.spec)
                        break
        self.cache[s] = out
        return out


def exact_min_tiling(g: ColouredCompleteGraph, spec, budget: int = 10**6,
                     cap: int = DEFAULT_CAP) -> OracleResult:
    """Fewest tiles over all monochromatic tilings, by iterative deepening on the tile count.

    The search always branches on the lowest uncovered vertex and tries the
    vertex sets containing it from largest to smallest.  When ``budget``
    search nodes are spent, the greedy cover is returned flagged non-optimal.
    """
    spec = parse_spec(spec)
    n = g.n
    if n > cap:
        raise ValueError(f"exact search is capped at n={cap}, got n={n}")
    digest = instance_digest(g)
    if n == 0:
        return OracleResult(0, Tiling([], 0), 0, digest)
    table = _TileTable(g, spec)
    failed: dict[int, int] = {}  # uncovered mask -> largest tile count known to be insufficient
    nodes = 0

    def search(uncovered: int, left: int, acc: list) -> bool:
        nonlocal nodes
        if not uncovered:
            return True
        if left == 0 or failed.get(uncovered, -1) >= left:
            return False
        nodes += 1
        if nodes > budget:
            raise BudgetExhausted("oracle budget exhausted")
        v = lowest(uncovered)
        rest = bits(uncovered & ~(1 << v))
        for size in range(len(rest) + 1, 0, -1):
            for combo in itertools.combinations(rest, size - 1):
                s = 1 << v
                for u in combo:
                    s |= 1 << u
                tile_ = table.spanning(s)
                if tile_ is None:
                    continue
                acc.append(tile_)
                if search(uncovered & ~s, left - 1, acc):
                    return True
                acc.pop()
        failed[uncovered] = max(failed.get(uncovered, -1), left)
        return False

    full = full_mask(n)
    try:
        for s in range(1, n + 1):
            acc: list = []
            if search(full, s, acc):
                tiling = Tiling(acc, n)
                assert verify_tiling(g, spec, tiling).ok
                return OracleResult(s, tiling, nodes, digest)
    except BudgetExhausted:
        cover, _ = greedy_cover(g, full, 1, spec, strategy="eager")
        return OracleResult(cover.size, cover, nodes, digest, optimal=False)
    raise AssertionError("singletons always tile")


def all_colourings(n: int, r: int):
    pairs = n * (n - 1) // 2
    for colours in itertools.product(range(r), repeat=pairs):
        yield ColouredCompleteGraph.from_upper(n, r, colours)


def _enumerate(n, r, enumerator, samples, seed):
    if enumerator == "all":
        yield from all_colourings(n, r)
    elif enumerator == "single-colour":
        yield ColouredCompleteGraph.from_upper(n, r, [0] * (n * (n - 1) // 2))
    elif enumerator == "sampled":
        rng = substream(seed, "sweep", n, r)
        for _ in range(samples):
            yield ColouredCompleteGraph.from_upper(
                n, r, [rng.randrange(r) for _ in range(n * (n - 1) // 2)])
    else:
        raise ValueError(f"unknown enumerator {enumerator!r}")


def exact_sweep(n_max: int, r: int, spec, enumerator: str = "all", *, samples: int = 20,
                seed: int = 0, budget: int = 10**6) -> list[dict]:
    """Oracle values for every enumerated colouring with 1 <= n <= n_max.

    Full enumeration is limited to r=2 and n_max <= 6; use ``sampled`` beyond.
    """
    spec = parse_spec(spec)
    if enumerator == "all" and (r != 2 or n_max > 6):
        raise ValueError("full enumeration needs r=2 and n_max <= 6")
    rows = []
    for n in range(1, n_max + 1):
        for g in _enumerate(n, r, enumerator, samples, seed):
            res = exact_min_tiling(g, spec, budget=budget)
            rows.append({"digest": res.digest, "n": n, "r": r, "spec": str(spec),
                         "min_size": res.min_size, "optimal": res.optimal})
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row[k] for k in CSV_FIELDS})
    return buf.getvalue()

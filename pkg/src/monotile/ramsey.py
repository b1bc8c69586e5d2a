"""Monochromatic copies in dense colour classes and the greedy almost-cover."""

from __future__ import annotations

import math

from .bitset import as_mask, bits, iter_bits
from .embedder import embed
from .errors import BudgetExhausted, CopyNotFound, UnsatisfiableFamily
from .graph import ColouredCompleteGraph
from .rng import substream
from .sequence import BipartiteMember, member, parse_spec
from .tiling import Embedding, Tiling, singleton

DEFAULT_BUDGET = 10**6


def density_threshold(delta: int, eps: float, k: int) -> float:
    """Host order 32*delta*eps^-delta*k above which a k-vertex copy is guaranteed."""
    return 32 * delta * eps ** (-delta) * k


def mono_threshold(delta: int, r: int, k: int) -> int:
    return 32 * delta * r**delta * k


def cover_bound(delta: int, r: int, n: int, t: int = 1) -> float:
    """Upper bound 64*delta*r^delta*(log(n/t)+2) on greedy cover tile counts."""
    return 64 * delta * r**delta * (math.log(n / t) + 2)


def find_dense_copy(adj, s, f: BipartiteMember, eps: float | None = None,
                    budget: int = DEFAULT_BUDGET, rng=None) -> tuple[int, ...]:
    """Copy of ``f`` in the simple graph ``adj`` restricted to ``s``.

    ``eps`` only documents the density regime; above
    ``density_threshold`` a copy exists and the search is expected to find it.
    Raises :class:`CopyNotFound` (``proven_absent`` when the search was exhaustive).
    """
    sm = as_mask(s)
    try:
        found = embed(f, adj, sm, budget, rng)
    except BudgetExhausted as exc:
        raise CopyNotFound(str(exc), proven_absent=False) from None
    if found is None:
        raise CopyNotFound(f"no copy of F_{f.order} in the given host", proven_absent=True)
    return found


def colours_by_frequency(g: ColouredCompleteGraph, s: int) -> list[int]:
    counts = g.colour_counts(s)
    return sorted(range(g.r), key=lambda c: (-counts[c], c))


def find_mono_copy(g: ColouredCompleteGraph, s, k: int, spec, budget: int = DEFAULT_BUDGET,
                   rng=None, colours=None, stats: dict | None = None) -> Embedding:
    """Monochromatic F_k inside ``s``; most frequent colour first, ties by lowest id."""
    spec = parse_spec(spec)
    sm = as_mask(s)
    size = sm.bit_count()
    if not 1 <= k <= size:
        raise ValueError(f"need 1 <= k <= |S|, got k={k}, |S|={size}")
    if k == 1:
        return singleton(next(iter_bits(sm)), spec)
    f = member(spec, k)
    order = colours_by_frequency(g, sm) if colours is None else list(colours)
    exhaustive = True
    for c in order:
        try:
            found = embed(f, g.rows[c], sm, budget, rng)
        except BudgetExhausted:
            exhaustive = False
            continue
        if found is not None:
            if stats is not None:
                stats["colour"] = c
                stats["guaranteed"] = size >= mono_threshold(spec.delta, g.r, k)
            return Embedding(k, found, c, spec)
    raise CopyNotFound(f"no monochromatic F_{k} found in |S|={size}", proven_absent=exhaustive)


def _threshold_order(s: int, delta: int, r: int) -> int:
    # floor of s/(32*delta*r^delta), clamped into [s/(64 delta r^delta), s/(32 delta r^delta)]
    lo = math.ceil(s / (64 * delta * r**delta))
    hi = s // (32 * delta * r**delta)
    return max(lo, min(hi, s))


def greedy_cover(g: ColouredCompleteGraph, s, t: int, spec, *, strategy: str = "threshold",
                 budget: int = DEFAULT_BUDGET, eager_budget: int | None = None,
                 seed: int = 0) -> tuple[Tiling, int]:
    """Cover all but fewer than ``t`` vertices of ``s`` by disjoint monochromatic members.

    ``strategy="threshold"`` uses the fixed order rule: singletons
    once at most 64*delta*r^delta vertices remain, else one copy of F_ell with
    ell = floor(s/(32 delta r^delta)).  ``strategy="eager"`` first tries larger
    copies under a small search budget and falls back to the same rule, so
    every step covers at least as much and the count bound still holds.

    Returns the partial tiling and the residual mask.
    """
    spec = parse_spec(spec)
    if t <= 0:
        raise ValueError("target residual t must be positive")
    if strategy not in ("threshold", "eager"):
        raise ValueError(f"unknown strategy {strategy!r}")
    delta, r = spec.delta, g.r
    big = 64 * delta * r**delta
    rng = substream(seed, "greedy_cover")
    uncovered = as_mask(s)
    tiles: list[Embedding] = []
    while uncovered.bit_count() >= t:
        size = uncovered.bit_count()
        floor_ell = 1 if size <= big else _threshold_order(size, delta, r)
        if strategy == "eager":
            got = _eager_copy(g, uncovered, size, floor_ell, spec, eager_budget, rng)
            if got is not None:
                tiles.append(got)
                uncovered &= ~got.mask
                continue
        if size <= big:
            # the rest goes out as singletons; stop as soon as fewer than t remain
            for v in bits(uncovered)[: size - (t - 1)]:
                tiles.append(singleton(v, spec))
                uncovered &= ~(1 << v)
            break
        emb = find_mono_copy(g, uncovered, floor_ell, spec, budget=budget)
        tiles.append(emb)
        uncovered &= ~emb.mask
    return Tiling(tiles, g.n), uncovered


def _eager_copy(g, uncovered, size, floor_ell, spec, eager_budget, rng):
    ell = size
    tried = set()
    while ell > floor_ell:
        if ell not in tried:
            tried.add(ell)
            try:
                budget = eager_budget if eager_budget is not None else 4 * ell + 64
                return find_mono_copy(g, uncovered, ell, spec, budget=budget, rng=rng)
            except (CopyNotFound, UnsatisfiableFamily):
                pass
        ell = max(floor_ell, min(ell - 1, int(ell * 0.7)))
    return None

"""Backtracking subgraph embedding over bitset adjacency.

The pattern is a :class:`BipartiteMember`; the host is any indexable of
neighbourhood masks (``adj[v]`` is an int bitset).  Member vertices are
placed in BFS order so every non-root vertex already has a placed
neighbour, candidates come from word-parallel intersections, and a forward
check rejects a placement that leaves some unplaced neighbour without
candidates.
"""

from __future__ import annotations

from collections import deque
from functools import lru_cache

from .bitset import bits
from .errors import BudgetExhausted
from .sequence import BipartiteMember


@lru_cache(maxsize=2048)
def _plan(f: BipartiteMember):
    i = f.order
    comps, seen = [], [False] * i
    for root in sorted(range(i), key=lambda v: -f.degrees[v]):
        if seen[root]:
            continue
        seen[root] = True
        comp, queue = [], deque([root])
        while queue:
            u = queue.popleft()
            comp.append(u)
            for w in f.adj[u]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
        comps.append(comp)
    comps.sort(key=len, reverse=True)
    order = [v for comp in comps for v in comp]
    pos = {v: p for p, v in enumerate(order)}
    prior = tuple(tuple(pos[w] for w in f.adj[v] if pos[w] < pos[v]) for v in order)
    # for each position: unplaced neighbours and, for each, their placed neighbours
    # once this position is filled
    ahead = []
    for p, v in enumerate(order):
        checks = []
        for w in f.adj[v]:
            q = pos[w]
            if q > p:
                checks.append(tuple(pos[x] for x in f.adj[w] if pos[x] <= p))
        ahead.append(tuple(checks))
    return tuple(order), prior, tuple(ahead)


def embed(f: BipartiteMember, adj, allowed: int, budget: int = 10**6, rng=None) -> tuple[int, ...] | None:
    """Injective map V(f) -> allowed preserving edges, or None if none exists.

    Returns ``vertices`` with ``vertices[j]`` the host image of member vertex j.
    Raises :class:`BudgetExhausted` when ``budget`` placements were tried
    without a decision.
    """
    k = f.order
    if allowed.bit_count() < k:
        return None
    if k == 0:
        return ()
    order, prior, ahead = _plan(f)
    image = [-1] * k
    used = 0
    nodes = 0

    def candidates(p: int) -> list[int]:
        m = allowed & ~used
        for q in prior[p]:
            m &= adj[image[q]]
            if not m:
                return []
        c = bits(m)
        if rng is not None:
            rng.shuffle(c)
        else:
            c.reverse()
        return c

    stack = [candidates(0)]
    while stack:
        p = len(stack) - 1
        if image[p] >= 0:
            used ^= 1 << image[p]
            image[p] = -1
        cands = stack[-1]
        if not cands:
            stack.pop()
            continue
        h = cands.pop()
        nodes += 1
        if nodes > budget:
            raise BudgetExhausted(f"embedding F_{k}: budget {budget} exhausted")
        image[p] = h
        used |= 1 << h
        ok = True
        free = allowed & ~used
        for placed in ahead[p]:
            m = free
            for q in placed:
                m &= adj[image[q]]
            if not m:
                ok = False
                break
        if not ok:
            continue
        if p + 1 == k:
            out = [0] * k
            for q, v in enumerate(order):
                out[v] = image[q]
            return tuple(out)
        stack.append(candidates(p + 1))
    return None

import itertools
import os
import sys

import numpy as np
import pytest

from monotile.graph import ColouredCompleteGraph
from monotile.sequence import member, parse_spec

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line, file=sys.stderr)


@pytest.fixture
def acceptance_log():
    return record_acceptance


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def from_pairs(n, r, colour_of):
    """Graph from a function (u, v) -> colour."""
    mat = np.full((n, n), -1, dtype=np.int16)
    for u in range(n):
        for v in range(u + 1, n):
            mat[u, v] = mat[v, u] = colour_of(u, v)
    return ColouredCompleteGraph(n, r, mat)


def tile_is_valid(g, spec, tile) -> bool:
    """Independent check of one tile: injective, inside the host, every member edge in one colour."""
    spec = parse_spec(spec)
    verts = tile.vertices
    if len(verts) != tile.order or len(set(verts)) != len(verts):
        return False
    if any(not 0 <= v < g.n for v in verts):
        return False
    f = member(spec, tile.order)
    return all(int(g.matrix[verts[a], verts[b]]) == tile.colour for a, b in f.edges)


def tiling_is_valid(g, spec, tiling, target=None) -> bool:
    target = set(range(g.n)) if target is None else set(target)
    seen = []
    for t in tiling.tiles:
        if not tile_is_valid(g, spec, t):
            return False
        seen.extend(t.vertices)
    return len(seen) == len(set(seen)) and set(seen) == target


def path_block_ok(g, block) -> bool:
    """Does the block carry a monochromatic Hamiltonian path? Brute force over orderings."""
    block = list(block)
    if len(block) == 1:
        return True
    for c in range(g.r):
        for perm in itertools.permutations(block):
            if perm[0] > perm[-1]:
                continue
            if all(int(g.matrix[perm[i], perm[i + 1]]) == c for i in range(len(perm) - 1)):
                return True
    return False


def set_partitions(items, max_blocks):
    """All partitions of ``items`` into at most ``max_blocks`` blocks."""
    items = list(items)
    if not items:
        yield []
        return
    if max_blocks == 0:
        return
    first, rest = items[0], items[1:]
    for size in range(len(rest) + 1):
        for combo in itertools.combinations(rest, size):
            block = (first,) + combo
            remaining = [x for x in rest if x not in combo]
            for tail in set_partitions(remaining, max_blocks - 1):
                yield [block] + tail


def min_path_tiling_brute(g, limit=None) -> int:
    """Fewest monochromatic paths partitioning V(g), by enumerating set partitions."""
    n = g.n
    cache = {}

    def ok(block):
        key = tuple(sorted(block))
        if key not in cache:
            cache[key] = path_block_ok(g, key)
        return cache[key]

    top = n if limit is None else min(n, limit)
    for s in range(1, top + 1):
        for part in set_partitions(range(n), s):
            if all(ok(b) for b in part):
                return s
    return top + 1


def all_two_colourings(n):
    pairs = list(itertools.combinations(range(n), 2))
    for colours in itertools.product((0, 1), repeat=len(pairs)):
        lookup = dict(zip(pairs, colours))
        yield from_pairs(n, 2, lambda u, v: lookup[(u, v)])


@pytest.fixture(autouse=True)
def _no_out_dir(monkeypatch):
    monkeypatch.delenv("MONOTILE_OUT_DIR", raising=False)
    yield

from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monotile.errors import UnsatisfiableFamily
from monotile.sequence import derive_hypergraph, member, parse_spec

SPECS = ["path", "matching", "caterpillar:D=3", "caterpillar:D=2", "blocky:D=2", "blocky:D=3",
         "random:D=2:seed=1", "random:D=3:seed=9", "random:D=1:seed=4"]


def bfs_sides(order, edges):
    adj = {v: [] for v in range(order)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    side = {}
    for root in range(order):
        if root in side:
            continue
        side[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w not in side:
                    side[w] = 1 - side[u]
                    queue.append(w)
                elif side[w] == side[u]:
                    return None
    return side


def test_spec_grammar():
    assert parse_spec("path").delta == 2
    assert parse_spec("matching").delta == 1
    s = parse_spec("random:D=3:seed=9")
    assert (s.family, s.delta, s.seed) == ("random", 3, 9)
    assert str(s) == "random:D=3:seed=9"
    assert parse_spec(str(parse_spec("caterpillar:D=3"))) == parse_spec("caterpillar:D=3")
    for bad in ("star", "caterpillar", "path:D", "path:Q=2", "blocky:D=0"):
        with pytest.raises(ValueError):
            parse_spec(bad)


def test_path_members():
    assert member(parse_spec("path"), 1).edges == ()
    p4 = member(parse_spec("path"), 4)
    assert p4.edges == ((0, 1), (1, 2), (2, 3))
    assert set(p4.x_side) == {0, 2} and set(p4.y_side) == {1, 3}
    assert max(p4.degrees) == 2


def test_random_member_is_bipartite_and_bounded():
    m = member(parse_spec("random:D=3:seed=9"), 10)
    assert m.order == 10 and m.max_degree <= 3
    assert bfs_sides(10, m.edges) is not None


def test_unsatisfiable_family():
    with pytest.raises(UnsatisfiableFamily):
        member(parse_spec("caterpillar:D=1"), 3)
    with pytest.raises(UnsatisfiableFamily):
        member(parse_spec("path:D=1"), 5)
    with pytest.raises(ValueError):
        member(parse_spec("path"), 0)


def test_derived_hypergraph_examples():
    h = derive_hypergraph(member(parse_spec("path"), 2))
    assert len(h.vertices) == 1 and h.hyperedges == ((0,),)
    h4 = derive_hypergraph(member(parse_spec("path"), 4))
    assert set(h4.vertices) == {0, 2}
    assert sorted(map(set, h4.hyperedges), key=len, reverse=True) == [{0, 2}, {2}]


def test_derived_degrees_match_member_degrees():
    m = member(parse_spec("random:D=3:seed=9"), 10)
    h = derive_hypergraph(m)
    recount = {x: sum(x in e for e in h.hyperedges) for x in h.vertices}
    assert recount == {x: m.degrees[x] for x in m.x_side}
    assert h.owners == m.y_side


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(SPECS), st.integers(1, 64))
def test_member_invariants(spec_text, i):
    spec = parse_spec(spec_text)
    try:
        m = member(spec, i)
    except UnsatisfiableFamily:
        assert spec.delta < 2 and i >= 3
        return
    assert m.order == i
    assert max(m.degrees, default=0) <= spec.delta
    assert sum(d == 0 for d in m.degrees) <= 1
    xs, ys = set(m.x_side), set(m.y_side)
    assert xs.isdisjoint(ys) and xs | ys == set(range(i))
    for a, b in m.edges:
        assert (a in xs) != (b in xs)
    assert all(m.degrees[x] >= 1 for x in xs)
    assert m == member(spec, i)
    h = derive_hypergraph(m)
    assert sum(len(e) for e in h.hyperedges) == len(m.edges)
    assert 2 * len(m.edges) >= i - 1
    assert all(len(e) <= spec.delta for e in h.hyperedges)
    deg = h.degrees()
    assert all(1 <= d <= spec.delta for d in deg.values())

import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monotile.bitset import mask_of
from monotile.errors import PreconditionError
from monotile.graph import generate
from monotile.hypergraph import (EmbeddingStuck, ExplicitDownClosed, NeighbourhoodHypergraph,
                                 RichSetOracle, careful_threshold, count_edges_in, embed_carefully,
                                 embed_hypergraph, is_embedding, is_rich)
from monotile.sequence import DerivedMultiHypergraph, derive_hypergraph, member, parse_spec


def falling(n, m):
    return math.prod(range(n - m + 1, n + 1))


def edge_sets(vertices, delta, missing):
    """All delta-subsets of ``vertices`` except ``missing``."""
    missing = {frozenset(e) for e in missing}
    return [e for e in itertools.combinations(vertices, delta) if frozenset(e) not in missing]


def brute_superset_count(gens, n, s, delta):
    s = set(s)
    full = {frozenset(g) for g in gens if len(g) == delta}
    rest = [v for v in range(n) if v not in s]
    return sum(1 for extra in itertools.combinations(rest, delta - len(s)) if frozenset(s | set(extra)) in full)


def brute_embeddings(h, n, gens):
    """Labelled embeddings: injective maps whose hyperedge images lie inside some generator."""
    gens = [frozenset(g) for g in gens]

    def is_edge(s):
        return not s or any(s <= g for g in gens)

    total = 0
    for image in itertools.permutations(range(n), len(h.vertices)):
        f = dict(zip(h.vertices, image))
        if all(is_edge(frozenset(f[x] for x in e)) for e in h.hyperedges):
            total += 1
    return total


def test_empty_set_rich_in_complete_hypergraph():
    g = ExplicitDownClosed.complete(range(7), 2)
    for lam in (0.01, 0.2, 0.9):
        assert is_rich(RichSetOracle(g, lam), ())


def test_delta_one_richness_formula():
    n = 10
    for edges in range(n + 1):
        g = ExplicitDownClosed(range(n), 1, [(v,) for v in range(edges)])
        lam = 0.25
        assert is_rich(RichSetOracle(g, lam), ()) == (edges > (1 - lam) * n)


def test_rich_classification_matches_exhaustive_count():
    rng = random.Random(8)
    gens = [e for e in itertools.combinations(range(8), 2) if rng.random() < 0.8]
    g = ExplicitDownClosed(range(8), 2, gens)
    oracle = RichSetOracle(g, 0.3)
    for size in range(3):
        for s in itertools.combinations(range(8), size):
            count = brute_superset_count(gens, 8, s, 2)
            assert oracle.is_rich(s) == (count > (1 - 0.3 ** (2 - size)) * math.comb(8 - size, 2 - size))
    with pytest.raises(ValueError):
        oracle.is_rich((0, 1, 2))


def test_empty_member_embeds_trivially():
    h = DerivedMultiHypergraph((), (), ())
    g = ExplicitDownClosed.complete(range(6), 2)
    assert embed_hypergraph(h, g, 0.1, check=False) == {}


def test_complete_host_count_saturates():
    h = derive_hypergraph(member(parse_spec("path"), 7))
    n = 8
    gens = list(itertools.combinations(range(n), 2))
    assert brute_embeddings(h, n, gens) == falling(n, len(h.vertices))
    g = ExplicitDownClosed(range(n), 2, gens)
    f = embed_hypergraph(h, g, 0.2, seed=1)
    assert len(set(f.values())) == len(f) and is_embedding(h, g, f)


def test_one_missing_edge_meets_lower_bound():
    n = 10
    gens = edge_sets(range(n), 2, [(0, 1)])
    lam = math.sqrt(1 / 45) * 1.001
    h = DerivedMultiHypergraph((0, 1, 2), ((0, 1), (1, 2), (0,)), (3, 4, 5))
    g = ExplicitDownClosed(range(n), 2, gens)
    assert g.count_delta_edges() > (1 - lam**2) * math.comb(n, 2)
    count = brute_embeddings(h, n, gens)
    assert count >= (1 - 4 * lam) ** 3 * falling(n, 3)
    f = embed_hypergraph(h, g, lam, seed=3)
    assert is_embedding(h, g, f)


def test_preconditions_checked():
    h = derive_hypergraph(member(parse_spec("path"), 9))
    sparse = ExplicitDownClosed(range(8), 2, [(0, 1)])
    with pytest.raises(PreconditionError):
        embed_hypergraph(h, sparse, 0.1)
    g = ExplicitDownClosed.complete(range(20), 2)
    with pytest.raises(PreconditionError):
        embed_hypergraph(h, g, 0.3)
    with pytest.raises(EmbeddingStuck):
        embed_hypergraph(h, sparse, 0.1, check=False)


def test_count_edges_in_examples():
    h = derive_hypergraph(member(parse_spec("random:D=2:seed=3"), 12))
    assert all(h.hyperedges)
    f = {x: i for i, x in enumerate(h.vertices)}
    assert count_edges_in(h, f, range(len(h.vertices))) == h.num_edges
    assert count_edges_in(h, f, []) == 0
    rng = random.Random(5)
    for _ in range(20):
        r = {v for v in range(len(h.vertices)) if rng.random() < 0.5}
        assert count_edges_in(h, f, r) == sum(all(f[x] in r for x in e) for e in h.hyperedges)


def test_multiplicity_is_preserved():
    h = DerivedMultiHypergraph((0, 1), ((0, 1), (0, 1), (1,)), (2, 3, 4))
    assert count_edges_in(h, {0: 5, 1: 6}, {5, 6}) == 3
    assert count_edges_in(h, {0: 5, 1: 6}, {6}) == 1


def test_careful_without_constraints_reduces_to_plain_embedding():
    h = derive_hypergraph(member(parse_spec("path"), 6))
    g = ExplicitDownClosed.complete(range(96), 2)
    res = embed_carefully(h, g, 0.2, [], seed=2, r=2)
    assert res.satisfied and res.counts == [] and is_embedding(h, g, res.image)
    full = embed_carefully(h, g, 0.2, [range(96)], seed=2, r=2)
    assert full.counts == [h.num_edges]


def test_careful_constraint_counts_recounted():
    n, r = 64, 2
    h = derive_hypergraph(member(parse_spec("path"), 8))
    assert len(h.vertices) == 4
    g = ExplicitDownClosed.complete(range(n), 2)
    rng = random.Random(1)
    region = set(rng.sample(range(n), n // 4))
    # n = 64 is below 16 r m = 128, so the size gate is lifted for this instance
    res = embed_carefully(h, g, 0.2, [region], seed=4, r=r, check=False)
    threshold = h.num_edges / (4 * 64**2)
    assert res.threshold == pytest.approx(threshold) == careful_threshold(h, 2, r)
    recount = sum(all(res.image[x] in region for x in e) for e in h.hyperedges)
    assert res.counts == [recount] and recount >= threshold


def test_careful_gates():
    h = derive_hypergraph(member(parse_spec("path"), 8))
    g = ExplicitDownClosed.complete(range(64), 2)
    with pytest.raises(PreconditionError):
        embed_carefully(h, g, 0.2, [], r=2)
    g2 = ExplicitDownClosed.complete(range(160), 2)
    with pytest.raises(PreconditionError):
        embed_carefully(h, g2, 0.2, [range(5)], r=2)


def test_neighbourhood_hypergraph_counts_and_closure():
    g = generate("uniform-random", 40, 2, seed=6)
    u, v = list(range(12)), mask_of(range(12, 40))
    hyp = NeighbourhoodHypergraph(g, u, v, 0, 6, 2)
    for s in itertools.combinations(u, 2):
        common = sum(all(g.colour_of(x, w) == 0 for x in s) for w in range(12, 40))
        assert hyp.common_count(s) == common
        assert hyp.is_edge(s) == (common >= 6)
        if hyp.is_edge(s):
            assert hyp.is_edge(s[:1]) and hyp.is_edge(s[1:]) and hyp.is_edge(())
    for s in [(), (0,), (3,)]:
        brute = sum(hyp.is_edge(tuple(sorted(set(s) | set(e))))
                    for e in itertools.combinations([x for x in u if x not in s], 2 - len(s)))
        assert hyp.count_superset_edges(s)[0] == brute
    with pytest.raises(PreconditionError):
        NeighbourhoodHypergraph(g, [0, 1], mask_of([1, 2]), 0, 1, 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(6, 9), st.integers(0, 10**6), st.floats(0.05, 0.24))
def test_rich_survival(n, seed, lam):
    # a rich set loses richness on at most lambda*n one-vertex extensions
    rng = random.Random(seed)
    gens = [e for e in itertools.combinations(range(n), 2) if rng.random() < 0.9]
    g = ExplicitDownClosed(range(n), 2, gens)
    oracle = RichSetOracle(g, lam)
    for size in (0, 1):
        for s in itertools.combinations(range(n), size):
            if not oracle.is_rich(s):
                continue
            bad = sum(not oracle.is_rich(tuple(sorted(s + (v,)))) for v in range(n) if v not in s)
            assert bad <= lam * n


@settings(max_examples=30, deadline=None)
@given(st.integers(8, 10), st.integers(0, 10**6))
def test_embedding_images_are_edges(n, seed):
    rng = random.Random(seed)
    missing = rng.sample(list(itertools.combinations(range(n), 2)), 1)
    gens = edge_sets(range(n), 2, missing)
    lam = math.sqrt(1 / math.comb(n, 2)) * 1.01
    g = ExplicitDownClosed(range(n), 2, gens)
    spec = parse_spec(f"random:D=2:seed={seed % 97}")
    h = derive_hypergraph(member(spec, 2 * (n // 2) - rng.randrange(2)))
    if len(h.vertices) > n // 2:
        return
    f = embed_hypergraph(h, g, lam, seed=seed)
    assert is_embedding(h, g, f)
    for e in h.hyperedges:
        image = frozenset(f[x] for x in e)
        assert any(image <= frozenset(gg) for gg in gens) or not image

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monotile.bitset import VertexSet, bits, full_mask, mask_of
from monotile.graph import (ColouredCompleteGraph, GraphFormatError, common_neighbourhood, generate,
                            load, save)
from monotile.rng import derive_seed, random_bit, substream


@st.composite
def colourings(draw, max_n=9, max_r=4):
    n = draw(st.integers(0, max_n))
    r = draw(st.integers(1, max_r))
    colours = draw(st.lists(st.integers(0, r - 1), min_size=n * (n - 1) // 2,
                            max_size=n * (n - 1) // 2))
    return ColouredCompleteGraph.from_upper(n, r, colours)


def test_single_colour_k3():
    g = generate("single-colour", 3, 2)
    assert g.upper() == [0, 0, 0]
    assert all(g.colour_of(u, v) == 0 for u in range(3) for v in range(3) if u != v)


def test_uniform_random_is_reproducible():
    assert generate("uniform-random", 5, 2, seed=1) == generate("uniform-random", 5, 2, seed=1)
    assert generate("uniform-random", 30, 3, seed=1) != generate("uniform-random", 30, 3, seed=2)


def test_from_file_matches_file_order(tmp_path):
    path = tmp_path / "k4.txt"
    path.write_text("4 2\n0 1 1 0 1 0\n")
    g = generate("from-file", path=path)
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    assert [g.colour_of(u, v) for u, v in pairs] == [0, 1, 1, 0, 1, 0]
    out = tmp_path / "again.txt"
    save(g, out)
    assert load(out) == g
    save(g, tmp_path / "k4.json")
    assert load(tmp_path / "k4.json") == g


@pytest.mark.parametrize("text", ["", "4", "3 2\n0 1", "3 2\n0 1 2", "3 2\n0 x 1", "2 0\n"])
def test_malformed_files_rejected(text):
    with pytest.raises(GraphFormatError):
        ColouredCompleteGraph.from_text(text)


def test_tiny_graphs_are_legal():
    for n in (0, 1):
        g = generate("uniform-random", n, 3, seed=5)
        assert g.n == n and g.upper() == []
        assert ColouredCompleteGraph.from_text(g.to_text()) == g


def test_weighted_and_blocks():
    g = generate("weighted-random", 60, 2, seed=3, weights=[0.9, 0.1])
    assert g.colour_counts(full_mask(60))[0] > 0.8 * 60 * 59 / 2
    b = generate("blocks", 4, 2, parts=[[0, 1], [2, 3]], part_colours=[[0, 1], [1, 0]])
    assert b.colour_of(0, 1) == 0 and b.colour_of(2, 3) == 0 and b.colour_of(0, 2) == 1
    with pytest.raises(ValueError):
        generate("blocks", 4, 2, parts=[[0, 1], [1, 3]], part_colours=[[0, 1], [1, 0]])


def test_common_neighbourhood_examples():
    g = generate("single-colour", 4, 2)
    assert common_neighbourhood(g, {0}, 0) == {1, 2, 3}
    assert common_neighbourhood(g, {0}, 1) == set()


def test_common_neighbourhood_matches_pair_loop():
    g = generate("uniform-random", 8, 2, seed=7)
    for c in (0, 1):
        brute = {v for v in range(8) if v not in (0, 1)
                 and g.colour_of(v, 0) == c and g.colour_of(v, 1) == c}
        assert common_neighbourhood(g, {0, 1}, c) == brute


def test_common_neighbourhood_guards():
    g = generate("single-colour", 4, 2)
    with pytest.raises(ValueError):
        common_neighbourhood(g, set(), 0)
    with pytest.raises(ValueError):
        common_neighbourhood(g, {0}, 2)


@settings(max_examples=60, deadline=None)
@given(colourings())
def test_colour_classes_partition_the_complete_graph(g):
    for u in range(g.n):
        union = 0
        for c in range(g.r):
            row = g.rows[c][u]
            assert row & union == 0
            union |= row
            for v in bits(row):
                assert g.rows[c][v] >> u & 1
        assert union == full_mask(g.n) & ~(1 << u)
        for v in range(g.n):
            if v != u:
                assert g.colour_of(u, v) == g.colour_of(v, u) < g.r


@settings(max_examples=60, deadline=None)
@given(colourings())
def test_serialization_round_trip(g):
    assert ColouredCompleteGraph.from_text(g.to_text()) == g
    assert ColouredCompleteGraph.from_json(json.loads(json.dumps(g.to_json()))) == g


@settings(max_examples=60, deadline=None)
@given(colourings(max_n=10), st.data())
def test_common_neighbourhood_properties(g, data):
    if g.n == 0:
        return
    s = data.draw(st.sets(st.integers(0, g.n - 1), min_size=1, max_size=3))
    within = data.draw(st.sets(st.integers(0, g.n - 1)))
    c = data.draw(st.integers(0, g.r - 1))
    got = common_neighbourhood(g, s, c, within)
    assert got.issubset(within) and got.isdisjoint(s)
    assert got == {v for v in within - s if all(g.colour_of(v, x) == c for x in s)}


@given(st.sets(st.integers(0, 80)), st.sets(st.integers(0, 80)))
def test_vertex_set_laws(a, b):
    va, vb = VertexSet(a), VertexSet(b)
    assert len(va) == len(a)
    assert (va & vb) == a & b and (va | vb) == a | b and (va - vb) == a - b and (va ^ vb) == a ^ b
    assert va.issubset(va | vb) and (va - vb).isdisjoint(vb)
    assert list(va) == sorted(a)
    assert VertexSet(mask_of(a)) == va


def test_substreams_are_named_and_stable():
    assert derive_seed(7, "a", 1) == derive_seed(7, "a", 1)
    assert derive_seed(7, "a", 1) != derive_seed(7, "a", 2)
    a = substream(3, "x").random()
    assert a == substream(3, "x").random() and a != substream(3, "y").random()
    rng = substream(0, "bits")
    picks = {random_bit(rng, 0b101100) for _ in range(200)}
    assert picks == {2, 3, 5}


def test_matrix_is_read_only():
    g = generate("uniform-random", 5, 2, seed=1)
    with pytest.raises(ValueError):
        g.matrix[0, 1] = 1
    assert np.all(np.diag(g.matrix) == -1)

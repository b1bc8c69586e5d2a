import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monotile.bipartite import BipartiteGraph
from monotile.drc import (DrcParams, chernoff_lower_tail, count_bad_ksets, dependent_random_choice,
                          drc_constant, k_set_drc, pair_drc, t_window)
from monotile.errors import PreconditionError, RetriesExhausted
from monotile.graph import generate


def random_bipartite(a, b, p, seed):
    rng = random.Random(seed)
    return BipartiteGraph.from_edges(a, b, [(i, j) for i in range(a) for j in range(b) if rng.random() < p])


def dense_bipartite(a, b, p, floor, seed):
    """Random bipartite graph resampled until its density reaches ``floor``."""
    for extra in range(100):
        h = random_bipartite(a, b, p, seed * 1000 + extra)
        if h.num_edges >= floor * a * b:
            return h
    raise AssertionError("could not reach density")


def brute_bad(h, s, k, gamma):
    nbrs = {a: {j for j in range(h.b_size) if h.nbrs[a] >> j & 1} for a in s}
    bad = 0
    for combo in itertools.combinations(sorted(s), k):
        common = set.intersection(*(nbrs[a] for a in combo))
        bad += len(common) < gamma * h.b_size
    return bad


def test_params_domain():
    with pytest.raises(PreconditionError):
        DrcParams(2, 4, 1.0, 0.5, 0.1)
    with pytest.raises(PreconditionError):
        DrcParams(2, 4, 0.5, 0.0, 0.1)
    p = DrcParams(2, 2, 0.5, 0.25, 0.0625)
    assert p.guarantee_holds
    assert p.size_bound(40) == 0.5 * 0.25 * 40 and p.bad_bound(10) == 25


def test_complete_bipartite_returns_everything():
    h = BipartiteGraph.complete(12, 9)
    res = dependent_random_choice(h, DrcParams(2, 3, 0.9, 0.5, 0.1, seed=3))
    assert res.S == set(range(12)) and res.bad_k_set_count == 0 and res.retries_used == 1
    kres = k_set_drc(h, 2, 0.25, 2, seed=1)
    assert kres.S == set(range(12))


def test_expected_size_anchor():
    h = random_bipartite(40, 30, 0.5, 8)
    t = 3
    exact = sum((h.degree(a) / h.b_size) ** t for a in range(h.a_size))
    eps = h.density()
    rng = random.Random(4)
    sizes = [h.common_a([rng.randrange(h.b_size) for _ in range(t)]).bit_count() for _ in range(1000)]
    mean = float(np.mean(sizes))
    se = float(np.std(sizes, ddof=1)) / math.sqrt(len(sizes))
    assert abs(mean - exact) <= 3 * se
    assert exact >= h.a_size * eps**t
    assert mean >= h.a_size * eps**t - 3 * se


def test_bad_pair_count_matches_recount_32x32():
    h = dense_bipartite(32, 32, 0.55, 0.5, 1)
    p = DrcParams(2, 4, 0.5, 0.5, 0.15, seed=2)
    assert p.guarantee_holds
    res = dependent_random_choice(h, p)
    assert res.bad_k_set_count == brute_bad(h, list(res.S), 2, 0.15)
    assert h.common_a(res.T) == res.S.mask


def test_t_window_anchor():
    assert t_window(0.25) == 4
    assert t_window(0.2) == 4
    assert t_window(0.45) == 3
    for delta in (0.01, 0.1, 0.3, 0.49):
        t = t_window(delta)
        assert 2 ** (t - 2) <= 1 / delta < 2 ** (t - 1)


def test_drc_constant_is_smallest():
    for r, t, delta in [(2, 4, 0.2), (3, 4, 0.25), (2, 6, 0.05)]:
        c = drc_constant(r, t, delta)
        assert 0.5 * r ** (-t) >= delta**c
        assert c == 1 or 0.5 * r ** (-t) < delta ** (c - 1)


def test_k_set_drc_guarantee():
    h = dense_bipartite(40, 40, 0.6, 0.5, 2)
    res = k_set_drc(h, 2, 0.2, 2, seed=5)
    t = res.params.t
    assert t == 4
    assert res.size >= 0.5 * 0.5**t * 40
    assert res.size >= 0.2 ** res.extra["C"] * 40
    assert res.bad_k_set_count == brute_bad(h, list(res.S), 2, 0.25 / 2)
    with pytest.raises(PreconditionError):
        k_set_drc(h, 2, 0.5, 2)


def test_pair_drc_examples():
    h = BipartiteGraph.complete(5, 5)
    with pytest.raises(PreconditionError):
        pair_drc(h, 1.0, 0.25)
    with pytest.raises(PreconditionError):
        pair_drc(h, 0.5, 0.1)
    assert 0.25 >= 2 * 0.5**4
    g = dense_bipartite(24, 96, 0.6, 0.5, 3)
    res = pair_drc(g, 0.5, 0.25, seed=1)
    assert res.params.k == 2 and res.params.t == 4 and res.params.gamma == 0.125
    assert res.size >= 0.5 * 0.5**4 * 24
    assert res.bad_k_set_count == brute_bad(g, list(res.S), 2, 0.125) <= 0.25 * res.size**2


def test_density_precondition_and_exhaustion():
    h = random_bipartite(20, 20, 0.2, 1)
    with pytest.raises(PreconditionError):
        dependent_random_choice(h, DrcParams(2, 2, 0.5, 0.25, 0.0625))
    empty = BipartiteGraph.from_edges(10, 10, [(0, 0)])
    with pytest.raises(RetriesExhausted) as info:
        dependent_random_choice(empty, DrcParams(1, 1, 0.5, 0.5, 0.1, max_retries=5), check=False)
    assert len(info.value.stats["attempts"]) == 5


def test_count_bad_ksets_exact_for_triples():
    h = random_bipartite(14, 20, 0.5, 9)
    s = list(range(14))
    count, mode = count_bad_ksets(h, s, 3, 0.15)
    assert mode == "exact" and count == brute_bad(h, s, 3, 0.15)


def test_count_bad_ksets_samples_above_the_limit():
    h = random_bipartite(200, 30, 0.5, 2)
    count, mode = count_bad_ksets(h, list(range(200)), 3, 0.1, random.Random(0))
    assert mode == "sampled"
    assert 0 <= count <= math.comb(200, 3)


def test_chernoff_examples():
    assert chernoff_lower_tail(0, 0.3) == 1.0
    assert chernoff_lower_tail(10, 0.5) == pytest.approx(math.exp(-1.25))
    assert chernoff_lower_tail(10, 0.5) == pytest.approx(0.2865, abs=1e-4)
    for bad in [(-1, 0.5), (5, 0.0), (5, 1.0)]:
        with pytest.raises(ValueError):
            chernoff_lower_tail(*bad)


def test_chernoff_binomial_100():
    rng = np.random.default_rng(12)
    x = rng.binomial(100, 0.5, size=10**4)
    freq = float(np.mean(x <= (1 - 0.4) * 50))
    assert freq <= chernoff_lower_tail(50, 0.4)


@settings(max_examples=25, deadline=None)
@given(st.integers(8, 40), st.integers(8, 40), st.integers(1, 3), st.integers(1, 3),
       st.integers(0, 10**6))
def test_drc_contract_property(a, b, k, t, seed):
    eps, delta = 0.5, 0.5
    gamma = (delta * eps ** (k * t) / 2) ** (1 / t) * 0.9
    h = dense_bipartite(a, b, 0.65, eps, seed)
    p = DrcParams(k, t, eps, delta, gamma, max_retries=200, seed=seed)
    assert p.guarantee_holds
    res = dependent_random_choice(h, p)
    assert res.size >= p.size_bound(a)
    assert res.bad_k_set_count == brute_bad(h, list(res.S), k, gamma)
    assert res.bad_k_set_count <= p.bad_bound(res.size)
    assert h.common_a(res.T) == res.S.mask


def test_colouring_bipartite_view():
    g = generate("uniform-random", 12, 2, seed=3)
    h = BipartiteGraph.from_colouring(g, [0, 1, 2], [5, 6, 7, 8], 1)
    for i, u in enumerate([0, 1, 2]):
        for j, v in enumerate([5, 6, 7, 8]):
            assert bool(h.nbrs[i] >> j & 1) == (g.colour_of(u, v) == 1)

"""Good subgraphs, switching chains and the absorbing step.

Terminology used throughout: F = (X, Y) is a monochromatic copy of a
sequence member, ``nf[y]`` is the mask of F-neighbours of a vertex y in Y,
and u ~ v ("u switches to v") means every edge from v to N_F(u) has the
colour of F.  A vertex of Y can then be replaced by v without breaking F.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .bipartite import BipartiteGraph
from .bitset import as_mask, bits, iter_bits, lowest, mask_of
from .drc import bad_pair_matrix, pair_drc
from .errors import (ChainExhausted, CopyNotFound, InfeasibleAtScale, MonotileError,
                     PreconditionError, RetriesExhausted, StageError)
from .graph import ColouredCompleteGraph
from .hypergraph import (EmbeddingStuck, NeighbourhoodHypergraph, RichSetOracle,
                         embed_carefully)
from .params import PipelineParams
from .ramsey import find_mono_copy, greedy_cover
from .rng import derive_seed, substream
from .sequence import derive_hypergraph, member, parse_spec
from .tiling import Embedding, Tiling, verify_tiling

EXACT_PAIR_LIMIT = 64
PAIR_SAMPLES = 200


def pack_disjoint_pairs(first: int, step, last: int, domain: int, need: int | None = None):
    """Greedy maximal packing of disjoint pairs (z, w) inside ``domain``.

    z ranges over ``first``, w over ``step[z] & last`` with w != z.  Stops
    early once ``need`` pairs are found.
    """
    free = domain
    pairs = []
    for z in iter_bits(first & domain):
        if not free >> z & 1:
            continue
        cands = step[z] & last & free & ~(1 << z)
        if cands:
            w = lowest(cands)
            free &= ~((1 << z) | (1 << w))
            pairs.append((z, w))
            if need is not None and len(pairs) >= need:
                break
    return pairs


def max_matching(left, options, rng=None, taken: int = 0) -> dict[int, int]:
    """Maximum matching of ``left`` items into right vertices by augmenting paths.

    ``options[u]`` is the mask of admissible right vertices for u; vertices
    in ``taken`` are never used.
    """
    owner: dict[int, int] = {}
    match: dict[int, int] = {}
    order = list(left)
    if rng is not None:
        rng.shuffle(order)

    def augment(u, seen):
        cand = bits(options[u] & ~taken)
        if rng is not None:
            rng.shuffle(cand)
        for v in cand:
            if v in seen:
                continue
            seen.add(v)
            if v not in owner or augment(owner[v], seen):
                owner[v] = u
                match[u] = v
                return True
        return False

    for u in order:
        augment(u, set())
    return match


class SwitchRelation:
    """Relation u ~ v on Y x (Y u Z) stored as successor masks ``succ[u]``."""

    def __init__(self, y, z, succ: dict[int, int]):
        self.y = as_mask(y)
        self.z = as_mask(z)
        if self.y & self.z:
            raise ValueError("Y and Z must be disjoint")
        ground = self.y | self.z
        self.succ = {u: succ[u] & ground for u in iter_bits(self.y)}
        pred = {v: 0 for v in iter_bits(ground)}
        for u, m in self.succ.items():
            for v in iter_bits(m):
                pred[v] |= 1 << u
        self.pred = pred

    @classmethod
    def from_neighbourhoods(cls, g: ColouredCompleteGraph, nf: dict[int, int], colour: int, y, z):
        """u ~ v iff N_F(u) lies in the ``colour``-neighbourhood of v."""
        ground = as_mask(y) | as_mask(z)
        succ = {}
        rows = g.rows[colour]
        for u in iter_bits(as_mask(y)):
            m = ground
            for x in iter_bits(nf[u]):
                m &= rows[x]
            succ[u] = m
        return cls(y, z, succ)

    @classmethod
    def from_predicate(cls, y, z, pred):
        ground = bits(as_mask(y) | as_mask(z))
        return cls(y, z, {u: mask_of(v for v in ground if pred(u, v)) for u in iter_bits(as_mask(y))})

    def related(self, u: int, v: int) -> bool:
        return bool(self.succ.get(u, 0) >> v & 1)

    def is_reflexive(self) -> bool:
        return all(m >> u & 1 for u, m in self.succ.items())


@dataclass
class GoodSubgraphWitness:
    """A monochromatic copy F=(X,Y) together with its switching classes Y_1..Y_t."""

    embedding: Embedding
    x: int
    y: int
    parts: list[int]
    eta: float
    theta: float
    colour: int
    certificate: dict[int, int] = field(default_factory=dict)
    rejected: list[int] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def spec(self):
        return self.embedding.spec

    @property
    def nf(self) -> dict[int, int]:
        f = member(self.embedding.spec, self.embedding.order)
        v = self.embedding.vertices
        return {v[j]: mask_of(v[i] for i in f.adj[j]) for j in f.y_side}

    @property
    def vertices(self) -> int:
        return self.x | self.y

    def to_json(self) -> dict:
        return {
            "colour": self.colour,
            "spec": str(self.embedding.spec),
            "order": self.embedding.order,
            "vertices": list(self.embedding.vertices),
            "X": bits(self.x),
            "Y": bits(self.y),
            "parts": [bits(p) for p in self.parts],
            "eta": self.eta,
            "theta": self.theta,
            "certificate": {str(w): c for w, c in sorted(self.certificate.items())},
            "rejected": list(self.rejected),
            "info": self.info,
        }


@dataclass
class GoodReport:
    ok: bool
    failure: str | None = None
    sampled_pairs: list[tuple[int, int]] = field(default_factory=list)
    min_chains: dict[int, int] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok


def _switch_chain_count(pred, succ, part, y0, y3, need=None):
    # pairs (y1, y2): y1 ~ y0, y2 ~ y1, y3 ~ y2
    return len(pack_disjoint_pairs(pred[y0], pred, succ[y3], part, need))


def verify_good(g: ColouredCompleteGraph, w: GoodSubgraphWitness, seed: int = 0) -> GoodReport:
    """Check the five goodness conditions; the report names the first failure."""
    emb = w.embedding
    probs = emb.problems(g)
    if probs or emb.colour != w.colour:
        return GoodReport(False, f"condition 1 (monochromatic): {probs or 'colour mismatch'}")
    f = member(emb.spec, emb.order)
    xs = mask_of(emb.vertices[j] for j in f.x_side)
    ys = mask_of(emb.vertices[j] for j in f.y_side)
    if emb.order != (w.x | w.y).bit_count() or xs != w.x or ys != w.y or w.x & w.y:
        return GoodReport(False, "condition 2 (copy of a member with parts X, Y)")
    ysize = w.y.bit_count()
    union = 0
    for i, p in enumerate(w.parts):
        if p & ~w.y or p & union:
            return GoodReport(False, f"parts: Y_{i + 1} not disjoint inside Y")
        union |= p
        if p.bit_count() < w.eta * ysize:
            return GoodReport(False, f"condition 3: |Y_{i + 1}|={p.bit_count()} < eta|Y|")
    if (w.y & ~union).bit_count() > w.theta * ysize:
        return GoodReport(False, f"condition 4: {(w.y & ~union).bit_count()} uncovered > theta|Y|")
    rel = SwitchRelation.from_neighbourhoods(g, w.nf, w.colour, w.y, 0)
    rng = substream(seed, "verify_good")
    report = GoodReport(True)
    for i, p in enumerate(w.parts):
        members = bits(p)
        need = math.ceil(w.eta * len(members) - 1e-12)
        if len(members) <= EXACT_PAIR_LIMIT:
            pairs = [(a, b) for a in members for b in members if a != b]
        else:
            pairs = [tuple(rng.sample(members, 2)) for _ in range(PAIR_SAMPLES)]
            report.sampled_pairs.extend(pairs)
        low = None
        for y0, y3 in pairs:
            c = _switch_chain_count(rel.pred, rel.succ, p, y0, y3, need)
            if c < need:
                return GoodReport(False, f"condition 5: ({y0},{y3}) in Y_{i + 1} has {c} < {need} chains",
                                  report.sampled_pairs)
            low = c if low is None else min(low, c)
        if low is not None:
            report.min_chains[i] = low
    return report


def host_eta(g: ColouredCompleteGraph, w: GoodSubgraphWitness) -> float:
    """Largest eta for which conditions 3 and 5 hold, recounted on the host over every pair."""
    ysize = w.y.bit_count()
    if not ysize or not w.parts:
        return 0.0
    rel = SwitchRelation.from_neighbourhoods(g, w.nf, w.colour, w.y, 0)
    eta = min(p.bit_count() for p in w.parts) / ysize
    for p in w.parts:
        members = bits(p)
        if len(members) < 2:
            continue
        low = min(_switch_chain_count(rel.pred, rel.succ, p, a, b)
                  for a in members for b in members if a != b)
        eta = min(eta, low / len(members))
    return eta


def _default_params(g, spec, params):
    if params is not None:
        return params
    return PipelineParams(mode="faithful", r=g.r, delta_max=parse_spec(spec).delta)


def switch_matching(g: ColouredCompleteGraph, y, z, rel: SwitchRelation, eta: float, theta: float,
                    spec, *, params: PipelineParams | None = None, seed: int = 0,
                    stats: dict | None = None) -> tuple[dict[int, int], Tiling]:
    """Injective f: Y -> Y u Z with y ~ f(y) plus a tiling of (Y u Z) minus f(Y).

    A small set T of Z is matched into Y, a monochromatic copy R of F_|T| is
    found in Y, and every vertex of g(T) outside R is linked to a vertex of R
    outside g(T) by a switching chain x ~ z ~ w ~ y.  Shifting along the
    chains frees R, which becomes one tile; Z minus T is covered greedily.
    """
    spec = parse_spec(spec)
    params = _default_params(g, spec, params)
    ym, zm = as_mask(y), as_mask(z)
    if ym & zm:
        raise ValueError("Y and Z must be disjoint")
    if not rel.is_reflexive():
        raise PreconditionError("switch relation is not reflexive on Y")
    info = stats if stats is not None else {}
    ident = {v: v for v in iter_bits(ym)}
    if not zm:
        info.update(t=0, moved=0, chains=0)
        return ident, Tiling([], g.n)
    ysize, zsize = ym.bit_count(), zm.bit_count()
    d, r = spec.delta, g.r
    if params.faithful:
        t = math.floor(min(eta * ysize / 100, theta * ysize, ysize / (32 * d * r**d), zsize))
    else:
        t = max(1, math.floor(min(eta * ysize / params.switch_div(), zsize)))
    info["t_target"] = t
    if t == 0:
        cover, _ = greedy_cover(g, zm, 1, spec, strategy="threshold", seed=seed)
        info.update(t=0, moved=0, chains=0)
        return ident, cover

    rng = substream(seed, "switch_matching")
    pred_count = {u: (rel.pred[u] & ym).bit_count() for u in iter_bits(zm)}
    if params.faithful:
        pre_tiles, tm = greedy_cover(g, zm, t + 1, spec, strategy="threshold", seed=seed)
        pre_tiles = pre_tiles.tiles
    else:
        ranked = sorted(iter_bits(zm), key=lambda u: (-pred_count[u], u))
        tm = mask_of(ranked[:t])
        pre_tiles = None

    extra = 0  # vertices of Z dropped from T, covered greedily at the end
    chains: list = []
    while True:
        t_list = bits(tm)
        match = max_matching(t_list, {u: rel.pred[u] & ym for u in t_list}, rng)
        unmatched = [u for u in t_list if u not in match]
        if unmatched:
            if params.faithful:
                raise PreconditionError(f"no system of distinct predecessors for {unmatched[:3]}",
                                        detail={"unmatched": unmatched})
            for u in unmatched:
                tm &= ~(1 << u)
                extra |= 1 << u
            continue
        if not tm:
            break
        gt = mask_of(match.values())
        inv = {v: u for u, v in match.items()}
        try:
            copy = find_mono_copy(g, ym, tm.bit_count(), spec, budget=params.budget,
                                  rng=substream(seed, "switch-copy", tm))
        except CopyNotFound:
            if params.faithful:
                raise
            drop = bits(tm)[-1]
            tm &= ~(1 << drop)
            extra |= 1 << drop
            continue
        rm = copy.mask
        x_only = bits(rm & ~gt)
        y_only = bits(gt & ~rm)
        blocked = rm | gt
        free = ym & ~blocked
        chains = []
        failed = None
        remaining = list(x_only)
        for yv in y_only:
            found = None
            cands = remaining if not params.faithful else remaining[:1]
            for xv in cands:
                for zv in iter_bits(rel.succ[xv] & free):
                    wm = rel.succ[zv] & rel.pred[yv] & free & ~(1 << zv) & ym
                    if wm:
                        found = (xv, zv, lowest(wm), yv)
                        break
                if found:
                    break
            if not found:
                failed = yv
                break
            remaining.remove(found[0])
            free &= ~((1 << found[1]) | (1 << found[2]))
            chains.append(found)
        if failed is not None:
            if params.faithful:
                raise ChainExhausted(f"no switching chain ends at {failed}", pair=(remaining[:1], failed))
            u = inv[failed]
            tm &= ~(1 << u)
            extra |= 1 << u
            continue
        break

    f = dict(ident)
    moved = 0
    if tm:
        for xv, zv, wv, yv in chains:
            f[xv], f[zv], f[wv], f[yv] = zv, wv, yv, inv[yv]
        for xv in iter_bits(rm & gt):
            f[xv] = inv[xv]
        moved = tm.bit_count()
        tiles = [copy]
    else:
        tiles = []
        rm = 0
    rest = zm & ~tm
    if params.faithful:
        tiles.extend(pre_tiles)
    elif rest:
        cover, _ = greedy_cover(g, rest, 1, spec, strategy="eager", seed=seed)
        tiles.extend(cover.tiles)
    leftover = Tiling(tiles, g.n)
    image = mask_of(f.values())
    assert len(set(f.values())) == len(f), "switch map is not injective"
    assert all(rel.related(u, v) for u, v in f.items()), "switch map leaves the relation"
    assert leftover.covered == (ym | zm) & ~image, "leftover does not partition the complement"
    info.update(t=tm.bit_count(), moved=moved, chains=len(chains), dropped=extra.bit_count())
    return f, leftover


def qualifying_counts(g: ColouredCompleteGraph, w: GoodSubgraphWitness, z) -> dict[int, int]:
    """For each z: number of y in Y with N_F(y) inside the F-colour neighbourhood of z."""
    nf = w.nf
    rows = g.rows[w.colour]
    out = {}
    for v in iter_bits(as_mask(z)):
        nv = rows[v]
        out[v] = sum(1 for y, m in nf.items() if m & ~nv == 0)
    return out


def absorb(g: ColouredCompleteGraph, w: GoodSubgraphWitness, z, spec=None, *,
           params: PipelineParams | None = None, seed: int = 0,
           stats: dict | None = None) -> Tiling:
    """Tiling of X u Y u Z: one copy of F rebuilt through the switch maps plus leftovers."""
    spec = parse_spec(spec) if spec is not None else w.spec
    params = _default_params(g, spec, params)
    zm = as_mask(z) & ~w.vertices
    ysize = w.y.bit_count()
    info = stats if stats is not None else {}
    if params.K is not None and zm.bit_count() > params.K * ysize:
        raise PreconditionError(f"|Z|={zm.bit_count()} exceeds K|Y|")
    nf = w.nf
    rows = g.rows[w.colour]
    part_of: dict[int, int] = {}
    for v in iter_bits(zm):
        nv = rows[v]
        good = mask_of(y for y, m in nf.items() if m & ~nv == 0)
        if good.bit_count() < 2 * w.theta * ysize:
            raise PreconditionError(f"vertex {v} has {good.bit_count()} switch targets, "
                                    f"need {2 * w.theta * ysize:.2f}", detail={"z": v})
        best, best_ratio = None, -1.0
        for i, p in enumerate(w.parts):
            cnt = (good & p).bit_count()
            if cnt >= w.theta * p.bit_count() and cnt / p.bit_count() > best_ratio:
                best, best_ratio = i, cnt / p.bit_count()
        if best is None:
            raise PreconditionError(f"vertex {v} fits no switching class", detail={"z": v})
        part_of[v] = best
    f_all: dict[int, int] = {}
    tiles: list[Embedding] = []
    info["parts"] = []
    for i, p in enumerate(w.parts):
        zi = mask_of(v for v, j in part_of.items() if j == i)
        if not zi:
            continue
        rel = SwitchRelation.from_neighbourhoods(g, nf, w.colour, p, zi)
        sub = {}
        fi, left = switch_matching(g, p, zi, rel, w.eta, w.theta, spec, params=params,
                                   seed=derive_seed(seed, "absorb", i), stats=sub)
        info["parts"].append(sub)
        f_all.update(fi)
        tiles.extend(left.tiles)
    emb = w.embedding
    new = Embedding(emb.order, tuple(f_all.get(v, v) for v in emb.vertices), emb.colour, emb.spec)
    tiling = Tiling([new] + tiles, g.n)
    report = verify_tiling(g, spec, tiling, within=w.vertices | zm)
    if not report.ok:
        raise MonotileError(f"absorb produced an invalid tiling: {report.violations[:3]}")
    return tiling


@dataclass
class OneGoodSet:
    S: list[int]
    f: dict[int, int]
    c: float
    chain_min: int
    a_size: int
    stats: dict = field(default_factory=dict)

    @property
    def size_ratio(self) -> float:
        return len(self.S) / self.a_size if self.a_size else 0.0

    @property
    def chain_ratio(self) -> float:
        return self.chain_min / len(self.S) if self.S else 0.0


def one_good_delta(eps: float) -> float:
    """The delta solving delta + 2 delta / eps^3 = 1/3."""
    return eps**3 / (3 * (eps**3 + 2))


def chain_table(h: BipartiteGraph, s: list[int], f: dict[int, int]):
    """Masks over A: first[a] = {z in S: f(a) in N(z)}, last[y] = {w in S: f(w) in N(y)}."""
    sm = mask_of(s)
    first = {a: h.back[f[a]] & sm for a in s}
    last = {y: mask_of(w for w in s if h.nbrs[y] >> f[w] & 1) for y in s}
    return sm, first, last


def chain_counts(h: BipartiteGraph, s: list[int], f: dict[int, int], need: int | None = None):
    """Greedy disjoint chain counts for every ordered pair of distinct vertices of S."""
    sm, first, last = chain_table(h, s, f)
    return {(x, y): len(pack_disjoint_pairs(first[x], first, last[y], sm, need))
            for x in s for y in s if x != y}


def find_one_good_set(h: BipartiteGraph, epsilon: float, seed: int = 0, *,
                      params: PipelineParams | None = None, c: float | None = None) -> OneGoodSet:
    """A set S of A with a matching f: S -> B rich in switching chains."""
    params = params or PipelineParams(mode="faithful")
    faithful = params.faithful
    a_size, b_size = h.a_size, h.b_size
    if a_size > b_size:
        raise PreconditionError(f"need |A| <= |B|, got {a_size} > {b_size}")
    if any(h.degree(a) < epsilon * b_size for a in range(a_size)):
        raise PreconditionError("minimum degree below epsilon|B|")
    if faithful and not epsilon < 1 / 100:
        raise PreconditionError(f"need epsilon < 1/100, got {epsilon}")
    c = params.one_good_c(epsilon) if c is None else c
    rng = substream(seed, "find_one_good_set")
    stats: dict = {}
    if a_size == 0:
        return OneGoodSet([], {}, c, 0, 0, stats)

    a_keep = list(range(a_size))
    cap = math.floor(epsilon**13 / 128 * b_size) if faithful else b_size
    if a_size > cap:
        if cap < 1:
            raise InfeasibleAtScale(f"trimming A to eps^13/128 |B| leaves {cap} vertices")
        a_keep = sorted(rng.sample(a_keep, cap))
    stats["trimmed"] = len(a_keep)

    delta = one_good_delta(epsilon)
    bad = bad_pair_matrix(h, a_keep, epsilon**3)
    if int(bad.sum()) <= delta / 4 * len(a_keep) ** 2 and not faithful:
        s0 = list(a_keep)
        stats["s0"] = "all"
    else:
        sub, a_idx, _ = h.induced(mask_of(a_keep), (1 << b_size) - 1)
        res = pair_drc(sub, epsilon, delta / 8, seed=derive_seed(seed, "pair_drc"),
                       check=faithful)
        s0 = [a_idx[i] for i in res.S]
        stats["s0"] = "drc"
        bad = bad_pair_matrix(h, s0, epsilon**3)
    pos = {a: i for i, a in enumerate(s0)}
    s1 = [a for a in s0 if bad[pos[a]].sum() <= delta / 2 * len(s0)]
    s1m = mask_of(s1)
    b_prime = mask_of(u for u in range(b_size) if (h.back[u] & s1m).bit_count() >= delta * len(s1))
    stats.update(s0_size=len(s0), s1_size=len(s1), b_prime=b_prime.bit_count())

    target = c * a_size
    last_err = None
    for attempt in range(1, params.max_retries + 1):
        if faithful:
            g_map = {}
            for x in s1:
                opts = bits(h.nbrs[x] & b_prime)
                if opts:
                    g_map[x] = rng.choice(opts)
            order = list(g_map)
            rng.shuffle(order)
            seen, f = set(), {}
            for x in order:
                if g_map[x] not in seen:
                    seen.add(g_map[x])
                    f[x] = g_map[x]
        else:
            f = max_matching(s1, {x: h.nbrs[x] & b_prime for x in s1}, rng)
        s = sorted(f)
        need_of = lambda size: max(1, math.ceil(c * size - 1e-12))
        counts = chain_counts(h, s, f)
        if not faithful:
            # drop the vertex in the most deficient pairs until every pair has enough chains
            while len(s) > 1:
                need = need_of(len(s))
                short = [(x, y) for (x, y), k in counts.items() if k < need]
                if not short:
                    break
                tally: dict[int, int] = {}
                for x, y in short:
                    tally[x] = tally.get(x, 0) + 1
                    tally[y] = tally.get(y, 0) + 1
                worst = max(sorted(tally), key=lambda v: tally[v])
                s.remove(worst)
                f.pop(worst)
                counts = chain_counts(h, s, f)
        chain_min = min(counts.values()) if counts else 0
        ok_size = len(s) >= target and len(s) > 0
        ok_chain = len(s) < 2 or chain_min >= need_of(len(s))
        if ok_size and ok_chain:
            stats["attempts"] = attempt
            return OneGoodSet(s, {x: f[x] for x in s}, c, chain_min, a_size, stats)
        last_err = {"size": len(s), "chain_min": chain_min, "target": target}
    raise RetriesExhausted(f"find_one_good_set failed after {params.max_retries} attempts", last_err)


@dataclass
class ManyGoodSets:
    sets: list[list[int]]
    f: dict[int, int]
    eta: float
    eta_certified: float
    residual: list[int]
    chain_mins: list[int] = field(default_factory=list)


def find_many_good_sets(h: BipartiteGraph, epsilon: float, theta: float, seed: int = 0, *,
                        params: PipelineParams | None = None) -> ManyGoodSets:
    """Disjoint switching classes S_1..S_t covering all but theta|A| of A, plus an injection f."""
    params = params or PipelineParams(mode="faithful")
    a_size, b_size = h.a_size, h.b_size
    if params.faithful and a_size > epsilon / 2 * b_size:
        raise PreconditionError(f"need |A| <= (eps/2)|B|, got {a_size} vs {b_size}")
    if a_size > b_size:
        raise PreconditionError(f"need |A| <= |B|, got {a_size} > {b_size}")
    if any(h.degree(a) < epsilon * b_size for a in range(a_size)):
        raise PreconditionError("minimum degree below epsilon|B|")
    c = params.one_good_c(epsilon / 2)
    eta = theta * c
    full_a, full_b = (1 << a_size) - 1, (1 << b_size) - 1
    used_a = used_b = 0
    sets, f, mins = [], {}, []
    rnd = 0
    while (full_a & ~used_a).bit_count() > theta * a_size:
        rnd += 1
        sub, a_idx, b_idx = h.induced(full_a & ~used_a, full_b & ~used_b)
        try:
            one = find_one_good_set(sub, epsilon / 2, derive_seed(seed, "many", rnd), params=params)
        except (RetriesExhausted, PreconditionError):
            if params.faithful:
                raise
            break
        if not one.S or (not params.faithful and len(one.S) < eta * a_size):
            break
        s = [a_idx[i] for i in one.S]
        for i in one.S:
            f[a_idx[i]] = b_idx[one.f[i]]
        sets.append(s)
        mins.append(one.chain_min)
        used_a |= mask_of(s)
        used_b |= mask_of(b_idx[one.f[i]] for i in one.S)
    residual = bits(full_a & ~used_a)
    if len(residual) > theta * a_size:
        raise RetriesExhausted(f"{len(residual)} vertices left outside the classes, "
                               f"allowed {theta * a_size:.2f}", {"sets": len(sets)})
    rest = max_matching(residual, {a: h.nbrs[a] for a in residual}, substream(seed, "many-rest"),
                        taken=used_b)
    if len(rest) < len(residual):
        raise RetriesExhausted("cannot extend the injection to the residual vertices")
    f.update(rest)
    certified = min([len(s) / a_size for s in sets] + [m / len(s) for m, s in zip(mins, sets)
                                                       if len(s) > 1], default=0.0)
    return ManyGoodSets(sets, f, eta, certified, residual, mins)


def find_good_subgraph(g: ColouredCompleteGraph, u, v, w, params: PipelineParams, spec,
                       seed: int = 0, *, colour: int = 0, eps: float | None = None) -> GoodSubgraphWitness:
    """Build an absorber F=(X,Y) with X in U, Y in V that can swallow any part of W.

    Every w in the returned ``certificate`` has at least 2 theta |Y| vertices y
    with N_F(y) inside the ``colour``-neighbourhood of w.  In practical mode
    vertices of W whose constraint could not be met are listed in
    ``rejected`` instead of failing the whole construction.
    """
    spec = parse_spec(spec)
    um, vm, wm = as_mask(u), as_mask(v), as_mask(w)
    r, d = g.r, spec.delta
    if um & vm:
        raise PreconditionError("U and V must be disjoint")
    usize, vsize = um.bit_count(), vm.bit_count()
    if eps is None:
        if params.faithful:
            raise PreconditionError("faithful mode needs an explicit epsilon")
        eps = params.absorb_eps_practical
    if usize < params.u_min():
        raise InfeasibleAtScale(f"|U|={usize} below the gate {params.u_min()}")
    if usize > params.u_ratio(eps) * vsize:
        raise InfeasibleAtScale(f"|U|={usize} exceeds {params.u_ratio(eps):.3g}|V|")
    rows = g.rows[colour]
    for x in iter_bits(wm):
        if (rows[x] & um).bit_count() < usize / (8 * r):
            raise PreconditionError(f"w={x} has fewer than |U|/(8r) neighbours in U",
                                    detail={"w": x})
    theta = params.theta()
    k = math.floor(usize / params.k_div())
    if k < 2:
        raise InfeasibleAtScale(f"member order k={k} too small")
    fk = member(spec, k)
    hyper = derive_hypergraph(fk)
    big_g = NeighbourhoodHypergraph(g, bits(um), vm, colour, eps * vsize, d)
    lam = params.lam()
    if params.faithful:
        cd = params.embed_c() ** (d * d)
        if big_g.delta_edge_fraction() <= 1 - cd:
            raise PreconditionError("too few Delta-sets of U have many common neighbours in V")
        invariant = "rich"
    else:
        invariant = "rich" if RichSetOracle(big_g, lam).is_rich(()) else "edge"
    w_list = bits(wm)
    constraints = [rows[x] & um for x in w_list]
    try:
        careful = embed_carefully(hyper, big_g, lam, constraints, seed=derive_seed(seed, "careful"),
                                  r=r, threshold=2 * theta * hyper.num_edges,
                                  max_retries=params.careful_retries(), check=params.faithful,
                                  invariant=invariant, best_effort=not params.faithful)
    except (EmbeddingStuck, RetriesExhausted) as exc:
        raise StageError("embed_carefully", exc) from exc
    gmap = careful.image
    rejected = [w_list[i] for i in careful.unsatisfied]

    v_list = bits(vm)
    nbrs = []
    for e in hyper.hyperedges:
        m = vm
        for x in e:
            m &= rows[gmap[x]]
        nbrs.append(mask_of(j for j, vv in enumerate(v_list) if m >> vv & 1))
    bip = BipartiteGraph(hyper.num_edges, len(v_list), nbrs)
    try:
        many = find_many_good_sets(bip, eps, theta, derive_seed(seed, "many"), params=params)
    except (RetriesExhausted, PreconditionError) as exc:
        raise StageError("find_many_good_sets", exc) from exc

    verts = [0] * k
    for x in fk.x_side:
        verts[x] = gmap[x]
    for a, yv in enumerate(hyper.owners):
        verts[yv] = v_list[many.f[a]]
    emb = Embedding(k, tuple(verts), colour, spec)
    xm = mask_of(gmap[x] for x in fk.x_side)
    ym = mask_of(v_list[many.f[a]] for a in range(hyper.num_edges))
    parts = [mask_of(v_list[many.f[a]] for a in s) for s in many.sets]
    eta = many.eta if params.faithful else max(many.eta, many.eta_certified)
    wit = GoodSubgraphWitness(emb, xm, ym, parts, eta, theta, colour,
                              info={"k": k, "eps": eps, "invariant": invariant,
                                    "eta_contract": many.eta, "eta_certified": many.eta_certified,
                                    "careful_retries": careful.retries})
    if not params.faithful:
        # greedy chain packing is not monotone in the edge set, so the classes are recertified on
        # the host rather than trusting the counts made inside the shrinking bipartite graphs
        wit.eta = host_eta(g, wit)
        wit.info["eta_host"] = wit.eta
    counts = qualifying_counts(g, wit, wm)
    need = 2 * theta * ym.bit_count()
    for x in w_list:
        if counts[x] >= need:
            wit.certificate[x] = counts[x]
        elif x not in rejected:
            rejected.append(x)
    wit.rejected = sorted(rejected)
    if params.faithful and wit.rejected:
        raise StageError("find_good_subgraph", f"vertices {wit.rejected[:5]} not absorbable")
    report = verify_good(g, wit, seed)
    if not report.ok:
        raise StageError("verify_good", report.failure)
    return wit

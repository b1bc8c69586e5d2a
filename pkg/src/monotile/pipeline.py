"""Colour-by-colour absorber ladder and the end-to-end tiler.

Level k works with the k-th colour of ``colours`` (a list of original colour
ids, so reported tiles keep the host's own labels).  Every level yields a
set D_k and a callback that tiles D_k together with any leftover set it was
built to absorb.  Whatever fails falls back to the greedy cover, so
:func:`tile` always returns a verified tiling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .absorption import absorb, find_good_subgraph
from .bipartite import BipartiteGraph
from .bitset import bits, full_mask, iter_bits, mask_of
from .drc import count_bad_ksets, drc_constant, k_set_drc, t_window
from .errors import MonotileError, PreconditionError, StageError
from .graph import ColouredCompleteGraph
from .params import PipelineParams
from .ramsey import cover_bound, greedy_cover
from .rng import derive_seed, substream
from .sequence import parse_spec
from .tiling import Tiling, TilingReport, singleton, verify_tiling

__all__ = ["AbsorberSet", "AbsorberLadder", "StepResult", "combine_absorbers", "induction_step",
           "iterated_absorbers", "tile", "verify_tiling", "TilingReport"]


def _greedy(g, mask, spec, params, seed, name) -> Tiling:
    if not mask:
        return Tiling([], g.n)
    strategy = "threshold" if params.faithful else "eager"
    cover, _ = greedy_cover(g, mask, 1, spec, strategy=strategy, budget=params.budget,
                            seed=derive_seed(seed, name))
    return cover


@dataclass
class AbsorberSet:
    """D = union of per-colour absorbers, and the rule that tiles D with any Z inside W."""

    g: ColouredCompleteGraph
    spec: object
    params: PipelineParams
    d: int
    w: int
    w_parts: list[int]
    witnesses: list
    colours: list[int]
    seed: int = 0
    info: dict = field(default_factory=dict)

    def __call__(self, z) -> Tiling:
        return self.tile_with(z)

    def tile_with(self, z: int, stats: dict | None = None) -> Tiling:
        g, spec, params = self.g, self.spec, self.params
        stats = stats if stats is not None else {}
        rest = z & ~self.d
        if params.faithful and rest & ~self.w:
            raise PreconditionError("Z must lie inside W")
        tiles = Tiling([], g.n)
        seen = 0
        stats["absorbed"] = 0
        stats["greedy"] = 0
        for i, wit in enumerate(self.witnesses):
            zi = rest & self.w_parts[i] & ~seen
            seen |= self.w_parts[i]
            if wit is None:
                tiles.extend(_greedy(g, zi, spec, params, self.seed, f"skip{i}"))
                stats["greedy"] += zi.bit_count()
                continue
            ok = mask_of(wit.certificate) & zi
            tiles.extend(absorb(g, wit, ok, spec, params=params, seed=derive_seed(self.seed, "abs", i)))
            stats["absorbed"] += ok.bit_count()
            stats["greedy"] += (zi & ~ok).bit_count()
            tiles.extend(_greedy(g, zi & ~ok, spec, params, self.seed, f"rej{i}"))
        outside = rest & ~seen
        if outside:
            stats["greedy"] += outside.bit_count()
            tiles.extend(_greedy(g, outside, spec, params, self.seed, "outside"))
        report = verify_tiling(g, spec, tiles, within=self.d | z)
        if not report.ok:
            raise MonotileError(f"absorber callback produced an invalid tiling: {report.violations[:3]}")
        return tiles


def combine_absorbers(g: ColouredCompleteGraph, u, vs, w, params: PipelineParams, spec,
                      seed: int = 0, *, colours=None, eps: float | None = None) -> AbsorberSet:
    """Absorbers for colours 1..k on shrinking parts of U; D has at most |U|/(16r) vertices
    in the faithful setting."""
    spec = parse_spec(spec)
    um, wm = int(u), int(w)
    vs = [int(v) for v in vs]
    k = len(vs)
    colours = list(range(k)) if colours is None else list(colours)
    r = g.r
    usize = um.bit_count()
    info: dict = {"escape": False, "levels": []}
    if usize < params.escape_size() or k == 0:
        info["escape"] = True
        return AbsorberSet(g, spec, params, 0, wm, [wm], [None], colours[:1] or [0], seed, info)
    w_parts = []
    for i in range(k):
        rows = g.rows[colours[i]]
        w_parts.append(mask_of(x for x in iter_bits(wm) if 4 * r * (rows[x] & um).bit_count() >= usize))
    d = 0
    witnesses = []
    for i in range(k):
        ut = um & ~d
        vt = vs[i] & ~d
        level_eps = (eps / 2) if eps is not None else None
        try:
            wit = find_good_subgraph(g, ut, vt, w_parts[i] & ~d, params, spec,
                                     seed=derive_seed(seed, "good", i), colour=colours[i], eps=level_eps)
        except (MonotileError, PreconditionError) as exc:
            if params.faithful:
                raise StageError(f"combine_absorbers colour {colours[i]}", exc) from exc
            witnesses.append(None)
            info["levels"].append({"colour": colours[i], "skipped": type(exc).__name__})
            continue
        witnesses.append(wit)
        d |= wit.vertices
        info["levels"].append({"colour": colours[i], "order": wit.embedding.order,
                               "certified": len(wit.certificate), "rejected": len(wit.rejected)})
    info["d_size"] = d.bit_count()
    info["d_bound"] = usize / (16 * r)
    return AbsorberSet(g, spec, params, d, wm, w_parts, witnesses, colours, seed, info)


@dataclass
class StepResult:
    terminal: bool
    a: int
    b: int
    vs: list[int]
    d: int
    absorber: AbsorberSet | None
    colour: int | None
    fallback: bool = False
    certificate: dict = field(default_factory=dict)

    @property
    def callback(self) -> Callable[[int], Tiling] | None:
        return self.absorber


def _bad_sets(g, a_mask, v_mask, colour, eps, delta):
    a_list = bits(a_mask)
    if len(a_list) < delta:
        return 0
    h = BipartiteGraph.from_colouring(g, a_list, bits(v_mask), colour)
    count, _ = count_bad_ksets(h, mask_of(range(len(a_list))), delta, eps)
    return count


def induction_step(g: ColouredCompleteGraph, a, b, vs, k: int, params: PipelineParams, spec,
                   seed: int = 0, *, colours) -> StepResult:
    """One level: absorbers for colours 1..k, then a smaller pair (A', B') dense in a new colour."""
    spec = parse_spec(spec)
    am, bm = int(a), int(b)
    vs = [int(v) for v in vs]
    colours = list(colours)
    r, d = g.r, spec.delta
    cert: dict = {"k": k}
    eps = params.eps(k)
    eps_next = params.eps(k + 1)
    dpp = params.delta2_level(k)

    def escape(reason):
        cert["escape"] = reason
        absorber = AbsorberSet(g, spec, params, 0, am | bm, [am | bm], [None], colours[:1], seed,
                               {"escape": True})
        return StepResult(True, 0, 0, [], 0, absorber, None, certificate=cert)

    if dpp <= 0:
        return escape("delta'' underflows: |A| below 4 Delta (delta'')^-C")
    t = t_window(dpp)
    big_c = params.C if params.C is not None else drc_constant(r, t, dpp)
    cert["C"] = big_c
    if am.bit_count() < 4 * d * dpp ** (-big_c) and params.faithful:
        return escape("|A| below 4 Delta (delta'')^-C")
    if am.bit_count() < max(2 * params.u_min(), 2 * d):
        return escape("|A| too small for an absorber")

    a_list, b_list = bits(am), bits(bm)
    h = BipartiteGraph.from_colouring(g, a_list, b_list, colours[k - 1])
    try:
        drc = k_set_drc(h, d, dpp, r, seed=derive_seed(seed, "kset", k), max_retries=params.max_retries)
    except MonotileError as exc:
        if params.faithful:
            raise StageError("k_set_drc", exc) from exc
        return escape(f"k_set_drc: {exc}")
    um = mask_of(a_list[i] for i in drc.S)
    rng = substream(seed, "induction", k)
    if params.faithful:
        want = math.ceil(dpp**big_c * len(a_list))
        if um.bit_count() > want:
            um = mask_of(rng.sample(bits(um), want))
    cert["u_size"] = um.bit_count()
    vs_full = vs + [bm]
    usize = um.bit_count()
    wm = 0
    for x in a_list + b_list:
        for i in range(k):
            if 4 * r * (g.rows[colours[i]][x] & um).bit_count() >= usize:
                wm |= 1 << x
                break
    absorber = combine_absorbers(g, um, vs_full, wm, params, spec, seed=derive_seed(seed, "combine", k),
                                 colours=colours[:k], eps=eps if params.faithful else None)
    dm = absorber.d
    s = (am | bm) & ~(dm | wm)
    u_prime = um & ~dm
    cert.update(w_size=wm.bit_count(), d_size=dm.bit_count(), s_size=s.bit_count())
    vs_next = [v & ~dm for v in vs_full]
    remaining = [c for c in range(r) if c not in colours[:k]]
    delta_next = params.delta_level(k + 1)

    attempts = 0
    fails = {"colour_density": 0, "bad_sets": 0}
    while True:
        attempts += 1
        half = s.bit_count() // 2
        if u_prime.bit_count() < s.bit_count() / 2:
            ap = u_prime
        else:
            ap = mask_of(rng.sample(bits(u_prime), half))
        bp = s & ~ap
        if (ap | bp).bit_count() <= 2:
            cert["attempts"] = attempts
            return StepResult(True, ap, bp, vs_next, dm, absorber, None, certificate=cert)
        if not remaining or not ap:
            break
        old = sum(g.colour_counts(ap, bp)[c] for c in colours[:k])
        ok_density = old < k / r * ap.bit_count() * bp.bit_count()
        ok_sets = True
        limit = delta_next * math.comb(ap.bit_count(), d)
        for i in range(k):
            if _bad_sets(g, ap, vs_next[i], colours[i], eps_next * vs_next[i].bit_count(), d) > limit:
                ok_sets = False
                break
        if ok_density and ok_sets:
            counts = g.colour_counts(ap, bp)
            j = max(remaining, key=lambda c: (counts[c], -c))
            cert.update(attempts=attempts, ratio=bp.bit_count() / ap.bit_count())
            return StepResult(False, ap, bp, vs_next, dm, absorber, j, certificate=cert)
        fails["colour_density"] += not ok_density
        fails["bad_sets"] += not ok_sets
        if attempts >= params.max_retries or u_prime.bit_count() < s.bit_count() / 2:
            break
    cert["resample_failures"] = fails
    if params.faithful:
        raise StageError("induction_step resampling", f"conditions kept failing: {fails}")
    cert["fallback"] = True
    return StepResult(True, ap, bp, vs_next, dm, absorber, None, fallback=True, certificate=cert)


@dataclass
class AbsorberLadder:
    """Nested T_1 > T_2 > ... > T_{l+1} with disjoint absorbers D_1..D_l."""

    levels: list[StepResult]
    t: list[int]
    colours: list[int]
    fallback: bool = False

    @property
    def ell(self) -> int:
        return len(self.levels)

    @property
    def d(self) -> list[int]:
        return [lv.d for lv in self.levels]

    def check(self) -> list[str]:
        out = []
        ds = self.d
        for i in range(len(ds)):
            for j in range(i + 1, len(ds)):
                if ds[i] & ds[j]:
                    out.append(f"D_{i + 1} meets D_{j + 1}")
        for i in range(len(self.t) - 1):
            if self.t[i + 1] & ~self.t[i]:
                out.append(f"T_{i + 2} not inside T_{i + 1}")
        for i, di in enumerate(ds):
            if di & self.t[i + 1]:
                out.append(f"D_{i + 1} meets T_{i + 2}")
        if not self.fallback and self.t[-1].bit_count() > 2:
            out.append("terminal set has more than two vertices")
        return out


def iterated_absorbers(g: ColouredCompleteGraph, params: PipelineParams, spec, seed: int = 0) -> AbsorberLadder:
    spec = parse_spec(spec)
    n, r = g.n, g.r
    t1 = full_mask(n)
    if n <= 2:
        return AbsorberLadder([], [t1], [])
    am = full_mask(n // 2)
    bm = t1 & ~am
    colours = [g.most_frequent_colour(am, bm)]
    levels, ts, vs = [], [t1], []
    fallback = False
    for k in range(1, r + 1):
        step = induction_step(g, am, bm, vs, k, params, spec, seed=derive_seed(seed, "level", k),
                              colours=colours)
        levels.append(step)
        ts.append(step.a | step.b)
        if step.terminal:
            fallback = step.fallback
            break
        am, bm, vs = step.a, step.b, step.vs
        colours.append(step.colour)
    else:
        fallback = True
    assert len(levels) <= r
    return AbsorberLadder(levels, ts, colours, fallback)


def tile(g: ColouredCompleteGraph, spec, params: PipelineParams | None = None) -> tuple[Tiling, dict]:
    """Monochromatic tiling of the whole host plus metrics describing which stages ran."""
    spec = parse_spec(spec)
    params = params or PipelineParams(r=g.r, delta_max=spec.delta)
    seed = params.seed
    n = g.n
    stages: list[str] = []
    metrics = {"seed": seed, "mode": params.mode, "params_digest": params.digest()}
    pipeline = None
    try:
        ladder = iterated_absorbers(g, params, spec, seed)
        stages.append(f"ladder:{ladder.ell}")
        problems = ladder.check()
        if problems:
            raise MonotileError(f"ladder invariants broken: {problems}")
        all_d = 0
        for lv in ladder.levels:
            all_d |= lv.d
        pipeline = Tiling([], n)
        for i, lv in enumerate(ladder.levels):
            zi = ladder.t[i] & ~(ladder.t[i + 1] | all_d)
            part = {}
            try:
                pipeline.extend(lv.absorber.tile_with(zi, part))
                stages.append(f"level{i + 1}:absorbed={part['absorbed']}:greedy={part['greedy']}")
            except MonotileError as exc:
                if params.faithful:
                    raise
                stages.append(f"level{i + 1}:fallback:{type(exc).__name__}")
                pipeline.extend(_greedy(g, lv.d | zi, spec, params, seed, f"level{i}"))
        last = ladder.t[-1] & ~all_d
        if last.bit_count() <= 2 and not ladder.fallback:
            pipeline.extend([singleton(v, spec) for v in iter_bits(last)])
        else:
            stages.append("terminal:greedy")
            pipeline.extend(_greedy(g, last, spec, params, seed, "terminal"))
        report = verify_tiling(g, spec, pipeline)
        if not report.ok:
            stages.append("pipeline:invalid")
            pipeline = None
    except MonotileError as exc:
        stages.append(f"pipeline:failed:{type(exc).__name__}")
        pipeline = None

    bound = cover_bound(spec.delta, g.r, n) if n else 0
    chosen = pipeline
    if pipeline is not None:
        metrics["pipeline_size"] = pipeline.size
    if pipeline is None or pipeline.size > bound or not params.faithful:
        # practical mode keeps the smaller of the ladder tiling and the direct greedy cover
        direct = _greedy(g, full_mask(n), spec, params, seed, "direct")
        metrics["greedy_size"] = direct.size
        if chosen is None or direct.size < chosen.size or chosen.size > bound:
            chosen = direct
            stages.append("chosen:greedy")
        else:
            stages.append("chosen:pipeline")
    else:
        stages.append("chosen:pipeline")
    report = verify_tiling(g, spec, chosen)
    assert report.ok, report.violations
    metrics["size"] = chosen.size
    metrics["stages"] = stages
    return chosen, metrics

"""Dependent random choice as a verify-and-resample (Las Vegas) routine.

Sample t vertices of B with replacement, take their common neighbourhood S
in A, and keep it once S is large and few k-subsets of S have a small common
neighbourhood back in B.  The two specializations fix (k, t, epsilon, gamma)
the way the absorber construction needs them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .bipartite import BipartiteGraph
from .bitset import VertexSet, bits
from .errors import PreconditionError, RetriesExhausted
from .rng import substream

EXACT_LIMIT = 10**6
SAMPLE_SIZE = 20000


@dataclass(frozen=True)
class DrcParams:
    k: int
    t: int
    epsilon: float
    delta: float
    gamma: float
    max_retries: int = 64
    seed: int = 0

    def __post_init__(self):
        for name in ("epsilon", "delta", "gamma"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise PreconditionError(f"{name} must lie in (0, 1), got {v}")
        if self.k < 1 or self.t < 0:
            raise PreconditionError("need k >= 1 and t >= 0")
        if self.max_retries < 1:
            raise PreconditionError("max_retries must be positive")

    @property
    def guarantee_holds(self) -> bool:
        return self.delta * self.epsilon ** (self.k * self.t) >= 2 * self.gamma**self.t

    def size_bound(self, a_size: int) -> float:
        return 0.5 * self.epsilon**self.t * a_size

    def bad_bound(self, s_size: int) -> float:
        return self.delta * s_size**self.k


@dataclass
class DrcResult:
    S: VertexSet
    bad_k_set_count: int
    retries_used: int
    T: tuple[int, ...]
    params: DrcParams
    count_mode: str = "exact"
    extra: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.S)

    def certificate(self) -> dict:
        p = self.params
        return {"k": p.k, "t": p.t, "epsilon": p.epsilon, "delta": p.delta, "gamma": p.gamma,
                "size": self.size, "bad": self.bad_k_set_count, "retries": self.retries_used,
                "T": list(self.T), "count_mode": self.count_mode, **self.extra}


def _bad_exact(mat: np.ndarray, k: int, need: float) -> int:
    s = mat.shape[0]
    if s < k:
        return 0
    if k == 1:
        return int((mat.sum(axis=1) < need).sum())
    if k == 2:
        prod = mat @ mat.T
        iu = np.triu_indices(s, 1)
        return int((prod[iu] < need).sum())
    total = 0
    for prefix in combinations(range(s), k - 2):
        col = mat[prefix[0]].copy()
        for i in prefix[1:]:
            col *= mat[i]
        rest = mat[prefix[-1] + 1:]
        if rest.shape[0] < 2:
            continue
        sub = rest * col
        prod = sub @ rest.T
        iu = np.triu_indices(rest.shape[0], 1)
        total += int((prod[iu] < need).sum())
    return total


def _bad_sampled(mat: np.ndarray, k: int, need: float, rng) -> tuple[int, dict]:
    s = mat.shape[0]
    total = math.comb(s, k)
    estimates = []
    for _ in range(2):
        hits = 0
        for _ in range(SAMPLE_SIZE):
            idx = rng.sample(range(s), k)
            col = mat[idx[0]].copy()
            for i in idx[1:]:
                col *= mat[i]
            hits += col.sum() < need
        estimates.append(hits / SAMPLE_SIZE)
    p = max(estimates)
    se = math.sqrt(max(p * (1 - p), 1.0 / SAMPLE_SIZE) / SAMPLE_SIZE)
    upper = min(1.0, p + 3 * se)
    return math.ceil(upper * total), {"sample_fractions": estimates, "confidence_sigmas": 3}


def count_bad_ksets(h: BipartiteGraph, s, k: int, gamma: float, rng=None) -> tuple[int, str]:
    """Number of k-subsets of ``s`` (A indices) with fewer than gamma*|B| common neighbours.

    Exact below 10^6 subsets; above that an upper estimate from two
    independent samples (3 standard errors) is returned and the mode says so.
    """
    rows = bits(s) if isinstance(s, int) else sorted(s)
    need = gamma * h.b_size
    mat = h.matrix(rows).astype(np.float32)
    if math.comb(len(rows), k) <= EXACT_LIMIT:
        return _bad_exact(mat, k, need), "exact"
    rng = rng if rng is not None else substream(0, "count_bad_ksets")
    count, _ = _bad_sampled(mat, k, need, rng)
    return count, "sampled"


def bad_pair_matrix(h: BipartiteGraph, rows: list[int], gamma: float) -> np.ndarray:
    """Boolean matrix over ``rows`` x ``rows``: common neighbourhood below gamma*|B| (diagonal False)."""
    mat = h.matrix(rows).astype(np.float32)
    bad = (mat @ mat.T) < gamma * h.b_size
    np.fill_diagonal(bad, False)
    return bad


def dependent_random_choice(h: BipartiteGraph, p: DrcParams, check: bool = True) -> DrcResult:
    if check:
        if h.density() < p.epsilon:
            raise PreconditionError(
                f"density {h.density():.4f} below epsilon={p.epsilon}")
        if not p.guarantee_holds:
            raise PreconditionError(
                f"delta*eps^(kt)={p.delta * p.epsilon ** (p.k * p.t):.3e} < 2*gamma^t={2 * p.gamma ** p.t:.3e}")
    if h.b_size == 0 and p.t > 0:
        raise PreconditionError("B is empty")
    rng = substream(p.seed, "drc", p.k, p.t)
    need_size = p.size_bound(h.a_size)
    history = []
    for attempt in range(1, p.max_retries + 1):
        T = tuple(rng.randrange(h.b_size) for _ in range(p.t))
        s_mask = h.common_a(T)
        size = s_mask.bit_count()
        if size < need_size:
            history.append({"size": size, "bad": None})
            continue
        bad, mode = count_bad_ksets(h, s_mask, p.k, p.gamma, rng)
        if bad > p.bad_bound(size):
            history.append({"size": size, "bad": bad})
            continue
        res = DrcResult(VertexSet(s_mask), bad, attempt, T, p, mode)
        # the witness must reproduce S
        assert h.common_a(T) == s_mask
        assert size >= need_size and bad <= p.bad_bound(size)
        return res
    raise RetriesExhausted(
        f"dependent random choice failed {p.max_retries} times (need |S| >= {need_size:.2f})",
        {"attempts": history, "params": p})


def t_window(delta: float) -> int:
    """Smallest positive t with 2^(t-2) <= 1/delta < 2^(t-1)."""
    inv = 1.0 / delta
    t = 1
    while not (2.0 ** (t - 2) <= inv < 2.0 ** (t - 1)):
        t += 1
    return t


def drc_constant(r: int, t: int, delta: float) -> int:
    """Smallest integer C with (1/2)(1/r)^t >= delta^C."""
    c = math.ceil(math.log(0.5 * r ** (-t)) / math.log(delta))
    while 0.5 * r ** (-t) < delta**c:
        c += 1
    while c > 1 and 0.5 * r ** (-t) >= delta ** (c - 1):
        c -= 1
    return c


def k_set_drc(h: BipartiteGraph, k: int, delta: float, r: int, seed: int = 0,
              max_retries: int = 64, check: bool = True) -> DrcResult:
    """DRC with epsilon=1/r and gamma=(1/r)^k/2; t from the dyadic window of 1/delta."""
    if not 0 < delta < 0.5:
        raise PreconditionError(f"need 0 < delta < 1/2, got {delta}")
    if r < 2:
        raise PreconditionError("need at least two colours (epsilon = 1/r < 1)")
    t = t_window(delta)
    p = DrcParams(k, t, 1.0 / r, delta, (1.0 / r) ** k / 2, max_retries, seed)
    res = dependent_random_choice(h, p, check=check)
    c = drc_constant(r, t, delta)
    res.extra["C"] = c
    assert res.size >= delta**c * h.a_size
    return res


def pair_drc(h: BipartiteGraph, epsilon: float, delta: float, seed: int = 0,
             max_retries: int = 64, check: bool = True) -> DrcResult:
    """DRC with k=2, t=4, gamma=epsilon^3; needs delta >= 2 epsilon^4."""
    if not 0 < epsilon < 1:
        raise PreconditionError(f"need 0 < epsilon < 1, got {epsilon}")
    if delta < 2 * epsilon**4:
        raise PreconditionError(f"need delta >= 2 eps^4 = {2 * epsilon ** 4}, got {delta}")
    p = DrcParams(2, 4, epsilon, delta, epsilon**3, max_retries, seed)
    return dependent_random_choice(h, p, check=check)


def chernoff_lower_tail(mu: float, delta: float) -> float:
    """Bound exp(-mu delta^2 / 2) on P(X <= (1 - delta) mu) for a sum of independent indicators."""
    if mu < 0:
        raise ValueError(f"mu must be non-negative, got {mu}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return math.exp(-mu * delta * delta / 2)

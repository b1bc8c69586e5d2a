"""Numeric knobs of the absorber pipeline.

``faithful`` uses the asymptotic constants (and so reports
:class:`InfeasibleAtScale` on anything that fits on a desk); ``practical``
keeps every algorithmic step but swaps each gate for a named, smaller value.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, replace

MODES = ("faithful", "practical")


@dataclass(frozen=True)
class PipelineParams:
    mode: str = "practical"
    r: int = 2
    delta_max: int = 2
    seed: int = 0
    budget: int = 10**6

    # embed-carefully constant c and the k-set DRC constant C (C=None: computed per call)
    c: float | None = None
    C: int | None = None
    C_r: float | None = None  # target exponent of the headline bound; reported only
    K: float | None = None
    K_prime: float | None = None

    # practical relaxations (ignored in faithful mode)
    theta_practical: float = 0.1
    lam_practical: float = 0.2
    one_good_c_practical: float = 0.05
    switch_div_practical: float = 4.0
    u_min_practical: int = 12
    k_div_practical: float = 2.0
    u_ratio_practical: float = 1.0
    delta2_practical: float = 0.45
    delta1_practical: float = 0.1
    absorb_eps_practical: float = 0.25
    careful_retries_practical: int = 8
    max_retries: int = 64

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.r < 1 or self.delta_max < 1:
            raise ValueError("need r >= 1 and delta >= 1")

    @property
    def faithful(self) -> bool:
        return self.mode == "faithful"

    def with_(self, **kw) -> "PipelineParams":
        return replace(self, **kw)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.blake2b(blob, digest_size=8).hexdigest()

    # ---- schedule --------------------------------------------------------
    def eps(self, k: int) -> float:
        """Density 1/(2^k r^Delta) at colour level k."""
        return 1.0 / (2**k * self.r**self.delta_max)

    def embed_c(self) -> float:
        # any c small enough in terms of r works
        return self.c if self.c is not None else 1.0 / (100 * self.r)

    def theta(self) -> float:
        if self.faithful:
            d = self.delta_max
            return 1.0 / (2 * d * d * (32 * self.r) ** d)
        return self.theta_practical

    def lam(self) -> float:
        return self.embed_c() ** self.delta_max if self.faithful else self.lam_practical

    def one_good_c(self, eps: float) -> float:
        if self.faithful:
            return min(eps**17 / 1024, eps**10 / 32)
        return self.one_good_c_practical

    def careful_retries(self) -> int:
        return self.max_retries if self.faithful else self.careful_retries_practical

    def switch_div(self) -> float:
        return 100.0 if self.faithful else self.switch_div_practical

    def u_min(self) -> int:
        return 100 * self.r**2 if self.faithful else self.u_min_practical

    def k_div(self) -> float:
        return 16.0 * self.r**2 if self.faithful else self.k_div_practical

    def u_ratio(self, eps: float) -> float:
        """Largest allowed |U|/|V| when building one good subgraph."""
        return eps / 2 if self.faithful else self.u_ratio_practical

    def escape_size(self) -> int:
        """|U| below which combine_absorbers returns no absorber."""
        return 200 * self.r**2 * self.delta_max if self.faithful else self.u_min_practical

    def drc_exponent(self) -> float:
        return (100 / self.embed_c() * (self.C or 2) * self.r * self.delta_max)

    def delta_level(self, k: int) -> float:
        """exp(-(100 c^-1 C r Delta)^(2(r-k)+3)); underflows to 0 at any real scale."""
        if not self.faithful:
            return self.delta1_practical
        try:
            return math.exp(-(self.drc_exponent() ** (2 * (self.r - k) + 3)))
        except OverflowError:
            return 0.0

    def delta2_level(self, k: int) -> float:
        """The smaller density exp(-(...)^(2(r-k)+2)) used for the k-set DRC step."""
        if not self.faithful:
            return self.delta2_practical
        try:
            return math.exp(-(self.drc_exponent() ** (2 * (self.r - k) + 2)))
        except OverflowError:
            return 0.0

    def to_json(self) -> dict:
        return asdict(self)

"""Embedded tiles, tilings, and the tiling verifier."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .bitset import as_mask, full_mask, mask_of
from .errors import UnsatisfiableFamily
from .graph import ColouredCompleteGraph
from .sequence import SequenceSpec, member, parse_spec

SINGLETON_COLOUR = -1


@dataclass(frozen=True)
class Embedding:
    """A copy of F_order: member vertex j sits on host vertex ``vertices[j]``."""

    order: int
    vertices: tuple[int, ...]
    colour: int
    spec: SequenceSpec

    @property
    def mask(self) -> int:
        return mask_of(self.vertices)

    def problems(self, g: ColouredCompleteGraph) -> list[str]:
        out = []
        if self.order != len(self.vertices) or self.order < 1:
            return [f"order {self.order} does not match {len(self.vertices)} vertices"]
        if len(set(self.vertices)) != self.order:
            out.append("vertex map is not injective")
        if any(not 0 <= v < g.n for v in self.vertices):
            out.append("vertex outside host")
            return out
        try:
            f = member(self.spec, self.order)
        except UnsatisfiableFamily as exc:
            return [str(exc)]
        if f.edges and not 0 <= self.colour < g.r:
            out.append(f"colour {self.colour} is not a host colour")
            return out
        for a, b in f.edges:
            c = g.colour_of(self.vertices[a], self.vertices[b])
            if c != self.colour:
                out.append(f"edge {a}-{b} mapped to {self.vertices[a]}-{self.vertices[b]} "
                           f"has colour {c}, tile colour {self.colour}")
                break
        return out

    def is_valid(self, g: ColouredCompleteGraph) -> bool:
        return not self.problems(g)

    def to_json(self) -> dict:
        return {"colour": self.colour, "order": self.order, "vertices": list(self.vertices)}


def singleton(v: int, spec: SequenceSpec) -> Embedding:
    return Embedding(1, (v,), SINGLETON_COLOUR, spec)


@dataclass
class Tiling:
    tiles: list[Embedding]
    n: int

    def __len__(self) -> int:
        return len(self.tiles)

    @property
    def size(self) -> int:
        return len(self.tiles)

    @property
    def covered(self) -> int:
        m = 0
        for t in self.tiles:
            m |= t.mask
        return m

    @property
    def complete(self) -> bool:
        return self.covered == full_mask(self.n)

    def extend(self, other: "Tiling | list[Embedding]") -> None:
        self.tiles.extend(other.tiles if isinstance(other, Tiling) else other)

    def to_json(self, r: int, spec, metrics: dict | None = None) -> dict:
        tiles = sorted(self.tiles, key=lambda t: (min(t.vertices), t.vertices))
        out = {
            "n": self.n,
            "r": r,
            "spec": str(parse_spec(spec)),
            "tiles": [t.to_json() for t in tiles],
        }
        if metrics is not None:
            out["metrics"] = metrics
        return out

    @classmethod
    def from_json(cls, data: dict) -> tuple["Tiling", SequenceSpec]:
        spec = parse_spec(data["spec"])
        tiles = [Embedding(int(t["order"]), tuple(int(v) for v in t["vertices"]),
                           int(t["colour"]), spec) for t in data["tiles"]]
        return cls(tiles, int(data["n"])), spec

    def dumps(self, r: int, spec, metrics: dict | None = None) -> str:
        return json.dumps(self.to_json(r, spec, metrics), sort_keys=True, indent=1) + "\n"


@dataclass
class TilingReport:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def verify_tiling(g: ColouredCompleteGraph, spec, tiling: Tiling, within=None) -> TilingReport:
    """Check partition exactness and that every tile is a monochromatic copy of its member.

    ``within`` (default: all vertices) is the vertex set the tiles must partition.
    """
    spec = parse_spec(spec)
    target = full_mask(g.n) if within is None else as_mask(within)
    violations = []
    seen = 0
    for idx, t in enumerate(tiling.tiles):
        if t.spec != spec:
            violations.append(f"tile {idx}: built for {t.spec}, expected {spec}")
        for p in t.problems(g):
            violations.append(f"tile {idx}: {p}")
        m = t.mask
        if m & seen:
            violations.append(f"tile {idx}: overlaps earlier tiles (not a partition)")
        seen |= m
    if seen & ~target:
        violations.append("tiles cover vertices outside the target set (not a partition)")
    if target & ~seen:
        missing = (target & ~seen).bit_count()
        violations.append(f"{missing} target vertices uncovered (not a partition)")
    return TilingReport(not violations, violations)

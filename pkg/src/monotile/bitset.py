"""Vertex sets as Python-int bitsets.

Internally every routine passes plain ``int`` masks around (bit ``v`` set
means vertex ``v`` is present); :class:`VertexSet` is the public, hashable
wrapper that carries the same mask.
"""

from __future__ import annotations

from typing import Iterable, Iterator


def mask_of(vertices: Iterable[int]) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def iter_bits(mask: int) -> Iterator[int]:
    """Yield set bit positions in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def bits(mask: int) -> list[int]:
    return list(iter_bits(mask))


def lowest(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def full_mask(n: int) -> int:
    return (1 << n) - 1


def as_mask(s) -> int:
    """Accept a VertexSet, an int mask or an iterable of vertices."""
    if isinstance(s, VertexSet):
        return s.mask
    if isinstance(s, int):
        return s
    return mask_of(s)


class VertexSet:
    """Immutable set of vertices backed by an int bitset."""

    __slots__ = ("mask",)

    def __init__(self, vertices: Iterable[int] | int = 0):
        self.mask = vertices if isinstance(vertices, int) else mask_of(vertices)

    @classmethod
    def range(cls, n: int) -> "VertexSet":
        return cls(full_mask(n))

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __iter__(self) -> Iterator[int]:
        return iter_bits(self.mask)

    def __contains__(self, v: int) -> bool:
        return v >= 0 and (self.mask >> v) & 1 == 1

    def __bool__(self) -> bool:
        return self.mask != 0

    def __eq__(self, other) -> bool:
        if isinstance(other, VertexSet):
            return self.mask == other.mask
        if isinstance(other, (set, frozenset)):
            return self.mask == mask_of(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.mask)

    def __and__(self, other) -> "VertexSet":
        return VertexSet(self.mask & as_mask(other))

    def __or__(self, other) -> "VertexSet":
        return VertexSet(self.mask | as_mask(other))

    def __sub__(self, other) -> "VertexSet":
        return VertexSet(self.mask & ~as_mask(other))

    def __xor__(self, other) -> "VertexSet":
        return VertexSet(self.mask ^ as_mask(other))

    def issubset(self, other) -> bool:
        return self.mask & ~as_mask(other) == 0

    def isdisjoint(self, other) -> bool:
        return self.mask & as_mask(other) == 0

    def to_list(self) -> list[int]:
        return bits(self.mask)

    def __repr__(self) -> str:
        return f"VertexSet({self.to_list()})"

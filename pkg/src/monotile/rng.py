"""Named, reproducible random sub-streams derived from one master seed."""

from __future__ import annotations

import hashlib
import random


def derive_seed(seed: int, *names) -> int:
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed) & 0xFFFFFFFFFFFFFFFF).encode())
    for name in names:
        h.update(b"/")
        h.update(str(name).encode())
    return int.from_bytes(h.digest(), "little")


def substream(seed: int, *names) -> random.Random:
    """A ``random.Random`` keyed on ``seed`` and the call-site ``names``.

    Sub-streams are independent of how many draws other call sites made, so
    retry counts in one routine never shift the randomness of another.
    """
    return random.Random(derive_seed(seed, *names))


def random_bit(rng: random.Random, mask: int) -> int:
    """Uniform random set bit of a nonzero mask."""
    k = rng.randrange(mask.bit_count())
    while True:
        low = mask & -mask
        if k == 0:
            return low.bit_length() - 1
        mask ^= low
        k -= 1


def random_subset(rng: random.Random, mask: int, size: int) -> int:
    from .bitset import bits, mask_of

    return mask_of(rng.sample(bits(mask), size))

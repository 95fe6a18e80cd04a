"""Counter-based derivation of random bits.

Every stochastic draw in the package is addressed by ``(seed, *path)``, where
``path`` names the purpose and indices of the draw, e.g.
``(seed, "tape", n, x, trial)``. The bits for an address are

    blake2b(key=seed as 8 little-endian bytes, person=b"owfbench",
            data=encode(path) || block_index)

concatenated over 512-bit blocks and truncated. No generator state is carried
between draws, so serial and parallel execution see identical streams.
"""

from __future__ import annotations

import hashlib

SEED_BITS = 64
_PERSON = b"owfbench"
_BLOCK_BITS = 512


def check_seed(seed: int) -> int:
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise TypeError(f"seed must be an int, got {type(seed).__name__}")
    if not 0 <= seed < 1 << SEED_BITS:
        raise ValueError(f"seed must fit in {SEED_BITS} unsigned bits, got {seed}")
    return seed


def _encode(path: tuple) -> bytes:
    parts = []
    for item in path:
        if isinstance(item, bool) or not isinstance(item, (int, str)):
            raise TypeError(f"path components must be int or str, got {item!r}")
        tag = "i" if isinstance(item, int) else "s"
        text = str(item)
        parts.append(f"{tag}{len(text)}:{text}")
    return "|".join(parts).encode()


def derive_bits(seed: int, *path: int | str, nbits: int) -> str:
    """Return ``nbits`` pseudo-random bits, as a '0'/'1' string, for an address."""
    if nbits < 0:
        raise ValueError("nbits must be non-negative")
    if nbits == 0:
        return ""
    key = check_seed(seed).to_bytes(8, "little")
    prefix = _encode(path)
    blocks = -(-nbits // _BLOCK_BITS)
    raw = b"".join(
        hashlib.blake2b(
            prefix + b"#" + i.to_bytes(8, "little"), key=key, person=_PERSON
        ).digest()
        for i in range(blocks)
    )
    bits = format(int.from_bytes(raw, "big"), f"0{8 * len(raw)}b")
    return bits[:nbits]


def derive_int(seed: int, *path: int | str, nbits: int) -> int:
    """Uniform integer in ``[0, 2**nbits)`` for an address."""
    bits = derive_bits(seed, *path, nbits=nbits)
    return int(bits, 2) if bits else 0

"""Stable seed derivation for all randomized operations."""

import hashlib

SEED_MASK = (1 << 63) - 1


def derive_seed(*parts) -> int:
    """Derive a stable 63-bit seed from arbitrary printable parts.

    Uses SHA-256 over a canonical text encoding, so the result is identical
    across processes, platforms and Python versions (the builtin hash() is
    salted per process and unusable for this).
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & SEED_MASK

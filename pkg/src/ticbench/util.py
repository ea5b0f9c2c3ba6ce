"""Small shared helpers."""

from __future__ import annotations

import hashlib


def seed_from(*parts):
    """Deterministic 64-bit seed derived from a mix of ints and strings."""
    h = hashlib.sha256()
    for part in parts:
        h.update(repr(part).encode("utf-8"))
        h.update(b"\x00")
    return int.from_bytes(h.digest()[:8], "little")

"""Counter-based seed splitting: one root seed, derived child seeds per label."""

import hashlib


def derive_seed(root: int, *labels) -> int:
    """64-bit seed for ``labels`` under ``root``; independent of call order."""
    material = ":".join([str(int(root)), *map(str, labels)]).encode("utf-8")
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")

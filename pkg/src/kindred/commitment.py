"""Per-marker digest sets: one hex character per allele.

Each allele is expanded to its base sequence, the second factor is
appended with no separator, the result is hashed, and a single hex
character of the digest is kept. The two characters of a marker form a
multiset; comparison is multiset intersection.
"""

from __future__ import annotations

import enum
import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .str_core import StrProfile, expand_allele

HEX = frozenset("0123456789abcdef")


class HashId(str, enum.Enum):
    H1 = "H1"
    H2 = "H2"
    H3 = "H3"
    KDF = "KDF"


class CommitmentError(ValueError):
    pass


class ConfigurationError(CommitmentError):
    pass


class ComparisonError(CommitmentError):
    """Requests cannot be compared; ``expected_hash`` says what to rebuild with."""

    def __init__(self, message: str, expected_hash: HashId | None = None):
        super().__init__(message)
        self.expected_hash = expected_hash


# ids, never names, go on the wire
HASH_REGISTRY: dict[HashId, Callable[[bytes], "hashlib._Hash"]] = {
    HashId.H1: hashlib.sha1,
    HashId.H2: hashlib.sha256,
    HashId.H3: hashlib.sha384,
    HashId.KDF: hashlib.sha512,
}


def hash_function(hash_id: HashId | str):
    try:
        return HASH_REGISTRY[HashId(hash_id)]
    except (KeyError, ValueError):
        raise ConfigurationError(f"hash id {hash_id!r} is not registered") from None


def digest_hex(data: bytes, hash_id: HashId | str) -> str:
    return hash_function(hash_id)(data).hexdigest()


def commit_allele(expanded: str, factor: str, hash_id: HashId | str, *, index: int = -1) -> str:
    """Hex character at ``index`` of H(expanded ∥ factor)."""
    return digest_hex((expanded + factor).encode("utf-8"), hash_id)[index]


@dataclass(frozen=True)
class SecondFactor:
    value: str

    def __post_init__(self):
        if not self.value:
            raise CommitmentError("second factor must be non-empty")

    def __str__(self):
        return self.value


class DigestSet:
    """Multiset of exactly two lowercase hex characters."""

    __slots__ = ("chars",)

    def __init__(self, first: str, second: str):
        pair = (first.lower(), second.lower())
        for c in pair:
            if len(c) != 1 or c not in HEX:
                raise CommitmentError(f"digest set entries must be single hex characters, got {c!r}")
        self.chars: tuple[str, str] = tuple(sorted(pair))

    def __iter__(self):
        return iter(self.chars)

    def __eq__(self, other):
        if not isinstance(other, DigestSet):
            return NotImplemented
        return self.chars == other.chars

    def __hash__(self):
        return hash(self.chars)

    def __repr__(self):
        return f"DigestSet({self.chars[0]!r}, {self.chars[1]!r})"


def marker_matches(sent: DigestSet, local: DigestSet) -> bool:
    return bool(Counter(sent.chars) & Counter(local.chars))


@dataclass(frozen=True)
class DigestSetRequest:
    hash_id: HashId
    sets: Mapping[str, DigestSet]
    ttl: int = 8

    def __post_init__(self):
        object.__setattr__(self, "hash_id", HashId(self.hash_id))
        if self.ttl < 0:
            raise CommitmentError("ttl must be non-negative")

    def to_dict(self) -> dict:
        return {
            "hash": self.hash_id.value,
            "ttl": self.ttl,
            "sets": {name: list(self.sets[name].chars) for name in sorted(self.sets)},
        }

    def canonical_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), separators=(",", ":"), sort_keys=True).encode("ascii")

    @classmethod
    def from_dict(cls, doc: Mapping) -> "DigestSetRequest":
        try:
            hash_id = HashId(doc["hash"])
            sets = {name: DigestSet(*chars) for name, chars in doc["sets"].items()}
            ttl = int(doc["ttl"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CommitmentError(f"malformed request document: {exc}") from None
        return cls(hash_id, sets, ttl)

    @classmethod
    def from_bytes(cls, data: bytes) -> "DigestSetRequest":
        return cls.from_dict(json.loads(data))


def build_request(
    profile: StrProfile,
    factor: SecondFactor | str,
    hash_id: HashId | str,
    ttl: int = 8,
    *,
    index: int = -1,
) -> DigestSetRequest:
    if not len(profile):
        raise CommitmentError("cannot build a request from an empty profile")
    hash_function(hash_id)
    factor = str(factor)
    sets = {}
    for marker, pair in profile.items():
        a, b = (commit_allele(expand_allele(marker.motif, allele), factor, hash_id, index=index) for allele in pair)
        sets[marker.name] = DigestSet(a, b)
    return DigestSetRequest(HashId(hash_id), sets, ttl)


class Decision(str, enum.Enum):
    EXACT = "exact"
    PROBABLE_MUTATION = "probable_mutation"
    NO_MATCH = "no_match"

    @property
    def accepted(self) -> bool:
        return self is not Decision.NO_MATCH


@dataclass(frozen=True)
class MatchVerdict:
    per_marker: Mapping[str, bool]
    decision: Decision
    matched: int = field(init=False)
    total: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "matched", sum(self.per_marker.values()))
        object.__setattr__(self, "total", len(self.per_marker))

    def to_dict(self) -> dict:
        return {
            "per_marker": {k: self.per_marker[k] for k in sorted(self.per_marker)},
            "matched": self.matched,
            "total": self.total,
            "decision": self.decision.value,
        }


def compare_request(
    incoming: DigestSetRequest,
    local: DigestSetRequest,
    *,
    exact_threshold: int | None = None,
    mutation_threshold: int | None = None,
) -> MatchVerdict:
    """Compare digest sets marker by marker.

    Thresholds default to all markers (exact) and all but one (probable
    mutation).
    """
    if incoming.hash_id != local.hash_id:
        raise ComparisonError(
            f"request uses {incoming.hash_id.value}, local sets use {local.hash_id.value}",
            expected_hash=incoming.hash_id,
        )
    if set(incoming.sets) != set(local.sets):
        missing = sorted(set(local.sets) ^ set(incoming.sets))
        raise ComparisonError(f"marker sets differ: {missing}")
    per_marker = {name: marker_matches(incoming.sets[name], local.sets[name]) for name in incoming.sets}
    total = len(per_marker)
    matched = sum(per_marker.values())
    exact_at = total if exact_threshold is None else exact_threshold
    mutation_at = total - 1 if mutation_threshold is None else mutation_threshold
    if matched >= exact_at:
        decision = Decision.EXACT
    elif matched >= max(mutation_at, 1):
        decision = Decision.PROBABLE_MUTATION
    else:
        decision = Decision.NO_MATCH
    return MatchVerdict(per_marker, decision)

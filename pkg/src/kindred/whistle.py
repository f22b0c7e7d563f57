"""Dead-drop keys from organism DNA, and the helper side of the drop.

The whistleblower hashes the first 1000 bases of an organism (plus, when
a book is used, the chosen sentence and the drop address) into a 64-byte
key and floods a fixed-size authenticated ciphertext. A helper who finds
the organism derives the same key, trial-decrypts every ciphertext that
passes by, and publishes after a random wait.
"""

from __future__ import annotations

import hashlib
import hmac
import math
import os
import random
import re
import struct
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .analysis import BigNumber, power
from .commitment import HashId, hash_function
from .gossip_sim import DEFAULT_PADDED_SIZE, Envelope, Kind, NodeBehavior, World, delivery_report
from .seeding import derive_seed

KEY_PREFIX_LENGTH = 1000
NONCE_SIZE = 16
TAG_SIZE = 32
LENGTH_SIZE = 4
OVERHEAD = NONCE_SIZE + TAG_SIZE + LENGTH_SIZE
WAIT_DAYS = (7, 30)


class WhistleError(ValueError):
    pass


class PayloadTooLarge(WhistleError):
    pass


class AuthenticationError(WhistleError):
    pass


@dataclass(frozen=True)
class OrganismDna:
    sequence: str
    label: str = ""

    def __post_init__(self):
        seq = re.sub(r"\s+", "", self.sequence).upper()
        bad = set(seq) - set("ACGT")
        if bad:
            raise WhistleError(f"{self.label or 'sequence'}: non-ACGT characters {''.join(sorted(bad))}")
        object.__setattr__(self, "sequence", seq)

    def prefix(self, length: int = KEY_PREFIX_LENGTH) -> str:
        if len(self.sequence) < length:
            raise WhistleError(
                f"{self.label or 'sequence'} has {len(self.sequence)} bases, key needs {length}"
            )
        return self.sequence[:length]


def parse_fasta(text: str) -> list[OrganismDna]:
    """Read ``>label`` headers followed by base lines."""
    records: list[OrganismDna] = []
    label, lines = None, []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith(">"):
            if label is not None:
                records.append(OrganismDna("".join(lines), label))
            label, lines = line[1:].strip(), []
        else:
            if label is None:
                raise WhistleError("sequence data before the first '>' header")
            lines.append(line)
    if label is not None:
        records.append(OrganismDna("".join(lines), label))
    return records


def random_organism(rng: random.Random, length: int = KEY_PREFIX_LENGTH, label: str = "") -> OrganismDna:
    return OrganismDna("".join(rng.choices("ACGT", k=length)), label)


def first_sentence(page: str) -> str:
    """The agreed sentence of an opened page: its first sentence."""
    text = " ".join(page.split())
    match = re.match(r"(.+?[.!?])(\s|$)", text)
    return match.group(1) if match else text


@dataclass(frozen=True)
class DropContext:
    sentence: str | None = None
    address: str | None = None


@dataclass(frozen=True)
class WhistleKey:
    key: bytes
    transcript: dict = field(default_factory=dict, compare=False)

    def hex(self) -> str:
        return self.key.hex()


def derive_whistle_key(
    dna: OrganismDna, ctx: DropContext = DropContext(), *, prefix_length: int = KEY_PREFIX_LENGTH
) -> WhistleKey:
    """KDF(dna prefix ∥ sentence ∥ address); absent fields contribute nothing."""
    prefix = dna.prefix(prefix_length)
    preimage = prefix + (ctx.sentence or "") + (ctx.address or "")
    digest = hash_function(HashId.KDF)(preimage.encode("utf-8")).digest()
    transcript = {
        "prefix_length": prefix_length,
        "sentence": ctx.sentence is not None,
        "address": ctx.address is not None,
        "hash": HashId.KDF.value,
    }
    return WhistleKey(digest, transcript)


# -- authenticated encryption -------------------------------------------------


def _subkey(key: bytes, label: bytes) -> bytes:
    return hmac.new(key, b"kindred/" + label, hashlib.sha512).digest()[:32]


def _keystream(key: bytes, nonce: bytes, length: int) -> bytes:
    out = bytearray()
    counter = 0
    while len(out) < length:
        out += hmac.new(key, nonce + struct.pack(">Q", counter), hashlib.sha256).digest()
        counter += 1
    return bytes(out[:length])


def _xor(data: bytes, stream: bytes) -> bytes:
    return (int.from_bytes(data, "big") ^ int.from_bytes(stream, "big")).to_bytes(len(data), "big")


@dataclass(frozen=True)
class CipherEnvelope:
    """``nonce ∥ ciphertext ∥ tag``; the ciphertext body fills the standard size."""

    nonce: bytes
    ciphertext: bytes
    tag: bytes

    @property
    def padded_size(self) -> int:
        return len(self.nonce) + len(self.ciphertext) + len(self.tag)

    def to_bytes(self) -> bytes:
        return self.nonce + self.ciphertext + self.tag

    @classmethod
    def from_bytes(cls, data: bytes) -> "CipherEnvelope":
        if len(data) < NONCE_SIZE + TAG_SIZE + LENGTH_SIZE:
            raise WhistleError("ciphertext shorter than its fixed overhead")
        return cls(data[:NONCE_SIZE], data[NONCE_SIZE:-TAG_SIZE], data[-TAG_SIZE:])

    def to_envelope(self, ttl: int) -> Envelope:
        return Envelope(self.to_bytes(), ttl)


def encrypt_payload(
    key: WhistleKey | bytes,
    plaintext: bytes,
    *,
    padded_size: int = DEFAULT_PADDED_SIZE,
    nonce: bytes | None = None,
) -> CipherEnvelope:
    """Encrypt-then-MAC under subkeys of ``key``.

    The plaintext is length-prefixed and zero-padded so every envelope
    is exactly ``padded_size`` bytes.
    """
    raw = key.key if isinstance(key, WhistleKey) else key
    body_size = padded_size - NONCE_SIZE - TAG_SIZE
    if len(plaintext) + LENGTH_SIZE > body_size:
        raise PayloadTooLarge(
            f"{len(plaintext)} bytes exceeds the {body_size - LENGTH_SIZE}-byte capacity; split the file"
        )
    nonce = os.urandom(NONCE_SIZE) if nonce is None else nonce
    if len(nonce) != NONCE_SIZE:
        raise WhistleError(f"nonce must be {NONCE_SIZE} bytes")
    body = struct.pack(">I", len(plaintext)) + plaintext
    body += bytes(body_size - len(body))
    ciphertext = _xor(body, _keystream(_subkey(raw, b"enc"), nonce, body_size))
    tag = hmac.new(_subkey(raw, b"mac"), nonce + ciphertext, hashlib.sha256).digest()
    return CipherEnvelope(nonce, ciphertext, tag)


def decrypt_payload(key: WhistleKey | bytes, envelope: CipherEnvelope | bytes) -> bytes:
    raw = key.key if isinstance(key, WhistleKey) else key
    if not isinstance(envelope, CipherEnvelope):
        envelope = CipherEnvelope.from_bytes(envelope)
    expected = hmac.new(_subkey(raw, b"mac"), envelope.nonce + envelope.ciphertext, hashlib.sha256).digest()
    if not hmac.compare_digest(expected, envelope.tag):
        raise AuthenticationError("tag mismatch")
    body = _xor(envelope.ciphertext, _keystream(_subkey(raw, b"enc"), envelope.nonce, len(envelope.ciphertext)))
    (n,) = struct.unpack(">I", body[:LENGTH_SIZE])
    if n > len(body) - LENGTH_SIZE:
        raise AuthenticationError("corrupt length field")
    return body[LENGTH_SIZE : LENGTH_SIZE + n]


def try_decrypt(key: WhistleKey | bytes, data: bytes) -> bytes | None:
    try:
        return decrypt_payload(key, data)
    except WhistleError:
        return None


# -- helpers in the simulated network ------------------------------------------


@dataclass
class Helper:
    """Gossip agent holding the keys a helper derived from found organisms."""

    keys: list[WhistleKey]
    seed: int = 0
    rounds_per_day: int = 1
    wait_days: tuple[int, int] = WAIT_DAYS
    trials: int = 0
    decryptions: list[dict] = field(default_factory=list)
    publications: list[dict] = field(default_factory=list)
    received: list[bytes] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self._rng = random.Random(self.seed)

    def receive(self, world: World, node: str, envelope: Envelope) -> bool:
        for i, key in enumerate(self.keys):
            self.trials += 1
            plaintext = try_decrypt(key, envelope.payload)
            if plaintext is None:
                continue
            wait = self._rng.randint(*self.wait_days)
            event = {
                "node": node,
                "round": world.round,
                "key_index": i,
                "fingerprint": envelope.fingerprint,
                "size": len(plaintext),
            }
            self.decryptions.append(event)
            self.publications.append(
                {**event, "wait_days": wait, "publish_round": world.round + wait * self.rounds_per_day}
            )
            self.received.append(plaintext)
            world.log_event(node, "decrypted", key_index=i, wait_days=wait)
            return True
        return False


def helper_pipeline(
    world: World,
    node: str,
    found: Iterable[tuple[OrganismDna, DropContext]],
    *,
    halts_on_success: bool = False,
) -> Helper:
    """Turn ``node`` into a helper for the organisms it found."""
    keys = [derive_whistle_key(dna, ctx) for dna, ctx in found]
    helper = Helper(keys, seed=derive_seed(world.seed, "helper", node))
    world.behaviors[node] = NodeBehavior(Kind.HELPER, helper, halts_on_success=halts_on_success)
    return helper


def keyspace_report(prefix_len: int, ctx_entropy_bits: float = 0.0) -> dict:
    """Size of the key search space, as mantissa and decimal exponent."""
    if prefix_len < 0 or ctx_entropy_bits < 0:
        raise WhistleError("sizes must be non-negative")
    dna = power(4, prefix_len, exact_limit=0) if prefix_len else BigNumber.of(1)
    ctx = BigNumber(ctx_entropy_bits * math.log10(2))
    total = BigNumber(dna.log10 + ctx.log10)
    return {
        "prefix_length": prefix_len,
        "context_bits": ctx_entropy_bits,
        "dna": {"mantissa": dna.mantissa, "exponent": dna.exponent},
        "total": {"mantissa": total.mantissa, "exponent": total.exponent},
    }


@dataclass
class DropReport:
    delivery: dict
    decryptions: dict[str, int]
    publications: list[dict]
    trials: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "delivery": self.delivery,
            "decryptions": self.decryptions,
            "publications": self.publications,
            "trials": self.trials,
        }


def simulate_drop(
    world: World,
    whistleblower: str,
    drop: tuple[OrganismDna, DropContext],
    helpers: dict[str, Sequence[tuple[OrganismDna, DropContext]]],
    plaintext: bytes,
    *,
    ttl: int = 8,
) -> DropReport:
    """Whistleblower floods one ciphertext; helpers trial-decrypt as it passes."""
    installed = {node: helper_pipeline(world, node, found) for node, found in helpers.items()}
    key = derive_whistle_key(*drop)
    nonce = random.Random(derive_seed(world.seed, "nonce", whistleblower)).randbytes(NONCE_SIZE)
    envelope = encrypt_payload(key, plaintext, padded_size=world.padded_size, nonce=nonce).to_envelope(ttl)
    world.originate(whistleblower, envelope)
    world.run()
    return DropReport(
        delivery=delivery_report(world, whistleblower, envelope.fingerprint).to_dict(),
        decryptions={n: len(h.decryptions) for n, h in installed.items()},
        publications=[p for h in installed.values() for p in h.publications],
        trials={n: h.trials for n, h in installed.items()},
    )

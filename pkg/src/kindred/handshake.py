"""Three-round mutual authentication and session key derivation.

Either relative may initiate. The initiator floods H1 digest sets; a
responder whose own H1 sets match answers with H2 sets (the counter
proof); once the initiator accepts the counter proof both sides exchange
H3 sets to pin down which allele they share at each marker, then hash
the shared alleles, the second factor and a date-dependent padding with
the KDF hash.

Every phase change is appended to ``state.transcript`` and every
outgoing request to ``state.outbox``.
"""

from __future__ import annotations

import datetime as dt
import enum
import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable

from .commitment import (
    ComparisonError,
    DigestSetRequest,
    HashId,
    MatchVerdict,
    SecondFactor,
    build_request,
    commit_allele,
    compare_request,
    hash_function,
)
from .str_core import Allele, StrProfile, expand_allele

DEFAULT_TTL = 8
PADDING_LENGTH = 16


class Role(str, enum.Enum):
    CHILD = "child"
    PARENT = "parent"


class Phase(str, enum.Enum):
    IDLE = "idle"
    REQUESTED = "requested"
    PEER_VERIFIED = "peer_verified"
    RESOLVED = "resolved"
    KEYED = "keyed"
    FAILED = "failed"


_NEXT = {
    Phase.IDLE: Phase.REQUESTED,
    Phase.REQUESTED: Phase.PEER_VERIFIED,
    Phase.PEER_VERIFIED: Phase.RESOLVED,
    Phase.RESOLVED: Phase.KEYED,
}


class HandshakeError(RuntimeError):
    """Operation not allowed in the current phase, or the peer is inconsistent."""


@dataclass(frozen=True)
class PaddingSeed:
    date: dt.date
    factor: str


def padding(seed: PaddingSeed, length: int = PADDING_LENGTH) -> str:
    """Printable pseudo-random suffix determined by the request date and factor."""
    material = f"{seed.date.isoformat()}|{seed.factor}".encode("utf-8")
    return hashlib.shake_256(material).hexdigest(length // 2)


@dataclass(frozen=True)
class SessionKey:
    key: bytes

    def __post_init__(self):
        expected = hash_function(HashId.KDF)().digest_size
        if len(self.key) != expected:
            raise ValueError(f"session key must be {expected} bytes")

    def hex(self) -> str:
        return self.key.hex()


@dataclass
class HandshakeState:
    role: Role
    profile: StrProfile
    factor: SecondFactor
    date: dt.date = dt.date(1970, 1, 1)
    ttl: int = DEFAULT_TTL
    exact_threshold: int | None = None
    mutation_threshold: int | None = None
    phase: Phase = Phase.IDLE
    initiator: bool = False
    observed: list[tuple[HashId, MatchVerdict]] = field(default_factory=list)
    evidence: list[DigestSetRequest] = field(default_factory=list)
    shared_alleles: dict[str, Allele] = field(default_factory=dict)
    ambiguous: set[str] = field(default_factory=set)
    sent_resolution: bool = False
    transcript: list[dict] = field(default_factory=list)
    outbox: list[DigestSetRequest] = field(default_factory=list)

    def __post_init__(self):
        self.role = Role(self.role)
        if not isinstance(self.factor, SecondFactor):
            self.factor = SecondFactor(self.factor)

    @property
    def padding_seed(self) -> PaddingSeed:
        return PaddingSeed(self.date, self.factor.value)

    def local_request(self, hash_id: HashId) -> DigestSetRequest:
        return build_request(self.profile, self.factor, hash_id, self.ttl)

    def drain(self) -> list[DigestSetRequest]:
        out, self.outbox = self.outbox, []
        return out

    def _move(self, phase: Phase, emitted: DigestSetRequest | None = None, verdict: MatchVerdict | None = None):
        if phase is not Phase.FAILED and _NEXT.get(self.phase) is not phase:
            raise HandshakeError(f"illegal transition {self.phase.value} -> {phase.value}")
        self.phase = phase
        self.transcript.append(
            {
                "phase": phase.value,
                "emitted": emitted.to_dict() if emitted is not None else None,
                "verdict": verdict.to_dict() if verdict is not None else None,
            }
        )
        if emitted is not None:
            self.outbox.append(emitted)

    def _fail(self, reason: str):
        self._move(Phase.FAILED)
        self.transcript[-1]["reason"] = reason
        raise HandshakeError(reason)

    def _compare(self, incoming: DigestSetRequest) -> MatchVerdict | None:
        try:
            verdict = compare_request(
                incoming,
                self.local_request(incoming.hash_id),
                exact_threshold=self.exact_threshold,
                mutation_threshold=self.mutation_threshold,
            )
        except ComparisonError:
            return None
        self.observed.append((incoming.hash_id, verdict))
        return verdict


def _require(state: HandshakeState, phase: Phase, op: str):
    if state.phase is not phase:
        raise HandshakeError(f"{op} requires phase {phase.value}, state is {state.phase.value}")


def initiate(state: HandshakeState) -> DigestSetRequest:
    """Flood the H1 digest sets of the local profile."""
    _require(state, Phase.IDLE, "initiate")
    request = state.local_request(HashId.H1)
    state.initiator = True
    state._move(Phase.REQUESTED, emitted=request)
    return request


def respond(state: HandshakeState, incoming: DigestSetRequest) -> DigestSetRequest | None:
    """Check an H1 request; on acceptance return the H2 counter proof.

    ``None`` means the request is not for us and the node only relays it.
    """
    if state.phase is not Phase.IDLE or incoming.hash_id is not HashId.H1:
        return None
    verdict = state._compare(incoming)
    if verdict is None or not verdict.decision.accepted:
        return None
    state.evidence.append(incoming)
    state._move(Phase.REQUESTED, verdict=verdict)
    counter = state.local_request(HashId.H2)
    state._move(Phase.PEER_VERIFIED, emitted=counter)
    return counter


def verify_counterproof(state: HandshakeState, incoming: DigestSetRequest) -> MatchVerdict | None:
    """Initiator side: check H2 sets; on acceptance publish the H3 sets."""
    if state.phase is not Phase.REQUESTED or not state.initiator or incoming.hash_id is not HashId.H2:
        return None
    verdict = state._compare(incoming)
    if verdict is None or not verdict.decision.accepted:
        return verdict
    state.evidence.append(incoming)
    state.sent_resolution = True
    state._move(Phase.PEER_VERIFIED, emitted=state.local_request(HashId.H3), verdict=verdict)
    return verdict


def resolution_request(state: HandshakeState) -> DigestSetRequest:
    return state.local_request(HashId.H3)


def resolve_shared(state: HandshakeState, counterpart: DigestSetRequest) -> dict[str, Allele]:
    """Work out which local allele is shared at each marker.

    A local allele is a candidate when its character appears in the
    peer's set in every round accepted so far plus the H3 round. Two
    distinct candidates resolve to the smaller allele and mark the
    marker ambiguous; none fails the handshake.
    """
    _require(state, Phase.PEER_VERIFIED, "resolve_shared")
    if counterpart.hash_id is not HashId.H3:
        raise HandshakeError(f"resolution round uses H3, got {counterpart.hash_id.value}")
    if set(counterpart.sets) != set(state.profile.marker_names):
        state._fail("resolution sets cover a different marker panel")
    rounds = [*state.evidence, counterpart]
    factor = state.factor.value
    shared: dict[str, Allele] = {}
    ambiguous: set[str] = set()
    for marker, pair in state.profile.items():
        candidates = sorted(
            {
                allele
                for allele in pair
                if all(
                    commit_allele(expand_allele(marker.motif, allele), factor, req.hash_id)
                    in req.sets[marker.name].chars
                    for req in rounds
                )
            }
        )
        if not candidates:
            state._fail(f"no local allele at {marker.name} matches the peer's sets")
        if len(candidates) > 1:
            ambiguous.add(marker.name)
        shared[marker.name] = candidates[0]
    state.shared_alleles = shared
    state.ambiguous = ambiguous
    emitted = None
    if not state.sent_resolution:
        state.sent_resolution = True
        emitted = resolution_request(state)
    state._move(Phase.RESOLVED, emitted=emitted)
    return dict(shared)


def key_preimage(
    profile: StrProfile, shared: dict[str, Allele], factor: str, pad: str
) -> bytes:
    parts = [expand_allele(m.motif, shared[m.name]) for m in profile.markers]
    return ("".join(parts) + factor + pad).encode("utf-8")


def derive_key(state: HandshakeState, *, pad: str | None = None) -> SessionKey:
    """KDF over shared alleles (panel order), factor and padding.

    ``pad`` overrides the generated padding, e.g. to replay a fixed
    worked example.
    """
    _require(state, Phase.RESOLVED, "derive_key")
    missing = [name for name in state.profile.marker_names if name not in state.shared_alleles]
    if missing:
        raise HandshakeError(f"unresolved markers: {missing}")
    if pad is None:
        pad = padding(state.padding_seed)
    preimage = key_preimage(state.profile, state.shared_alleles, state.factor.value, pad)
    key = SessionKey(hash_function(HashId.KDF)(preimage).digest())
    state._move(Phase.KEYED)
    return key


def handle(state: HandshakeState, incoming: DigestSetRequest) -> list[DigestSetRequest]:
    """Route one received request through the state machine.

    Returns whatever the state emits in reaction (possibly nothing).
    Requests that do not concern this state are ignored; the caller
    relays them regardless.
    """
    if state.phase is Phase.IDLE and incoming.hash_id is HashId.H1:
        respond(state, incoming)
    elif state.phase is Phase.REQUESTED and incoming.hash_id is HashId.H2:
        verify_counterproof(state, incoming)
    elif state.phase is Phase.PEER_VERIFIED and incoming.hash_id is HashId.H3:
        try:
            resolve_shared(state, incoming)
        except HandshakeError:
            pass
    return state.drain()


# -- transcripts --------------------------------------------------------------


def transcript_jsonl(state: HandshakeState) -> str:
    return "".join(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n" for rec in state.transcript)


def replay_transcript(lines: Iterable[str] | str) -> list[Phase]:
    """Check a JSON-lines transcript obeys the transition order; return the phases."""
    if isinstance(lines, str):
        lines = lines.splitlines()
    current = Phase.IDLE
    phases = []
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        record = json.loads(line)
        phase = Phase(record["phase"])
        if phase is not Phase.FAILED and _NEXT.get(current) is not phase:
            raise HandshakeError(f"line {n}: illegal transition {current.value} -> {phase.value}")
        if record.get("emitted") is not None:
            DigestSetRequest.from_dict(record["emitted"])
        current = phase
        phases.append(phase)
    return phases

"""Deterministic round-based flood simulator.

Every node forwards each envelope it has not seen before to all of its
contacts, minus whoever handed it over this round, decrementing the hop
budget. Duplicates (same payload fingerprint) are absorbed. Envelopes
sent in round ``r`` arrive in round ``r + 1``.

Nodes relay before they look at the payload, so a node that manages to
decrypt or match a message cannot be singled out by watching who stops
forwarding it.
"""

from __future__ import annotations

import enum
import hashlib
import json
import random
import struct
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, Sequence

from .commitment import CommitmentError, DigestSetRequest
from .handshake import HandshakeState, handle, initiate

DEFAULT_TTL = 8
DEFAULT_RATE_LIMIT = 5
DEFAULT_WINDOW = 100
DEFAULT_PADDED_SIZE = 2048


class SimulationError(RuntimeError):
    pass


# -- graphs -------------------------------------------------------------------


class SocialGraph:
    """Undirected contact graph without self-loops."""

    def __init__(self, nodes: Iterable[str] = (), edges: Iterable[tuple[str, str]] = ()):
        adj: dict[str, set[str]] = {str(n): set() for n in nodes}
        for u, v in edges:
            u, v = str(u), str(v)
            if u == v:
                raise ValueError(f"self-loop on {u!r}")
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        self._adj = {n: frozenset(adj[n]) for n in sorted(adj)}

    @property
    def nodes(self) -> tuple[str, ...]:
        return tuple(self._adj)

    def neighbors(self, node: str) -> frozenset[str]:
        return self._adj[node]

    def edges(self) -> list[tuple[str, str]]:
        return sorted((u, v) for u in self._adj for v in self._adj[u] if u < v)

    def __contains__(self, node) -> bool:
        return node in self._adj

    def __len__(self):
        return len(self._adj)

    def to_dict(self) -> dict:
        return {"nodes": list(self.nodes), "edges": [list(e) for e in self.edges()]}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SocialGraph":
        return cls(doc.get("nodes", ()), (tuple(e) for e in doc.get("edges", ())))

    @classmethod
    def from_json(cls, text: str) -> "SocialGraph":
        return cls.from_dict(json.loads(text))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    # generators

    @classmethod
    def path(cls, names: Sequence[str]) -> "SocialGraph":
        return cls(names, zip(names, names[1:]))

    @classmethod
    def ring(cls, n: int) -> "SocialGraph":
        names = [f"n{i}" for i in range(n)]
        return cls(names, ((names[i], names[(i + 1) % n]) for i in range(n)))

    @classmethod
    def star(cls, leaves: int) -> "SocialGraph":
        return cls(["hub"], (("hub", f"leaf{i}") for i in range(leaves)))

    @classmethod
    def complete(cls, n: int) -> "SocialGraph":
        names = [f"n{i}" for i in range(n)]
        return cls(names, ((a, b) for i, a in enumerate(names) for b in names[i + 1 :]))

    @classmethod
    def tree(cls, fanout: int, depth: int) -> "SocialGraph":
        """Complete ``fanout``-ary tree; the root is ``"r"``."""
        edges, level = [], ["r"]
        for _ in range(depth):
            nxt = []
            for parent in level:
                for i in range(fanout):
                    child = f"{parent}.{i}"
                    edges.append((parent, child))
                    nxt.append(child)
            level = nxt
        return cls(["r"], edges)

    @classmethod
    def ring_with_chords(cls, n: int, chords: int, seed: int) -> "SocialGraph":
        """A ring plus random chords: 2-connected for n >= 3."""
        rng = random.Random(seed)
        names = [f"n{i}" for i in range(n)]
        edges = {(names[i], names[(i + 1) % n]) for i in range(n)}
        while chords > 0:
            a, b = rng.sample(names, 2)
            if (a, b) in edges or (b, a) in edges:
                continue
            edges.add((a, b))
            chords -= 1
        return cls(names, sorted(edges))


# -- envelopes ----------------------------------------------------------------


def fingerprint(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class Envelope:
    """Fixed-size payload plus hop budget. Nothing names sender or recipient."""

    payload: bytes
    ttl: int

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.payload)

    @property
    def padded_size(self) -> int:
        return len(self.payload)

    @classmethod
    def frame(cls, body: bytes, ttl: int, padded_size: int = DEFAULT_PADDED_SIZE) -> "Envelope":
        """Length-prefix ``body`` and zero-pad it to ``padded_size``."""
        if len(body) + 4 > padded_size:
            raise SimulationError(f"body of {len(body)} bytes does not fit a {padded_size}-byte envelope")
        data = struct.pack(">I", len(body)) + body
        return cls(data + bytes(padded_size - len(data)), ttl)

    @classmethod
    def for_request(cls, request: DigestSetRequest, padded_size: int = DEFAULT_PADDED_SIZE) -> "Envelope":
        return cls.frame(request.canonical_bytes(), request.ttl, padded_size)

    def unframe(self) -> bytes | None:
        if len(self.payload) < 4:
            return None
        (n,) = struct.unpack(">I", self.payload[:4])
        if n + 4 > len(self.payload) or any(self.payload[4 + n :]):
            return None
        return self.payload[4 : 4 + n]

    def request(self) -> DigestSetRequest | None:
        body = self.unframe()
        if body is None:
            return None
        try:
            return DigestSetRequest.from_bytes(body)
        except (CommitmentError, ValueError, UnicodeDecodeError):
            return None

    def hop(self) -> "Envelope":
        return Envelope(self.payload, self.ttl - 1)


# -- node behaviour -----------------------------------------------------------


class Kind(str, enum.Enum):
    RELAY = "relay"
    SEEKER = "seeker"
    HELPER = "helper"
    OBSERVER = "observer"
    DROPPER = "dropper"


class Agent(Protocol):
    def receive(self, world: "World", node: str, envelope: Envelope) -> bool:
        """Process a newly received envelope; True if it was meant for this node."""


@dataclass
class NodeBehavior:
    kind: Kind = Kind.RELAY
    agent: Agent | None = None
    rate_limit: int | None = None
    # a node that stops relaying once a message turns out to be for it;
    # honest nodes never set this
    halts_on_success: bool = False


@dataclass
class SeekerAgent:
    """Runs a handshake state machine on every request that passes by."""

    state: HandshakeState
    padded_size: int = DEFAULT_PADDED_SIZE

    def receive(self, world, node, envelope):
        request = envelope.request()
        if request is None:
            return False
        before = self.state.phase
        emitted = handle(self.state, request)
        for out in emitted:
            world.originate(node, Envelope.for_request(out, self.padded_size))
        if self.state.phase is not before:
            world.log_event(node, "handshake", phase=self.state.phase.value, hash=request.hash_id.value)
            return True
        return False

    def start(self, world, node):
        initiate(self.state)
        for out in self.state.drain():
            world.originate(node, Envelope.for_request(out, self.padded_size))


# -- world --------------------------------------------------------------------


@dataclass
class World:
    graph: SocialGraph
    behaviors: dict[str, NodeBehavior] = field(default_factory=dict)
    rate_limit: int = DEFAULT_RATE_LIMIT
    window: int = DEFAULT_WINDOW
    padded_size: int = DEFAULT_PADDED_SIZE
    limit_forwarded: bool = False
    seed: int = 0

    def __post_init__(self):
        for node in self.behaviors:
            if node not in self.graph:
                raise SimulationError(f"behaviour given for unknown node {node!r}")
        self.round = 0
        self.in_flight: list[tuple[str, str, Envelope]] = []
        self.seen: dict[str, set[str]] = defaultdict(set)
        self.first_delivery: dict[str, dict[str, int]] = defaultdict(dict)
        self.duplicates: dict[str, Counter] = defaultdict(Counter)
        self.forwards: Counter = Counter()
        self.traffic: list[tuple[int, str, str, str]] = []
        self.originated: dict[str, list[int]] = defaultdict(list)
        self.forwarded_count: dict[str, list[int]] = defaultdict(list)
        self.admitted: Counter = Counter()
        self.rejected: Counter = Counter()
        self.queue_peak: Counter = Counter()
        self.events: list[dict] = []
        self.rng = random.Random(self.seed)

    def behavior(self, node: str) -> NodeBehavior:
        return self.behaviors.get(node) or NodeBehavior()

    def log_event(self, node: str, kind: str, **data):
        self.events.append({"round": self.round, "node": node, "event": kind, **data})

    def _limit(self, node: str) -> int:
        limit = self.behavior(node).rate_limit
        return self.rate_limit if limit is None else limit

    def _window_count(self, history: list[int]) -> int:
        start = (self.round // self.window) * self.window
        return sum(1 for r in history if r >= start)

    def originate(self, node: str, envelope: Envelope) -> bool:
        """Inject a new envelope at ``node``; False if the rate limit rejects it."""
        if node not in self.graph:
            raise SimulationError(f"unknown node {node!r}")
        if envelope.padded_size != self.padded_size:
            raise SimulationError(
                f"envelope is {envelope.padded_size} bytes, network standard is {self.padded_size}"
            )
        if self._window_count(self.originated[node]) >= self._limit(node):
            self.rejected[node] += 1
            return False
        self.originated[node].append(self.round)
        self.admitted[node] += 1
        fp = envelope.fingerprint
        if fp in self.seen[node]:
            return True
        self.seen[node].add(fp)
        self.first_delivery[fp][node] = self.round
        self._send(node, envelope, exclude=())
        return True

    def _send(self, node: str, envelope: Envelope, exclude: Iterable[str]):
        if envelope.ttl <= 0:
            return
        out = envelope.hop()
        skip = set(exclude)
        for nb in sorted(self.graph.neighbors(node)):
            if nb in skip:
                continue
            self.in_flight.append((node, nb, out))
            self.forwards[out.fingerprint] += 1

    def step(self) -> "World":
        """Deliver everything sent last round, then relay and run node hooks."""
        self.round += 1
        deliveries, self.in_flight = self.in_flight, []
        sizes = {env.padded_size for _, _, env in deliveries}
        if len(sizes) > 1 or (sizes and sizes != {self.padded_size}):
            raise SimulationError(f"non-standard envelope sizes on the wire: {sorted(sizes)}")

        inbox: dict[str, list[tuple[str, Envelope]]] = defaultdict(list)
        for src, dst, env in deliveries:
            self.traffic.append((self.round, src, dst, env.fingerprint))
            inbox[dst].append((src, env))

        for node in sorted(inbox):
            received = inbox[node]
            self.queue_peak[node] = max(self.queue_peak[node], len(received))
            fresh: dict[str, tuple[Envelope, list[str]]] = {}
            for src, env in received:
                fp = env.fingerprint
                if fp in fresh:
                    fresh[fp][1].append(src)
                    self.duplicates[fp][node] += 1
                elif fp in self.seen[node]:
                    self.duplicates[fp][node] += 1
                else:
                    self.seen[node].add(fp)
                    self.first_delivery[fp][node] = self.round
                    fresh[fp] = (env, [src])
            behavior = self.behavior(node)
            for fp, (env, senders) in fresh.items():
                if behavior.kind is Kind.DROPPER:
                    continue
                if behavior.halts_on_success and behavior.agent is not None:
                    if behavior.agent.receive(self, node, env):
                        self.log_event(node, "halted", fingerprint=fp)
                        continue
                    self._relay(node, env, senders)
                    continue
                self._relay(node, env, senders)
                if behavior.agent is not None:
                    behavior.agent.receive(self, node, env)
        return self

    def _relay(self, node: str, env: Envelope, senders: list[str]):
        if self.limit_forwarded:
            if self._window_count(self.forwarded_count[node]) >= self._limit(node):
                self.rejected[node] += 1
                return
            self.forwarded_count[node].append(self.round)
        self._send(node, env, exclude=senders)

    def run(self, max_rounds: int = 10_000) -> "World":
        stop = self.round + max_rounds
        while self.in_flight and self.round < stop:
            self.step()
        return self


# -- reports ------------------------------------------------------------------


@dataclass
class DeliveryReport:
    origin: str
    fingerprint: str
    first_delivery: dict[str, int]
    duplicates: dict[str, int]
    forwards: int
    rounds: int

    @property
    def coverage(self) -> int:
        return len(self.first_delivery)

    def delivered(self, node: str) -> bool:
        return node in self.first_delivery

    def to_dict(self) -> dict:
        return {
            "origin": self.origin,
            "fingerprint": self.fingerprint,
            "coverage": self.coverage,
            "rounds": self.rounds,
            "forwards": self.forwards,
            "first_delivery": dict(sorted(self.first_delivery.items())),
            "duplicates": dict(sorted(self.duplicates.items())),
        }

    def same_delivery(self, other: "DeliveryReport") -> bool:
        return self.first_delivery == other.first_delivery


def delivery_report(world: World, origin: str, fp: str) -> DeliveryReport:
    return DeliveryReport(
        origin=origin,
        fingerprint=fp,
        first_delivery=dict(world.first_delivery.get(fp, {})),
        duplicates=dict(world.duplicates.get(fp, {})),
        forwards=world.forwards.get(fp, 0),
        rounds=max(world.first_delivery.get(fp, {origin: 0}).values()),
    )


def make_envelope(body: bytes | str = b"inquiry", ttl: int = DEFAULT_TTL, padded_size: int = DEFAULT_PADDED_SIZE) -> Envelope:
    if isinstance(body, str):
        body = body.encode("utf-8")
    return Envelope.frame(body, ttl, padded_size)


def run_flood(world: World, envelope: Envelope, origin: str, max_rounds: int = 10_000) -> DeliveryReport:
    if origin not in world.graph:
        raise SimulationError(f"origin {origin!r} is not in the graph")
    if not world.originate(origin, envelope):
        raise SimulationError(f"origin {origin!r} is rate limited")
    world.run(max_rounds)
    return delivery_report(world, origin, envelope.fingerprint)


def scenario_dos(
    graph: SocialGraph,
    droppers: Iterable[str],
    origin: str,
    envelope: Envelope | None = None,
    **world_kw,
) -> DeliveryReport:
    """Flood with ``droppers`` absorbing instead of relaying."""
    droppers = set(droppers)
    if origin in droppers:
        raise SimulationError("the origin cannot be a dropper")
    unknown = droppers - set(graph.nodes)
    if unknown:
        raise SimulationError(f"droppers not in graph: {sorted(unknown)}")
    envelope = envelope or make_envelope(padded_size=world_kw.get("padded_size", DEFAULT_PADDED_SIZE))
    world = World(graph, {d: NodeBehavior(Kind.DROPPER) for d in droppers}, **world_kw)
    return run_flood(world, envelope, origin)


@dataclass
class RateLimitReport:
    attempted: dict[str, int]
    admitted: dict[str, int]
    rejected: dict[str, int]
    queue_peak: dict[str, int]
    coverage: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "attempted": self.attempted,
            "admitted": self.admitted,
            "rejected": self.rejected,
            "queue_peak": dict(sorted(self.queue_peak.items())),
            "coverage": self.coverage,
        }


def scenario_flooding(
    graph: SocialGraph,
    attackers: str | Iterable[str],
    volume: int,
    *,
    ttl: int = DEFAULT_TTL,
    **world_kw,
) -> RateLimitReport:
    """Each attacker tries to originate ``volume`` distinct messages in one window."""
    if isinstance(attackers, str):
        attackers = [attackers]
    attackers = list(attackers)
    for a in attackers:
        if a not in graph:
            raise SimulationError(f"attacker {a!r} is not in the graph")
    world = World(graph, {a: NodeBehavior(Kind.RELAY) for a in attackers}, **world_kw)
    fps = []
    for a in attackers:
        for i in range(volume):
            env = make_envelope(f"flood:{a}:{i}", ttl, world.padded_size)
            if world.originate(a, env):
                fps.append(env.fingerprint)
    world.run()
    return RateLimitReport(
        attempted={a: volume for a in attackers},
        admitted={a: world.admitted[a] for a in attackers},
        rejected={a: world.rejected[a] for a in attackers},
        queue_peak=dict(world.queue_peak),
        coverage={fp: len(world.first_delivery[fp]) for fp in fps},
    )


# -- anonymity ----------------------------------------------------------------


def _undirected(edge) -> frozenset:
    u, v = edge
    return frozenset((str(u), str(v)))


@dataclass
class AdversaryTranscript:
    observed: list[tuple[int, tuple[str, str], str]]
    candidates: list[str] = field(default_factory=list)
    start_rounds: dict[str, int] = field(default_factory=dict)

    @property
    def ambiguous(self) -> bool:
        return len(self.candidates) >= 2

    @property
    def guesses(self) -> dict[str, float]:
        if not self.candidates:
            return {}
        p = 1.0 / len(self.candidates)
        return {c: p for c in self.candidates}

    def to_dict(self) -> dict:
        return {
            "observed": [[r, list(e), fp] for r, e, fp in self.observed],
            "candidates": self.candidates,
            "start_rounds": self.start_rounds,
            "ambiguous": self.ambiguous,
            "guesses": self.guesses,
        }


def observe(world: World, monitored: Iterable) -> list[tuple[int, tuple[str, str], str]]:
    watch = {_undirected(e) for e in monitored}
    return [(r, (s, d), fp) for r, s, d, fp in world.traffic if frozenset((s, d)) in watch]


def edges_of(graph: SocialGraph, nodes: Iterable[str]) -> list[tuple[str, str]]:
    """All edges incident to ``nodes`` (what observers sitting there can see)."""
    nodes = set(nodes)
    return [e for e in graph.edges() if e[0] in nodes or e[1] in nodes]


def _replay(graph: SocialGraph, origin: str, envelope: Envelope, monitored, world_kw) -> list:
    world = World(graph, **world_kw)
    world.originate(origin, envelope)
    world.run()
    return observe(world, monitored)


def _shift(transcript, offset: int):
    return [(r + offset, e, fp) for r, e, fp in transcript]


def consistent_origins(
    graph: SocialGraph, observed, monitored, envelope: Envelope, **world_kw
) -> tuple[list[str], dict[str, int]]:
    """Nodes whose flood, started at some round, reproduces ``observed`` exactly.

    The observer does not know when the message was injected (a sender
    can swap its own message in for one it was about to relay), so each
    candidate is matched with its own start round.
    """
    candidates, starts = [], {}
    for node in graph.nodes:
        replay = _replay(graph, node, envelope, monitored, world_kw)
        if not observed and not replay:
            candidates.append(node)
            starts[node] = 0
            continue
        if len(replay) != len(observed) or not replay:
            continue
        offset = observed[0][0] - replay[0][0]
        if _shift(replay, offset) == observed:
            candidates.append(node)
            starts[node] = offset
    return candidates, starts


def scenario_origin_anonymity(
    graph: SocialGraph,
    observer_edges: Iterable,
    origin: str,
    envelope: Envelope | None = None,
    **world_kw,
) -> AdversaryTranscript:
    monitored = [tuple(e) for e in observer_edges]
    for e in monitored:
        u, v = e
        if u not in graph or v not in graph.neighbors(u):
            raise SimulationError(f"monitored edge {e} is not in the graph")
    envelope = envelope or make_envelope(padded_size=world_kw.get("padded_size", DEFAULT_PADDED_SIZE))
    observed = _replay(graph, origin, envelope, monitored, world_kw)
    candidates, starts = consistent_origins(graph, observed, monitored, envelope, **world_kw)
    return AdversaryTranscript(observed, candidates, starts)


def verify_candidates(graph: SocialGraph, transcript: AdversaryTranscript, monitored, envelope: Envelope, **world_kw) -> bool:
    """Independent re-check: replay each candidate at its start round."""
    for c in transcript.candidates:
        world = World(graph, **world_kw)
        start = transcript.start_rounds[c]
        world.round = start
        world.originate(c, envelope)
        world.run()
        if observe(world, monitored) != transcript.observed:
            return False
    return True


# -- tagging ------------------------------------------------------------------


@dataclass
class TaggingReport:
    baseline: DeliveryReport
    tagged: DeliveryReport
    events: list[dict]

    @property
    def coverage_equal(self) -> bool:
        return self.baseline.coverage == self.tagged.coverage

    @property
    def identical(self) -> bool:
        return self.baseline.to_dict() == self.tagged.to_dict()

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline.to_dict(),
            "tagged": self.tagged.to_dict(),
            "coverage_equal": self.coverage_equal,
            "identical": self.identical,
            "events": self.events,
        }


def scenario_tagging(
    graph: SocialGraph,
    envelope: Envelope,
    origin: str,
    behaviors: Mapping[str, NodeBehavior],
    **world_kw,
) -> TaggingReport:
    """Flood a tagged envelope through a relay-only world and through ``behaviors``."""
    baseline = run_flood(World(graph, **world_kw), envelope, origin)
    world = World(graph, dict(behaviors), **world_kw)
    tagged = run_flood(world, envelope, origin)
    return TaggingReport(baseline, tagged, world.events)

"""Replay a parent/child search over a simulated contact graph.

The fixture names a graph, a set of seekers (profile, role and factor
for each) and the node that initiates. Every other node only relays.
"""

from __future__ import annotations

import datetime as dt
import json
from importlib import resources
from pathlib import Path

from .commitment import HashId, build_request
from .gossip_sim import SeekerAgent, NodeBehavior, Kind, SocialGraph, World
from .handshake import HandshakeState, Phase, derive_key
from .str_core import profile_from_dict


def load_fixture(path: str | Path | None = None) -> dict:
    if path is None:
        text = resources.files("kindred.data").joinpath("rousseau.json").read_text()
    else:
        text = Path(path).read_text()
    return json.loads(text)


def _states(fixture: dict) -> dict[str, HandshakeState]:
    date = dt.date.fromisoformat(fixture.get("request_date", "1970-01-01"))
    states = {}
    for name, seeker in fixture["seekers"].items():
        states[name] = HandshakeState(
            role=seeker["role"],
            profile=profile_from_dict(seeker["profile"], source=name),
            factor=seeker["factor"],
            date=date,
            ttl=fixture.get("ttl", 8),
        )
    return states


def printed_agreement(fixture: dict, states: dict[str, HandshakeState]) -> list[dict]:
    """Marker-by-marker comparison of computed sets with the printed ones."""
    rows = []
    for hash_name, by_node in fixture.get("printed_sets", {}).items():
        for node, sets in by_node.items():
            computed = build_request(states[node].profile, states[node].factor, HashId(hash_name))
            for marker, chars in sets.items():
                got = list(computed.sets[marker].chars)
                rows.append(
                    {
                        "hash": hash_name,
                        "node": node,
                        "marker": marker,
                        "printed": sorted(c.lower() for c in chars),
                        "computed": got,
                        "agree": sorted(c.lower() for c in chars) == got,
                    }
                )
    return rows


def run_demo(fixture: dict | None = None, *, seed: int = 0) -> dict:
    fixture = fixture or load_fixture()
    graph = SocialGraph.from_dict(fixture["graph"])
    states = _states(fixture)
    agents = {name: SeekerAgent(state) for name, state in states.items()}
    world = World(
        graph,
        {name: NodeBehavior(Kind.SEEKER, agent) for name, agent in agents.items()},
        seed=seed,
    )
    initiator = fixture["initiator"]
    agents[initiator].start(world, initiator)
    world.run()

    keys = {}
    for name, state in states.items():
        if state.phase is Phase.RESOLVED:
            keys[name] = derive_key(state, pad=fixture.get("padding")).hex()

    responder = fixture.get("responder")
    pair = [initiator, responder]
    authenticated = all(states[n].phase is Phase.KEYED for n in pair if n)
    keys_equal = authenticated and len({keys[n] for n in pair}) == 1
    agreement = printed_agreement(fixture, states)
    return {
        "authenticated": authenticated,
        "keys_equal": keys_equal,
        "keys": keys,
        "rounds": world.round,
        "phases": {n: s.phase.value for n, s in states.items()},
        "shared_alleles": {n: {m: str(a) for m, a in s.shared_alleles.items()} for n, s in states.items()},
        "ambiguous": {n: sorted(s.ambiguous) for n, s in states.items()},
        "verdicts": {
            n: [{"hash": h.value, **v.to_dict()} for h, v in s.observed] for n, s in states.items()
        },
        "transcripts": {n: s.transcript for n, s in states.items()},
        "events": world.events,
        "printed_agreement": agreement,
        "printed_agreement_count": [sum(r["agree"] for r in agreement), len(agreement)],
    }

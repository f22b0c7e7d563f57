import datetime as dt
import hashlib
import json

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from kindred.commitment import HashId
from kindred.handshake import (
    HandshakeError,
    HandshakeState,
    Phase,
    PaddingSeed,
    derive_key,
    handle,
    initiate,
    padding,
    replay_transcript,
    resolve_shared,
    transcript_jsonl,
)
from kindred.str_core import Allele, GenotypePair, StrProfile

from conftest import factors, profiles
from test_commitment import CHILD, FACTOR, ROUSSEAU

DATE = dt.date(1747, 1, 1)


def exchange(a: HandshakeState, b: HandshakeState, max_steps: int = 20):
    """Deliver messages point to point until both sides fall quiet."""
    initiate(a)
    pending = [(b, m) for m in a.drain()]
    wire = []
    for _ in range(max_steps):
        if not pending:
            break
        nxt = []
        for target, msg in pending:
            wire.append(msg)
            other = a if target is b else b
            nxt += [(other, m) for m in handle(target, msg)]
        pending = nxt
    return wire


def test_worked_example_end_to_end():
    child = HandshakeState("child", CHILD, FACTOR, DATE)
    parent = HandshakeState("parent", ROUSSEAU, FACTOR, DATE)
    wire = exchange(child, parent)
    assert [m.hash_id for m in wire] == [HashId.H1, HashId.H2, HashId.H3, HashId.H3]
    assert child.phase is parent.phase is Phase.RESOLVED
    assert child.shared_alleles["D13S317"] == Allele(9) == parent.shared_alleles["D13S317"]
    assert child.shared_alleles == parent.shared_alleles
    assert not child.ambiguous and not parent.ambiguous
    k1 = derive_key(child, pad="atparishospital")
    k2 = derive_key(parent, pad="atparishospital")
    assert k1 == k2 and len(k1.key) == 64
    # independent oracle: sha512 over the expanded shared alleles in panel order
    pre = "TCTA" * 31 + "GATA" * 11 + "AATG" * 16 + "TATC" * 9 + "AAGG" * 15 + FACTOR + "atparishospital"
    assert len(pre) == 351 and pre.endswith("1/1/1747atparishospital")
    assert k1.key == hashlib.sha512(pre.encode()).digest()


def test_padding_is_deterministic_and_printable():
    seed = PaddingSeed(DATE, FACTOR)
    assert padding(seed) == padding(seed)
    assert padding(seed) != padding(PaddingSeed(DATE, "other"))
    assert len(padding(seed)) == 16 and padding(seed).isalnum()


def test_stranger_is_never_verified():
    stranger = StrProfile.from_alleles(
        {"D21S11": ("TCTA", 20, 21), "D7S820": ("GATA", 5, 6), "TH01": ("AATG", 5, 6), "D13S317": ("TATC", 5, 6), "D19S433": ("AAGG", 5, 6)}
    )
    child = HandshakeState("child", CHILD, FACTOR, DATE)
    other = HandshakeState("parent", stranger, "2/25/1749", DATE)
    exchange(child, other)
    assert other.phase is Phase.IDLE and child.phase is Phase.REQUESTED


def test_phase_guards():
    s = HandshakeState("child", CHILD, FACTOR, DATE)
    with pytest.raises(HandshakeError):
        derive_key(s)
    with pytest.raises(HandshakeError):
        resolve_shared(s, s.local_request(HashId.H3))
    initiate(s)
    with pytest.raises(HandshakeError):
        initiate(s)


def test_inconsistent_peer_fails():
    child = HandshakeState("child", CHILD, FACTOR, DATE)
    parent = HandshakeState("parent", ROUSSEAU, FACTOR, DATE)
    msg = initiate(child)
    handle(parent, msg)
    assert parent.phase is Phase.PEER_VERIFIED
    liar = StrProfile.from_alleles({n: (CHILD.marker(n).motif, 50, 51) for n in CHILD.marker_names})
    with pytest.raises(HandshakeError):
        # no H3 char will match a fabricated profile on every marker
        for factor in ("a", "b", "c", "d", "e"):
            resolve_shared(parent, HandshakeState("child", liar, factor).local_request(HashId.H3))
    assert parent.phase is Phase.FAILED
    assert parent.transcript[-1]["reason"]


def test_transcript_replays():
    child = HandshakeState("child", CHILD, FACTOR, DATE)
    parent = HandshakeState("parent", ROUSSEAU, FACTOR, DATE)
    exchange(child, parent)
    derive_key(child)
    phases = replay_transcript(transcript_jsonl(child))
    assert phases == [Phase.REQUESTED, Phase.PEER_VERIFIED, Phase.RESOLVED, Phase.KEYED]
    assert replay_transcript(transcript_jsonl(parent))[-1] is Phase.RESOLVED
    bad = transcript_jsonl(child).splitlines()
    with pytest.raises(HandshakeError):
        replay_transcript([bad[0], bad[2]])


@st.composite
def related_pairs(draw):
    first = draw(profiles(min_markers=1, max_markers=8))
    entries = []
    for marker, pair in first.items():
        keep = draw(st.sampled_from(pair.alleles))
        entries.append((marker, GenotypePair(keep, Allele(draw(st.integers(1, 60))))))
    return first, StrProfile(entries)


@settings(max_examples=150, suppress_health_check=[HealthCheck.too_slow])
@given(related_pairs(), factors)
def test_related_pairs_agree_on_key(pair, factor):
    a_prof, b_prof = pair
    a = HandshakeState("child", a_prof, factor, DATE)
    b = HandshakeState("parent", b_prof, factor, DATE)
    wire = exchange(a, b)
    assert a.phase is Phase.RESOLVED and b.phase is Phase.RESOLVED
    ka, kb = derive_key(a), derive_key(b)
    if not a.ambiguous and not b.ambiguous:
        assert ka == kb
    if ka != kb:
        assert a.ambiguous or b.ambiguous
    # wire format: only hash ids, ttl and single hex chars keyed by marker name
    for msg in wire:
        doc = msg.to_dict()
        assert set(doc) == {"hash", "ttl", "sets"}
        assert doc["hash"] in {"H1", "H2", "H3"}
        assert set(doc["sets"]) == set(a_prof.marker_names)
        for chars in doc["sets"].values():
            assert len(chars) == 2 and all(len(c) == 1 and c in "0123456789abcdef" for c in chars)


def test_padding_seed_changes_key():
    keys = []
    for date in (DATE, dt.date(1747, 1, 2)):
        child = HandshakeState("child", CHILD, FACTOR, date)
        parent = HandshakeState("parent", ROUSSEAU, FACTOR, date)
        exchange(child, parent)
        keys.append((derive_key(child), derive_key(parent)))
    assert keys[0][0] == keys[0][1] and keys[1][0] == keys[1][1]
    assert keys[0][0] != keys[1][0]

"""STR markers, alleles and profiles.

A profile maps each marker (a named locus with its repeat motif) to the
unordered pair of alleles a person carries there. Alleles are repeat
counts, optionally with a microvariant suffix (``16.2`` is sixteen full
repeats plus the first two bases of the motif).

Paternity consistency here is the classical obligate-allele rule and does
not touch any hashing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping

BASES = frozenset("ACGT")

# Ten loci are named in the protocol description; the remaining six are
# other CODIS core loci, chosen to complete a 16-marker panel.
DEFAULT_PANEL: tuple[tuple[str, str], ...] = (
    ("D8S1179", "TCTA"),
    ("D21S11", "TCTA"),
    ("D7S820", "GATA"),
    ("CSF1PO", "AGAT"),
    ("D3S1358", "TCTA"),
    ("TH01", "AATG"),
    ("D13S317", "TATC"),
    ("D16S539", "GATA"),
    ("D2S1338", "TGCC"),
    ("D19S433", "AAGG"),
    ("vWA", "TCTA"),
    ("TPOX", "AATG"),
    ("D18S51", "AGAA"),
    ("D5S818", "AGAT"),
    ("FGA", "CTTT"),
    ("D1S1656", "TAGA"),
)


class ProfileError(ValueError):
    """Raised for invalid markers, alleles or profile documents."""


def validate_motif(motif: str) -> str:
    if not motif:
        raise ProfileError("motif must be non-empty")
    bad = set(motif) - BASES
    if bad:
        raise ProfileError(f"motif {motif!r} has characters outside ACGT: {''.join(sorted(bad))}")
    if not 2 <= len(motif) <= 6:
        raise ProfileError(f"motif {motif!r} must be 2-6 bases long")
    return motif


@dataclass(frozen=True, order=True)
class Marker:
    name: str
    motif: str

    def __post_init__(self):
        if not self.name:
            raise ProfileError("marker name must be non-empty")
        validate_motif(self.motif)


@dataclass(frozen=True, order=True)
class Allele:
    """Repeat count with an optional microvariant partial repeat.

    Ordering and equality are numeric on ``(full_repeats, partial_bases)``,
    so the motif never enters allele comparison.
    """

    full_repeats: int
    partial_bases: int = 0

    def __post_init__(self):
        if self.full_repeats < 0 or self.partial_bases < 0:
            raise ProfileError(f"allele counts must be non-negative: {self.full_repeats}.{self.partial_bases}")

    @classmethod
    def parse(cls, text: str | int) -> "Allele":
        if isinstance(text, int):
            return cls(text)
        head, dot, tail = str(text).strip().partition(".")
        try:
            full = int(head)
            partial = int(tail) if dot else 0
        except ValueError:
            raise ProfileError(f"cannot parse allele {text!r}; expected 'N' or 'N.P'") from None
        if dot and not tail:
            raise ProfileError(f"cannot parse allele {text!r}; expected 'N' or 'N.P'")
        return cls(full, partial)

    def __str__(self) -> str:
        if self.partial_bases:
            return f"{self.full_repeats}.{self.partial_bases}"
        return str(self.full_repeats)


class GenotypePair:
    """Unordered pair of alleles at one marker; ``(a, b) == (b, a)``."""

    __slots__ = ("_alleles",)

    def __init__(self, first: Allele | str | int, second: Allele | str | int):
        a = first if isinstance(first, Allele) else Allele.parse(first)
        b = second if isinstance(second, Allele) else Allele.parse(second)
        self._alleles = (a, b) if a <= b else (b, a)

    @property
    def alleles(self) -> tuple[Allele, Allele]:
        return self._alleles

    @property
    def homozygous(self) -> bool:
        return self._alleles[0] == self._alleles[1]

    def shares_with(self, other: "GenotypePair") -> bool:
        return bool(set(self._alleles) & set(other._alleles))

    def __iter__(self):
        return iter(self._alleles)

    def __eq__(self, other):
        if not isinstance(other, GenotypePair):
            return NotImplemented
        return self._alleles == other._alleles

    def __hash__(self):
        return hash(self._alleles)

    def __repr__(self):
        return f"GenotypePair({self._alleles[0]}, {self._alleles[1]})"


def expand_allele(motif: str, allele: Allele | int | str) -> str:
    """Return the base sequence for ``allele`` repeats of ``motif``.

    >>> expand_allele("GATA", 3)
    'GATAGATAGATA'
    >>> expand_allele("AAGG", "2.2")
    'AAGGAAGGAA'
    """
    validate_motif(motif)
    if not isinstance(allele, Allele):
        allele = Allele.parse(allele)
    if allele.partial_bases >= len(motif):
        raise ProfileError(
            f"partial repeat {allele.partial_bases} must be shorter than motif {motif!r}"
        )
    return motif * allele.full_repeats + motif[: allele.partial_bases]


class StrProfile:
    """Immutable mapping marker -> GenotypePair, in panel (insertion) order.

    Insertion order is kept because the session key preimage concatenates
    markers in panel order.
    """

    def __init__(self, entries: Iterable[tuple[Marker, GenotypePair]] = ()):
        items: dict[Marker, GenotypePair] = {}
        names: set[str] = set()
        for marker, pair in entries:
            if marker.name in names:
                raise ProfileError(f"duplicate marker {marker.name!r}")
            names.add(marker.name)
            for allele in pair:
                if allele.partial_bases >= len(marker.motif):
                    raise ProfileError(
                        f"{marker.name}: allele {allele} has a partial repeat as long as motif {marker.motif!r}"
                    )
            items[marker] = pair
        self._entries = items
        self._by_name = {m.name: m for m in items}

    @classmethod
    def from_alleles(cls, alleles: Mapping[str, tuple[str, object, object]]) -> "StrProfile":
        """Build from ``{name: (motif, allele1, allele2)}``."""
        return cls((Marker(name, motif), GenotypePair(a, b)) for name, (motif, a, b) in alleles.items())

    @property
    def markers(self) -> tuple[Marker, ...]:
        return tuple(self._entries)

    @property
    def marker_names(self) -> tuple[str, ...]:
        return tuple(self._by_name)

    def marker(self, name: str) -> Marker:
        return self._by_name[name]

    def __getitem__(self, key: Marker | str) -> GenotypePair:
        if isinstance(key, str):
            key = self._by_name[key]
        return self._entries[key]

    def __contains__(self, key) -> bool:
        if isinstance(key, str):
            return key in self._by_name
        return key in self._entries

    def items(self):
        return self._entries.items()

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __eq__(self, other):
        # canonical equality ignores panel order
        if not isinstance(other, StrProfile):
            return NotImplemented
        return dict(self._entries) == dict(other._entries)

    def __hash__(self):
        return hash(frozenset(self._entries.items()))

    def __repr__(self):
        body = ", ".join(f"{m.name}=({a},{b})" for m, (a, b) in self._entries.items())
        return f"StrProfile({body})"


def _require_same_markers(a: StrProfile, b: StrProfile) -> None:
    left, right = set(a.marker_names), set(b.marker_names)
    if left != right:
        raise ProfileError(
            "profiles cover different markers; "
            f"missing from first: {sorted(right - left)}, missing from second: {sorted(left - right)}"
        )


def paternity_consistent(child: StrProfile, parent: StrProfile) -> tuple[dict[str, bool], bool]:
    """Obligate-allele check: does the pair share an allele at every marker?"""
    _require_same_markers(child, parent)
    per_marker = {name: child[name].shares_with(parent[name]) for name in child.marker_names}
    return per_marker, all(per_marker.values())


def possible_children(mother: GenotypePair, father: GenotypePair) -> set[GenotypePair]:
    return {GenotypePair(m, f) for m in mother for f in father}


# -- JSON profile documents -------------------------------------------------


def profile_to_dict(profile: StrProfile) -> dict:
    markers = sorted(profile.markers, key=lambda m: m.name)
    return {
        "markers": [
            {"name": m.name, "motif": m.motif, "alleles": [str(a) for a in profile[m]]}
            for m in markers
        ]
    }


def dump_profile(profile: StrProfile) -> str:
    """Canonical serialization: markers sorted by name, compact separators."""
    return json.dumps(profile_to_dict(profile), separators=(",", ":"))


def profile_from_dict(doc: Mapping, *, source: str = "<profile>") -> StrProfile:
    if not isinstance(doc, Mapping) or "markers" not in doc:
        raise ProfileError(f"{source}: expected an object with a 'markers' list")
    markers = doc["markers"]
    if not isinstance(markers, list):
        raise ProfileError(f"{source}: 'markers' must be a list")
    entries = []
    seen: dict[str, int] = {}
    for i, entry in enumerate(markers):
        where = f"{source}: markers[{i}]"
        try:
            name, motif, alleles = entry["name"], entry["motif"], entry["alleles"]
        except (KeyError, TypeError):
            raise ProfileError(f"{where}: needs 'name', 'motif' and 'alleles'") from None
        if name in seen:
            raise ProfileError(f"{where}: duplicate marker {name!r} (first at markers[{seen[name]}])")
        seen[name] = i
        if not isinstance(alleles, list) or len(alleles) != 2:
            raise ProfileError(f"{where}: 'alleles' must list exactly two alleles")
        try:
            entries.append((Marker(name, motif), GenotypePair(*alleles)))
        except ProfileError as exc:
            raise ProfileError(f"{where}: {exc}") from None
    try:
        return StrProfile(entries)
    except ProfileError as exc:
        raise ProfileError(f"{source}: {exc}") from None


def parse_profile(text: str, *, source: str = "<profile>") -> StrProfile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileError(f"{source}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return profile_from_dict(doc, source=source)

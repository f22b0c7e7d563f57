"""False-match probabilities and brute-force cost arithmetic.

Two matching rules are priced under the uniform-hash model (every
extracted hex character independent and uniform over 16 values):

* ``MULTISET`` -- the protocol rule: the sender's pair and the
  verifier's pair share at least one character.
* ``SINGLE`` -- one fixed character against a pair, which lands close to
  the 1/8 per-marker figure quoted for the protocol.
"""

from __future__ import annotations

import enum
import itertools
import math
import random
import string
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .commitment import HashId, build_request, marker_matches
from .str_core import DEFAULT_PANEL, GenotypePair, Marker, StrProfile

QUOTED_MARKER_CLAIM = Fraction(1, 8)
PANEL_MARKERS = 16
MIN_TRIALS = 10_000


class MatchRule(str, enum.Enum):
    MULTISET = "multiset"
    SINGLE = "single"


@dataclass(frozen=True)
class FpModel:
    rule: MatchRule = MatchRule.MULTISET
    markers: int = PANEL_MARKERS
    alphabet_size: int = 16
    set_size: int = 2

    def __post_init__(self):
        object.__setattr__(self, "rule", MatchRule(self.rule))
        if self.alphabet_size < 1 or self.markers < 1:
            raise ValueError("alphabet size and marker count must be positive")
        if self.set_size != 2:
            raise ValueError("digest sets hold exactly two characters")


def _hit(rule: MatchRule, sent, local) -> bool:
    if rule is MatchRule.MULTISET:
        return bool(set(sent) & set(local))
    return sent[0] in local


def exact_marker_fp(model: FpModel = FpModel()) -> Fraction:
    """Per-marker false-match probability by exhaustive enumeration."""
    a = model.alphabet_size
    sent_len = 2 if model.rule is MatchRule.MULTISET else 1
    hits = total = 0
    for chars in itertools.product(range(a), repeat=sent_len + 2):
        sent, local = chars[:sent_len], chars[sent_len:]
        hits += _hit(model.rule, sent, local)
        total += 1
    return Fraction(hits, total)


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    stderr: float
    trials: int
    seed: int

    def within(self, exact: float, sigmas: float = 3.0) -> bool:
        return abs(self.estimate - exact) <= sigmas * self.stderr


def mc_marker_fp(model: FpModel, trials: int, seed: int) -> McEstimate:
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials, got {trials}")
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, model.alphabet_size, size=(trials, 4))
    v1, v2, p1, p2 = draws.T
    if model.rule is MatchRule.MULTISET:
        hit = (v1 == p1) | (v1 == p2) | (v2 == p1) | (v2 == p2)
    else:
        hit = (p1 == v1) | (p1 == v2)
    p = float(hit.mean())
    return McEstimate(p, math.sqrt(p * (1 - p) / trials), trials, seed)


def all_marker_fp(model: FpModel = FpModel()) -> Fraction:
    """Chance that every marker matches by accident, markers independent."""
    return exact_marker_fp(model) ** model.markers


def quoted_all_marker_claim(markers: int = PANEL_MARKERS) -> Fraction:
    return QUOTED_MARKER_CLAIM**markers


# -- big numbers --------------------------------------------------------------


@dataclass(frozen=True)
class BigNumber:
    """A count carried as log10, with the exact integer when it is known."""

    log10: float
    exact: int | None = None

    @classmethod
    def of(cls, value: int) -> "BigNumber":
        if value < 1:
            raise ValueError("counts are positive")
        return cls(_int_log10(value), value)

    @property
    def exponent(self) -> int:
        return math.floor(self.log10)

    @property
    def mantissa(self) -> float:
        return 10 ** (self.log10 - self.exponent)

    def __mul__(self, other: "BigNumber") -> "BigNumber":
        exact = self.exact * other.exact if self.exact is not None and other.exact is not None else None
        if exact is not None:
            return BigNumber.of(exact)
        return BigNumber(self.log10 + other.log10)

    def __str__(self):
        return f"{self.mantissa:.6f}e+{self.exponent}"

    def to_dict(self) -> dict:
        doc = {"mantissa": self.mantissa, "exponent": self.exponent, "log10": self.log10}
        if self.exact is not None:
            doc["exact"] = str(self.exact)
        return doc


def _int_log10(value: int) -> float:
    # math.log10 accepts arbitrarily large ints; digits are exact for the exponent
    return math.log10(value)


def power(base: int, exponent: int | float, *, exact_limit: int = 4096) -> BigNumber:
    """``base ** exponent`` in log form; exact only for small integer exponents."""
    if base < 1 or exponent < 0:
        raise ValueError("base must be positive and exponent non-negative")
    if isinstance(exponent, int) and exponent <= exact_limit:
        return BigNumber.of(base**exponent)
    return BigNumber(exponent * math.log10(base))


@dataclass(frozen=True)
class CostModel:
    allele_values: int = 10
    markers: int = 16
    years: int = 93
    hospitals: int = 1000

    @property
    def age_days(self) -> int:
        return self.years * 365

    def __post_init__(self):
        if min(self.allele_values, self.markers, self.years, self.hospitals) < 1:
            raise ValueError("cost model fields must be positive")


def brute_force_cost(model: CostModel = CostModel()) -> BigNumber:
    """Key guesses: allele combinations x birth days x hospitals."""
    return power(model.allele_values, model.markers) * BigNumber.of(model.age_days) * BigNumber.of(model.hospitals)


# -- end-to-end measurement ---------------------------------------------------


def _random_factor(rng: random.Random) -> str:
    return "".join(rng.choices(string.ascii_letters + string.digits, k=16))


def _panel(markers: int) -> list[Marker]:
    if markers <= len(DEFAULT_PANEL):
        return [Marker(n, m) for n, m in DEFAULT_PANEL[:markers]]
    return [Marker(f"M{i:03d}", "GATA") for i in range(markers)]


def random_profile_pair(
    rng: random.Random, markers: int = PANEL_MARKERS, *, related: bool, allele_range=(5, 60)
) -> tuple[StrProfile, StrProfile]:
    """Two profiles over the same panel, heterozygous at every marker.

    Related pairs share one allele per marker; unrelated pairs are drawn
    independently and may share alleles by chance (the factors differ,
    so the hash inputs never coincide).
    """
    lo, hi = allele_range
    first, second = [], []
    for marker in _panel(markers):
        a, b = rng.sample(range(lo, hi), 2)
        first.append((marker, GenotypePair(a, b)))
        if related:
            shared = rng.choice((a, b))
            other = rng.choice([x for x in range(lo, hi) if x != shared])
            second.append((marker, GenotypePair(shared, other)))
        else:
            c, d = rng.sample(range(lo, hi), 2)
            second.append((marker, GenotypePair(c, d)))
    return StrProfile(first), StrProfile(second)


@dataclass(frozen=True)
class EmpiricalRate:
    matches: int
    comparisons: int

    @property
    def rate(self) -> float:
        return self.matches / self.comparisons

    def stderr_at(self, p: float) -> float:
        return math.sqrt(p * (1 - p) / self.comparisons)


def empirical_match_rate(
    pairs: int, *, related: bool, markers: int = PANEL_MARKERS, seed: int = 0, hash_id: HashId = HashId.H1
) -> EmpiricalRate:
    """Per-marker match rate of real commitments over random profile pairs.

    Unrelated pairs use independent random factors; related pairs share one.
    """
    rng = random.Random(seed)
    matches = comparisons = 0
    for _ in range(pairs):
        prover, verifier = random_profile_pair(rng, markers, related=related)
        f1 = _random_factor(rng)
        f2 = f1 if related else _random_factor(rng)
        while f2 == f1 and not related:
            f2 = _random_factor(rng)
        sent = build_request(prover, f1, hash_id)
        local = build_request(verifier, f2, hash_id)
        for name, ds in sent.sets.items():
            matches += marker_matches(ds, local.sets[name])
            comparisons += 1
    return EmpiricalRate(matches, comparisons)


def fp_report(rule: MatchRule | str = MatchRule.MULTISET, trials: int = 1_000_000, seed: int = 0, markers: int = PANEL_MARKERS) -> dict:
    model = FpModel(MatchRule(rule), markers)
    exact = exact_marker_fp(model)
    mc = mc_marker_fp(model, trials, seed)
    return {
        "rule": model.rule.value,
        "exact": float(exact),
        "exact_fraction": f"{exact.numerator}/{exact.denominator}",
        "mc": {"est": mc.estimate, "stderr": mc.stderr, "trials": trials, "seed": seed},
        "mc_within_3_sigma": mc.within(float(exact)),
        "quoted_claim": float(QUOTED_MARKER_CLAIM),
        "markers": markers,
        "all_markers": float(all_marker_fp(model)),
        "quoted_all_markers": float(quoted_all_marker_claim(markers)),
    }


def cost_report(model: CostModel = CostModel()) -> dict:
    cost = brute_force_cost(model)
    return {
        "allele_values": model.allele_values,
        "markers": model.markers,
        "years": model.years,
        "age_days": model.age_days,
        "hospitals": model.hospitals,
        "tests": cost.to_dict(),
        "display": str(cost),
    }

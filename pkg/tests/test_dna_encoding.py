import math
import random
from fractions import Fraction
from itertools import permutations

import pytest
from hypothesis import given, strategies as st

from kindred.dna_encoding import BaseBijection, EncodingError, cf_sqrt, digits_to_seq, seq_to_digits

BIJECTIONS = [BaseBijection(dict(zip((1, 2, 3, 4), p))) for p in permutations("ACGT")]


def test_sqrt7_expansion():
    cf = cf_sqrt(7, 9)
    assert cf.head == 2 and cf.tail == (1, 1, 1, 4, 1, 1, 1, 4) and cf.period == (0, 4)
    assert cf.to_dict() == {"head": 2, "tail": [1, 1, 1, 4, 1, 1, 1, 4], "period": [0, 4]}
    assert abs(float(cf.convergents()[-1]) - math.sqrt(7)) < 1e-4


def test_square_is_finite():
    assert cf_sqrt(4, 5).terms() == [2]
    assert cf_sqrt(4, 0).period is None


def test_validation():
    with pytest.raises(EncodingError):
        cf_sqrt(7, 0)
    with pytest.raises(EncodingError):
        cf_sqrt(0, 3)


def test_sequence_digits_of_example():
    assert seq_to_digits("GCCCTCCCTCCCTCC") == [2, 1, 1, 1, 4, 1, 1, 1, 4, 1, 1, 1, 4, 1, 1]
    with pytest.raises(EncodingError):
        seq_to_digits("ACGU")
    with pytest.raises(EncodingError):
        digits_to_seq([0])
    with pytest.raises(EncodingError):
        BaseBijection({1: "A", 2: "A", 3: "G", 4: "T"})


@given(st.sampled_from(BIJECTIONS), st.text(alphabet="ACGT", max_size=200))
def test_bijection_roundtrip(f, seq):
    assert digits_to_seq(seq_to_digits(seq, f), f) == seq


def _brute_period(terms):
    # smallest p with terms[i] == terms[i + p] for the whole tail
    for p in range(1, len(terms)):
        if all(terms[i] == terms[i + p] for i in range(len(terms) - p)):
            return p
    return None


def test_period_matches_brute_force_up_to_1000():
    for n in range(2, 1001):
        if math.isqrt(n) ** 2 == n:
            continue
        cf = cf_sqrt(n, 201)
        start, length = cf.period
        assert start == 0
        assert length == _brute_period(list(cf.tail)), n
        # classical: the block ends in 2 * head
        assert cf.tail[length - 1] == 2 * cf.head


@given(st.integers(2, 5000).filter(lambda n: math.isqrt(n) ** 2 != n))
def test_convergents_alternate_around_root(n):
    root = math.sqrt(n)
    conv = cf_sqrt(n, 12).convergents()
    for i, c in enumerate(conv):
        # exact comparison via c^2 vs n
        below = c * c < n
        assert below == (i % 2 == 0)
    errs = [abs(float(c) - root) for c in conv]
    assert all(b <= a for a, b in zip(errs, errs[1:]))

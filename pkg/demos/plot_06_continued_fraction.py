"""
Bases as digits and a square root
=================================

Map C, G, A, T to 1..4 and a periodic stretch of sequence reads as the
continued fraction of a square root.
"""

import math

from kindred.dna_encoding import cf_sqrt, digits_to_seq, seq_to_digits

digits = seq_to_digits("GCCCTCCCTCCCTCC")
print(digits)

cf = cf_sqrt(7, 15)
print("sqrt(7):", cf.head, list(cf.tail), "period", cf.period)
print("as bases:", digits_to_seq(cf.terms()))

for c in cf.convergents()[:8]:
    print(f"{str(c):>10s} {float(c) - math.sqrt(7):+.2e}")

###############################################################################
# Period lengths of sqrt(n) for the first non-squares.

for n in range(2, 30):
    if math.isqrt(n) ** 2 != n:
        print(n, cf_sqrt(n, 2).period[1])

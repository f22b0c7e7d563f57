"""
How often do strangers look related?
====================================

Each marker commitment is two hex characters. A stranger passes a marker
when the two character sets happen to overlap. Enumerate it exactly,
check it by simulation, then measure it on real hashes.
"""

import numpy as np

from kindred.analysis import FpModel, MatchRule, all_marker_fp, empirical_match_rate, exact_marker_fp, mc_marker_fp

for rule in MatchRule:
    model = FpModel(rule)
    exact = exact_marker_fp(model)
    mc = mc_marker_fp(model, trials=1_000_000, seed=7)
    print(f"{rule.value:9s} exact {exact} = {float(exact):.5f}   MC {mc.estimate:.5f} +/- {mc.stderr:.5f}")
    print(f"          all 16 markers by chance: {float(all_marker_fp(model)):.3e}")

###############################################################################
# The same number from actual SHA-1 commitments of random profiles with
# random second factors.

rate = empirical_match_rate(2000, related=False, seed=1)
print(f"empirical per-marker rate over {rate.comparisons} markers: {rate.rate:.4f}")

###############################################################################
# How the all-marker rate falls with panel size.

p = float(exact_marker_fp(FpModel()))
for markers in (5, 10, 16, 24):
    print(f"{markers:3d} markers -> {p ** markers:.2e}")
print("markers needed for 1e-12:", int(np.ceil(np.log(1e-12) / np.log(p))))

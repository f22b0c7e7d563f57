"""
A dead drop keyed by an organism
================================

A whistleblower leaves a microbe sample somewhere. Its first thousand
bases, hashed, are the key. The ciphertext floods the network; only the
helper who found the sample can open it, and waits before publishing.
"""

import random

from kindred.gossip_sim import SocialGraph, World
from kindred.whistle import DropContext, keyspace_report, random_organism, simulate_drop

rng = random.Random(5)
graph = SocialGraph.ring_with_chords(40, 20, seed=5)
world = World(graph, seed=5)

organisms = [random_organism(rng, label=f"sample-{i}") for i in range(10)]
ctx = DropContext("It was a dark and stormy night.", "3 Quai Voltaire")
helper_nodes = rng.sample(graph.nodes[1:], 10)
helpers = {node: [(organisms[i], ctx)] for i, node in enumerate(helper_nodes)}

report = simulate_drop(world, "n0", (organisms[0], ctx), helpers, b"ledger pages" * 80, ttl=40)
print("coverage:", report.delivery["coverage"])
print("decryptions:", {n: c for n, c in report.decryptions.items() if c})
for pub in report.publications:
    print(f"{pub['node']} decrypted in round {pub['round']}, publishes after {pub['wait_days']} days")

###############################################################################
# Guessing the key means guessing the bases.

for prefix in (100, 1000):
    ks = keyspace_report(prefix)
    print(f"{prefix} bases: {ks['dna']['mantissa']:.3f}e{ks['dna']['exponent']}")

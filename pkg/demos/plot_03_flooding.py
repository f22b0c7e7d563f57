"""
Flooding, dropping and rate limits
==================================

Every node forwards every new envelope to all contacts but the sender.
A tree shows raw coverage, a ring with chords shows resilience to a
node that swallows messages, and a noisy node shows the rate limit.
"""

from kindred.gossip_sim import SocialGraph, World, make_envelope, run_flood, scenario_dos, scenario_flooding

tree = SocialGraph.tree(10, 3)
report = run_flood(World(tree), make_envelope(ttl=3), "r")
print(f"tree: {report.coverage} nodes in {report.rounds} rounds, {report.forwards} forwards")

###############################################################################
# A dropper on a 2-connected graph cannot cut anyone off.

graph = SocialGraph.ring_with_chords(50, 25, seed=1)
worst = min(scenario_dos(graph, [d], "n0", make_envelope(ttl=50)).coverage for d in graph.nodes[1:])
print("worst coverage with one dropper:", worst)

# on a bare ring two droppers do cut it
ring = SocialGraph.ring(12)
cut = scenario_dos(ring, ["n3", "n9"], "n0", make_envelope(ttl=12))
print("ring with two droppers reaches:", sorted(cut.first_delivery))

###############################################################################
# Fifty messages from one node in one window; five get through.

flood = scenario_flooding(graph, "n7", 50)
print("admitted", flood.admitted, "rejected", flood.rejected)

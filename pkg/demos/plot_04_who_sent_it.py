"""
Can an eavesdropper name the sender?
====================================

An adversary watching one link of a six-person ring sees which way the
envelope crossed and when. Any node whose flood would produce the same
observation is an equally good guess.
"""

from kindred.gossip_sim import SocialGraph, edges_of, make_envelope, scenario_origin_anonymity, verify_candidates

ring = SocialGraph.ring(6)
env = make_envelope(ttl=8)
monitored = [("n0", "n1")]
for origin in ring.nodes:
    t = scenario_origin_anonymity(ring, monitored, origin, env)
    print(f"sent by {origin}: consistent origins {t.candidates}")

t = scenario_origin_anonymity(ring, monitored, "n0", env)
print("verified by replay:", verify_candidates(ring, t, monitored, env))

###############################################################################
# An adversary sitting on every link of a star hub sees everything.

star = SocialGraph.star(5)
t = scenario_origin_anonymity(star, edges_of(star, ["hub"]), "leaf2")
print("star, all hub links watched:", t.candidates)

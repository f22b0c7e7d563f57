"""
A separated parent and child find each other
============================================

Three people share a five-node contact chain. Rousseau floods a request,
a stranger relays it untouched, and the child answers. Both sides end up
holding the same session key without ever sending an allele value.
"""

from kindred.walkthrough import run_demo

report = run_demo()

# who got how far through the state machine
for name, phase in report["phases"].items():
    print(f"{name:10s} {phase}")

# the shared allele each side resolved, per marker
for marker, allele in report["shared_alleles"]["Child"].items():
    print(f"{marker:8s} {allele}")

print("keys equal:", report["keys_equal"])
print("session key:", report["keys"]["Child"][:32], "...")

###############################################################################
# Every message on the wire is a set of single hex characters per marker.
# Here is the child's opening request, as any relay would see it.

print(report["transcripts"]["Child"][0])
print(report["transcripts"]["Rousseau"][0]["emitted"])

###############################################################################
# How many of the digest characters printed in the original worked example
# this implementation reproduces.

agree, total = report["printed_agreement_count"]
print(f"{agree}/{total} printed characters reproduced")

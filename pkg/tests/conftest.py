import string

from hypothesis import strategies as st

from kindred.str_core import DEFAULT_PANEL, Allele, GenotypePair, Marker, StrProfile

motifs = st.text(alphabet="ACGT", min_size=2, max_size=6)
alleles = st.builds(Allele, st.integers(1, 60), st.just(0))
factors = st.text(alphabet=string.ascii_letters + string.digits + "/-", min_size=1, max_size=24)


@st.composite
def profiles(draw, min_markers=1, max_markers=len(DEFAULT_PANEL)):
    n = draw(st.integers(min_markers, max_markers))
    entries = []
    for name, motif in DEFAULT_PANEL[:n]:
        a, b = draw(alleles), draw(alleles)
        entries.append((Marker(name, motif), GenotypePair(a, b)))
    return StrProfile(entries)


# acceptance criteria report one line each at the end of the run
ACCEPTANCE: dict[int, tuple[str, bool, float]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        name, ok, secs = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {name} ({secs:.2f}s)")

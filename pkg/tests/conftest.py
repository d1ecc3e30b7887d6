import pytest

from hrcsolve import Matching, parse_instance

# One couple over (h1,h1) then (h2,h3); two singles wanting only h1; h1 has
# two posts and ranks r1 r3 r2 r4.
FIG5_TEXT = """\
hrc 1
singles 2
couples 1
hospitals 3
hospital 1 2
hospital 2 1
hospital 3 1
couple 1 2 : 1,1 2,3
single 3 : 1
single 4 : 1
pref 1 : 1 3 2 4
pref 2 : 1
pref 3 : 2
"""


@pytest.fixture
def fig5():
    return parse_instance(FIG5_TEXT)


@pytest.fixture
def fig5_matching(fig5):
    # Couple to (h2,h3), both singles to h1.
    return Matching.from_assignments(fig5, {1: 2, 2: 3, 3: 1, 4: 1})

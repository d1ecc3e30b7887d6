import random

import pytest

from hrcsolve import (
    GenParams,
    HrcError,
    Matching,
    SolveOptions,
    StabilityMode,
    blocking_pairs,
    brute_force_oracle,
    figure2_instance,
    parse_instance,
    prove_unsolvable,
    random_instance,
    solve_most_stable,
)

CHAIN = """\
hrc 1
singles 2
couples 1
hospitals 3
hospital 1 1
hospital 2 1
hospital 3 2
couple 1 2 : 1,2
single 3 : 3
single 4 : 3 1
pref 1 : 1 4
pref 2 : 2
pref 3 : 3 4
"""


def small_instance(seed):
    rng = random.Random(seed)
    hospitals = rng.randrange(2, 6)
    residents = rng.choice([6, 7, 8, 9, 10])
    couples = rng.randrange(0, min(3, residents // 2) + 1)
    return random_instance(
        GenParams(
            residents=residents,
            couples=couples,
            hospitals=hospitals,
            posts=rng.randrange(hospitals, residents + 3),
            min_len=1,
            max_len=min(3, hospitals),
            seed=seed * 31 + 5,
        )
    )


def test_fig5_solve(fig5):
    sol = solve_most_stable(fig5)
    oracle = brute_force_oracle(fig5)
    assert (sol.bp_count, sol.size) == (oracle.bp_count, oracle.size) == (1, 4)
    assert sol.optimal
    assert len(blocking_pairs(fig5, sol.matching)) == 1


def test_fixed_chain_all_assigned():
    inst = parse_instance(CHAIN)
    sol = solve_most_stable(inst)
    assert sol.bp_count == 0
    assert sol.size == 4


def test_oracle_edge_cases():
    empty = parse_instance("hrc 1\nsingles 0\ncouples 0\nhospitals 0\n")
    sol = brute_force_oracle(empty)
    assert sol.bp_count == 0 and sol.size == 0

    one = parse_instance(
        "hrc 1\nsingles 1\ncouples 0\nhospitals 1\nhospital 1 1\nsingle 1 : 1\npref 1 : 1\n"
    )
    sol = brute_force_oracle(one)
    assert sol.bp_count == 0 and sol.size == 1 and sol.matching.hospital_for(1) == 1

    big = random_instance(
        GenParams(residents=20, couples=2, hospitals=4, posts=20, min_len=1, max_len=3, seed=1)
    )
    with pytest.raises(HrcError, match="oracle limit"):
        brute_force_oracle(big)


@pytest.mark.parametrize("seed", range(120))
def test_oracle_equivalence(seed):
    inst = small_instance(seed)
    sol = solve_most_stable(inst)
    oracle = brute_force_oracle(inst)
    assert (sol.bp_count, sol.size) == (oracle.bp_count, oracle.size), f"seed {seed}"
    assert len(sol.bp_set) == sol.bp_count


@pytest.mark.parametrize("seed", range(40))
def test_presolve_and_dispatch_toggles_agree(seed):
    inst = small_instance(seed * 977 + 3)
    base = solve_most_stable(inst)
    no_pre = solve_most_stable(inst, SolveOptions(enable_presolve=False))
    no_disp = solve_most_stable(inst, SolveOptions(enable_dispatch=False))
    assert (base.bp_count, base.size) == (no_pre.bp_count, no_pre.size)
    assert (base.bp_count, base.size) == (no_disp.bp_count, no_disp.size)
    # All three extract the lexicographically smallest optimal vector.
    assert base.matching.positions == no_pre.matching.positions
    assert base.matching.positions == no_disp.matching.positions


@pytest.mark.parametrize("seed", range(30))
def test_willaccept_mode(seed):
    inst = small_instance(seed * 1201 + 11)
    opts = SolveOptions(mode=StabilityMode.WILL_ACCEPT)
    sol = solve_most_stable(inst, opts)
    oracle = brute_force_oracle(inst, mode=StabilityMode.WILL_ACCEPT)
    assert (sol.bp_count, sol.size) == (oracle.bp_count, oracle.size), f"seed {seed}"


@pytest.mark.parametrize("seed", range(12))
def test_blocking_set_presolve_option(seed):
    inst = small_instance(seed * 7 + 2)
    eager = solve_most_stable(inst)  # candidate-set enumeration is the default
    lazy = solve_most_stable(inst, SolveOptions(enable_blocking_set_presolve=False))
    assert (lazy.bp_count, lazy.size) == (eager.bp_count, eager.size)
    assert lazy.matching.positions == eager.matching.positions


def test_determinism(fig5):
    a = solve_most_stable(fig5)
    b = solve_most_stable(fig5)
    assert a.matching.positions == b.matching.positions
    assert a.stats.nodes == b.stats.nodes
    inst = small_instance(77)
    a = solve_most_stable(inst)
    b = solve_most_stable(inst)
    assert a.matching.positions == b.matching.positions
    assert a.stats.nodes == b.stats.nodes


def test_prove_unsolvable():
    assert prove_unsolvable(figure2_instance(1, (1,))) is True
    assert prove_unsolvable(figure2_instance(2, (0, 1))) is False
    gamma1 = parse_instance(
        "hrc 1\nsingles 1\ncouples 0\nhospitals 1\nhospital 1 1\nsingle 1 : 1\npref 1 : 1\n"
    )
    assert prove_unsolvable(gamma1) is False
    # Same answers without the special-case dispatch.
    opts = SolveOptions(enable_dispatch=False)
    assert prove_unsolvable(figure2_instance(1, (1,)), opts) is True
    assert prove_unsolvable(figure2_instance(2, (0, 1)), opts) is False


def test_time_limit_returns_incumbent():
    inst = random_instance(
        GenParams(residents=40, couples=8, hospitals=6, posts=40, min_len=3, max_len=5, seed=9)
    )
    sol = solve_most_stable(inst, SolveOptions(time_limit=0.0, enable_dispatch=False))
    assert sol.optimal is False
    assert isinstance(sol.matching, Matching)
    assert sol.bp_count == len(blocking_pairs(inst, sol.matching))


def test_bp_bound_exceeded():
    from hrcsolve import BpBoundExceeded

    inst = figure2_instance(1, (1,))  # minimum is one blocking pair
    with pytest.raises(BpBoundExceeded):
        solve_most_stable(inst, SolveOptions(max_bp_bound=0, enable_dispatch=False))
    with pytest.raises(BpBoundExceeded):
        solve_most_stable(inst, SolveOptions(max_bp_bound=0))


@pytest.mark.parametrize("n,chain", [(1, (1,)), (2, (0, 0)), (3, (1, 0, 2))])
def test_figure2_solver_parity(n, chain):
    inst = figure2_instance(n, chain)
    sol = solve_most_stable(inst, SolveOptions(enable_dispatch=False))
    assert sol.bp_count == n % 2

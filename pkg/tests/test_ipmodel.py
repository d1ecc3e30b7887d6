import random

import pytest

from hrcsolve import (
    GenParams,
    HrcError,
    Matching,
    MatchingError,
    figure2_instance,
    parse_instance,
    random_instance,
)
from hrcsolve.ipmodel import (
    assignment_to_matching,
    build_ip,
    export_lp,
    matching_to_assignment,
    verify_assignment,
)
from hrcsolve.search import brute_force_oracle
from util import all_matchings


def test_fig5_variable_counts(fig5):
    model = build_ip(fig5)
    assert len(model.x) == 10
    assert len(model.theta) == 6
    assert len(model.alpha) == len(model.beta) == 6
    assert len([c for c in model.constraints if c.tag == "(7)"]) == 3


def test_empty_model():
    inst = parse_instance("hrc 1\nsingles 0\ncouples 0\nhospitals 0\n")
    model = build_ip(inst)
    assert not model.variables and not model.constraints
    text = export_lp(model, "minbp")
    assert "min: 0;" in text


def test_export_objective_and_determinism(fig5):
    model = build_ip(fig5)
    text = export_lp(model, "minbp")
    assert "min: th_1_1 + th_1_2 + th_3_1 + th_4_1;" in text
    # Even couple members' counters are fixed at zero, not minimised.
    assert "th_2_1 +" not in text.splitlines()[1]
    assert "tz_2_1: th_2_1 = 0;" in text
    assert text == export_lp(build_ip(fig5), "minbp")

    maxsize = export_lp(model, "maxsize", k=1)
    assert "max:" in maxsize
    assert "c18:" in maxsize and "<= 1" in maxsize
    with pytest.raises(HrcError, match="requires"):
        export_lp(model, "maxsize")


def test_matching_assignment_fig5(fig5, fig5_matching):
    model = build_ip(fig5)
    a = matching_to_assignment(fig5, fig5_matching, model)
    report = verify_assignment(model, a)
    assert report.feasible
    assert report.theta_sum == 1
    assert a["th_1_1"] == 1
    assert report.x_sum == 4


def test_all_unassigned_zero_theta_infeasible(fig5):
    model = build_ip(fig5)
    empty = Matching(fig5, (3, 3, 2, 2))
    a = matching_to_assignment(fig5, empty, model)
    for name in model.theta.values():
        a[name] = 0
    report = verify_assignment(model, a)
    assert not report.feasible
    assert "(15)" in {tag for tag, _ in report.violated}


def test_verifier_couple_split_and_capacity(fig5, fig5_matching):
    model = build_ip(fig5)
    a = matching_to_assignment(fig5, fig5_matching, model)
    b = dict(a)
    b["x_2_2"], b["x_2_3"] = 0, 1  # split the couple
    report = verify_assignment(model, b)
    assert ("(7)", "c7_i1_p2") in report.violated or any(
        tag == "(7)" for tag, _ in report.violated
    )
    c = dict(a)
    # Push r1 into h1 on top of both singles.
    c["x_1_2"], c["x_1_1"] = 0, 1
    c["x_2_2"], c["x_2_1"] = 0, 1
    report = verify_assignment(model, c)
    assert any(tag == "(6)" for tag, _ in report.violated)


def test_verifier_missing_variable(fig5, fig5_matching):
    model = build_ip(fig5)
    a = matching_to_assignment(fig5, fig5_matching, model)
    del a["x_1_1"]
    with pytest.raises(HrcError, match="missing value"):
        verify_assignment(model, a)


def test_assignment_roundtrip(fig5):
    model = build_ip(fig5)
    oracle = brute_force_oracle(fig5)
    a = matching_to_assignment(fig5, oracle.matching, model)
    again = assignment_to_matching(fig5, a)
    assert again.positions == oracle.matching.positions

    sentinel = {name: 0 for name in model.variables}
    for i in range(1, 5):
        sentinel[f"x_{i}_{fig5.list_len(i) + 1}"] = 1
    m = assignment_to_matching(fig5, sentinel)
    assert m.size == 0

    double = matching_to_assignment(fig5, oracle.matching, model)
    double["x_3_1"] = 1
    double["x_3_2"] = 1
    with pytest.raises(MatchingError, match=r"\(5\)"):
        assignment_to_matching(fig5, double)


@pytest.mark.parametrize("seed", range(12))
def test_counting_identities(seed):
    rng = random.Random(seed)
    hospitals = rng.randrange(2, 5)
    inst = random_instance(
        GenParams(
            residents=rng.randrange(4, 11),
            couples=rng.randrange(0, 3),
            hospitals=hospitals,
            posts=rng.randrange(hospitals, 12),
            min_len=1,
            max_len=min(3, hospitals),
            seed=seed,
        )
    )
    model = build_ip(inst)
    assert len(model.x) == sum(inst.list_len(i) + 1 for i in range(1, inst.n1 + 1))
    assert len(model.theta) == sum(inst.list_len(i) for i in range(1, inst.n1 + 1))
    total_hosp = sum(len(h.pref_list) for h in inst.hospitals)
    assert len(model.alpha) == total_hosp
    assert len(model.beta) == sum(
        len(h.pref_list) for h in inst.hospitals
    )
    for con in model.constraints:
        names = set()
        for _, var in con.terms:
            assert var in set(model.variables)
            assert var not in names
            names.add(var)


@pytest.mark.parametrize("seed", range(25))
def test_theorem5_equivalence_small(seed):
    rng = random.Random(seed)
    hospitals = rng.randrange(2, 4)
    inst = random_instance(
        GenParams(
            residents=rng.choice([5, 6, 7]),
            couples=rng.randrange(0, 3),
            hospitals=hospitals,
            posts=rng.randrange(hospitals, 9),
            min_len=1,
            max_len=2,
            seed=seed * 17 + 1,
        )
    )
    model = build_ip(inst)
    oracle = brute_force_oracle(inst)
    best_theta = None
    for m in all_matchings(inst):
        a = matching_to_assignment(inst, m, model)
        report = verify_assignment(model, a)
        assert report.feasible, (seed, m.positions, report.violated)
        if best_theta is None or report.theta_sum < best_theta:
            best_theta = report.theta_sum
    assert best_theta == oracle.bp_count


def test_figure2_model_builds():
    inst = figure2_instance(3, (1, 0, 2))
    model = build_ip(inst)
    report = verify_assignment(
        model,
        matching_to_assignment(
            inst, brute_force_oracle(inst).matching, model
        ),
    )
    assert report.feasible and report.theta_sum == 1

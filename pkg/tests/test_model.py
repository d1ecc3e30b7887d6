import random

import pytest

from hrcsolve import (
    GenParams,
    HrcError,
    Matching,
    MatchingError,
    ParseError,
    ValidationError,
    parse_instance,
    parse_matching,
    random_instance,
    serialize_instance,
    serialize_matching,
    validate,
)
from conftest import FIG5_TEXT

EMPTY = "hrc 1\nsingles 0\ncouples 0\nhospitals 0\n"


def test_empty_instance():
    inst = parse_instance(EMPTY)
    assert inst.n1 == 0 and inst.n2 == 0 and inst.num_couples == 0


def test_fig5_shape(fig5):
    assert fig5.n1 == 4
    assert fig5.n2 == 3
    assert fig5.num_couples == 1
    assert fig5.couples[0].joint_list == ((1, 1), (2, 3))
    assert fig5.indiv_pref(1) == (1, 2)
    assert fig5.indiv_pref(2) == (1, 3)
    assert fig5.hospital(1).capacity == 2


def test_unknown_hospital_in_couple_pair():
    text = FIG5_TEXT.replace("couple 1 2 : 1,1 2,3", "couple 1 2 : 1,9 2,3")
    with pytest.raises(ParseError, match="unknown hospital"):
        parse_instance(text)


def test_rank(fig5):
    assert fig5.rank(1, 3) == 2
    assert fig5.rank(2, 1) == 1
    assert fig5.rank(2, 3) is None


def test_residents_at_rank(fig5):
    assert fig5.residents_at_rank(1, 1) == frozenset({(1, 1)})
    assert fig5.residents_at_rank(1, 3) == frozenset({(2, 1)})
    with pytest.raises(HrcError):
        fig5.residents_at_rank(1, 5)
    with pytest.raises(HrcError):
        fig5.residents_at_rank(2, 2)


def test_residents_at_rank_repeated_hospital():
    text = """\
hrc 1
singles 0
couples 1
hospitals 2
hospital 1 2
hospital 2 1
couple 1 2 : 1,2 1,1
pref 1 : 1 2
pref 2 : 2
"""
    inst = parse_instance(text)
    # Hospital 1 appears at both positions of resident 1's projected list.
    assert inst.residents_at_rank(1, 1) == frozenset({(1, 1), (1, 2)})


def test_empty_pref_hospital_every_query_errors():
    text = "hrc 1\nsingles 1\ncouples 0\nhospitals 2\nhospital 1 1\nhospital 2 1\nsingle 1 : 1\npref 1 : 1\npref 2 :\n"
    inst = parse_instance(text)
    for q in (1, 2):
        with pytest.raises(HrcError):
            inst.residents_at_rank(2, q)


def test_validate_fig5_clean(fig5):
    assert validate(fig5) == []


def test_validate_asymmetric():
    # Hospital 2 ranks r4, who does not list it.
    text = FIG5_TEXT.replace("pref 2 : 1", "pref 2 : 1 4")
    with pytest.raises(ValidationError, match="asymmetric"):
        parse_instance(text)


def test_validate_duplicate_pair():
    text = FIG5_TEXT.replace("couple 1 2 : 1,1 2,3", "couple 1 2 : 1,1 1,1")
    with pytest.raises(ValidationError, match="duplicate pair"):
        parse_instance(text)


def test_validate_warning_pair_at_capacity_one():
    text = """\
hrc 1
singles 0
couples 1
hospitals 2
hospital 1 1
hospital 2 1
couple 1 2 : 1,1 1,2
pref 1 : 1 2
pref 2 : 2
"""
    inst = parse_instance(text)  # warnings are non-fatal
    report = validate(inst)
    assert any(v.severity == "warning" and "(1,1)" in v.message for v in report)
    assert not any(v.severity == "error" for v in report)


def test_restriction_profile_fig5(fig5):
    prof = fig5.restriction_profile()
    assert (prof.alpha, prof.beta, prof.gamma) == (1, 2, 4)
    assert not prof.is_gamma1 and not prof.is_212


def test_gamma1_flag():
    text = "hrc 1\nsingles 2\ncouples 0\nhospitals 2\nhospital 1 1\nhospital 2 1\nsingle 1 : 1\nsingle 2 : 2\npref 1 : 1\npref 2 : 2\n"
    assert parse_instance(text).restriction_profile().is_gamma1


def test_roundtrip_fig5(fig5):
    text = serialize_instance(fig5)
    again = parse_instance(text)
    assert again == fig5
    assert serialize_instance(again) == text


@pytest.mark.parametrize("seed", range(25))
def test_roundtrip_random(seed):
    rng = random.Random(seed)
    params = GenParams(
        residents=rng.randrange(4, 14),
        couples=rng.randrange(0, 3),
        hospitals=rng.randrange(2, 5),
        posts=rng.randrange(4, 16),
        min_len=1,
        max_len=2,
        seed=seed,
    )
    try:
        params.check()
    except HrcError:
        pytest.skip("infeasible parameter draw")
    inst = random_instance(params)
    text = serialize_instance(inst)
    assert parse_instance(text) == inst


def test_matching_roundtrip(fig5, fig5_matching):
    text = serialize_matching(fig5, fig5_matching)
    again = parse_matching(fig5, text)
    assert again.positions == fig5_matching.positions


def test_matching_capacity_exceeded(fig5):
    text = "assign 1 1\nassign 2 1\nassign 3 1\nassign 4 -\n"
    with pytest.raises(MatchingError, match="capacity"):
        parse_matching(fig5, text)


def test_matching_couple_inconsistency(fig5):
    text = "assign 1 2\nassign 2 -\nassign 3 -\nassign 4 -\n"
    with pytest.raises(MatchingError, match="couple"):
        parse_matching(fig5, text)
    text = "assign 1 1\nassign 2 3\nassign 3 -\nassign 4 -\n"
    with pytest.raises(MatchingError, match="couple"):
        parse_matching(fig5, text)


def test_matching_unknown_ids(fig5):
    with pytest.raises(MatchingError, match="unknown"):
        parse_matching(fig5, "assign 9 1\n")
    with pytest.raises(MatchingError, match="unknown"):
        parse_matching(fig5, "assign 1 7\nassign 2 -\nassign 3 -\nassign 4 -\n")


def test_matching_missing_and_duplicate_lines(fig5):
    with pytest.raises(MatchingError, match="missing"):
        parse_matching(fig5, "assign 1 -\nassign 2 -\nassign 3 1\n")
    with pytest.raises(MatchingError, match="twice"):
        parse_matching(fig5, "assign 1 -\nassign 1 -\nassign 3 1\nassign 4 1\n")


def _mutate_matching_text(rng, inst, text):
    """Inject one violation into a valid matching file."""
    lines = text.strip().splitlines()
    kind = rng.choice(["capacity", "couple", "unknown_r", "unknown_h", "missing", "dup"])
    if kind == "capacity":
        # Send everyone to one hospital it finds acceptable, if that overflows.
        hid = rng.randrange(1, inst.n2 + 1)
        takers = [r for r in range(1, inst.n1 + 1) if hid in inst.indiv_pref(r)]
        if len(takers) <= inst.hospital(hid).capacity:
            return None
        out = []
        for r in range(1, inst.n1 + 1):
            out.append(f"assign {r} {hid if r in takers else '-'}")
        return "\n".join(out)
    if kind == "couple":
        if not inst.couples:
            return None
        cp = rng.choice(inst.couples)
        if not cp.joint_list:
            return None
        ha, _ = cp.joint_list[0]
        out = [f"assign {r} -" for r in range(1, inst.n1 + 1)]
        out[cp.member_a - 1] = f"assign {cp.member_a} {ha}"
        return "\n".join(out)
    if kind == "unknown_r":
        return text + f"assign {inst.n1 + 5} -\n"
    if kind == "unknown_h":
        return f"assign 1 {inst.n2 + 3}\n" + "\n".join(lines[1:])
    if kind == "missing":
        return "\n".join(lines[:-1]) if len(lines) > 1 else None
    return lines[0] + "\n" + text


@pytest.mark.parametrize("seed", range(40))
def test_mutated_matching_files_rejected(seed):
    rng = random.Random(seed)
    inst = random_instance(
        GenParams(residents=8, couples=2, hospitals=3, posts=8, min_len=1, max_len=3, seed=seed)
    )
    empty = Matching(inst, tuple(inst.list_len(r) + 1 for r in range(1, inst.n1 + 1)))
    text = serialize_matching(inst, empty)
    mutated = _mutate_matching_text(rng, inst, text)
    if mutated is None:
        pytest.skip("mutation not applicable to this draw")
    with pytest.raises((MatchingError, ParseError)):
        parse_matching(inst, mutated)


@pytest.mark.parametrize("seed", range(15))
def test_rank_and_rank_set_consistency(seed):
    inst = random_instance(
        GenParams(residents=10, couples=2, hospitals=4, posts=10, min_len=1, max_len=3, seed=seed)
    )
    for h in inst.hospitals:
        for q in range(1, len(h.pref_list) + 1):
            for rid, p in inst.residents_at_rank(h.id, q):
                assert inst.rank(h.id, rid) == q
                assert inst.indiv_pref(rid)[p - 1] == h.id
    for h in inst.hospitals:
        for rid in h.pref_list:
            q = inst.rank(h.id, rid)
            hits = {
                (r, p) for r, p in inst.residents_at_rank(h.id, q) if r == rid
            }
            expect = {
                (rid, p)
                for p, hh in enumerate(inst.indiv_pref(rid), 1)
                if hh == h.id
            }
            assert hits == expect

"""Shared test helpers: instance composition, id shuffling, exhaustive
matching enumeration."""

from hrcsolve import Couple, Hospital, Instance, Matching, SingleResident
from hrcsolve.stability import blocking_pairs


def disjoint_union(instances):
    """Combine instances over disjoint agent/hospital id spaces."""
    couples = []
    singles = []
    hospitals = []
    hosp_off = 0
    for inst in instances:
        total_c = sum(1 for _ in couples)
        res_map = {}
        for cp in inst.couples:
            new_index = total_c + cp.index
            res_map[cp.member_a] = 2 * new_index - 1
            res_map[cp.member_b] = 2 * new_index
            couples.append(
                Couple(
                    new_index,
                    tuple((a + hosp_off, b + hosp_off) for a, b in cp.joint_list),
                )
            )
        for s in inst.singles:
            res_map[s.id] = None  # filled after all couples are known
        hospitals.extend(
            Hospital(h.id + hosp_off, h.capacity, (inst, h.id))  # placeholder prefs
            for h in inst.hospitals
        )
        singles.append((inst, res_map, hosp_off))
        hosp_off += inst.n2

    # Assign single ids after the final couple count is known.
    base = 2 * len(couples)
    out_singles = []
    next_single = base + 1
    for inst, res_map, hoff in singles:
        for s in inst.singles:
            res_map[s.id] = next_single
            out_singles.append(
                SingleResident(next_single, tuple(h + hoff for h in s.pref_list))
            )
            next_single += 1

    out_hosps = []
    for h in hospitals:
        inst, orig_hid = h.pref_list
        for source, res_map, hoff in singles:
            if source is inst:
                prefs = tuple(res_map[r] for r in inst.hospital(orig_hid).pref_list)
                out_hosps.append(Hospital(h.id, h.capacity, prefs))
                break
    return Instance(
        singles=tuple(out_singles), couples=tuple(couples), hospitals=tuple(out_hosps)
    )


def shuffle_instance(inst, rng, flip_couples=True):
    """Semantically equivalent instance with permuted ids; couples may have
    their member order (and pair coordinates) flipped."""
    c = inst.num_couples
    couple_perm = list(range(1, c + 1))
    rng.shuffle(couple_perm)
    flips = {ci: flip_couples and rng.random() < 0.5 for ci in range(1, c + 1)}
    hosp_perm = list(range(1, inst.n2 + 1))
    rng.shuffle(hosp_perm)
    hosp_map = {old: new for old, new in zip(range(1, inst.n2 + 1), hosp_perm)}
    single_ids = [s.id for s in inst.singles]
    new_single_ids = list(single_ids)
    rng.shuffle(new_single_ids)

    res_map = {}
    for new_index, old_index in enumerate(couple_perm, 1):
        old = inst.couples[old_index - 1]
        if flips[old_index]:
            res_map[old.member_a] = 2 * new_index
            res_map[old.member_b] = 2 * new_index - 1
        else:
            res_map[old.member_a] = 2 * new_index - 1
            res_map[old.member_b] = 2 * new_index
    for old_id, new_id in zip(single_ids, new_single_ids):
        res_map[old_id] = new_id

    couples = []
    for new_index, old_index in enumerate(couple_perm, 1):
        old = inst.couples[old_index - 1]
        if flips[old_index]:
            pairs = tuple((hosp_map[b], hosp_map[a]) for a, b in old.joint_list)
        else:
            pairs = tuple((hosp_map[a], hosp_map[b]) for a, b in old.joint_list)
        couples.append(Couple(new_index, pairs))
    singles = sorted(
        (
            SingleResident(res_map[s.id], tuple(hosp_map[h] for h in s.pref_list))
            for s in inst.singles
        ),
        key=lambda s: s.id,
    )
    hospitals = sorted(
        (
            Hospital(hosp_map[h.id], h.capacity, tuple(res_map[r] for r in h.pref_list))
            for h in inst.hospitals
        ),
        key=lambda h: h.id,
    )
    return Instance(singles=tuple(singles), couples=tuple(couples), hospitals=tuple(hospitals))


def all_matchings(inst):
    """Yield every capacity-feasible matching (couple-consistent by build)."""
    agents = [("c", cp.index) for cp in inst.couples] + [("s", s.id) for s in inst.singles]
    coords = []
    for tag, ident in agents:
        if tag == "c":
            coords.append([(p[0], p[1]) for p in inst.couples[ident - 1].joint_list])
        else:
            coords.append([(h,) for h in inst.singles[ident - 2 * inst.num_couples - 1].pref_list])
    free = {h.id: h.capacity for h in inst.hospitals}
    positions = {}

    def rec(i):
        if i == len(agents):
            vec = [0] * inst.n1
            for (tag, ident), p in positions.items():
                if tag == "c":
                    vec[2 * ident - 2] = p
                    vec[2 * ident - 1] = p
                else:
                    vec[ident - 1] = p
            yield Matching(inst, tuple(vec))
            return
        for p, hs in enumerate(coords[i], 1):
            if all(free[h] >= sum(1 for x in hs if x == h) for h in set(hs)):
                for h in hs:
                    free[h] -= 1
                positions[agents[i]] = p
                yield from rec(i + 1)
                for h in hs:
                    free[h] += 1
        positions[agents[i]] = len(coords[i]) + 1
        yield from rec(i + 1)

    yield from rec(0)


def all_stable_matchings(inst, mode=None):
    from hrcsolve import StabilityMode

    mode = mode or StabilityMode.DEF1
    return [m for m in all_matchings(inst) if not blocking_pairs(inst, m, mode)]

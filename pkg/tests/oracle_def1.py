"""Independent literal transcription of the stability definition, used as a
cross-check oracle.  Deliberately naive: plain loops over agents, hospitals
and joint-list positions, no shared helpers with the package under test."""


def _assignees(inst, m, hid):
    return [rid for rid in range(1, inst.n1 + 1) if m.hospital_for(rid) == hid]


def _prefers_hospital(inst, hid, r_new, r_old):
    return inst.rank(hid, r_new) < inst.rank(hid, r_old)


def _undersubscribed(inst, m, hid):
    return len(_assignees(inst, m, hid)) < inst.hospital(hid).capacity


def _couple_prefers(cp, pair, m):
    """Does the couple prefer `pair` to its current joint assignment?"""
    cur_a = m.hospital_for(cp.member_a)
    cur_b = m.hospital_for(cp.member_b)
    if cur_a is None:
        return pair in cp.joint_list
    if pair not in cp.joint_list:
        return False
    return cp.joint_list.index(pair) < cp.joint_list.index((cur_a, cur_b))


def naive_blocking_records(inst, m, mode="def1"):
    """Set of (kind, agent, position) triples witnessing any condition."""
    out = set()

    # Condition 1: single resident with a hospital.
    for s in inst.singles:
        for hid in s.pref_list:
            cur = m.hospital_for(s.id)
            wants = cur is None or s.pref_list.index(hid) < s.pref_list.index(cur)
            if not wants:
                continue
            ok = _undersubscribed(inst, m, hid) or any(
                _prefers_hospital(inst, hid, s.id, other)
                for other in _assignees(inst, m, hid)
            )
            if ok:
                out.add(("single", s.id, s.pref_list.index(hid) + 1))

    for cp in inst.couples:
        ri, rj = cp.member_a, cp.member_b
        cur_i = m.hospital_for(ri)
        cur_j = m.hospital_for(rj)
        assigned = cur_i is not None

        # Condition 2: one member moves to h_k, the other stays put.
        if assigned:
            for hk in range(1, inst.n2 + 1):
                # (a): (h_k, M(r_j)) preferred, h_k takes r_i ignoring r_j.
                if _couple_prefers(cp, (hk, cur_j), m):
                    others = [r for r in _assignees(inst, m, hk) if r != rj]
                    if len(_assignees(inst, m, hk)) < inst.hospital(hk).capacity or any(
                        _prefers_hospital(inst, hk, ri, other) for other in others
                    ):
                        out.add(("couple", cp.index, cp.joint_list.index((hk, cur_j)) + 1))
                # (b): (M(r_i), h_k) preferred, h_k takes r_j ignoring r_i.
                if _couple_prefers(cp, (cur_i, hk), m):
                    others = [r for r in _assignees(inst, m, hk) if r != ri]
                    if len(_assignees(inst, m, hk)) < inst.hospital(hk).capacity or any(
                        _prefers_hospital(inst, hk, rj, other) for other in others
                    ):
                        out.add(("couple", cp.index, cp.joint_list.index((cur_i, hk)) + 1))

        # Condition 3: both members move to (h_k, h_l).
        for hk in range(1, inst.n2 + 1):
            for hl in range(1, inst.n2 + 1):
                if hk == cur_i or hl == cur_j:
                    continue
                if (hk, hl) not in cp.joint_list:
                    continue
                if not _couple_prefers(cp, (hk, hl), m):
                    continue
                position = cp.joint_list.index((hk, hl)) + 1
                if hk != hl:
                    ok_k = _undersubscribed(inst, m, hk) or any(
                        _prefers_hospital(inst, hk, ri, o) for o in _assignees(inst, m, hk)
                    )
                    ok_l = _undersubscribed(inst, m, hl) or any(
                        _prefers_hospital(inst, hl, rj, o) for o in _assignees(inst, m, hl)
                    )
                    if ok_k and ok_l:
                        out.add(("couple", cp.index, position))
                else:
                    occupants = _assignees(inst, m, hk)
                    cap = inst.hospital(hk).capacity
                    free = cap - len(occupants)
                    if free >= 2:
                        out.add(("couple", cp.index, position))
                    elif free == 1:
                        if any(
                            _prefers_hospital(inst, hk, ri, o)
                            or _prefers_hospital(inst, hk, rj, o)
                            for o in occupants
                        ):
                            out.add(("couple", cp.index, position))
                    else:
                        if mode == "def1":
                            hit = False
                            for rs in occupants:
                                for rt in occupants:
                                    if rs == rt:
                                        continue
                                    if _prefers_hospital(
                                        inst, hk, ri, rs
                                    ) and _prefers_hospital(inst, hk, rj, rt):
                                        hit = True
                            if hit:
                                out.add(("couple", cp.index, position))
                        else:
                            # willAccept: both members must be chosen from the
                            # pool of current assignees plus the couple.
                            pool = occupants + [ri, rj]
                            pool.sort(key=lambda r: inst.rank(hk, r))
                            chosen = set(pool[:cap])
                            if ri in chosen and rj in chosen:
                                out.add(("couple", cp.index, position))
    return out

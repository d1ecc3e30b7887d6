"""Blocking-pair enumeration and the hospital-preference predicates.

The default semantics enumerate exactly the seven blocking conditions of the
McDermid-Manlove stability definition (type 1 for singles; 2a/2b for a couple
keeping one member in place; 3a/3b/3c/3d for a couple moving both members).
The alternative ``WILL_ACCEPT`` mode swaps the full-hospital (h,h) test for
the choice-function criterion used by Drummond et al.; everything else is
identical, and the alternative is strictly more permissive there.
"""

from __future__ import annotations

import enum
from bisect import bisect_left
from dataclasses import dataclass

from .model import HrcError, Instance, Matching


class StabilityMode(enum.Enum):
    DEF1 = "def1"
    WILL_ACCEPT = "willaccept"


@dataclass(frozen=True, order=True)
class BlockingPair:
    """One blocking (agent, list-position) witness.

    ``agent`` is a resident id for kind "single" and a couple index for kind
    "couple"; ``labels`` collects every sub-condition the position satisfies.
    """

    kind: str  # "single" or "couple"
    agent: int
    position: int
    labels: frozenset = frozenset()

    def describe(self) -> str:
        types = "+".join(sorted(self.labels))
        return f"{self.kind} {self.agent} pos {self.position} type {types}"


def _occupancy_ranks(inst: Instance, m: Matching) -> list[list[int]]:
    """Sorted assignee ranks per hospital (index hid-1)."""
    occ: list[list[int]] = [[] for _ in range(inst.n2)]
    for rid in range(1, inst.n1 + 1):
        hid = m.hospital_for(rid)
        if hid is not None:
            occ[hid - 1].append(inst.rank(hid, rid))
    for ranks in occ:
        ranks.sort()
    return occ


def hosp_would_prefer(inst: Instance, m: Matching, hid: int, q: int) -> bool:
    """True iff q <= capacity, or fewer than capacity assignees are ranked better than q."""
    h = inst.hospital(hid)
    if not 1 <= q <= len(h.pref_list):
        raise HrcError(f"rank {q} out of range for hospital {hid}")
    if q <= h.capacity:
        return True
    better = sum(1 for rid in m.assignees(hid) if inst.rank(hid, rid) < q)
    return better < h.capacity


def hosp_would_prefer2(inst: Instance, m: Matching, hid: int, q: int) -> bool:
    """True iff fewer than capacity-1 assignees are ranked better than q."""
    h = inst.hospital(hid)
    if not 1 <= q <= len(h.pref_list):
        raise HrcError(f"rank {q} out of range for hospital {hid}")
    better = sum(1 for rid in m.assignees(hid) if inst.rank(hid, rid) < q)
    return better < h.capacity - 1


def hosp_would_prefer_exc_partner(
    inst: Instance, m: Matching, h1: int, h2: int, q1: int, q2: int
) -> bool:
    """The couple variant: when h1 == h2 and q1 < q2 the partner keeps a post,
    so one fewer slot is open; otherwise the plain capacity bound applies."""
    hosp1 = inst.hospital(h1)
    if not 1 <= q1 <= len(hosp1.pref_list):
        raise HrcError(f"rank {q1} out of range for hospital {h1}")
    if not 1 <= q2 <= len(inst.hospital(h2).pref_list):
        raise HrcError(f"rank {q2} out of range for hospital {h2}")
    better = sum(1 for rid in m.assignees(h1) if inst.rank(h1, rid) < q1)
    if h1 == h2 and q1 < q2:
        return better < hosp1.capacity - 1
    return better < hosp1.capacity


def blocking_pairs(
    inst: Instance, m: Matching, mode: StabilityMode = StabilityMode.DEF1
) -> frozenset:
    """All blocking (agent, position) records of m, with their condition labels."""
    occ = _occupancy_ranks(inst, m)
    out = []

    def count_better(hid, q):
        return bisect_left(occ[hid - 1], q)

    def undersub_or_prefers(hid, q):
        # Undersubscribed, or some assignee ranked worse than q.
        ranks = occ[hid - 1]
        return len(ranks) < inst.hospital(hid).capacity or (ranks and ranks[-1] > q)

    for s in inst.singles:
        p_cur = m.position_of(s.id)
        for p in range(1, p_cur):
            hid = s.pref_list[p - 1]
            if undersub_or_prefers(hid, inst.rank(hid, s.id)):
                out.append(BlockingPair("single", s.id, p, frozenset({"1"})))

    for cp in inst.couples:
        ra, rb = cp.member_a, cp.member_b
        p_cur = m.position_of(ra)
        assigned = p_cur <= len(cp.joint_list)
        cur = cp.joint_list[p_cur - 1] if assigned else (None, None)
        for p in range(1, p_cur):
            ha, hb = cp.joint_list[p - 1]
            qa = inst.rank(ha, ra)
            qb = inst.rank(hb, rb)
            labels = set()
            if assigned and hb == cur[1] and ha != cur[0]:
                # 2a: the even member stays put; does ha want the odd member,
                # not counting the partner's post?
                if ha == hb:
                    q_part = inst.rank(ha, rb)
                    better = count_better(ha, qa) - (1 if q_part < qa else 0)
                else:
                    better = count_better(ha, qa)
                if better < inst.hospital(ha).capacity - (1 if ha == hb else 0):
                    labels.add("2a")
            if assigned and ha == cur[0] and hb != cur[1]:
                if hb == ha:
                    q_part = inst.rank(hb, ra)
                    better = count_better(hb, qb) - (1 if q_part < qb else 0)
                else:
                    better = count_better(hb, qb)
                if better < inst.hospital(hb).capacity - (1 if hb == ha else 0):
                    labels.add("2b")
            if (not assigned) or (ha != cur[0] and hb != cur[1]):
                if ha != hb:
                    if undersub_or_prefers(ha, qa) and undersub_or_prefers(hb, qb):
                        labels.add("3a")
                else:
                    cap = inst.hospital(ha).capacity
                    ranks = occ[ha - 1]
                    free = cap - len(ranks)
                    q_min, q_max = min(qa, qb), max(qa, qb)
                    if free >= 2:
                        labels.add("3b")
                    elif free == 1:
                        if ranks and ranks[-1] > q_min:
                            labels.add("3c")
                    else:  # full
                        worse_min = len(ranks) - bisect_left(ranks, q_min)
                        worse_max = len(ranks) - bisect_left(ranks, q_max)
                        if mode is StabilityMode.DEF1:
                            if worse_min >= 2 and worse_max >= 1:
                                labels.add("3d")
                        else:
                            # willAccept: both members must survive the choice
                            # over current assignees plus the couple.
                            if worse_max >= 2:
                                labels.add("3d")
            if labels:
                out.append(BlockingPair("couple", cp.index, p, frozenset(labels)))

    return frozenset(out)


def blocking_pair_count(
    inst: Instance, m: Matching, mode: StabilityMode = StabilityMode.DEF1
) -> int:
    return len(blocking_pairs(inst, m, mode))


def is_stable(inst: Instance, m: Matching, mode: StabilityMode = StabilityMode.DEF1) -> bool:
    return not blocking_pairs(inst, m, mode)

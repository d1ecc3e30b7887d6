"""Fixed-assignment presolve and the polynomial special-case solvers.

A fixed assignment pairs an agent with its first choice when the hospital(s)
rank the agent(s) within their capacity; such pairs belong to every stable
matching, so they can be satisfied and deleted iteratively.  On instances
where every hospital lists at most one resident the whole instance dissolves
this way.  For the (2,1,2) restriction, what remains after presolve decomposes
into cyclic gadget components (one couple per "block", each followed by a
chain of singles over capacity-1 hospitals); a component admits a stable
matching exactly when its couple count is even, and admits a matching with a
single blocking pair otherwise.
"""

from __future__ import annotations

from bisect import insort
from collections import deque
from dataclasses import dataclass

from .model import (
    Couple,
    Hospital,
    HrcError,
    Instance,
    Matching,
    SingleResident,
)
from .stability import BlockingPair, blocking_pairs


@dataclass(frozen=True)
class FixedAssignment:
    kind: str  # "single" or "couple"
    agent: int  # resident id, or couple index
    target: object  # hospital id, or (hid, hid) pair

    def describe(self) -> str:
        if self.kind == "single":
            return f"single {self.agent} -> hospital {self.target}"
        return f"couple {self.agent} -> ({self.target[0]},{self.target[1]})"


def fixed_assignments(inst: Instance) -> list[FixedAssignment]:
    """First-level fixed assignments of the instance (no iteration)."""
    out = []
    for s in inst.singles:
        if s.pref_list:
            h = s.pref_list[0]
            q = inst.rank(h, s.id)
            if q is not None and q <= inst.hospital(h).capacity:
                out.append(FixedAssignment("single", s.id, h))
    for cp in inst.couples:
        if cp.joint_list:
            hp, hq = cp.joint_list[0]
            qa = inst.rank(hp, cp.member_a)
            qb = inst.rank(hq, cp.member_b)
            if (
                qa is not None
                and qb is not None
                and qa <= inst.hospital(hp).capacity
                and qb <= inst.hospital(hq).capacity
            ):
                out.append(FixedAssignment("couple", cp.index, (hp, hq)))
    return out


class _Reduction:
    """Mutable working copy used while satisfying fixed assignments."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self.single_lists = {s.id: list(s.pref_list) for s in inst.singles}
        self.couple_lists = {cp.index: list(cp.joint_list) for cp in inst.couples}
        self.hosp_lists = {h.id: list(h.pref_list) for h in inst.hospitals}
        self.cap_left = {h.id: h.capacity for h in inst.hospitals}
        self.open_hosps = set(self.hosp_lists)
        self.matched: dict[int, int] = {}
        self.dropped: set[int] = set()
        self.trace: list[FixedAssignment] = []

    def candidates(self) -> list[FixedAssignment]:
        out = []
        for rid in sorted(self.single_lists):
            lst = self.single_lists[rid]
            if lst:
                h = lst[0]
                pos = self.hosp_lists[h].index(rid)
                if pos < self.cap_left[h]:
                    out.append(FixedAssignment("single", rid, h))
        for ci in sorted(self.couple_lists):
            lst = self.couple_lists[ci]
            if lst:
                hp, hq = lst[0]
                ra, rb = 2 * ci - 1, 2 * ci
                pa = self.hosp_lists[hp].index(ra)
                pb = self.hosp_lists[hq].index(rb)
                if pa < self.cap_left[hp] and pb < self.cap_left[hq]:
                    out.append(FixedAssignment("couple", ci, (hp, hq)))
        return out

    def satisfy(self, fa: FixedAssignment) -> None:
        self.trace.append(fa)
        if fa.kind == "single":
            rid, h = fa.agent, fa.target
            self.matched[rid] = h
            for g in self.single_lists.pop(rid):
                if g in self.open_hosps:
                    self._remove_from_hospital(g, rid)
            self._take_post(h, 1)
        else:
            ci = fa.agent
            hp, hq = fa.target
            ra, rb = 2 * ci - 1, 2 * ci
            self.matched[ra] = hp
            self.matched[rb] = hq
            pairs = self.couple_lists.pop(ci)
            for member, coord in ((ra, 0), (rb, 1)):
                for g in {p[coord] for p in pairs}:
                    if g in self.open_hosps:
                        self._remove_from_hospital(g, member)
            if hp == hq:
                self._take_post(hp, 2)
            else:
                self._take_post(hp, 1)
                self._take_post(hq, 1)

    def _remove_from_hospital(self, hid: int, rid: int) -> None:
        lst = self.hosp_lists[hid]
        if rid in lst:
            lst.remove(rid)

    def _take_post(self, hid: int, count: int) -> None:
        self.cap_left[hid] -= count
        if self.cap_left[hid] == 0:
            self._close_hospital(hid)

    def _close_hospital(self, hid: int) -> None:
        self.open_hosps.discard(hid)
        self.hosp_lists[hid] = []
        for rid in list(self.single_lists):
            lst = self.single_lists[rid]
            if hid in lst:
                lst.remove(hid)
                if not lst:
                    self._drop_single(rid)
        for ci in list(self.couple_lists):
            pairs = self.couple_lists[ci]
            if any(hid in p for p in pairs):
                kept = [p for p in pairs if hid not in p]
                ra, rb = 2 * ci - 1, 2 * ci
                for member, coord in ((ra, 0), (rb, 1)):
                    before = {p[coord] for p in pairs}
                    after = {p[coord] for p in kept}
                    for g in before - after:
                        if g in self.open_hosps:
                            self._remove_from_hospital(g, member)
                self.couple_lists[ci] = kept
                if not kept:
                    self._drop_couple(ci)

    def _drop_single(self, rid: int) -> None:
        # List emptied: every acceptable hospital filled, so rid is
        # permanently unassigned (it no longer appears on any open list).
        del self.single_lists[rid]
        self.dropped.add(rid)

    def _drop_couple(self, ci: int) -> None:
        del self.couple_lists[ci]
        ra, rb = 2 * ci - 1, 2 * ci
        self.dropped.update((ra, rb))
        for g in self.open_hosps:
            lst = self.hosp_lists[g]
            if ra in lst:
                lst.remove(ra)
            if rb in lst:
                lst.remove(rb)

    def run(self, choose=None) -> None:
        while True:
            cands = self.candidates()
            if not cands:
                return
            self.satisfy(choose(cands) if choose else cands[0])


@dataclass(frozen=True)
class PresolveResult:
    instance: Instance
    matched: dict  # original rid -> hid
    dropped: frozenset  # original rids that can never be assigned
    trace: tuple  # FixedAssignment records in satisfaction order
    reduced: Instance
    red_res_to_orig: tuple  # reduced rid (1-based) -> original rid
    red_hosp_to_orig: tuple

    def matching0(self) -> Matching:
        return Matching.from_assignments(self.instance, dict(self.matched))

    def extend(self, reduced_matching: Matching) -> Matching:
        """Lift a matching of the reduced instance back to the original."""
        assigned = dict(self.matched)
        red = self.reduced
        for rid in range(1, red.n1 + 1):
            hid = reduced_matching.hospital_for(rid)
            if hid is not None:
                assigned[self.red_res_to_orig[rid - 1]] = self.red_hosp_to_orig[hid - 1]
        return Matching.from_assignments(self.instance, assigned)


def satisfy_iteratively(inst: Instance, choose=None) -> PresolveResult:
    """Satisfy every exposed fixed assignment; returns M0, the reduced instance
    (ids renumbered), and translation maps back to the original ids."""
    red = _Reduction(inst)
    red.run(choose)

    live_couples = sorted(red.couple_lists)
    live_singles = sorted(red.single_lists)
    live_hosps = sorted(red.open_hosps)
    hosp_map = {orig: new for new, orig in enumerate(live_hosps, 1)}
    res_map: dict[int, int] = {}
    for new_ci, orig_ci in enumerate(live_couples, 1):
        res_map[2 * orig_ci - 1] = 2 * new_ci - 1
        res_map[2 * orig_ci] = 2 * new_ci
    base = 2 * len(live_couples)
    for k, rid in enumerate(live_singles, 1):
        res_map[rid] = base + k

    couples = tuple(
        Couple(
            new_ci,
            tuple((hosp_map[a], hosp_map[b]) for a, b in red.couple_lists[orig_ci]),
        )
        for new_ci, orig_ci in enumerate(live_couples, 1)
    )
    singles = tuple(
        SingleResident(base + k, tuple(hosp_map[h] for h in red.single_lists[rid]))
        for k, rid in enumerate(live_singles, 1)
    )
    hospitals = tuple(
        Hospital(
            hosp_map[h],
            red.cap_left[h],
            tuple(res_map[r] for r in red.hosp_lists[h]),
        )
        for h in live_hosps
    )
    reduced = Instance(singles=singles, couples=couples, hospitals=hospitals)

    red_res_to_orig = [0] * reduced.n1
    for orig, new in res_map.items():
        red_res_to_orig[new - 1] = orig

    return PresolveResult(
        instance=inst,
        matched=dict(red.matched),
        dropped=frozenset(red.dropped),
        trace=tuple(red.trace),
        reduced=reduced,
        red_res_to_orig=tuple(red_res_to_orig),
        red_hosp_to_orig=tuple(live_hosps),
    )


def solve_gamma1(inst: Instance) -> Matching:
    """The unique stable matching when every hospital lists at most one resident:
    everyone is assigned to his (their) first choice."""
    if not inst.restriction_profile().is_gamma1:
        raise HrcError("not gamma-1: some hospital lists more than one resident")
    positions = []
    for rid in range(1, inst.n1 + 1):
        positions.append(1 if inst.list_len(rid) >= 1 else inst.list_len(rid) + 1)
    return Matching(inst, tuple(positions))


# -- (2,1,2) ---------------------------------------------------------------


@dataclass(frozen=True)
class Fig2Block:
    couple: int  # couple index
    first_member: int  # member entering at entry_hospital
    second_member: int
    entry_hospital: int
    exit_hospital: int
    singles: tuple  # chain following the couple, in order
    single_hospitals: tuple  # each single's second-choice hospital


@dataclass(frozen=True)
class Figure2Component:
    blocks: tuple  # Fig2Block per couple, in cycle order
    closing_hospital: int  # first block's entry hospital

    @property
    def couple_count(self) -> int:
        return len(self.blocks)


def _components(inst: Instance) -> list[tuple[list, list, list]]:
    """Connected components of the acceptability graph, as
    (couple indices, single ids, hospital ids) triples."""
    parent: dict = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for cp in inst.couples:
        parent.setdefault(("c", cp.index), ("c", cp.index))
    for s in inst.singles:
        parent.setdefault(("s", s.id), ("s", s.id))
    for h in inst.hospitals:
        parent.setdefault(("h", h.id), ("h", h.id))
    for cp in inst.couples:
        for a, b in cp.joint_list:
            union(("c", cp.index), ("h", a))
            union(("c", cp.index), ("h", b))
    for s in inst.singles:
        for h in s.pref_list:
            union(("s", s.id), ("h", h))

    groups: dict = {}
    for node in parent:
        groups.setdefault(find(node), []).append(node)
    out = []
    for members in groups.values():
        couples = sorted(i for k, i in members if k == "c")
        singles = sorted(i for k, i in members if k == "s")
        hosps = sorted(i for k, i in members if k == "h")
        if couples or singles:
            out.append((couples, singles, hosps))
    out.sort()
    return out


def _walk_component(inst: Instance, couples: list, singles: list, hosps: list) -> Figure2Component:
    """Verify one component against the cyclic gadget shape and extract it."""

    def fail(msg):
        raise HrcError(f"not a valid (2,1,2) component: {msg}")

    single_set = set(singles)
    couple_set = set(couples)
    for h in hosps:
        hosp = inst.hospital(h)
        if hosp.capacity != 1:
            fail(f"hospital {h} has capacity {hosp.capacity} (expected 1)")
        if len(hosp.pref_list) != 2:
            fail(f"hospital {h} lists {len(hosp.pref_list)} residents (expected 2)")
    for rid in singles:
        if inst.list_len(rid) != 2:
            fail(f"single {rid} lists {inst.list_len(rid)} hospitals (expected 2)")
    for ci in couples:
        if len(inst.couples[ci - 1].joint_list) != 1:
            fail(f"couple {ci} lists {len(inst.couples[ci - 1].joint_list)} pairs (expected 1)")
        a, b = inst.couples[ci - 1].joint_list[0]
        if a == b:
            fail(f"couple {ci} lists pair ({a},{a})")
    if not couples:
        fail("component has no couple")

    def orient(ci):
        cp = inst.couples[ci - 1]
        pa, pb = cp.joint_list[0]
        if inst.rank(pb, cp.member_b) == 2:
            return cp.member_a, cp.member_b, pa, pb  # first, second, entry, exit
        if inst.rank(pa, cp.member_a) == 2:
            return cp.member_b, cp.member_a, pb, pa
        fail(f"couple {ci}: neither coordinate hospital ranks its member second")

    start = couples[0]
    hosp_set = set(hosps)
    first0, second0, entry0, exit0 = orient(start)
    blocks = []
    seen_couples = {start}
    seen_singles: set = set()
    seen_hosps: set = set()

    cur_couple, cur_first, cur_second = start, first0, second0
    cur_entry, cur_exit = entry0, exit0
    h = cur_exit
    prev = cur_second
    chain: list = []
    chain_h: list = []

    while True:
        if h not in hosp_set:
            fail(f"hospital {h} not in component")
        if h in seen_hosps:
            fail(f"hospital {h} revisited")
        seen_hosps.add(h)
        lst = inst.hospital(h).pref_list
        if lst[1] != prev:
            fail(f"hospital {h} should rank resident {prev} second, ranks {lst[1]}")
        x = lst[0]
        if x in single_set:
            if x in seen_singles:
                fail(f"single {x} revisited")
            seen_singles.add(x)
            prefs = inst.indiv_pref(x)
            if prefs[1] != h:
                fail(f"single {x} should rank hospital {h} second")
            chain.append(x)
            chain_h.append(h)
            h = prefs[0]
            prev = x
        elif inst.is_couple_member(x):
            ci = (x + 1) // 2
            if ci not in couple_set:
                fail(f"couple {ci} not in component")
            if ci == start:
                if x != first0 or h != entry0:
                    fail(
                        f"cycle closes at hospital {h} via resident {x}, expected "
                        f"resident {first0} at hospital {entry0}"
                    )
                blocks.append(
                    Fig2Block(
                        cur_couple, cur_first, cur_second, cur_entry, cur_exit,
                        tuple(chain), tuple(chain_h),
                    )
                )
                break
            if ci in seen_couples:
                fail(f"couple {ci} revisited")
            seen_couples.add(ci)
            nf, ns, nentry, nexit = orient(ci)
            if x != nf or nentry != h:
                fail(f"hospital {h} ranks {x} first but couple {ci} does not enter there")
            blocks.append(
                Fig2Block(
                    cur_couple, cur_first, cur_second, cur_entry, cur_exit,
                    tuple(chain), tuple(chain_h),
                )
            )
            cur_couple, cur_first, cur_second = ci, nf, ns
            cur_entry, cur_exit = nentry, nexit
            h = cur_exit
            prev = cur_second
            chain = []
            chain_h = []
        else:
            fail(f"hospital {h} ranks unknown resident {x} first")

    if seen_couples != couple_set:
        fail(f"couples {sorted(couple_set - seen_couples)} not reachable on the cycle")
    if seen_singles != single_set:
        fail(f"singles {sorted(single_set - seen_singles)} not reachable on the cycle")
    if seen_hosps != hosp_set:
        fail(f"hospitals {sorted(hosp_set - seen_hosps)} not reachable on the cycle")
    return Figure2Component(blocks=tuple(blocks), closing_hospital=entry0)


def decompose_212(inst: Instance) -> list[Figure2Component]:
    """Partition a fixed-assignment-free (2,1,2) instance into gadget components."""
    profile = inst.restriction_profile()
    if not profile.is_212:
        raise HrcError(
            f"not (2,1,2): profile is ({profile.alpha},{profile.beta},{profile.gamma})"
        )
    remaining = fixed_assignments(inst)
    if remaining:
        raise HrcError(f"fixed assignments remain: {remaining[0].describe()}")
    return [
        _walk_component(inst, couples, singles, hosps)
        for couples, singles, hosps in _components(inst)
    ]


def _deferred_acceptance(inst: Instance, singles: list, hosps: list) -> dict:
    """Resident-proposing deferred acceptance on a couple-free sub-instance."""
    next_prop = {rid: 0 for rid in singles}
    held: dict[int, list] = {h: [] for h in hosps}  # sorted (rank, rid)
    free = deque(sorted(singles))
    hosp_set = set(hosps)
    while free:
        rid = free.popleft()
        prefs = inst.indiv_pref(rid)
        while next_prop[rid] < len(prefs):
            h = prefs[next_prop[rid]]
            next_prop[rid] += 1
            if h not in hosp_set:
                continue
            insort(held[h], (inst.rank(h, rid), rid))
            if len(held[h]) > inst.hospital(h).capacity:
                _, rejected = held[h].pop()
                if rejected == rid:
                    continue
                free.append(rejected)
            break
    out = {}
    for h, ranked in held.items():
        for _, rid in ranked:
            out[rid] = h
    return out


def _component_assignments(comp: Figure2Component) -> dict:
    """Most-stable assignment of one gadget component (resident -> hospital).

    Odd-indexed blocks take their couple's pair and send the chain singles to
    their first choices; even-indexed blocks leave the couple unassigned and
    send the singles to their second choices, freeing the chain-end hospital
    for the next couple.  With an odd couple count the final block instead
    keeps its couple (when it has a chain) and sacrifices the last chain
    single, which yields exactly one blocking pair.
    """
    n = comp.couple_count
    odd = n % 2 == 1
    out: dict[int, int] = {}

    def first_choice(block, k, i):
        if i + 1 < len(block.singles):
            return block.single_hospitals[i + 1]
        return comp.blocks[k].entry_hospital if k < n else comp.closing_hospital

    for k, block in enumerate(comp.blocks, 1):
        if odd and k == n:
            if block.singles:
                out[block.first_member] = block.entry_hospital
                out[block.second_member] = block.exit_hospital
                for i, rid in enumerate(block.singles[:-1]):
                    out[rid] = first_choice(block, k, i)
            # With no chain the final couple stays unassigned.
        elif k % 2 == 1:
            out[block.first_member] = block.entry_hospital
            out[block.second_member] = block.exit_hospital
            for i, rid in enumerate(block.singles):
                out[rid] = first_choice(block, k, i)
        else:
            for i, rid in enumerate(block.singles):
                out[rid] = block.single_hospitals[i]
    return out


def solve_212(inst: Instance):
    """Most-stable matching for a (2,1,2) instance: presolve, decompose, then
    per component the parity construction.  Returns (matching, blocking set);
    the blocking set has one pair per odd component."""
    profile = inst.restriction_profile()
    if not profile.is_212:
        raise HrcError(
            f"not (2,1,2): profile is ({profile.alpha},{profile.beta},{profile.gamma})"
        )
    pres = satisfy_iteratively(inst)
    red = pres.reduced
    assigned: dict[int, int] = {}
    odd_components = 0
    for couples, singles, hosps in _components(red):
        if not couples:
            assigned.update(_deferred_acceptance(red, singles, hosps))
            continue
        comp = _walk_component(red, couples, singles, hosps)
        if comp.couple_count % 2 == 1:
            odd_components += 1
        assigned.update(_component_assignments(comp))
    red_matching = Matching.from_assignments(red, assigned)
    full = pres.extend(red_matching)
    bps = blocking_pairs(inst, full)
    assert len(bps) == odd_components, (
        f"parity construction produced {len(bps)} blocking pairs, "
        f"expected {odd_components}"
    )
    return full, bps

"""Exact search for maximum-cardinality most-stable matchings.

The solver deepens iteratively on the number of permitted blocking pairs
k = 0, 1, 2, ...  Each level runs a complete depth-first search over
per-agent position variables (couples choose a joint position, singles a
list position, both with an unassigned sentinel).  A position strictly
better than an agent's final one must not block; "not blocking" always
reduces to clauses over monotone literals -- "hospital h ends with at least
c assignees ranked better than q", occupancy bounds, and "agent a ends at
position <= p" -- which admit cheap propagation: impossible literals prune,
tight fill requirements force residents into hospitals.

At level 0 the full implication set for singles and for one-pair couples is
posted up front (their not-block form does not depend on where the agent
lands), which lets unit propagation drive the search; other implications
are added lazily when an agent is placed.  At levels k >= 1 each candidate
blocking pair is branched on: either its not-block clause is added or one
unit of budget is spent.

Level 0 also pins the iteratively satisfied fixed assignments (they belong
to every stable matching); deeper levels revert to free domains since a
most-stable matching may sacrifice a fixed assignment.  After the minimum
k* is known, a second search maximises the matching size subject to at most
k* blocking pairs, and a final static-order pass extracts the
lexicographically smallest optimal assignment vector.
"""

from __future__ import annotations

import time
from bisect import bisect_left, insort
from dataclasses import dataclass, field
from itertools import combinations

from .model import HrcError, Instance, Matching
from .preprocess import satisfy_iteratively, solve_gamma1, solve_212
from .stability import StabilityMode, blocking_pairs

_INF = 1 << 30

# Literal kinds for the requirement store.
_FILL = 0  # >= c assignees ranked better than q at hospital h
_OCC = 1  # >= c assignees at hospital h
_OCCMAX = 2  # <= c assignees at hospital h
_POSLTE = 3  # agent a ends at position <= p


class SolveTimeout(HrcError):
    """Raised when the deadline passes; solve returns the incumbent instead."""


class BpBoundExceeded(HrcError):
    """No matching within the requested blocking-pair cap."""


@dataclass
class SolveOptions:
    mode: StabilityMode = StabilityMode.DEF1
    max_bp_bound: int | None = None
    enable_presolve: bool = True
    # Enumerate candidate blocking sets at levels 1..2 and solve each as a
    # pure stability problem with those pairs exempted; off above level 2
    # (combinatorial blowup), where the in-search budget branching takes over.
    enable_blocking_set_presolve: bool = True
    enable_dispatch: bool = True
    time_limit: float | None = None
    seed: int = 0


@dataclass
class SolveStats:
    nodes: int = 0
    wall_ms: float = 0.0
    levels: int = 0
    presolve_fixed: int = 0
    presolve_dropped: int = 0
    dispatched: str = ""


@dataclass
class Solution:
    matching: Matching
    bp_set: frozenset
    bp_count: int
    size: int
    stats: SolveStats = field(default_factory=SolveStats)
    optimal: bool = True
    mode: StabilityMode = StabilityMode.DEF1


class _Timeout(Exception):
    pass


class _Tables:
    """Immutable per-(instance, order) search tables, shared across engines."""

    def __init__(self, inst: Instance, order: list):
        self.inst = inst
        self.order = order
        self.A = len(order)
        self.kind = []
        self.members = []
        self.L = []
        self.positions = []  # per agent, per 0-based pos: (h,q) or (hA,qA,hB,qB)
        for tag, ident in order:
            if tag == "c":
                cp = inst.couples[ident - 1]
                self.kind.append(0)
                self.members.append(2)
                self.L.append(len(cp.joint_list))
                self.positions.append(
                    tuple(
                        (a, inst.rank(a, cp.member_a), b, inst.rank(b, cp.member_b))
                        for a, b in cp.joint_list
                    )
                )
            else:
                s = inst.singles[ident - (2 * inst.num_couples) - 1]
                self.kind.append(1)
                self.members.append(1)
                self.L.append(len(s.pref_list))
                self.positions.append(
                    tuple((h, inst.rank(h, s.id)) for h in s.pref_list)
                )

        n2 = inst.n2
        self.cap = [inst.hospital(h).capacity for h in range(1, n2 + 1)]
        # Static per-hospital candidate tables.
        self.hpos = [[] for _ in range(n2)]  # (agent, pos, demand, ranks)
        self.hcand = [[] for _ in range(n2)]  # (rank, agent, pos, slot)
        for a in range(self.A):
            for p0, coords in enumerate(self.positions[a]):
                if self.kind[a] == 1:
                    h, q = coords
                    self.hpos[h - 1].append((a, p0 + 1, 1, (q,)))
                    self.hcand[h - 1].append((q, a, p0 + 1, 0))
                else:
                    hA, qA, hB, qB = coords
                    if hA == hB:
                        self.hpos[hA - 1].append((a, p0 + 1, 2, (qA, qB)))
                    else:
                        self.hpos[hA - 1].append((a, p0 + 1, 1, (qA,)))
                        self.hpos[hB - 1].append((a, p0 + 1, 1, (qB,)))
                    self.hcand[hA - 1].append((qA, a, p0 + 1, 0))
                    self.hcand[hB - 1].append((qB, a, p0 + 1, 1))
        for lst in self.hcand:
            lst.sort()


class _Engine:
    """One complete search over a fixed instance, stability mode and budget."""

    def __init__(
        self,
        tables: _Tables,
        mode: StabilityMode,
        deadline=None,
        presets: dict | None = None,
    ):
        self.tables = tables
        self.inst = tables.inst
        self.mode = mode
        self.deadline = deadline
        self.nodes = 0
        inst = self.inst

        self.order = tables.order
        self.A = tables.A
        self.kind = tables.kind
        self.members = tables.members
        self.L = tables.L
        self.positions = tables.positions
        n2 = inst.n2
        self.cap = tables.cap
        self.hpos = tables.hpos
        self.hcand = tables.hcand
        order = tables.order

        # Mutable search state.
        self.pos = [0] * self.A  # 0 = undecided, else 1..L+1
        self.dom = [bytearray() for _ in range(self.A)]
        self.live = [0] * self.A
        self.live_assign = [0] * self.A
        for a in range(self.A):
            d = bytearray(self.L[a] + 2)
            for p in range(1, self.L[a] + 2):
                d[p] = 1
            self.dom[a] = d
            self.live[a] = self.L[a] + 1
            self.live_assign[a] = self.L[a]
        self.occ = [[] for _ in range(n2)]  # sorted assignee ranks
        self.full_q = [_INF] * n2
        self.cm1_q = [_INF] * n2
        self.occ_min = [0] * n2
        self.occ_max = list(self.cap)
        self.clauses = []  # [active, lits]
        self.hclauses = [[] for _ in range(n2)]
        self.aclauses = [[] for _ in range(self.A)]
        self.trail = []
        self.assigned_members = 0
        self.total_caps = sum(self.cap)
        self.unassigned_potential = sum(
            self.members[a] for a in range(self.A) if self.L[a] > 0
        )

        # Pinned agents (fixed assignments at level 0): collapse their domains
        # permanently; the search still "assigns" them, so their occupancy and
        # their skipped positions' constraints take effect exactly as usual.
        if presets:
            index_of = {key: i for i, key in enumerate(order)}
            for key, P in presets.items():
                a = index_of[key]
                for p in range(1, self.L[a] + 2):
                    if p != P and self.dom[a][p]:
                        self.dom[a][p] = 0
                        self.live[a] -= 1
                        if p <= self.L[a]:
                            self.live_assign[a] -= 1
                if P > self.L[a] and self.L[a] > 0:
                    self.unassigned_potential -= self.members[a]

    # -- trail ---------------------------------------------------------------

    def _mark(self):
        return len(self.trail)

    def _undo(self, mark):
        trail = self.trail
        while len(trail) > mark:
            op = trail.pop()
            tag = op[0]
            if tag == "d":
                _, a, p = op
                self.dom[a][p] = 1
                self.live[a] += 1
                if p <= self.L[a]:
                    self.live_assign[a] += 1
            elif tag == "p":
                self.pos[op[1]] = 0
            elif tag == "o":
                _, h, rank = op
                self.occ[h - 1].remove(rank)
            elif tag == "fq":
                self.full_q[op[1]] = op[2]
            elif tag == "mq":
                self.cm1_q[op[1]] = op[2]
            elif tag == "on":
                self.occ_min[op[1]] = op[2]
            elif tag == "ox":
                self.occ_max[op[1]] = op[2]
            elif tag == "cl":
                _, lits = self.clauses.pop()
                for lit in lits:
                    self._watchers(lit).pop()
            elif tag == "cs":
                self.clauses[op[1]][0] = True
            elif tag == "am":
                self.assigned_members -= op[1]
            elif tag == "up":
                self.unassigned_potential -= op[1]

    def _watchers(self, lit):
        if lit[0] == _POSLTE:
            return self.aclauses[lit[1]]
        return self.hclauses[lit[1] - 1]

    # -- literals ------------------------------------------------------------

    def _fill_pot(self, h, q):
        """Upper bound on distinct extra residents assignable to h better than
        rank q: sum over undecided agents of their best single-position
        contribution (exact per agent, so tight enough to force)."""
        best: dict = {}
        pos = self.pos
        dom = self.dom
        for rank, a, p, _slot in self.hcand[h - 1]:
            if rank >= q:
                break
            if pos[a] == 0 and dom[a][p]:
                key = (a, p)
                best[key] = best.get(key, 0) + 1
        per_agent: dict = {}
        for (a, _p), cnt in best.items():
            if cnt > per_agent.get(a, 0):
                per_agent[a] = cnt
        return sum(per_agent.values()), per_agent

    def _any_pot(self, h):
        per_pos: dict = {}
        pos = self.pos
        dom = self.dom
        for _rank, a, p, _slot in self.hcand[h - 1]:
            if pos[a] == 0 and dom[a][p]:
                key = (a, p)
                per_pos[key] = per_pos.get(key, 0) + 1
        per_agent: dict = {}
        for (a, _p), cnt in per_pos.items():
            if cnt > per_agent.get(a, 0):
                per_agent[a] = cnt
        return sum(per_agent.values())

    def _eval_lit(self, lit):
        """1 = satisfied in every completion, -1 = violated in every completion."""
        kind = lit[0]
        if kind == _POSLTE:
            _, a, p = lit
            if self.pos[a]:
                return 1 if self.pos[a] <= p else -1
            dom = self.dom[a]
            low = any(dom[pp] for pp in range(1, p + 1))
            if not low:
                return -1
            high = any(dom[pp] for pp in range(p + 1, self.L[a] + 2))
            return 0 if high else 1
        _, h, q, c = lit
        occ = self.occ[h - 1]
        cur = len(occ)
        if kind == _FILL:
            if c <= 0:
                return 1
            cur_b = bisect_left(occ, q)
            if cur_b >= c:
                return 1
            pot, _ = self._fill_pot(h, q)
            if cur_b + min(pot, self.cap[h - 1] - cur) < c:
                return -1
            return 0
        if kind == _OCC:
            if c <= 0 or cur >= c:
                return 1
            if cur + min(self._any_pot(h), self.cap[h - 1] - cur) < c:
                return -1
            return 0
        # _OCCMAX
        if cur > c:
            return -1
        if cur + min(self._any_pot(h), self.cap[h - 1] - cur) <= c:
            return 1
        return 0

    # -- propagation ---------------------------------------------------------

    def _prune(self, a, p, hq, aq) -> bool:
        if not self.dom[a][p]:
            return True
        self.dom[a][p] = 0
        self.live[a] -= 1
        self.trail.append(("d", a, p))
        if p <= self.L[a]:
            self.live_assign[a] -= 1
            if self.live_assign[a] == 0 and self.pos[a] == 0:
                self.unassigned_potential -= self.members[a]
                self.trail.append(("up", -self.members[a]))
            coords = self.positions[a][p - 1]
            hq.add(coords[0])
            if self.kind[a] == 0:
                hq.add(coords[2])
        if self.aclauses[a]:
            aq.add(a)
        if self.live[a] == 0 and self.pos[a] == 0:
            return False
        return True

    def _add_unit(self, lit, hq, aq) -> bool:
        kind = lit[0]
        if kind == _POSLTE:
            _, a, p = lit
            if self.pos[a]:
                return self.pos[a] <= p
            for pp in range(p + 1, self.L[a] + 2):
                if self.dom[a][pp]:
                    if not self._prune(a, pp, hq, aq):
                        return False
            return True
        _, h, q, c = lit
        j = h - 1
        if kind == _FILL:
            if c <= 0:
                return True
            if c >= self.cap[j]:
                if q < self.full_q[j]:
                    self.trail.append(("fq", j, self.full_q[j]))
                    self.full_q[j] = q
                    hq.add(h)
            else:
                if q < self.cm1_q[j]:
                    self.trail.append(("mq", j, self.cm1_q[j]))
                    self.cm1_q[j] = q
                    hq.add(h)
        elif kind == _OCC:
            if c > self.occ_min[j]:
                self.trail.append(("on", j, self.occ_min[j]))
                self.occ_min[j] = c
                hq.add(h)
        else:
            if c < self.occ_max[j]:
                self.trail.append(("ox", j, self.occ_max[j]))
                self.occ_max[j] = c
                hq.add(h)
        return True

    def _add_clause(self, lits, hq, aq) -> bool:
        """Add a disjunction after simplification; returns False on conflict."""
        pending = []
        for lit in lits:
            st = self._eval_lit(lit)
            if st == 1:
                return True
            if st == 0:
                pending.append(lit)
        if not pending:
            return False
        if len(pending) == 1:
            return self._add_unit(pending[0], hq, aq)
        idx = len(self.clauses)
        self.clauses.append([True, tuple(pending)])
        for lit in pending:
            self._watchers(lit).append(idx)
        self.trail.append(("cl", idx))
        for lit in pending:
            if lit[0] == _POSLTE:
                aq.add(lit[1])
            else:
                hq.add(lit[1])
        return True

    def _add_part(self, part, hq, aq) -> bool:
        if part[0] == "u":
            lit = part[1]
            st = self._eval_lit(lit)
            if st == 1:
                return True
            if st == -1:
                return False
            return self._add_unit(lit, hq, aq)
        return self._add_clause(part[1:], hq, aq)

    def _scan_clauses(self, indices, hq, aq) -> bool:
        for idx in indices:
            cl = self.clauses[idx]
            if not cl[0]:
                continue
            pending = None
            satisfied = False
            dead = 0
            for lit in cl[1]:
                st = self._eval_lit(lit)
                if st == 1:
                    satisfied = True
                    break
                if st == -1:
                    dead += 1
                else:
                    pending = lit
            if satisfied:
                cl[0] = False
                self.trail.append(("cs", idx))
                continue
            live = len(cl[1]) - dead
            if live == 0:
                return False
            if live == 1:
                cl[0] = False
                self.trail.append(("cs", idx))
                if not self._add_unit(pending, hq, aq):
                    return False
        return True

    def _check_agent(self, a, hq, aq) -> bool:
        return self._scan_clauses(list(self.aclauses[a]), hq, aq)

    def _check_hospital(self, h, hq, aq) -> bool:
        j = h - 1
        occ = self.occ[j]
        cur = len(occ)
        maxocc = min(self.cap[j], self.occ_max[j])
        if cur > maxocc:
            return False
        free = maxocc - cur
        for a, p, demand, _ranks in self.hpos[j]:
            if demand > free and self.pos[a] == 0 and self.dom[a][p]:
                if not self._prune(a, p, hq, aq):
                    return False
        if self.occ_min[j] > maxocc:
            return False
        if self.occ_min[j] > cur:
            if cur + min(self._any_pot(h), self.cap[j] - cur) < self.occ_min[j]:
                return False
        for cstar, qstar in ((self.cap[j], self.full_q[j]), (self.cap[j] - 1, self.cm1_q[j])):
            if qstar >= _INF or cstar <= 0:
                continue
            cur_b = bisect_left(occ, qstar)
            allowed_worse = self.cap[j] - cstar
            if cur - cur_b > allowed_worse:
                return False
            for a, p, _demand, ranks in self.hpos[j]:
                if self.pos[a] == 0 and self.dom[a][p]:
                    ws = sum(1 for r in ranks if r >= qstar)
                    if ws and cur - cur_b + ws > allowed_worse:
                        if not self._prune(a, p, hq, aq):
                            return False
            if cur_b < cstar:
                needed = cstar - cur_b
                pot, per_agent = self._fill_pot(h, qstar)
                if cur_b + min(pot, self.cap[j] - cur) < cstar:
                    return False
                if pot == needed:
                    # Every contributor must realise its best contribution,
                    # so positions (including the sentinel) falling short go.
                    for a, most in per_agent.items():
                        for p in range(1, self.L[a] + 2):
                            if self.dom[a][p]:
                                contrib = self._pos_contrib(a, p, h, qstar)
                                if contrib < most:
                                    if not self._prune(a, p, hq, aq):
                                        return False
        return self._scan_clauses(list(self.hclauses[j]), hq, aq)

    def _pos_contrib(self, a, p, h, q):
        if p > self.L[a]:
            return 0
        coords = self.positions[a][p - 1]
        if self.kind[a] == 1:
            return 1 if coords[0] == h and coords[1] < q else 0
        out = 0
        if coords[0] == h and coords[1] < q:
            out += 1
        if coords[2] == h and coords[3] < q:
            out += 1
        return out

    def _propagate(self, hq, aq) -> bool:
        while hq or aq:
            while hq:
                h = hq.pop()
                if not self._check_hospital(h, hq, aq):
                    return False
            if aq:
                a = aq.pop()
                if not self._check_agent(a, hq, aq):
                    return False
        return True

    # -- assignment ----------------------------------------------------------

    def _apply_assign(self, a, P) -> bool:
        hq: set = set()
        aq: set = set()
        self.pos[a] = P
        self.trail.append(("p", a))
        if self.live_assign[a] > 0:
            # Leaving the undecided pool.
            self.unassigned_potential -= self.members[a]
            self.trail.append(("up", -self.members[a]))
        for p in range(1, self.L[a] + 2):
            if p != P and self.dom[a][p]:
                self.dom[a][p] = 0
                self.live[a] -= 1
                self.trail.append(("d", a, p))
                if p <= self.L[a]:
                    self.live_assign[a] -= 1
                    coords = self.positions[a][p - 1]
                    hq.add(coords[0])
                    if self.kind[a] == 0:
                        hq.add(coords[2])
        if P <= self.L[a]:
            coords = self.positions[a][P - 1]
            if self.kind[a] == 1:
                pairs = ((coords[0], coords[1]),)
            else:
                pairs = ((coords[0], coords[1]), (coords[2], coords[3]))
            for h, rank in pairs:
                j = h - 1
                if len(self.occ[j]) >= min(self.cap[j], self.occ_max[j]):
                    return False
                insort(self.occ[j], rank)
                self.trail.append(("o", h, rank))
                hq.add(h)
            self.assigned_members += self.members[a]
            self.trail.append(("am", self.members[a]))
        if self.aclauses[a]:
            aq.add(a)
        return self._propagate(hq, aq)

    # -- candidate blocking pairs ---------------------------------------------

    def _notblock_parts_3form(self, a, p):
        """Not-block constraint when both members move (or the agent is single)."""
        coords = self.positions[a][p - 1]
        if self.kind[a] == 1:
            h, q = coords
            return [("u", (_FILL, h, q, self.cap[h - 1]))]
        hA, qA, hB, qB = coords
        if hA != hB:
            return [
                (
                    "c",
                    (_FILL, hA, qA, self.cap[hA - 1]),
                    (_FILL, hB, qB, self.cap[hB - 1]),
                )
            ]
        cap = self.cap[hA - 1]
        q_min, q_max = (qA, qB) if qA < qB else (qB, qA)
        if self.mode is StabilityMode.DEF1:
            return [("c", (_FILL, hA, q_min, cap - 1), (_FILL, hA, q_max, cap))]
        return [
            ("u", (_OCC, hA, 0, cap - 1)),
            ("c", (_OCC, hA, 0, cap), (_FILL, hA, q_min, cap - 1)),
            ("c", (_OCCMAX, hA, 0, cap - 1), (_FILL, hA, q_max, cap - 1)),
        ]

    def _candidate_parts(self, a, p, P):
        """The not-block constraint parts for agent a's list position p < P."""
        if self.kind[a] == 1 or P > self.L[a]:
            return self._notblock_parts_3form(a, p)
        coords = self.positions[a][p - 1]
        hA, qA, hB, qB = coords
        cur = self.positions[a][P - 1]
        curA, curB = cur[0], cur[2]
        if hB == curB and hA != curA:
            cap = self.cap[hA - 1]
            if hA == hB:
                c = cap - 1 if qA < qB else cap
            else:
                c = cap
            return [("u", (_FILL, hA, qA, c))]
        if hA == curA and hB != curB:
            cap = self.cap[hB - 1]
            if hB == hA:
                c = cap - 1 if qB < qA else cap
            else:
                c = cap
            return [("u", (_FILL, hB, qB, c))]
        return self._notblock_parts_3form(a, p)

    def _part_state(self, part):
        if part[0] == "u":
            return self._eval_lit(part[1])
        any_unknown = False
        for lit in part[1:]:
            st = self._eval_lit(lit)
            if st == 1:
                return 1
            if st == 0:
                any_unknown = True
        return 0 if any_unknown else -1

    # -- search ---------------------------------------------------------------

    def run(
        self,
        budget: int,
        goal: str = "find",
        best_size: int = -1,
        require_size: int | None = None,
        prespent=frozenset(),
        dynamic_order: bool = True,
        lex_bound: list | None = None,
    ):
        """goal="find": first matching with <= budget blocking pairs, or None.
        goal="maxsize": (best size, matching) over all such matchings.
        goal="lexfind": first matching with exactly require_size assigned,
        exploring agents in the given static order (so the first hit is the
        lexicographically smallest); with lex_bound set, only strictly
        smaller assignment vectors are accepted."""
        self.goal = goal
        self.best_size = best_size
        self.require_size = require_size
        self.prespent = prespent
        self.dynamic_order = dynamic_order
        self.lex_bound = lex_bound
        self.found = None
        self.best_found = None
        self.upfront = [False] * self.A
        try:
            if self.deadline is not None and time.monotonic() > self.deadline:
                raise _Timeout
            if budget == 0 and not self._post_upfront():
                return (self.best_size, None) if goal == "maxsize" else None
            self._dfs(0, budget, lex_bound is not None)
        except _Timeout:
            raise SolveTimeout("time limit exceeded") from None
        if goal == "maxsize":
            return self.best_size, self.best_found
        return self.found

    def _post_upfront(self) -> bool:
        """Post every not-block implication whose shape is position-independent:
        all single positions, and one-pair couples (whose only candidate
        arises when they end up unassigned).  Returns False on root conflict."""
        hq: set = set()
        aq: set = set()
        for a in range(self.A):
            if self.kind[a] == 1 or self.L[a] == 1:
                self.upfront[a] = True
                for p in range(1, self.L[a] + 1):
                    if (self.order[a], p) in self.prespent:
                        continue
                    guard = (_POSLTE, a, p)
                    for part in self._notblock_parts_3form(a, p):
                        if not self._add_clause((guard,) + tuple(part[1:]), hq, aq):
                            return False
        return self._propagate(hq, aq)

    def _pick_agent(self):
        """Smallest live domain among undecided agents; ties keep the static
        order, which makes the search deterministic."""
        best = None
        best_live = _INF
        for a in range(self.A):
            if self.pos[a] == 0:
                if not self.dynamic_order:
                    return a
                live = self.live[a]
                if live < best_live:
                    best, best_live = a, live
                    if live <= 1:
                        break
        return best

    def _positions_snapshot(self):
        out = {}
        for idx, (tag, ident) in enumerate(self.order):
            out[(tag, ident)] = self.pos[idx]
        return out

    def _dfs(self, depth, budget, tight=False) -> bool:
        self.nodes += 1
        if self.deadline is not None and self.nodes % 256 == 0:
            if time.monotonic() > self.deadline:
                raise _Timeout
        if depth == self.A:
            if self.goal == "maxsize":
                if self.assigned_members > self.best_size:
                    self.best_size = self.assigned_members
                    self.best_found = self._positions_snapshot()
                return False
            if self.require_size is not None and self.assigned_members != self.require_size:
                return False
            if tight:
                return False  # equal to the lex bound, not an improvement
            self.found = self._positions_snapshot()
            return True
        ub = self.assigned_members + min(
            self.unassigned_potential, self.total_caps - self.assigned_members
        )
        if self.goal == "maxsize" and ub <= self.best_size:
            return False
        if self.require_size is not None and ub < self.require_size:
            return False
        a = self._pick_agent()
        bound_p = self.lex_bound[a] if tight else _INF
        for P in range(1, self.L[a] + 2):
            if P > bound_p:
                break
            if not self.dom[a][P]:
                continue
            mark = self._mark()
            if self._apply_assign(a, P):
                if self.upfront[a]:
                    if self._dfs(depth + 1, budget, tight and P == bound_p):
                        return True
                    self._undo(mark)
                    continue
                cands = []
                spend_forced = 0
                ok = True
                for p in range(1, P):
                    if (self.order[a], p) in self.prespent:
                        continue
                    parts = self._candidate_parts(a, p, P)
                    state = min(self._part_state(part) for part in parts)
                    if state == 1:
                        continue
                    if state == -1:
                        spend_forced += 1
                        if spend_forced > budget:
                            ok = False
                            break
                    else:
                        cands.append(parts)
                if ok:
                    room = budget - spend_forced
                    limit = min(room, len(cands))
                    for k in range(0, limit + 1):
                        for spent in combinations(range(len(cands)), k):
                            mark2 = self._mark()
                            hq: set = set()
                            aq: set = set()
                            good = True
                            for i, parts in enumerate(cands):
                                if i in spent:
                                    continue
                                for part in parts:
                                    if not self._add_part(part, hq, aq):
                                        good = False
                                        break
                                if not good:
                                    break
                            if good and self._propagate(hq, aq):
                                if self._dfs(depth + 1, room - k, tight and P == bound_p):
                                    return True
                            self._undo(mark2)
            self._undo(mark)
        return False


def _default_order(inst: Instance):
    """Couples before singles, longer lists first (ids break ties)."""
    order = [("c", cp.index) for cp in inst.couples]
    order.sort(key=lambda t: (-len(inst.couples[t[1] - 1].joint_list), t[1]))
    singles = [("s", s.id) for s in inst.singles]
    singles.sort(key=lambda t: (-inst.list_len(t[1]), t[1]))
    return order + singles


def _id_order(inst: Instance):
    return [("c", cp.index) for cp in inst.couples] + [("s", s.id) for s in inst.singles]


def _matching_from_snapshot(inst: Instance, snap: dict) -> Matching:
    positions = [0] * inst.n1
    for (tag, ident), P in snap.items():
        if tag == "c":
            positions[2 * ident - 2] = P
            positions[2 * ident - 1] = P
        else:
            positions[ident - 1] = P
    return Matching(inst, tuple(positions))


def _all_pairs(inst: Instance):
    out = []
    for cp in inst.couples:
        for p in range(1, len(cp.joint_list) + 1):
            out.append((("c", cp.index), p))
    for s in inst.singles:
        for p in range(1, len(s.pref_list) + 1):
            out.append((("s", s.id), p))
    return out


def _presets_from(inst: Instance, pres) -> tuple[dict, list]:
    """Pinned (agent -> position) map from a presolve result, plus the pinned
    agents in satisfaction order (trace first, then permanently unassigned)."""
    presets: dict = {}
    first: list = []

    def pin(key, p):
        presets[key] = p
        first.append(key)

    for fa in pres.trace:
        if fa.kind == "single":
            pin(("s", fa.agent), inst.indiv_pref(fa.agent).index(fa.target) + 1)
        else:
            cp = inst.couples[fa.agent - 1]
            pin(("c", fa.agent), cp.joint_list.index(tuple(fa.target)) + 1)
    for rid in sorted(pres.dropped):
        if inst.is_couple_member(rid):
            key = ("c", (rid + 1) // 2)
            if key not in presets:
                pin(key, len(inst.couples[key[1] - 1].joint_list) + 1)
        else:
            pin(("s", rid), inst.list_len(rid) + 1)
    return presets, first


def _order_with_presets(first: list, rest_order: list) -> list:
    seen = set(first)
    return first + [key for key in rest_order if key not in seen]


_EAGER_MAX_K = 2  # above this, blocking-set enumeration blows up; go lazy


def _find_at_level(tables, mode, budget, deadline, stats, use_blocking_sets, presets=None):
    if use_blocking_sets and 1 <= budget <= _EAGER_MAX_K:
        pairs = _all_pairs(tables.inst)
        for spent in combinations(pairs, budget):
            eng = _Engine(tables, mode, deadline, presets)
            snap = eng.run(0, prespent=frozenset(spent))
            stats.nodes += eng.nodes
            if snap is not None:
                return snap
        return None
    eng = _Engine(tables, mode, deadline, presets)
    snap = eng.run(budget)
    stats.nodes += eng.nodes
    return snap


def _subsets_hint_first(pairs, budget, hint):
    """All size-``budget`` pair subsets, with the hinted one (the incumbent's
    actual blocking set) tried first."""
    if hint is not None and len(hint) == budget:
        yield hint
    for spent in combinations(pairs, budget):
        cand = frozenset(spent)
        if cand != hint:
            yield cand


def _maximize(tables, mode, budget, deadline, stats, use_blocking_sets, presets, floor, hint=None):
    """Best matching size with at most ``budget`` blocking pairs, given that
    ``floor`` is achievable; returns (size, snapshot-or-None)."""
    if budget == 0 or not (use_blocking_sets and budget <= _EAGER_MAX_K):
        eng = _Engine(tables, mode, deadline, presets)
        best_size, snap = eng.run(budget, goal="maxsize", best_size=floor - 1)
        stats.nodes += eng.nodes
        return best_size, snap
    # Every matching with at most ``budget`` blocking pairs has its blocking
    # set inside some size-``budget`` candidate set, so a sweep over those is
    # complete.  Sizes are probed downwards from the trivial upper bound:
    # exact-size existence checks prune much harder than open-ended search.
    pairs = _all_pairs(tables.inst)
    assignable = sum(
        tables.members[a] for a in range(tables.A) if tables.L[a] > 0
    )
    ub0 = min(assignable, sum(tables.cap))
    if ub0 - floor > 8:
        best_size, best_snap = floor - 1, None
        for spent in _subsets_hint_first(pairs, budget, hint):
            eng = _Engine(tables, mode, deadline, presets)
            size, snap = eng.run(0, goal="maxsize", best_size=best_size, prespent=spent)
            stats.nodes += eng.nodes
            if snap is not None:
                best_size, best_snap = size, snap
        return best_size, best_snap
    for target in range(ub0, floor, -1):
        for spent in _subsets_hint_first(pairs, budget, hint):
            eng = _Engine(tables, mode, deadline, presets)
            snap = eng.run(0, goal="find", require_size=target, prespent=spent)
            stats.nodes += eng.nodes
            if snap is not None:
                return target, snap
    return floor, None


def _snapshot_to_bound(tables, matching):
    """Translate a matching into per-order-index positions for lex pruning."""
    bound = []
    for tag, ident in tables.order:
        rid = 2 * ident - 1 if tag == "c" else ident
        bound.append(matching.position_of(rid))
    return bound


def _lex_extract(tables, mode, budget, deadline, stats, use_blocking_sets, presets, size, seed_matching=None, hint=None):
    """Lexicographically smallest assignment vector of the given size within
    the blocking-pair budget (tables must carry a static id-major order)."""
    best_snap = None
    bound = None
    if seed_matching is not None:
        bound = _snapshot_to_bound(tables, seed_matching)
    if budget == 0 or not (use_blocking_sets and budget <= _EAGER_MAX_K):
        eng = _Engine(tables, mode, deadline, presets)
        snap = eng.run(
            budget, goal="lexfind", require_size=size,
            dynamic_order=False, lex_bound=bound,
        )
        stats.nodes += eng.nodes
        return snap if snap is not None else _seed_snapshot(tables, seed_matching)
    pairs = _all_pairs(tables.inst)
    for spent in _subsets_hint_first(pairs, budget, hint):
        eng = _Engine(tables, mode, deadline, presets)
        snap = eng.run(
            0, goal="lexfind", require_size=size, prespent=spent,
            dynamic_order=False, lex_bound=bound,
        )
        stats.nodes += eng.nodes
        if snap is not None:
            best_snap = snap
            bound = [
                snap[key] for key in tables.order
            ]
    if best_snap is None:
        return _seed_snapshot(tables, seed_matching)
    return best_snap


def _seed_snapshot(tables, seed_matching):
    if seed_matching is None:
        return None
    out = {}
    for tag, ident in tables.order:
        rid = 2 * ident - 1 if tag == "c" else ident
        out[(tag, ident)] = seed_matching.position_of(rid)
    return out


def solve_most_stable(inst: Instance, opts: SolveOptions | None = None) -> Solution:
    """Lexicographic optimum: fewest blocking pairs, then maximum size."""
    opts = opts or SolveOptions()
    t0 = time.monotonic()
    deadline = t0 + opts.time_limit if opts.time_limit is not None else None
    stats = SolveStats()
    mode = opts.mode

    def finish(matching, optimal, k_star=None):
        bps = blocking_pairs(inst, matching, mode)
        if optimal and k_star is not None:
            assert len(bps) == k_star, (
                f"solver self-check failed: {len(bps)} blocking pairs, expected {k_star}"
            )
        stats.wall_ms = (time.monotonic() - t0) * 1000.0
        return Solution(
            matching=matching,
            bp_set=bps,
            bp_count=len(bps),
            size=matching.size,
            stats=stats,
            optimal=optimal,
            mode=mode,
        )

    profile = inst.restriction_profile()

    if opts.enable_dispatch and profile.is_gamma1:
        # Unique stable matching; identical under both stability modes since
        # no hospital can rank both members of a couple.
        stats.dispatched = "gamma1"
        return finish(solve_gamma1(inst), True, 0)

    k_seed = None
    seed_matching = None
    if opts.enable_dispatch and profile.is_212 and mode is StabilityMode.DEF1:
        stats.dispatched = "212"
        seed_matching, bps = solve_212(inst)
        k_seed = len(bps)
        if opts.max_bp_bound is not None and k_seed > opts.max_bp_bound:
            raise BpBoundExceeded(
                f"minimum blocking pairs {k_seed} exceeds bound {opts.max_bp_bound}"
            )

    incumbent = None  # original-instance matching with bp <= current level

    # Fixed assignments belong to every stable matching, so at level k = 0
    # the corresponding variables can be pinned (the search still places them,
    # keeping occupancy and blocking evaluation exact).  For k >= 1 a
    # most-stable matching may sacrifice a fixed assignment, so the deepening
    # reverts to free domains.
    presets: dict = {}
    pinned_first: list = []
    if opts.enable_presolve:
        pres = satisfy_iteratively(inst)
        stats.presolve_fixed = len(pres.trace)
        stats.presolve_dropped = len(pres.dropped)
        presets, pinned_first = _presets_from(inst, pres)

    pinned_tables = _Tables(inst, _order_with_presets(pinned_first, _default_order(inst)))
    free_tables = (
        pinned_tables if not pinned_first else _Tables(inst, _default_order(inst))
    )

    try:
        if k_seed is not None:
            k_star = k_seed
            incumbent = seed_matching
            stats.levels = 0
        else:
            k = 0
            while True:
                if opts.max_bp_bound is not None and k > opts.max_bp_bound:
                    raise BpBoundExceeded(
                        f"no matching with at most {opts.max_bp_bound} blocking pairs"
                    )
                stats.levels += 1
                if k == 0:
                    snap = _find_at_level(
                        pinned_tables, mode, 0, deadline, stats,
                        opts.enable_blocking_set_presolve, presets,
                    )
                else:
                    snap = _find_at_level(
                        free_tables, mode, k, deadline, stats,
                        opts.enable_blocking_set_presolve,
                    )
                if snap is not None:
                    incumbent = _matching_from_snapshot(inst, snap)
                    assert len(blocking_pairs(inst, incumbent, mode)) <= k
                    k_star = k
                    break
                k += 1

        # Maximise the size subject to at most k_star blocking pairs.
        use_pins = k_star == 0 and bool(presets)

        def bp_pairs(matching):
            return frozenset(
                (("c" if bp.kind == "couple" else "s", bp.agent), bp.position)
                for bp in blocking_pairs(inst, matching, mode)
            )

        best_size, best_snap = _maximize(
            pinned_tables if use_pins else free_tables,
            mode, k_star, deadline, stats,
            opts.enable_blocking_set_presolve,
            presets if use_pins else None,
            incumbent.size,
            hint=bp_pairs(incumbent),
        )
        if best_snap is None:
            best_size = incumbent.size  # the incumbent already had maximum size
        else:
            incumbent = _matching_from_snapshot(inst, best_snap)

        # Extract the lexicographically smallest optimal assignment vector.
        lex_tables = _Tables(
            inst,
            _order_with_presets(pinned_first if use_pins else [], _id_order(inst)),
        )
        snap = _lex_extract(
            lex_tables, mode, k_star, deadline, stats,
            opts.enable_blocking_set_presolve,
            presets if use_pins else None,
            best_size,
            seed_matching=incumbent,
            hint=bp_pairs(incumbent),
        )
        assert snap is not None, "lex pass lost the optimum"
        final = _matching_from_snapshot(inst, snap)
        return finish(final, True, k_star)

    except SolveTimeout:
        if incumbent is None:
            incumbent = Matching(
                inst, tuple(inst.list_len(r) + 1 for r in range(1, inst.n1 + 1))
            )
        return finish(incumbent, False)


def prove_unsolvable(inst: Instance, opts: SolveOptions | None = None) -> bool:
    """True iff the instance admits no stable matching (level k=0 exhausted)."""
    opts = opts or SolveOptions()
    t0 = time.monotonic()
    deadline = t0 + opts.time_limit if opts.time_limit is not None else None
    profile = inst.restriction_profile()
    if opts.enable_dispatch and profile.is_gamma1:
        return False
    if opts.enable_dispatch and profile.is_212 and opts.mode is StabilityMode.DEF1:
        _, bps = solve_212(inst)
        return bool(bps)
    stats = SolveStats()
    presets: dict = {}
    first: list = []
    if opts.enable_presolve:
        presets, first = _presets_from(inst, satisfy_iteratively(inst))
    tables = _Tables(inst, _order_with_presets(first, _default_order(inst)))
    snap = _find_at_level(tables, opts.mode, 0, deadline, stats, False, presets)
    return snap is None


def brute_force_oracle(
    inst: Instance,
    limit: int = 12,
    mode: StabilityMode = StabilityMode.DEF1,
) -> Solution:
    """Exhaustive enumeration of all capacity-feasible matchings, scored by the
    blocking-pair enumerator; returns the (min bp, then max size) optimum."""
    if inst.n1 > limit:
        raise HrcError(f"oracle limit exceeded: {inst.n1} residents > limit {limit}")
    t0 = time.monotonic()
    agents = _id_order(inst)
    A = len(agents)
    coords = []
    for tag, ident in agents:
        if tag == "c":
            cp = inst.couples[ident - 1]
            coords.append([(p[0], p[1]) for p in cp.joint_list])
        else:
            coords.append([(h,) for h in inst.singles[ident - 2 * inst.num_couples - 1].pref_list])
    free = [inst.hospital(h).capacity for h in range(1, inst.n2 + 1)]
    positions = [0] * A
    best = [None]  # ((bp, -size), matching)
    leaves = [0]

    def leaf():
        leaves[0] += 1
        snap = {agents[i]: positions[i] for i in range(A)}
        m = _matching_from_snapshot(inst, snap)
        key = (len(blocking_pairs(inst, m, mode)), -m.size)
        if best[0] is None or key < best[0][0]:
            best[0] = (key, m)

    def rec(i):
        if i == A:
            leaf()
            return
        for p, hs in enumerate(coords[i], 1):
            ok = True
            for h in hs:
                free[h - 1] -= 1
                if free[h - 1] < 0:
                    ok = False
            if ok:
                positions[i] = p
                rec(i + 1)
            for h in hs:
                free[h - 1] += 1
        positions[i] = len(coords[i]) + 1
        rec(i + 1)

    rec(0)
    key, matching = best[0]
    bps = blocking_pairs(inst, matching, mode)
    stats = SolveStats(nodes=leaves[0], wall_ms=(time.monotonic() - t0) * 1000.0)
    return Solution(
        matching=matching,
        bp_set=bps,
        bp_count=key[0],
        size=-key[1],
        stats=stats,
        optimal=True,
        mode=mode,
    )

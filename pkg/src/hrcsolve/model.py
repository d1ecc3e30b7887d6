"""Core data model: HRC instances, matchings, parsing and serialization.

Identifier conventions: residents are numbered 1..n1 with couple members
occupying the low ids as consecutive (odd, even) pairs -- couple i is
(2i-1, 2i) -- and singles following; hospitals are numbered 1..n2.
A resident's "individual" list is his own preference list if single, or
the projected list (one coordinate of the joint list, positionwise) if he
belongs to a couple.  The unassigned sentinel position is list length + 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class HrcError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(HrcError):
    """Syntax or structural error in an instance or matching file."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f"line {line}"
            if column is not None:
                loc += f", column {column}"
            loc += ": "
        super().__init__(loc + message)


class ValidationError(HrcError):
    """Instance failed validation; carries the full violation list."""

    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations if v.severity == "error"))


class MatchingError(HrcError):
    """Matching text or assignment inconsistent with its instance."""


@dataclass(frozen=True)
class Violation:
    severity: str  # "error" or "warning"
    where: str
    message: str

    def __str__(self) -> str:
        return f"[{self.severity}] {self.where}: {self.message}"


@dataclass(frozen=True)
class Hospital:
    id: int
    capacity: int
    pref_list: tuple[int, ...]  # resident ids, best first


@dataclass(frozen=True)
class SingleResident:
    id: int
    pref_list: tuple[int, ...]  # hospital ids, best first


@dataclass(frozen=True)
class Couple:
    index: int  # 1-based couple number; members are (2*index-1, 2*index)
    joint_list: tuple[tuple[int, int], ...]  # (hospital for odd, hospital for even)

    @property
    def member_a(self) -> int:
        return 2 * self.index - 1

    @property
    def member_b(self) -> int:
        return 2 * self.index


@dataclass(frozen=True)
class RestrictionProfile:
    alpha: int  # max single-resident list length
    beta: int   # max couple joint-list length
    gamma: int  # max hospital list length
    is_gamma1: bool
    is_212: bool


@dataclass(frozen=True)
class Instance:
    """An HRC instance with derived indices.

    Construction performs structural checks only (id ranges and numbering);
    semantic invariants are reported by :func:`validate`.
    """

    singles: tuple[SingleResident, ...]
    couples: tuple[Couple, ...]
    hospitals: tuple[Hospital, ...]
    # Derived, filled in __post_init__.
    _indiv: tuple[tuple[int, ...], ...] = field(default=(), repr=False, compare=False)
    _rank: dict = field(default_factory=dict, repr=False, compare=False)
    _at_rank: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        c = len(self.couples)
        n1 = 2 * c + len(self.singles)
        n2 = len(self.hospitals)
        for k, couple in enumerate(self.couples, 1):
            if couple.index != k:
                raise HrcError(f"couple {couple.index} out of order (expected {k})")
        for k, s in enumerate(self.singles):
            if s.id != 2 * c + 1 + k:
                raise HrcError(f"single resident id {s.id} out of order (expected {2*c+1+k})")
        for k, h in enumerate(self.hospitals, 1):
            if h.id != k:
                raise HrcError(f"hospital id {h.id} out of order (expected {k})")

        def check_hid(hid, where):
            if not 1 <= hid <= n2:
                raise HrcError(f"{where}: unknown hospital {hid}")

        indiv: list[tuple[int, ...]] = [()] * n1
        for couple in self.couples:
            for ha, hb in couple.joint_list:
                check_hid(ha, f"couple {couple.index}")
                check_hid(hb, f"couple {couple.index}")
            indiv[couple.member_a - 1] = tuple(p[0] for p in couple.joint_list)
            indiv[couple.member_b - 1] = tuple(p[1] for p in couple.joint_list)
        for s in self.singles:
            for hid in s.pref_list:
                check_hid(hid, f"single {s.id}")
            indiv[s.id - 1] = s.pref_list

        rank: dict[tuple[int, int], int] = {}
        for h in self.hospitals:
            for q, rid in enumerate(h.pref_list, 1):
                if not 1 <= rid <= n1:
                    raise HrcError(f"hospital {h.id}: unknown resident {rid}")
                rank.setdefault((h.id, rid), q)

        at_rank: dict[tuple[int, int], frozenset] = {}
        for h in self.hospitals:
            for q, rid in enumerate(h.pref_list, 1):
                pairs = frozenset(
                    (rid, p) for p, hid in enumerate(indiv[rid - 1], 1) if hid == h.id
                )
                at_rank[(h.id, q)] = pairs

        object.__setattr__(self, "_indiv", tuple(indiv))
        object.__setattr__(self, "_rank", rank)
        object.__setattr__(self, "_at_rank", at_rank)

    # -- sizes ---------------------------------------------------------------

    @property
    def n1(self) -> int:
        return 2 * len(self.couples) + len(self.singles)

    @property
    def n2(self) -> int:
        return len(self.hospitals)

    @property
    def num_couples(self) -> int:
        return len(self.couples)

    # -- lookups -------------------------------------------------------------

    def hospital(self, hid: int) -> Hospital:
        return self.hospitals[hid - 1]

    def is_couple_member(self, rid: int) -> bool:
        return rid <= 2 * len(self.couples)

    def couple_of(self, rid: int) -> Couple:
        return self.couples[(rid - 1) // 2]

    def indiv_pref(self, rid: int) -> tuple[int, ...]:
        """Individual (projected, for couple members) preference list."""
        return self._indiv[rid - 1]

    def list_len(self, rid: int) -> int:
        return len(self._indiv[rid - 1])

    def rank(self, hid: int, rid: int) -> int | None:
        """1-based rank hospital hid assigns resident rid, or None if unranked."""
        return self._rank.get((hid, rid))

    def residents_at_rank(self, hid: int, q: int) -> frozenset:
        """The set R(h, q) of (resident, individual-list position) pairs."""
        h = self.hospital(hid)
        if not 1 <= q <= len(h.pref_list):
            raise HrcError(f"rank {q} out of range for hospital {hid} (list length {len(h.pref_list)})")
        return self._at_rank[(hid, q)]

    def restriction_profile(self) -> RestrictionProfile:
        alpha = max((len(s.pref_list) for s in self.singles), default=0)
        beta = max((len(cp.joint_list) for cp in self.couples), default=0)
        gamma = max((len(h.pref_list) for h in self.hospitals), default=0)
        return RestrictionProfile(
            alpha=alpha,
            beta=beta,
            gamma=gamma,
            is_gamma1=gamma <= 1,
            is_212=alpha <= 2 and beta <= 1 and gamma <= 2,
        )


def validate(inst: Instance) -> list[Violation]:
    """Report every violated instance invariant (warnings are non-fatal)."""
    out: list[Violation] = []

    def err(where, msg):
        out.append(Violation("error", where, msg))

    def warn(where, msg):
        out.append(Violation("warning", where, msg))

    # Acceptability as seen from the residents' side, for symmetry checking.
    listed_by: dict[int, set[int]] = {h.id: set() for h in inst.hospitals}
    for s in inst.singles:
        seen = set()
        for hid in s.pref_list:
            if hid in seen:
                err(f"single {s.id}", f"duplicate hospital {hid} in preference list")
            seen.add(hid)
            listed_by[hid].add(s.id)
    for cp in inst.couples:
        if not cp.joint_list:
            warn(f"couple {cp.index}", "empty joint preference list")
        seen_pairs = set()
        for ha, hb in cp.joint_list:
            if (ha, hb) in seen_pairs:
                err(f"couple {cp.index}", f"duplicate pair ({ha},{hb})")
            seen_pairs.add((ha, hb))
            listed_by[ha].add(cp.member_a)
            listed_by[hb].add(cp.member_b)
            if ha == hb and inst.hospital(ha).capacity == 1:
                warn(
                    f"couple {cp.index}",
                    f"pair ({ha},{ha}) at a capacity-1 hospital can never be jointly assigned",
                )

    for h in inst.hospitals:
        if h.capacity < 1:
            err(f"hospital {h.id}", f"capacity {h.capacity} < 1")
        seen = set()
        for rid in h.pref_list:
            if rid in seen:
                err(f"hospital {h.id}", f"duplicate resident {rid} in preference list")
            seen.add(rid)
        # Symmetry in both directions.
        for rid in seen - listed_by[h.id]:
            err(
                f"hospital {h.id}",
                f"asymmetric acceptability: lists resident {rid} who does not list it",
            )
        for rid in listed_by[h.id] - seen:
            err(
                f"hospital {h.id}",
                f"asymmetric acceptability: resident {rid} lists it but is not ranked",
            )

    return out


def is_valid(inst: Instance) -> bool:
    return not any(v.severity == "error" for v in validate(inst))


# -- matchings ----------------------------------------------------------------


@dataclass(frozen=True)
class Matching:
    """Per-resident positions on individual lists; sentinel len+1 = unassigned."""

    instance: Instance = field(repr=False, compare=False)
    positions: tuple[int, ...] = ()
    _occupants: tuple[tuple[int, ...], ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        inst = self.instance
        if len(self.positions) != inst.n1:
            raise MatchingError(
                f"expected {inst.n1} positions, got {len(self.positions)}"
            )
        occ: list[list[int]] = [[] for _ in range(inst.n2)]
        for rid, p in enumerate(self.positions, 1):
            length = inst.list_len(rid)
            if not 1 <= p <= length + 1:
                raise MatchingError(f"resident {rid}: position {p} out of range")
            if p <= length:
                occ[inst.indiv_pref(rid)[p - 1] - 1].append(rid)
        for cp in inst.couples:
            if self.positions[cp.member_a - 1] != self.positions[cp.member_b - 1]:
                raise MatchingError(
                    f"couple inconsistency: members {cp.member_a} and {cp.member_b} "
                    "at different positions"
                )
        for h in inst.hospitals:
            if len(occ[h.id - 1]) > h.capacity:
                raise MatchingError(
                    f"capacity exceeded at hospital {h.id}: "
                    f"{len(occ[h.id - 1])} assignees, capacity {h.capacity}"
                )
        object.__setattr__(self, "_occupants", tuple(tuple(o) for o in occ))

    @classmethod
    def from_assignments(cls, inst: Instance, assigned: dict[int, int]) -> "Matching":
        """Build from a resident -> hospital map (absent = unassigned)."""
        positions = [0] * inst.n1
        for s in inst.singles:
            hid = assigned.get(s.id)
            if hid is None:
                positions[s.id - 1] = len(s.pref_list) + 1
            else:
                if hid not in s.pref_list:
                    raise MatchingError(f"single {s.id} does not find hospital {hid} acceptable")
                positions[s.id - 1] = s.pref_list.index(hid) + 1
        for cp in inst.couples:
            ha = assigned.get(cp.member_a)
            hb = assigned.get(cp.member_b)
            if ha is None and hb is None:
                p = len(cp.joint_list) + 1
            elif ha is None or hb is None:
                raise MatchingError(f"couple inconsistency: couple {cp.index} half-assigned")
            else:
                try:
                    p = cp.joint_list.index((ha, hb)) + 1
                except ValueError:
                    raise MatchingError(
                        f"couple inconsistency: couple {cp.index} does not find "
                        f"({ha},{hb}) acceptable as a pair"
                    ) from None
            positions[cp.member_a - 1] = p
            positions[cp.member_b - 1] = p
        return cls(inst, tuple(positions))

    def position_of(self, rid: int) -> int:
        return self.positions[rid - 1]

    def is_assigned(self, rid: int) -> bool:
        return self.positions[rid - 1] <= self.instance.list_len(rid)

    def hospital_for(self, rid: int) -> int | None:
        p = self.positions[rid - 1]
        pref = self.instance.indiv_pref(rid)
        return pref[p - 1] if p <= len(pref) else None

    def assignees(self, hid: int) -> tuple[int, ...]:
        return self._occupants[hid - 1]

    @property
    def size(self) -> int:
        """Number of assigned residents."""
        return sum(1 for rid in range(1, self.instance.n1 + 1) if self.is_assigned(rid))


# -- instance file format ------------------------------------------------------


def _tokens(text: str):
    """Yield (line_number, token_list) for non-empty, non-comment lines."""
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield ln, line.split()


def _int(tok: str, ln: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected integer {what}, got {tok!r}", ln) from None


def parse_instance(text: str) -> Instance:
    """Parse the line-based instance format; raises on syntax or validation errors."""
    lines = list(_tokens(text))
    if not lines or lines[0][1] != ["hrc", "1"]:
        ln = lines[0][0] if lines else 1
        raise ParseError("missing 'hrc 1' header", ln)

    counts = {}
    idx = 1
    for key in ("singles", "couples", "hospitals"):
        if idx >= len(lines) or lines[idx][1][0] != key or len(lines[idx][1]) != 2:
            ln = lines[idx][0] if idx < len(lines) else lines[-1][0]
            raise ParseError(f"expected '{key} <count>'", ln)
        counts[key] = _int(lines[idx][1][1], lines[idx][0], f"{key} count")
        idx += 1

    n_singles, n_couples, n_hosp = counts["singles"], counts["couples"], counts["hospitals"]
    hospitals: dict[int, Hospital] = {}
    singles: dict[int, tuple[int, ...]] = {}
    couples: dict[int, tuple[tuple[int, int], ...]] = {}
    prefs: dict[int, tuple[int, ...]] = {}

    def split_colon(toks, ln, head_len):
        if len(toks) <= head_len or toks[head_len] != ":":
            raise ParseError("expected ':' separator", ln, column=head_len + 1)
        return toks[1:head_len], toks[head_len + 1:]

    for ln, toks in lines[idx:]:
        kind = toks[0]
        if kind == "hospital":
            if len(toks) != 3:
                raise ParseError("expected 'hospital <id> <capacity>'", ln)
            hid = _int(toks[1], ln, "hospital id")
            cap = _int(toks[2], ln, "capacity")
            if hid in hospitals:
                raise ParseError(f"duplicate id: hospital {hid}", ln)
            hospitals[hid] = Hospital(hid, cap, ())
        elif kind == "single":
            head, tail = split_colon(toks, ln, 2)
            rid = _int(head[0], ln, "resident id")
            if rid in singles:
                raise ParseError(f"duplicate id: single {rid}", ln)
            singles[rid] = tuple(_int(t, ln, "hospital id") for t in tail)
        elif kind == "couple":
            head, tail = split_colon(toks, ln, 3)
            ra = _int(head[0], ln, "resident id")
            rb = _int(head[1], ln, "resident id")
            if ra % 2 != 1 or rb != ra + 1:
                raise ParseError(
                    f"couple members must be consecutive (odd, even) ids, got {ra} {rb}", ln
                )
            ci = (ra + 1) // 2
            if ci in couples:
                raise ParseError(f"duplicate id: couple {ra} {rb}", ln)
            pairs = []
            for t in tail:
                parts = t.split(",")
                if len(parts) != 2:
                    raise ParseError(f"expected '<hid>,<hid>' pair, got {t!r}", ln)
                pairs.append((_int(parts[0], ln, "hospital id"), _int(parts[1], ln, "hospital id")))
            couples[ci] = tuple(pairs)
        elif kind == "pref":
            head, tail = split_colon(toks, ln, 2)
            hid = _int(head[0], ln, "hospital id")
            if hid in prefs:
                raise ParseError(f"duplicate pref line for hospital {hid}", ln)
            prefs[hid] = tuple(_int(t, ln, "resident id") for t in tail)
        else:
            raise ParseError(f"unknown directive {kind!r}", ln)

    if len(hospitals) != n_hosp:
        raise ParseError(f"expected {n_hosp} hospital lines, got {len(hospitals)}")
    if len(singles) != n_singles:
        raise ParseError(f"expected {n_singles} single lines, got {len(singles)}")
    if len(couples) != n_couples:
        raise ParseError(f"expected {n_couples} couple lines, got {len(couples)}")

    n1 = n_singles + 2 * n_couples
    for ci in range(1, n_couples + 1):
        if ci not in couples:
            raise ParseError(f"missing couple ({2*ci-1},{2*ci})")
    for rid in range(2 * n_couples + 1, n1 + 1):
        if rid not in singles:
            raise ParseError(f"missing or out-of-range single resident {rid}")
    for hid in range(1, n_hosp + 1):
        if hid not in hospitals:
            raise ParseError(f"missing hospital {hid}")
        if hid not in prefs:
            prefs[hid] = ()

    try:
        inst = Instance(
            singles=tuple(
                SingleResident(rid, singles[rid]) for rid in range(2 * n_couples + 1, n1 + 1)
            ),
            couples=tuple(Couple(ci, couples[ci]) for ci in range(1, n_couples + 1)),
            hospitals=tuple(
                Hospital(hid, hospitals[hid].capacity, prefs[hid]) for hid in range(1, n_hosp + 1)
            ),
        )
    except HrcError as exc:
        raise ParseError(str(exc)) from None

    violations = validate(inst)
    if any(v.severity == "error" for v in violations):
        raise ValidationError(violations)
    return inst


def serialize_instance(inst: Instance) -> str:
    out = ["hrc 1"]
    out.append(f"singles {len(inst.singles)}")
    out.append(f"couples {len(inst.couples)}")
    out.append(f"hospitals {len(inst.hospitals)}")
    for h in inst.hospitals:
        out.append(f"hospital {h.id} {h.capacity}")
    for s in inst.singles:
        out.append(f"single {s.id} : " + " ".join(str(h) for h in s.pref_list))
    for cp in inst.couples:
        pairs = " ".join(f"{a},{b}" for a, b in cp.joint_list)
        out.append(f"couple {cp.member_a} {cp.member_b} : " + pairs)
    for h in inst.hospitals:
        out.append(f"pref {h.id} : " + " ".join(str(r) for r in h.pref_list))
    return "\n".join(out) + "\n"


# -- matching file format --------------------------------------------------------


def parse_matching(inst: Instance, text: str) -> Matching:
    assigned: dict[int, int] = {}
    seen: set[int] = set()
    for ln, toks in _tokens(text):
        if toks[0] != "assign" or len(toks) != 3:
            raise ParseError("expected 'assign <rid> <hid|->'", ln)
        rid = _int(toks[1], ln, "resident id")
        if not 1 <= rid <= inst.n1:
            raise MatchingError(f"unknown resident {rid}")
        if rid in seen:
            raise MatchingError(f"resident {rid} assigned twice")
        seen.add(rid)
        if toks[2] != "-":
            hid = _int(toks[2], ln, "hospital id")
            if not 1 <= hid <= inst.n2:
                raise MatchingError(f"unknown hospital {hid}")
            assigned[rid] = hid
    missing = set(range(1, inst.n1 + 1)) - seen
    if missing:
        raise MatchingError(f"missing assign line for resident {min(missing)}")
    return Matching.from_assignments(inst, assigned)


def serialize_matching(inst: Instance, m: Matching) -> str:
    out = []
    for rid in range(1, inst.n1 + 1):
        hid = m.hospital_for(rid)
        out.append(f"assign {rid} {hid if hid is not None else '-'}")
    return "\n".join(out) + "\n"

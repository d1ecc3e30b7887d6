"""Symbolic 0/1 programme for blocking-pair minimisation, LP-format export,
and a constraint-by-constraint verifier.

Variables: x_i_p (resident i takes list position p; p = l+1 means unassigned),
th_i_p (position p of resident i blocks; fixed to 0 for even couple members so
a couple's pair is counted once), al_j_q (forced to 1 unless hospital j is
full with assignees ranked better than q) and be_j_q (forced to 1 unless j has
at least capacity-1 assignees better than q).

Constraint tags: (5) assign-or-unassigned, (6) capacity, (7) couple coherence,
(8) single blocking, (9)/(10) couple keeps its second member in place
(general/shared-hospital special case), (11)/(11b) couple keeps its first
member in place, (12)/(13) the al/be forcing inequalities, (14) both members
move to distinct hospitals, (15) both move to one hospital with free posts,
(16) both move to one full hospital, (18) the blocking-pair budget.  The
(11b) special case mirrors (10); its printed coefficient subscript is
corrected to the second member's hospital (the symmetric intent).
Domain tags (1)-(4) are enforced by the binary declarations and checked
directly by the verifier.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import HrcError, Instance, Matching, MatchingError
from .stability import StabilityMode, blocking_pairs


@dataclass(frozen=True)
class IpConstraint:
    tag: str
    name: str
    terms: tuple  # ((coef, varname), ...)
    sense: str  # "<=", ">=" or "="
    rhs: int


@dataclass(frozen=True)
class VerifyReport:
    feasible: bool
    violated: tuple  # (tag, name) pairs
    theta_sum: int
    x_sum: int


def _merge(pairs):
    """Combine duplicate variables, preserving first-appearance order."""
    order = []
    coefs: dict = {}
    for coef, var in pairs:
        if var not in coefs:
            order.append(var)
            coefs[var] = 0
        coefs[var] += coef
    return tuple((coefs[v], v) for v in order if coefs[v] != 0)


class IpModel:
    def __init__(self, inst: Instance):
        self.instance = inst
        self.x: dict = {}
        self.theta: dict = {}
        self.alpha: dict = {}
        self.beta: dict = {}
        self.fixed_zero: tuple = ()
        self.constraints: tuple = ()

    @property
    def variables(self) -> tuple:
        return tuple(self.x.values()) + tuple(self.theta.values()) + tuple(
            self.alpha.values()
        ) + tuple(self.beta.values())

    def minbp_objective(self) -> tuple:
        inst = self.instance
        fixed = set(self.fixed_zero)
        return tuple(
            (1, name) for key, name in self.theta.items() if name not in fixed
        )

    def maxsize_objective(self) -> tuple:
        inst = self.instance
        return tuple(
            (1, name)
            for (i, p), name in self.x.items()
            if p <= inst.list_len(i)
        )

    def cap_constraint(self, k: int) -> IpConstraint:
        return IpConstraint(
            tag="(18)",
            name="c18",
            terms=self.minbp_objective(),
            sense="<=",
            rhs=k,
        )


def build_ip(inst: Instance) -> IpModel:
    model = IpModel(inst)
    n1, n2 = inst.n1, inst.n2

    for i in range(1, n1 + 1):
        for p in range(1, inst.list_len(i) + 2):
            model.x[(i, p)] = f"x_{i}_{p}"
        for p in range(1, inst.list_len(i) + 1):
            model.theta[(i, p)] = f"th_{i}_{p}"
    for j in range(1, n2 + 1):
        for q in range(1, len(inst.hospital(j).pref_list) + 1):
            model.alpha[(j, q)] = f"al_{j}_{q}"
            model.beta[(j, q)] = f"be_{j}_{q}"
    model.fixed_zero = tuple(
        model.theta[(cp.member_b, p)]
        for cp in inst.couples
        for p in range(1, len(cp.joint_list) + 1)
    )

    x, theta, alpha, beta = model.x, model.theta, model.alpha, model.beta
    cons: list = []

    def rank_set_terms(j, q_hi, coef=1, skip_rank=None):
        """x-terms of all (resident, position) pairs ranked better than q_hi."""
        out = []
        for q in range(1, q_hi):
            if q == skip_rank:
                continue
            for rid, p in sorted(inst.residents_at_rank(j, q)):
                out.append((coef, x[(rid, p)]))
        return out

    for i in range(1, n1 + 1):
        cons.append(
            IpConstraint(
                "(5)",
                f"c5_r{i}",
                tuple((1, x[(i, p)]) for p in range(1, inst.list_len(i) + 2)),
                "=",
                1,
            )
        )

    for j in range(1, n2 + 1):
        h = inst.hospital(j)
        terms = []
        for q in range(1, len(h.pref_list) + 1):
            for rid, p in sorted(inst.residents_at_rank(j, q)):
                terms.append((1, x[(rid, p)]))
        cons.append(IpConstraint("(6)", f"c6_h{j}", _merge(terms), "<=", h.capacity))

    for cp in inst.couples:
        for p in range(1, len(cp.joint_list) + 2):
            cons.append(
                IpConstraint(
                    "(7)",
                    f"c7_i{cp.index}_p{p}",
                    ((1, x[(cp.member_a, p)]), (-1, x[(cp.member_b, p)])),
                    "=",
                    0,
                )
            )

    for s in inst.singles:
        i = s.id
        for p, j in enumerate(s.pref_list, 1):
            cj = inst.hospital(j).capacity
            q = inst.rank(j, i)
            terms = [(cj, x[(i, pp)]) for pp in range(p + 1, inst.list_len(i) + 2)]
            terms.append((-cj, theta[(i, p)]))
            terms += rank_set_terms(j, q, coef=-1)
            cons.append(IpConstraint("(8)", f"c8_r{i}_p{p}", _merge(terms), "<=", 0))

    for cp in inst.couples:
        i = cp.index
        ra, rb = cp.member_a, cp.member_b
        proj_a = inst.indiv_pref(ra)
        proj_b = inst.indiv_pref(rb)
        length = len(cp.joint_list)

        # Type 2a: the even member keeps its hospital across p1 < p2.
        for p1 in range(1, length + 1):
            for p2 in range(p1 + 1, length + 1):
                if proj_b[p1 - 1] != proj_b[p2 - 1]:
                    continue
                j = proj_a[p1 - 1]
                q = inst.rank(j, ra)
                special = proj_a[p1 - 1] == proj_b[p1 - 1]
                if special:
                    coef = inst.hospital(j).capacity - 1
                    better = rank_set_terms(j, q, coef=-1, skip_rank=inst.rank(j, rb))
                    tag, stem = "(10)", "c10"
                else:
                    coef = inst.hospital(j).capacity
                    better = rank_set_terms(j, q, coef=-1)
                    tag, stem = "(9)", "c9"
                terms = [(coef, x[(ra, p2)]), (-coef, theta[(ra, p1)])] + better
                cons.append(
                    IpConstraint(
                        tag, f"{stem}_i{i}_p{p1}_{p2}", _merge(terms), "<=", 0
                    )
                )

        # Type 2b: the odd member keeps its hospital across p1 < p2.
        for p1 in range(1, length + 1):
            for p2 in range(p1 + 1, length + 1):
                if proj_a[p1 - 1] != proj_a[p2 - 1]:
                    continue
                j = proj_b[p1 - 1]
                q = inst.rank(j, rb)
                special = proj_a[p1 - 1] == proj_b[p1 - 1]
                if special:
                    coef = inst.hospital(j).capacity - 1
                    better = rank_set_terms(j, q, coef=-1, skip_rank=inst.rank(j, ra))
                    tag, stem = "(11b)", "c11b"
                else:
                    coef = inst.hospital(j).capacity
                    better = rank_set_terms(j, q, coef=-1)
                    tag, stem = "(11)", "c11"
                terms = [(coef, x[(ra, p2)]), (-coef, theta[(ra, p1)])] + better
                cons.append(
                    IpConstraint(
                        tag, f"{stem}_i{i}_p{p1}_{p2}", _merge(terms), "<=", 0
                    )
                )

    for j in range(1, n2 + 1):
        h = inst.hospital(j)
        for q in range(1, len(h.pref_list) + 1):
            terms = [(h.capacity, alpha[(j, q)])] + rank_set_terms(j, q)
            cons.append(
                IpConstraint("(12)", f"c12_h{j}_q{q}", _merge(terms), ">=", h.capacity)
            )
            if h.capacity >= 2:
                terms = [(h.capacity - 1, beta[(j, q)])] + rank_set_terms(j, q)
                cons.append(
                    IpConstraint(
                        "(13)", f"c13_h{j}_q{q}", _merge(terms), ">=", h.capacity - 1
                    )
                )

    for cp in inst.couples:
        i = cp.index
        ra, rb = cp.member_a, cp.member_b
        length = len(cp.joint_list)
        for p, (ja, jb) in enumerate(cp.joint_list, 1):
            qa = inst.rank(ja, ra)
            qb = inst.rank(jb, rb)
            worse = [(1, x[(ra, pp)]) for pp in range(p + 1, length + 2)]
            if ja != jb:
                terms = worse + [
                    (1, alpha[(ja, qa)]),
                    (1, alpha[(jb, qb)]),
                    (-1, theta[(ra, p)]),
                ]
                cons.append(
                    IpConstraint("(14)", f"c14_i{i}_p{p}", _merge(terms), "<=", 2)
                )
            else:
                cj = inst.hospital(ja).capacity
                q_min, q_max = min(qa, qb), max(qa, qb)
                if cj >= 2:
                    # Scaled by (capacity - 1) to clear the fraction.
                    terms = [(cj * (cj - 1), x[(ra, pp)]) for pp in range(p + 1, length + 2)]
                    terms.append((-cj * (cj - 1), theta[(ra, p)]))
                    terms += rank_set_terms(ja, q_min, coef=-1)
                    for q in range(1, len(inst.hospital(ja).pref_list) + 1):
                        for rid, pp in sorted(inst.residents_at_rank(ja, q)):
                            terms.append((-(cj - 1), x[(rid, pp)]))
                    cons.append(
                        IpConstraint("(15)", f"c15_i{i}_p{p}", _merge(terms), "<=", 0)
                    )
                terms = worse + [
                    (1, alpha[(ja, q_max)]),
                    (1, beta[(ja, q_min)]),
                    (-1, theta[(ra, p)]),
                ]
                cons.append(
                    IpConstraint("(16)", f"c16_i{i}_p{p}", _merge(terms), "<=", 2)
                )

    model.constraints = tuple(cons)
    return model


# -- LP text export -------------------------------------------------------------


def _format_terms(terms) -> str:
    if not terms:
        return "0"
    parts = []
    for idx, (coef, var) in enumerate(terms):
        if coef < 0:
            op = "-"
        else:
            op = "+" if idx else ""
        mag = abs(coef)
        body = var if mag == 1 else f"{mag} {var}"
        parts.append(f"{op} {body}".strip() if idx or op == "-" else body)
    return " ".join(parts)


def export_lp(model: IpModel, stage: str = "minbp", k: int | None = None) -> str:
    if stage not in ("minbp", "maxsize"):
        raise HrcError(f"unknown stage {stage!r}")
    if stage == "maxsize" and k is None:
        raise HrcError("maxsize stage requires the blocking-pair bound k")
    lines = [f"/* blocking-pair IP model, stage: {stage} */"]
    if stage == "minbp":
        lines.append(f"min: {_format_terms(model.minbp_objective())};")
    else:
        lines.append(f"max: {_format_terms(model.maxsize_objective())};")
    lines.append("")
    for con in model.constraints:
        lines.append(f"{con.name}: {_format_terms(con.terms)} {con.sense} {con.rhs};")
    if stage == "maxsize":
        cap = model.cap_constraint(k)
        if cap.terms:
            lines.append(f"{cap.name}: {_format_terms(cap.terms)} {cap.sense} {cap.rhs};")
    for name in model.fixed_zero:
        lines.append(f"tz_{name[3:]}: {name} = 0;")
    if model.variables:
        lines.append("")
        lines.append("bin " + ", ".join(model.variables) + ";")
    return "\n".join(lines) + "\n"


# -- assignments ------------------------------------------------------------------


def matching_to_assignment(inst: Instance, m: Matching, model: IpModel) -> dict:
    """The canonical feasible assignment for a matching: x per positions, theta
    per the blocking-pair enumerator, al/be exactly where their inequalities
    force 1 (free choices are left at 0)."""
    a: dict = {}
    for (i, p), name in model.x.items():
        a[name] = 1 if m.position_of(i) == p else 0
    for name in model.theta.values():
        a[name] = 0
    for bp in blocking_pairs(inst, m, StabilityMode.DEF1):
        rid = bp.agent if bp.kind == "single" else 2 * bp.agent - 1
        a[model.theta[(rid, bp.position)]] = 1
    for (j, q), name in model.alpha.items():
        better = sum(1 for r in m.assignees(j) if inst.rank(j, r) < q)
        a[name] = 1 if better < inst.hospital(j).capacity else 0
    for (j, q), name in model.beta.items():
        cj = inst.hospital(j).capacity
        better = sum(1 for r in m.assignees(j) if inst.rank(j, r) < q)
        a[name] = 1 if cj >= 2 and better < cj - 1 else 0
    return a


def verify_assignment(model: IpModel, assignment: dict) -> VerifyReport:
    """Evaluate every constraint; reports violated tags plus both objectives."""
    inst = model.instance
    violated = []

    def val(name):
        if name not in assignment:
            raise HrcError(f"missing value for variable {name}")
        return assignment[name]

    for family, tag in ((model.x, "(1)"), (model.alpha, "(2)"), (model.beta, "(3)"), (model.theta, "(4)")):
        for name in family.values():
            if val(name) not in (0, 1):
                violated.append((tag, name))
    for name in model.fixed_zero:
        if val(name) != 0:
            violated.append(("theta0", name))

    for con in model.constraints:
        total = sum(coef * val(var) for coef, var in con.terms)
        ok = (
            total <= con.rhs
            if con.sense == "<="
            else total >= con.rhs if con.sense == ">=" else total == con.rhs
        )
        if not ok:
            violated.append((con.tag, con.name))

    theta_sum = sum(val(name) for name in model.theta.values())
    x_sum = sum(
        val(name) for (i, p), name in model.x.items() if p <= inst.list_len(i)
    )
    return VerifyReport(
        feasible=not violated,
        violated=tuple(violated),
        theta_sum=theta_sum,
        x_sum=x_sum,
    )


def assignment_to_matching(inst: Instance, assignment: dict) -> Matching:
    """Decode x variables into a matching; requires (5)-(7) to hold."""
    positions = []
    for i in range(1, inst.n1 + 1):
        chosen = [
            p
            for p in range(1, inst.list_len(i) + 2)
            if assignment.get(f"x_{i}_{p}", 0) == 1
        ]
        if len(chosen) != 1:
            raise MatchingError(
                f"(5) violated: resident {i} selects {len(chosen)} positions"
            )
        positions.append(chosen[0])
    for cp in inst.couples:
        if positions[cp.member_a - 1] != positions[cp.member_b - 1]:
            raise MatchingError(f"(7) violated: couple {cp.index} split")
    used: dict = {}
    for i, p in enumerate(positions, 1):
        if p <= inst.list_len(i):
            hid = inst.indiv_pref(i)[p - 1]
            used[hid] = used.get(hid, 0) + 1
    for hid, count in used.items():
        if count > inst.hospital(hid).capacity:
            raise MatchingError(f"(6) violated: hospital {hid} oversubscribed")
    return Matching(inst, tuple(positions))

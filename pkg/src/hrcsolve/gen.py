"""Instance generators: random benchmark instances, the cyclic (2,1,2)
gadget family, and the vertex-cover-on-cubic-graphs reduction.

Random instances follow the experimental protocol: hospitals carry linearly
spaced popularity weights (most popular about ``skew`` times the least), every
hospital gets one guaranteed post with the remaining posts spread by weighted
sampling, residents draw weighted preference lists without replacement, and
hospitals rank their applicants uniformly at random.  Couples draw two
individual lists of a common length and pair them positionwise.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .model import Couple, Hospital, HrcError, Instance, Matching, SingleResident


@dataclass(frozen=True)
class GenParams:
    residents: int
    couples: int
    hospitals: int
    posts: int
    min_len: int
    max_len: int
    skew: float = 6.0
    seed: int = 0

    def check(self) -> None:
        if self.residents < 0 or self.hospitals < 1:
            raise HrcError("need at least one hospital and a nonnegative resident count")
        if 2 * self.couples > self.residents:
            raise HrcError("2 * couples must not exceed the resident count")
        if self.posts < self.hospitals:
            raise HrcError("every hospital needs at least one post")
        if not 1 <= self.min_len <= self.max_len:
            raise HrcError("need 1 <= min_len <= max_len")
        if self.max_len > self.hospitals:
            raise HrcError("max_len exceeds the number of hospitals")
        if self.skew < 1:
            raise HrcError("skew must be at least 1")


def _weighted_sample(rng: random.Random, items: list, weights: list, k: int) -> list:
    """k distinct items drawn by weight without replacement."""
    chosen = []
    pool = list(range(len(items)))
    w = list(weights)
    for _ in range(k):
        total = sum(w[i] for i in pool)
        x = rng.random() * total
        acc = 0.0
        pick = pool[-1]
        for i in pool:
            acc += w[i]
            if x < acc:
                pick = i
                break
        pool.remove(pick)
        chosen.append(items[pick])
    return chosen


def random_instance(params: GenParams) -> Instance:
    """Deterministic-in-seed random HRC instance per the experiment protocol."""
    params.check()
    rng = random.Random(params.seed)
    n2 = params.hospitals
    if n2 > 1:
        weights = [1.0 + (params.skew - 1.0) * j / (n2 - 1) for j in range(n2)]
    else:
        weights = [1.0]
    hids = list(range(1, n2 + 1))

    caps = [1] * n2
    total = sum(weights)
    for _ in range(params.posts - n2):
        x = rng.random() * total
        acc = 0.0
        pick = n2 - 1
        for i in range(n2):
            acc += weights[i]
            if x < acc:
                pick = i
                break
        caps[pick] += 1

    c = params.couples
    n_singles = params.residents - 2 * c
    applicants: dict[int, list[int]] = {h: [] for h in hids}

    couples = []
    for ci in range(1, c + 1):
        length = rng.randint(params.min_len, params.max_len)
        list_a = _weighted_sample(rng, hids, weights, length)
        list_b = _weighted_sample(rng, hids, weights, length)
        pairs = tuple(zip(list_a, list_b))
        couples.append(Couple(ci, pairs))
        for h in set(list_a):
            applicants[h].append(2 * ci - 1)
        for h in set(list_b):
            applicants[h].append(2 * ci)

    singles = []
    for k in range(n_singles):
        rid = 2 * c + 1 + k
        length = rng.randint(params.min_len, params.max_len)
        prefs = tuple(_weighted_sample(rng, hids, weights, length))
        singles.append(SingleResident(rid, prefs))
        for h in prefs:
            applicants[h].append(rid)

    hospitals = []
    for j, h in enumerate(hids):
        ranking = list(applicants[h])
        rng.shuffle(ranking)
        hospitals.append(Hospital(h, caps[j], tuple(ranking)))

    return Instance(singles=tuple(singles), couples=tuple(couples), hospitals=tuple(hospitals))


def experiment1_params(x: int, seed: int) -> GenParams:
    """The resident-sweep shape: x residents, 0.1x couples, 0.1x hospitals, x posts."""
    return GenParams(
        residents=x,
        couples=x // 10,
        hospitals=x // 10,
        posts=x,
        min_len=3,
        max_len=5,
        seed=seed,
    )


# -- cyclic (2,1,2) gadget family ------------------------------------------------


def figure2_instance(n_couples: int, chain_lengths) -> Instance:
    """The cyclic gadget component: couple k's pair is (chain end of block
    k-1, own block hospital), each block followed by ``chain_lengths[k-1]``
    singles over capacity-1 hospitals.  A lone couple with no chain would be a
    fixed assignment and is rejected."""
    n = n_couples
    chain = list(chain_lengths)
    if n < 1:
        raise HrcError("need at least one couple")
    if len(chain) != n:
        raise HrcError(f"need {n} chain lengths, got {len(chain)}")
    if any(x < 0 for x in chain):
        raise HrcError("chain lengths must be nonnegative")
    if n == 1 and chain[0] == 0:
        raise HrcError(
            "a single couple with no chain is a fixed assignment, not a gadget component"
        )

    # Hospital ids: 1 is the closing hospital h0; then per block the couple's
    # own hospital (absent for the last block when its chain is empty), the
    # inner chain hospitals, and a chain-end hospital when the chain is
    # nonempty and another block follows.
    next_h = 2
    own = [0] * (n + 1)  # own[k] = h^1 of block k
    inner = [[] for _ in range(n + 1)]  # inner[k][a-2] = h^a, 2 <= a <= n_k
    end = [0] * (n + 1)  # end[k] = chain-end hospital of block k

    for k in range(1, n + 1):
        if k == n and chain[k - 1] == 0:
            own[k] = 1  # collapses onto the closing hospital
        else:
            own[k] = next_h
            next_h += 1
        for _ in range(max(0, chain[k - 1] - 1)):
            inner[k].append(next_h)
            next_h += 1
    for k in range(1, n + 1):
        if k == n:
            end[k] = 1
        elif chain[k - 1] == 0:
            end[k] = own[k]
        else:
            end[k] = next_h
            next_h += 1
    total_h = next_h - 1

    def block_hosp(k, a):
        # h^a of block k for 1 <= a <= n_k + 1.
        if a == 1:
            return own[k]
        if a <= chain[k - 1]:
            return inner[k][a - 2]
        return end[k]

    # Residents: couples 1..n then the chain singles block by block.
    single_ids = [[] for _ in range(n + 1)]
    rid = 2 * n + 1
    for k in range(1, n + 1):
        for _ in range(chain[k - 1]):
            single_ids[k].append(rid)
            rid += 1
    n1 = rid - 1

    couples = []
    for k in range(1, n + 1):
        entry = 1 if k == 1 else end[k - 1]
        couples.append(Couple(k, ((entry, own[k]),)))

    singles = []
    for k in range(1, n + 1):
        for a, srid in enumerate(single_ids[k], 1):
            first = block_hosp(k, a + 1)
            second = block_hosp(k, a)
            singles.append(SingleResident(srid, (first, second)))
    singles.sort(key=lambda s: s.id)

    hosp_prefs: dict[int, list[int]] = {h: [] for h in range(1, total_h + 1)}
    # Closing hospital: couple 1's first member, then whoever closes the cycle.
    closer = single_ids[n][-1] if chain[n - 1] > 0 else 2 * n
    hosp_prefs[1] = [1, closer]
    for k in range(1, n + 1):
        if own[k] != 1:
            head = single_ids[k][0] if chain[k - 1] > 0 else 2 * k + 1
            hosp_prefs[own[k]] = [head, 2 * k]
        for a in range(2, chain[k - 1] + 1):
            hosp_prefs[block_hosp(k, a)] = [single_ids[k][a - 1], single_ids[k][a - 2]]
        if k < n and chain[k - 1] > 0:
            hosp_prefs[end[k]] = [2 * k + 1, single_ids[k][-1]]

    hospitals = tuple(
        Hospital(h, 1, tuple(hosp_prefs[h])) for h in range(1, total_h + 1)
    )
    return Instance(singles=tuple(singles), couples=tuple(couples), hospitals=hospitals)


# -- vertex cover reduction -------------------------------------------------------


@dataclass(frozen=True)
class CubicGraph:
    n: int
    edges: tuple  # tuple of (u, v) with 1 <= u < v <= n

    def __post_init__(self):
        seen = set()
        deg = [0] * (self.n + 1)
        edges = []
        for u, v in self.edges:
            if not (1 <= u <= self.n and 1 <= v <= self.n) or u == v:
                raise HrcError(f"bad edge ({u},{v})")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise HrcError(f"duplicate edge ({u},{v})")
            seen.add(key)
            edges.append(key)
            deg[u] += 1
            deg[v] += 1
        for v in range(1, self.n + 1):
            if deg[v] != 3:
                raise HrcError(f"vertex {v} has degree {deg[v]}, graph is not cubic")
        object.__setattr__(self, "edges", tuple(edges))

    @classmethod
    def parse(cls, text: str) -> "CubicGraph":
        lines = [l.split("#", 1)[0].split() for l in text.splitlines()]
        lines = [l for l in lines if l]
        if not lines or len(lines[0]) != 2:
            raise HrcError("graph file must start with 'n m'")
        n, m = int(lines[0][0]), int(lines[0][1])
        if len(lines) - 1 != m:
            raise HrcError(f"expected {m} edge lines, got {len(lines) - 1}")
        return cls(n, tuple((int(a), int(b)) for a, b in lines[1:]))

    def is_vertex_cover(self, cover) -> bool:
        cset = set(cover)
        return all(u in cset or v in cset for u, v in self.edges)


class _Vc3Layout:
    """Id bookkeeping for the reduction instance built from (graph, K)."""

    def __init__(self, g: CubicGraph, k: int):
        if not 1 <= k <= g.n:
            raise HrcError(f"K={k} out of range 1..{g.n}")
        self.g = g
        self.k = k
        n, m = g.n, len(g.edges)
        self.nk = n - k

        # Couples first: 2 per edge (r-gadget), 3 per cover slot (f-gadget),
        # 3 per non-cover slot (y-gadget).
        ci = 0
        self.r_couple = {}  # (edge j 1-based, which 1|2) -> couple index
        for j in range(1, m + 1):
            self.r_couple[(j, 1)] = ci + 1
            self.r_couple[(j, 2)] = ci + 2
            ci += 2
        self.f_couple = {}  # (t, which 1|2|3)
        for t in range(1, k + 1):
            for w in (1, 2, 3):
                ci += 1
                self.f_couple[(t, w)] = ci
        self.y_couple = {}
        for t in range(1, self.nk + 1):
            for w in (1, 2, 3):
                ci += 1
                self.y_couple[(t, w)] = ci
        self.num_couples = ci

        rid = 2 * ci
        self.a_res = {t: rid + t for t in range(1, k + 1)}
        rid += k
        self.b_res = {t: rid + t for t in range(1, self.nk + 1)}
        rid += self.nk
        self.x_res = {i: rid + i for i in range(1, n + 1)}
        rid += n
        self.n1 = rid

        hid = 0
        self.g_hosp = {}
        for t in range(1, k + 1):
            for w in (1, 2, 3):
                hid += 1
                self.g_hosp[(t, w)] = hid
        self.h_hosp = {}
        for j in range(1, m + 1):
            for w in (1, 2):
                hid += 1
                self.h_hosp[(j, w)] = hid
        self.p_hosp = {t: hid + t for t in range(1, k + 1)}
        hid += k
        self.q_hosp = {t: hid + t for t in range(1, self.nk + 1)}
        hid += self.nk
        self.z_hosp = {}
        for t in range(1, self.nk + 1):
            for w in (1, 2, 3):
                hid += 1
                self.z_hosp[(t, w)] = hid
        self.n2 = hid

        # Edge/vertex incidence orderings: e_{i,s} is the s-th edge at vertex i
        # by edge index; v_{j,r} is the r-th endpoint of edge j by vertex index.
        self.incident = {i: [] for i in range(1, n + 1)}
        for j, (u, v) in enumerate(g.edges, 1):
            self.incident[u].append((j, 1))
            self.incident[v].append((j, 2))


def vc3_reduce(g: CubicGraph, k: int) -> Instance:
    """The reduction gadget: the instance admits a stable matching exactly when
    the candidate cover selected by the p-hospital cascade covers the graph."""
    lay = _Vc3Layout(g, k)
    n, m = g.n, len(g.edges)

    couples: list = [None] * lay.num_couples

    def set_couple(ci, pair):
        couples[ci - 1] = Couple(ci, (pair,))

    for j in range(1, m + 1):
        h1, h2 = lay.h_hosp[(j, 1)], lay.h_hosp[(j, 2)]
        set_couple(lay.r_couple[(j, 1)], (h1, h2))
        set_couple(lay.r_couple[(j, 2)], (h1, h2))
    for t in range(1, lay.k + 1):
        g1, g2, g3 = (lay.g_hosp[(t, w)] for w in (1, 2, 3))
        set_couple(lay.f_couple[(t, 1)], (g1, g2))
        set_couple(lay.f_couple[(t, 2)], (g2, g3))
        set_couple(lay.f_couple[(t, 3)], (g3, g1))
    for t in range(1, lay.nk + 1):
        z1, z2, z3 = (lay.z_hosp[(t, w)] for w in (1, 2, 3))
        set_couple(lay.y_couple[(t, 1)], (z1, z2))
        set_couple(lay.y_couple[(t, 2)], (z2, z3))
        set_couple(lay.y_couple[(t, 3)], (z3, z1))

    singles = []
    for t in range(1, lay.k + 1):
        singles.append(
            SingleResident(lay.a_res[t], (lay.p_hosp[t], lay.g_hosp[(t, 1)]))
        )
    for t in range(1, lay.nk + 1):
        singles.append(
            SingleResident(lay.b_res[t], (lay.q_hosp[t], lay.z_hosp[(t, 1)]))
        )
    for i in range(1, n + 1):
        prefs = [lay.p_hosp[t] for t in range(1, lay.k + 1)]
        prefs += [lay.h_hosp[jr] for jr in lay.incident[i]]
        prefs += [lay.q_hosp[t] for t in range(1, lay.nk + 1)]
        singles.append(SingleResident(lay.x_res[i], tuple(prefs)))
    singles.sort(key=lambda s: s.id)

    prefs: dict[int, tuple] = {}
    for t in range(1, lay.k + 1):
        f = lambda w: lay.f_couple[(t, w)]
        prefs[lay.g_hosp[(t, 1)]] = (
            lay.a_res[t], 2 * f(1) - 1, 2 * f(3))
        prefs[lay.g_hosp[(t, 2)]] = (2 * f(2) - 1, 2 * f(1))
        prefs[lay.g_hosp[(t, 3)]] = (2 * f(3) - 1, 2 * f(2))
    for t in range(1, lay.nk + 1):
        y = lambda w: lay.y_couple[(t, w)]
        prefs[lay.z_hosp[(t, 1)]] = (
            lay.b_res[t], 2 * y(1) - 1, 2 * y(3))
        prefs[lay.z_hosp[(t, 2)]] = (2 * y(2) - 1, 2 * y(1))
        prefs[lay.z_hosp[(t, 3)]] = (2 * y(3) - 1, 2 * y(2))
    for j, (u, v) in enumerate(g.edges, 1):
        c1 = lay.r_couple[(j, 1)]
        c2 = lay.r_couple[(j, 2)]
        # h_j^1 ranks r_j^1, the x of the lower endpoint, r_j^3;
        # h_j^2 ranks r_j^4, the x of the higher endpoint, r_j^2.
        prefs[lay.h_hosp[(j, 1)]] = (2 * c1 - 1, lay.x_res[u], 2 * c2 - 1)
        prefs[lay.h_hosp[(j, 2)]] = (2 * c2, lay.x_res[v], 2 * c1)
    xs = [lay.x_res[i] for i in range(1, n + 1)]
    for t in range(1, lay.k + 1):
        prefs[lay.p_hosp[t]] = tuple(xs) + (lay.a_res[t],)
    for t in range(1, lay.nk + 1):
        prefs[lay.q_hosp[t]] = tuple(xs) + (lay.b_res[t],)

    hospitals = tuple(
        Hospital(h, 1, prefs[h]) for h in range(1, lay.n2 + 1)
    )
    return Instance(singles=tuple(singles), couples=tuple(couples), hospitals=hospitals)


def vc_to_matching(g: CubicGraph, k: int, cover, inst: Instance) -> Matching:
    """The forward-direction matching built from a size-K vertex cover."""
    cover = sorted(set(cover))
    if len(cover) != k:
        raise HrcError(f"cover has size {len(cover)}, expected exactly {k}")
    if not g.is_vertex_cover(cover):
        raise HrcError("the given vertex set is not a vertex cover")
    lay = _Vc3Layout(g, k)
    non_cover = [v for v in range(1, g.n + 1) if v not in set(cover)]

    assigned: dict[int, int] = {}
    for i, v in enumerate(cover, 1):
        assigned[lay.x_res[v]] = lay.p_hosp[i]
        assigned[lay.a_res[i]] = lay.g_hosp[(i, 1)]
        f2 = lay.f_couple[(i, 2)]
        assigned[2 * f2 - 1] = lay.g_hosp[(i, 2)]
        assigned[2 * f2] = lay.g_hosp[(i, 3)]
    for i, v in enumerate(non_cover, 1):
        assigned[lay.x_res[v]] = lay.q_hosp[i]
        assigned[lay.b_res[i]] = lay.z_hosp[(i, 1)]
        y2 = lay.y_couple[(i, 2)]
        assigned[2 * y2 - 1] = lay.z_hosp[(i, 2)]
        assigned[2 * y2] = lay.z_hosp[(i, 3)]
    cset = set(cover)
    for j, (u, v) in enumerate(g.edges, 1):
        which = lay.r_couple[(j, 2)] if u in cset else lay.r_couple[(j, 1)]
        assigned[2 * which - 1] = lay.h_hosp[(j, 1)]
        assigned[2 * which] = lay.h_hosp[(j, 2)]
    return Matching.from_assignments(inst, assigned)


def petersen_graph(cover_first: bool = True) -> CubicGraph:
    """The Petersen graph; with ``cover_first`` the vertices are labelled so
    that a minimum vertex cover occupies ids 1..6."""
    # Outer cycle o0..o4, inner pentagram i0..i4, spokes o_t - i_t.
    edges = []
    for t in range(5):
        edges.append(("o", t, "o", (t + 1) % 5))
        edges.append(("o", t, "i", t))
        edges.append(("i", t, "i", (t + 2) % 5))
    if cover_first:
        # {o0, o2, o3, i1, i4, i0} hits every edge; give those ids 1..6.
        order = [("o", 0), ("o", 2), ("o", 3), ("i", 1), ("i", 4), ("i", 0),
                 ("o", 1), ("o", 4), ("i", 2), ("i", 3)]
    else:
        order = [("o", t) for t in range(5)] + [("i", t) for t in range(5)]
    ids = {node: i + 1 for i, node in enumerate(order)}
    return CubicGraph(
        10,
        tuple(sorted((min(ids[(a, s)], ids[(b, t)]), max(ids[(a, s)], ids[(b, t)]))
                     for a, s, b, t in edges)),
    )


def k4_graph() -> CubicGraph:
    return CubicGraph(4, ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)))

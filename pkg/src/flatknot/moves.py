"""Reidemeister-move engine on Gauss codes.

Moves are parameterized by a ``MoveSystem``: first moves delete or insert
``d[i]`` consecutive curls of type ``i``, second moves cancel an adjacent
chord pair, and third moves slide one strand of a triangle across the
opposite crossing (same-type triangles only when the system's epsilon bit
allows them, mixed types with the stationary crossing of the lower type
always).

Applicability of a third move is decided against a catalog of realizable
triangle configurations generated from exact line geometry at import
time: three pairwise-crossing oriented lines determine, for each strand,
which of its two crossings comes first, and, for each crossing, the sign
of the frame of the two strand directions.  Only tuples realizable by
actual lines are legal sites, which is what pins down the flat-sign
bookkeeping without case-by-case pictures.

Every rewrite goes through occurrence-tagged tokens: each flat chord
remembers which passage is its *tail* (positive frame against the other
strand), and stored signs are recomputed from tail positions after the
rewrite.  This keeps the word-order-relative sign convention of
``codes.GaussCode`` exact under arbitrary splicing and reversal.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, asdict
from fractions import Fraction

from .codes import Classical, Flat, GaussCode, MoveSystem, Passage
from .errors import BudgetExceeded, PreconditionError, ValidationError

__all__ = [
    "R1Delete",
    "R1Insert",
    "R2Delete",
    "R2Insert",
    "R3Slide",
    "enumerate_moves",
    "apply_move",
    "inverse_of",
    "scramble",
    "replay",
    "site_to_dict",
    "site_from_dict",
    "canonical_state_form",
    "reduce_flat_state",
    "canonical_flat_key",
]


# -- token machinery ---------------------------------------------------------

Token = tuple[int, str, int]  # (chord id, role, occurrence index 0/1)


def _tokens(g: GaussCode) -> tuple[list[list[Token]], dict[int, int]]:
    comps: list[list[Token]] = []
    count: dict[int, int] = {}
    for comp in g.components:
        toks = []
        for p in comp:
            occ = count.get(p.id, 0)
            count[p.id] = occ + 1
            toks.append((p.id, p.role, occ))
        comps.append(toks)
    tails = {
        cid: (0 if kind.sign == 1 else 1)
        for cid, kind in g.crossings.items()
        if isinstance(kind, Flat)
    }
    return comps, tails


def _rebuild(comps: list[list[Token]], crossings: dict, tails: dict[int, int]) -> GaussCode:
    first_occ: dict[int, int] = {}
    for comp in comps:
        for cid, _, occ in comp:
            first_occ.setdefault(cid, occ)
    new_crossings = {}
    for cid, kind in crossings.items():
        if isinstance(kind, Flat):
            new_crossings[cid] = Flat(kind.type, 1 if tails[cid] == first_occ[cid] else -1)
        else:
            new_crossings[cid] = kind
    code = GaussCode(
        tuple(tuple(Passage(cid, role) for cid, role, _ in comp) for comp in comps),
        new_crossings,
    )
    code.validate()
    return code


def _tail_occ(g: GaussCode, cid: int) -> int:
    """Occurrence index (0 = first in word order) of the chord's tail.

    The tail of a chord is the passage whose frame against the other
    strand is positive; for a classical chord that is the overpass when
    the writhe sign is positive and the underpass otherwise.
    """
    kind = g.crossings[cid]
    if isinstance(kind, Flat):
        return 0 if kind.sign == 1 else 1
    roles = [
        p.role
        for comp in g.components
        for p in comp
        if p.id == cid
    ]
    over_occ = roles.index("O")
    return over_occ if kind.sign == 1 else 1 - over_occ


def _type_of(kind) -> int:
    return 0 if isinstance(kind, Classical) else kind.type


# -- move sites --------------------------------------------------------------


@dataclass(frozen=True)
class R1Delete:
    comp: int
    pos: int
    count: int
    chords: tuple[int, ...]


@dataclass(frozen=True)
class R1Insert:
    comp: int
    gap: int
    count: int
    type: int
    sign: int  # classical: writhe sign; flat: +1 for tail-first curls
    over_first: bool = False  # classical only


@dataclass(frozen=True)
class R2Delete:
    pair1: tuple[int, int]  # (component, start position) of one adjacency
    pair2: tuple[int, int]
    chords: tuple[int, int]


@dataclass(frozen=True)
class R2Insert:
    gap1: tuple[int, int]  # (component, gap)
    gap2: tuple[int, int]
    type: int
    parallel: bool
    chirality: int  # +1: tail/positive chord sits on the pair1 side
    over_on_first: bool = False  # classical only


@dataclass(frozen=True)
class R3Slide:
    pairs: tuple[tuple[int, int], tuple[int, int], tuple[int, int]]
    chords: tuple[int, int, int]


_SITE_KINDS = {
    "r1_delete": R1Delete,
    "r1_insert": R1Insert,
    "r2_delete": R2Delete,
    "r2_insert": R2Insert,
    "r3_slide": R3Slide,
}


def site_to_dict(site) -> dict:
    for name, cls in _SITE_KINDS.items():
        if isinstance(site, cls):
            return {"move": name, **asdict(site)}
    raise TypeError(f"unknown site {site!r}")


def site_from_dict(data: dict):
    data = dict(data)
    cls = _SITE_KINDS[data.pop("move")]
    for key in ("chords", "pair1", "pair2", "gap1", "gap2"):
        if key in data:
            data[key] = tuple(data[key])
    if "pairs" in data:
        data["pairs"] = tuple(tuple(p) for p in data["pairs"])
    return cls(**data)


# -- triangle catalog --------------------------------------------------------


def _line_point(offset, direction, t):
    return (offset[0] + t * direction[0], offset[1] + t * direction[1])


def _intersect(o1, d1, o2, d2):
    det = d1[0] * d2[1] - d1[1] * d2[0]
    if det == 0:
        return None
    rx, ry = o2[0] - o1[0], o2[1] - o1[1]
    t1 = Fraction(rx * d2[1] - ry * d2[0], det)
    t2 = Fraction(rx * d1[1] - ry * d1[0], det)
    return t1, t2


def _build_r3_catalog() -> frozenset:
    dirs = [(1, 0), (0, 1), (1, 1), (1, -1), (-1, 0), (0, -1), (-1, -1), (-1, 1)]
    offsets = [
        (Fraction(0), Fraction(0)),
        (Fraction(1, 3), Fraction(1, 7)),
        (Fraction(2, 5), Fraction(3, 11)),
    ]
    catalog = set()
    for d1, d2, d3 in itertools.product(dirs, repeat=3):
        for o1, o2, o3 in itertools.permutations(offsets):
            i12 = _intersect(o1, d1, o2, d2)
            i13 = _intersect(o1, d1, o3, d3)
            i23 = _intersect(o2, d2, o3, d3)
            if i12 is None or i13 is None or i23 is None:
                continue
            # distinct triangle corners
            px = _line_point(o1, d1, i12[0])
            py = _line_point(o1, d1, i13[0])
            pz = _line_point(o2, d2, i23[0])
            if px == py or px == pz or py == pz:
                continue
            first_a = "x" if i12[0] < i13[0] else "y"
            first_b = "x" if i12[1] < i23[0] else "z"
            first_c = "y" if i13[1] < i23[1] else "z"
            det_x = 1 if d1[0] * d2[1] - d1[1] * d2[0] > 0 else -1
            det_y = 1 if d1[0] * d3[1] - d1[1] * d3[0] > 0 else -1
            det_z = 1 if d2[0] * d3[1] - d2[1] * d3[0] > 0 else -1
            catalog.add((first_a, first_b, first_c, det_x, det_y, det_z))
    return frozenset(catalog)


R3_CATALOG = _build_r3_catalog()


# -- enumeration -------------------------------------------------------------


def _adjacent_pairs(g: GaussCode):
    """All (component, pos) adjacencies with two distinct chords."""
    for ci, comp in enumerate(g.components):
        m = len(comp)
        if m < 2:
            continue
        for pos in range(m):
            a, b = comp[pos], comp[(pos + 1) % m]
            if a.id != b.id:
                yield ci, pos, a, b


def _r1_delete_sites(g: GaussCode, ms: MoveSystem):
    sites = []
    seen_full = set()
    for ci, comp in enumerate(g.components):
        m = len(comp)
        for pos in range(m):
            if comp[pos].id != comp[(pos + 1) % m].id:
                continue
            cid = comp[pos].id
            kind = g.crossings[cid]
            typ = _type_of(kind)
            d = ms.d[typ] if typ <= ms.k else 0
            if d == 0 or 2 * d > m:
                continue
            chords = []
            handed = []
            ok = True
            for i in range(d):
                p0, p1 = (pos + 2 * i) % m, (pos + 2 * i + 1) % m
                c0, c1 = comp[p0], comp[p1]
                if c0.id != c1.id or c0.id in chords:
                    ok = False
                    break
                k = g.crossings[c0.id]
                if _type_of(k) != typ:
                    ok = False
                    break
                if isinstance(k, Classical):
                    handed.append((k.sign, c0.role))
                else:
                    # local chirality: does the tail sit at the curl's first slot
                    positions = g.passage_positions(c0.id)
                    tail_at_p0 = positions[_tail_occ_from_positions(g, c0.id, positions)] == (ci, p0)
                    handed.append((tail_at_p0,))
                chords.append(c0.id)
            if ok and len(set(handed)) == 1:
                if 2 * d == m:
                    # the block is the whole component; starts two apart repeat
                    key = (ci, frozenset(chords))
                    if key in seen_full:
                        continue
                    seen_full.add(key)
                sites.append(R1Delete(ci, pos, d, tuple(chords)))
    return sites


def _r2_delete_sites(g: GaussCode, ms: MoveSystem):
    pairs = list(_adjacent_pairs(g))
    sites = []
    seen = set()
    for (c1, p1, a1, b1), (c2, p2, a2, b2) in itertools.combinations(pairs, 2):
        if {a1.id, b1.id} != {a2.id, b2.id}:
            continue
        x, y = a1.id, b1.id
        kx, ky = g.crossings[x], g.crossings[y]
        if _type_of(kx) != _type_of(ky) or _type_of(kx) > ms.k:
            continue
        positions = {(c1, p1), (c1, (p1 + 1) % len(g.components[c1])),
                     (c2, p2), (c2, (p2 + 1) % len(g.components[c2]))}
        if len(positions) != 4:
            continue
        if isinstance(kx, Classical):
            # one strand passes over at both crossings, signs cancel
            if not (a1.role == b1.role and a2.role == b2.role and a1.role != a2.role):
                continue
            if kx.sign != -ky.sign:
                continue
        else:
            tx = 1 if _first_passage_in_pair(g, x, (c1, p1)) else -1
            ty = 1 if _first_passage_in_pair(g, y, (c1, p1)) else -1
            if tx * ty != -1:
                continue
        key = frozenset([(c1, p1), (c2, p2)])
        if key in seen:
            continue
        seen.add(key)
        sites.append(R2Delete((c1, p1), (c2, p2), (x, y)))
    return sites


def _first_passage_in_pair(g: GaussCode, cid: int, pair: tuple[int, int]) -> bool:
    """True when the chord's tail passage lies inside the given adjacency."""
    ci, pos = pair
    m = len(g.components[ci])
    slots = {(ci, pos), (ci, (pos + 1) % m)}
    positions = g.passage_positions(cid)
    tail = positions[_tail_occ_from_positions(g, cid, positions)]
    return tail in slots


def _tail_occ_from_positions(g: GaussCode, cid: int, positions) -> int:
    kind = g.crossings[cid]
    if isinstance(kind, Flat):
        return 0 if kind.sign == 1 else 1
    roles = [g.components[ci][pi].role for ci, pi in positions]
    over_occ = roles.index("O")
    return over_occ if kind.sign == 1 else 1 - over_occ


def _r3_sites(g: GaussCode, ms: MoveSystem):
    pairs = list(_adjacent_pairs(g))
    sites = []
    for (ca, pa, a1, a2), (cb, pb, b1, b2), (cc, pc, c1, c2) in itertools.combinations(pairs, 3):
        ids_a, ids_b, ids_c = {a1.id, a2.id}, {b1.id, b2.id}, {c1.id, c2.id}
        if len(ids_a | ids_b | ids_c) != 3:
            continue
        shared_ab = ids_a & ids_b
        shared_ac = ids_a & ids_c
        shared_bc = ids_b & ids_c
        if len(shared_ab) != 1 or len(shared_ac) != 1 or len(shared_bc) != 1:
            continue
        slots = set()
        for ci, pos in ((ca, pa), (cb, pb), (cc, pc)):
            m = len(g.components[ci])
            slots.update({(ci, pos), (ci, (pos + 1) % m)})
        if len(slots) != 6:
            continue
        x, y, z = shared_ab.pop(), shared_ac.pop(), shared_bc.pop()
        if _r3_applicable(g, ms, (ca, pa), (cb, pb), (cc, pc), x, y, z):
            sites.append(R3Slide(((ca, pa), (cb, pb), (cc, pc)), (x, y, z)))
    return sites


def _r3_applicable(g, ms, qa, qb, qc, x, y, z) -> bool:
    tx, ty, tz = (_type_of(g.crossings[i]) for i in (x, y, z))
    # a legal slide needs one strand whose two crossings share a type
    legal = False
    for (i, j, k) in ((tx, ty, tz), (ty, tx, tz), (tz, tx, ty)):
        # strand opposite the i-typed crossing carries the j and k crossings
        if j == k and (i < j or (i == j and i <= ms.k and ms.epsilon[i] == 1)) and max(i, j) <= ms.k:
            legal = True
            break
    if not legal:
        return False
    if tx == ty == tz == 0:
        # classical triangle: the over/under relation must be acyclic
        rel = {}
        for cid, (s1, s2) in ((x, ("A", "B")), (y, ("A", "C")), (z, ("B", "C"))):
            positions = g.passage_positions(cid)
            strand_of = {}
            for ci, pi in positions:
                for name, (cq, pq) in (("A", qa), ("B", qb), ("C", qc)):
                    m = len(g.components[cq])
                    if (ci, pi) in {(cq, pq), (cq, (pq + 1) % m)}:
                        strand_of[(ci, pi)] = name
            over_strand = next(
                strand_of[(ci, pi)]
                for ci, pi in positions
                if g.components[ci][pi].role == "O"
            )
            under_strand = s1 if over_strand == s2 else s2
            rel[(over_strand, under_strand)] = True
        heights = {("A", "B"), ("A", "C"), ("B", "C")}
        cyc1 = {("A", "B"), ("B", "C"), ("C", "A")}
        cyc2 = {("B", "A"), ("C", "B"), ("A", "C")}
        if set(rel) in (cyc1, cyc2):
            return False
    # geometric realizability from the line catalog
    entry = _r3_entry(g, qa, qb, qc, x, y, z)
    return entry in R3_CATALOG


def _r3_entry(g, qa, qb, qc, x, y, z):
    def first_of(q, i, j):
        ci, pos = q
        return "xyz"[(x, y, z).index(i)] if g.components[ci][pos].id == i else "xyz"[(x, y, z).index(j)]

    first_a = first_of(qa, x, y)
    first_b = first_of(qb, x, z)
    first_c = first_of(qc, y, z)
    det_x = 1 if _first_passage_in_pair(g, x, qa) else -1
    det_y = 1 if _first_passage_in_pair(g, y, qa) else -1
    det_z = 1 if _first_passage_in_pair(g, z, qb) else -1
    return (first_a, first_b, first_c, det_x, det_y, det_z)


def enumerate_moves(
    g: GaussCode,
    ms: MoveSystem,
    include_insertions: bool = False,
    max_insertions: int = 64,
    forbid_classical_r1: bool = False,
):
    """Applicable move sites: all deletions and slides, plus (optionally)
    a bounded batch of insertion sites."""
    sites: list = []
    for site in _r1_delete_sites(g, ms):
        if forbid_classical_r1 and isinstance(g.crossings[site.chords[0]], Classical):
            continue
        sites.append(site)
    sites.extend(_r2_delete_sites(g, ms))
    sites.extend(_r3_sites(g, ms))
    if include_insertions:
        count = 0
        for ci, comp in enumerate(g.components):
            for gap in range(len(comp) + 1):
                for typ in range(0, ms.k + 1):
                    if not ms.allows_r1(typ) or (forbid_classical_r1 and typ == 0):
                        continue
                    for sign in (1, -1):
                        if typ == 0:
                            for over_first in (True, False):
                                sites.append(R1Insert(ci, gap, ms.d[typ], typ, sign, over_first))
                                count += 1
                        else:
                            sites.append(R1Insert(ci, gap, ms.d[typ], typ, sign))
                            count += 1
                        if count >= max_insertions:
                            return sites
    return sites


# -- application -------------------------------------------------------------


def _fresh_ids(g: GaussCode, n: int) -> list[int]:
    base = max(g.crossings, default=0)
    return [base + 1 + i for i in range(n)]


def apply_move(g: GaussCode, site) -> GaussCode:
    comps, tails = _tokens(g)
    if isinstance(site, R1Delete):
        _check_site(site in _r1_delete_sites_at(g, site), site)
        comp = comps[site.comp]
        m = len(comp)
        drop = {(site.pos + i) % m for i in range(2 * site.count)}
        comps[site.comp] = [tok for i, tok in enumerate(comp) if i not in drop]
        crossings = {cid: k for cid, k in g.crossings.items() if cid not in site.chords}
        tails = {cid: occ for cid, occ in tails.items() if cid not in site.chords}
        return _rebuild(comps, crossings, tails)

    if isinstance(site, R1Insert):
        if not (0 <= site.comp < len(comps) and 0 <= site.gap <= len(comps[site.comp])):
            raise PreconditionError(f"stale move site {site}")
        ids = _fresh_ids(g, site.count)
        crossings = dict(g.crossings)
        block: list[Token] = []
        for cid in ids:
            if site.type == 0:
                crossings[cid] = Classical(site.sign)
                r1, r2 = ("O", "U") if site.over_first else ("U", "O")
                block += [(cid, r1, 0), (cid, r2, 1)]
            else:
                crossings[cid] = Flat(site.type, site.sign)
                tails[cid] = 0 if site.sign == 1 else 1
                block += [(cid, "S", 0), (cid, "S", 1)]
        comps[site.comp][site.gap:site.gap] = block
        return _rebuild(comps, crossings, tails)

    if isinstance(site, R2Delete):
        _check_site(site in _r2_delete_sites_at(g, site), site)
        x, y = site.chords
        comps = [[tok for tok in comp if tok[0] not in (x, y)] for comp in comps]
        crossings = {cid: k for cid, k in g.crossings.items() if cid not in (x, y)}
        tails = {cid: occ for cid, occ in tails.items() if cid not in (x, y)}
        return _rebuild(comps, crossings, tails)

    if isinstance(site, R2Insert):
        (c1, g1), (c2, g2) = site.gap1, site.gap2
        if not (
            0 <= c1 < len(comps)
            and 0 <= c2 < len(comps)
            and 0 <= g1 <= len(comps[c1])
            and 0 <= g2 <= len(comps[c2])
        ):
            raise PreconditionError(f"stale move site {site}")
        cx, cy = _fresh_ids(g, 2)
        crossings = dict(g.crossings)
        if site.type == 0:
            sx = site.chirality
            crossings[cx] = Classical(sx)
            crossings[cy] = Classical(-sx)
            r_first = "O" if site.over_on_first else "U"
            r_second = "U" if site.over_on_first else "O"
            block1 = [(cx, r_first, 0), (cy, r_first, 0)]
            if site.parallel:
                block2 = [(cx, r_second, 1), (cy, r_second, 1)]
            else:
                block2 = [(cy, r_second, 1), (cx, r_second, 1)]
        else:
            crossings[cx] = Flat(site.type, 1)
            crossings[cy] = Flat(site.type, 1)
            # tails on opposite sides of the bigon
            tails[cx] = 0 if site.chirality == 1 else 1
            tails[cy] = 1 if site.chirality == 1 else 0
            block1 = [(cx, "S", 0), (cy, "S", 0)]
            if site.parallel:
                block2 = [(cx, "S", 1), (cy, "S", 1)]
            else:
                block2 = [(cy, "S", 1), (cx, "S", 1)]
        if c1 != c2:
            comps[c1][g1:g1] = block1
            comps[c2][g2:g2] = block2
        elif g1 < g2:
            comps[c2][g2:g2] = block2
            comps[c1][g1:g1] = block1
        elif g1 > g2:
            comps[c1][g1:g1] = block1
            comps[c2][g2:g2] = block2
        else:
            comps[c1][g1:g1] = block2
            comps[c1][g1:g1] = block1
        return _rebuild(comps, crossings, tails)

    if isinstance(site, R3Slide):
        if site not in _r3_sites(g, _PERMISSIVE):
            raise PreconditionError(f"stale move site {site}")
        for ci, pos in site.pairs:
            comp = comps[ci]
            m = len(comp)
            comp[pos], comp[(pos + 1) % m] = comp[(pos + 1) % m], comp[pos]
        return _rebuild(comps, dict(g.crossings), tails)

    raise TypeError(f"unknown move site {site!r}")


# sites are rechecked against a permissive system: legality under the
# caller's system was decided at enumeration time, staleness is geometric
_PERMISSIVE = MoveSystem(64, (1,) * 65, (1,) * 65)


def _check_site(ok: bool, site) -> None:
    if not ok:
        raise PreconditionError(f"stale move site {site}")


def _r1_delete_sites_at(g: GaussCode, site: R1Delete):
    k = 64
    ms = MoveSystem(k, (site.count,) * (k + 1), (1,) * (k + 1))
    return [s for s in _r1_delete_sites(g, ms) if s == site]


def _r2_delete_sites_at(g: GaussCode, site: R2Delete):
    return [s for s in _r2_delete_sites(g, _PERMISSIVE) if s == site]


def inverse_of(g: GaussCode, site):
    """The paired site undoing ``site`` on ``apply_move(g, site)``.

    Deletions whose block wraps the end of the stored word restore the
    diagram only up to rotation; those report no exact inverse.
    """
    if isinstance(site, R1Delete):
        comp = g.components[site.comp]
        if site.pos + 2 * site.count > len(comp):
            return None
        cid = site.chords[0]
        kind = g.crossings[cid]
        if isinstance(kind, Classical):
            return R1Insert(
                site.comp, site.pos, site.count, 0, kind.sign,
                comp[site.pos].role == "O",
            )
        sign = 1 if _tail_occ(g, cid) == _occ_at(g, site.comp, site.pos) else -1
        return R1Insert(site.comp, site.pos, site.count, kind.type, sign)
    if isinstance(site, R1Insert):
        return R1Delete(
            site.comp,
            site.gap,
            site.count,
            tuple(_fresh_ids(g, site.count)),
        )
    if isinstance(site, R2Insert):
        (c1, g1), (c2, g2) = site.gap1, site.gap2
        p1, p2 = g1, g2
        if c1 == c2:
            if g2 >= g1:
                p2 = g2 + 2
            else:
                p1 = g1 + 2
        return R2Delete((c1, p1), (c2, p2), tuple(_fresh_ids(g, 2)))
    if isinstance(site, R3Slide):
        return site
    if isinstance(site, R2Delete):
        (c1, p1), (c2, p2) = site.pair1, site.pair2
        m1, m2 = len(g.components[c1]), len(g.components[c2])
        if p1 + 1 >= m1 or p2 + 1 >= m2:
            return None
        x, y = site.chords
        kx = g.crossings[x]
        parallel = g.components[c2][p2].id == x
        gap2 = p2 - (2 if c1 == c2 else 0)
        if isinstance(kx, Classical):
            return R2Insert(
                (c1, p1), (c2, gap2), 0, parallel,
                kx.sign, g.components[c1][p1].role == "O",
            )
        chirality = 1 if _first_passage_in_pair(g, x, site.pair1) else -1
        return R2Insert((c1, p1), (c2, gap2), kx.type, parallel, chirality)
    raise TypeError(f"unknown move site {site!r}")


def _occ_at(g: GaussCode, ci: int, pos: int) -> int:
    cid = g.components[ci][pos].id
    positions = g.passage_positions(cid)
    return positions.index((ci, pos))


# -- scrambling --------------------------------------------------------------


def scramble(
    g: GaussCode,
    ms: MoveSystem,
    seed: int,
    steps: int,
    forbid_classical_r1: bool = False,
    max_chords: int = 14,
    trace: list | None = None,
):
    """Random walk of legal moves; the result is equivalent to ``g`` under
    ``ms`` by construction.  Deterministic for a fixed seed.  When
    ``forbid_classical_r1`` is set the writhe is preserved.
    """
    rng = random.Random(seed)
    for _ in range(steps):
        options = enumerate_moves(g, ms, forbid_classical_r1=forbid_classical_r1)
        if len(g.crossings) < max_chords:
            options.extend(_insertion_proposals(g, ms, rng, forbid_classical_r1))
        if not options:
            continue
        site = options[rng.randrange(len(options))]
        g = apply_move(g, site)
        if trace is not None:
            trace.append(site_to_dict(site))
    return g


def _insertion_proposals(g, ms, rng, forbid_classical_r1, n=6):
    out = []
    types = [i for i in range(ms.k + 1) if i > 0 or not forbid_classical_r1]
    ncomp = len(g.components)
    for _ in range(n):
        kind = rng.choice(["r1", "r2", "r2"])
        if kind == "r1":
            candidates = [i for i in types if ms.allows_r1(i)]
            if not candidates:
                continue
            typ = rng.choice(candidates)
            ci = rng.randrange(ncomp)
            gap = rng.randrange(len(g.components[ci]) + 1)
            if typ == 0:
                out.append(R1Insert(ci, gap, ms.d[0], 0, rng.choice([1, -1]), rng.random() < 0.5))
            else:
                out.append(R1Insert(ci, gap, ms.d[typ], typ, rng.choice([1, -1])))
        else:
            typ = rng.choice(types)
            c1 = rng.randrange(ncomp)
            c2 = rng.randrange(ncomp)
            g1 = rng.randrange(len(g.components[c1]) + 1)
            g2 = rng.randrange(len(g.components[c2]) + 1)
            if typ == 0:
                out.append(
                    R2Insert((c1, g1), (c2, g2), 0, rng.random() < 0.5,
                             rng.choice([1, -1]), rng.random() < 0.5)
                )
            else:
                out.append(
                    R2Insert((c1, g1), (c2, g2), typ, rng.random() < 0.5, rng.choice([1, -1]))
                )
    return out


def replay(g: GaussCode, log: list[dict]) -> GaussCode:
    """Re-apply a serialized move log (as produced by ``scramble`` traces)."""
    for entry in log:
        g = apply_move(g, site_from_dict(entry))
    return g


# -- kink macros ---------------------------------------------------------------
#
# Monotone second/third-move descent alone cannot cancel two opposite
# kinks of the same type (the Whitney trick passes through a transient
# second-move insertion), and a kink can always be slid along its strand
# past another passage by a sweep of second/third moves.  Both composites
# are size-nonincreasing, so the state reduction uses them as extra
# search edges.  A sweep of type j is available when every crossing type
# passed is below j, or equal to j with the same-type third move enabled.


def _sweep_type_available(ms: MoveSystem, passed_types) -> bool:
    for j in range(1, ms.k + 1):
        if all(t < j or (t == j and ms.epsilon[j] == 1) for t in passed_types):
            return True
    return False


def _curl_blocks(g: GaussCode):
    """Curls as (comp, pos, chord, tail_at_first_slot)."""
    out = []
    for ci, comp in enumerate(g.components):
        m = len(comp)
        if m < 2:
            continue
        for pos in range(m):
            a, b = comp[pos], comp[(pos + 1) % m]
            if a.id != b.id:
                continue
            if m == 2 and pos == 1:
                continue
            positions = g.passage_positions(a.id)
            tail_first = positions[_tail_occ_from_positions(g, a.id, positions)] == (ci, pos)
            out.append((ci, pos, a.id, tail_first))
    return out


def _kink_slide_results(g: GaussCode, ms: MoveSystem):
    results = []
    comps, tails = _tokens(g)
    for ci, pos, cid, _ in _curl_blocks(g):
        comp = comps[ci]
        m = len(comp)
        if m < 3:
            continue
        for forward in (True, False):
            other_pos = (pos + 2) % m if forward else (pos - 1) % m
            other = comp[other_pos]
            if other[0] == cid:
                continue
            typ = _type_of(g.crossings[other[0]])
            if not _sweep_type_available(ms, [typ]):
                continue
            new_comp = list(comp)
            block = [new_comp[pos], new_comp[(pos + 1) % m]]
            # remove block, then reinsert on the other side of the passage
            idx = sorted(((pos) % m, (pos + 1) % m), reverse=True)
            for i in idx:
                del new_comp[i]
            target = new_comp.index(other)
            if forward:
                new_comp[target + 1:target + 1] = block
            else:
                new_comp[target:target] = block
            comps2 = [list(c) for c in comps]
            comps2[ci] = new_comp
            results.append(_rebuild(comps2, dict(g.crossings), dict(tails)))
    return results


def _kink_cancel_results(g: GaussCode, ms: MoveSystem):
    results = []
    comps, tails = _tokens(g)
    blocks = _curl_blocks(g)
    by_comp: dict[int, list] = {}
    for ci, pos, cid, tail_first in blocks:
        by_comp.setdefault(ci, []).append((pos, cid, tail_first))
    for ci, items in by_comp.items():
        m = len(g.components[ci])
        for pos, cid, tail_first in items:
            for pos2, cid2, tail_first2 in items:
                if cid2 == cid or (pos + 2) % m != pos2:
                    continue
                k1, k2 = g.crossings[cid], g.crossings[cid2]
                if not isinstance(k1, Flat) or not isinstance(k2, Flat):
                    continue
                if k1.type != k2.type or tail_first == tail_first2:
                    continue
                if not _sweep_type_available(ms, [k1.type]):
                    continue
                comps2 = [[t for t in comp if t[0] not in (cid, cid2)] for comp in comps]
                crossings = {c: k for c, k in g.crossings.items() if c not in (cid, cid2)}
                tails2 = {c: o for c, o in tails.items() if c not in (cid, cid2)}
                results.append(_rebuild(comps2, crossings, tails2))
    return results


# -- canonical forms of flat states -------------------------------------------


def canonical_state_form(g: GaussCode) -> str:
    """Lexicographically least spelling of a flat-only code over component
    order, rotation, per-component orientation reversal, and global
    reflection, with induced flat-sign flips."""
    entries = _canonical_entries(g)
    if entries is None:
        return ""
    return _render_entries(entries)


def _render_entries(entries) -> str:
    chunks: list[list[str]] = [[]]
    for e in entries:
        if e == _SEP:
            chunks.append([])
        else:
            typ, cid, sign = e
            chunks[-1].append(f"F{typ}.{cid}{'+' if sign > 0 else '-'}")
    return " ; ".join(" ".join(c) for c in chunks)


_SEP = (-1, 0, 0)


def _canonical_entries(g: GaussCode):
    if any(isinstance(k, Classical) for k in g.crossings.values()):
        raise PreconditionError("canonical flat form is defined for flat-only codes")
    comps, tails = _tokens(g)
    comps = [c for c in comps if c]
    if not comps:
        return None
    ncomp = len(comps)
    if ncomp > 10:
        raise BudgetExceeded("too many components for canonical search")
    comp_of: dict[tuple[int, int], int] = {}
    for ci, comp in enumerate(comps):
        for cid, _, occ in comp:
            comp_of[(cid, occ)] = ci
    types = {cid: g.crossings[cid].type for cid in tails}

    best: list | None = None

    def candidate(reflect: int, revs: tuple[int, ...]):
        nonlocal best
        eff_tails = {}
        for cid in tails:
            ca, cb = comp_of[(cid, 0)], comp_of[(cid, 1)]
            flip = reflect ^ ((revs[ca] ^ revs[cb]) if ca != cb else 0)
            eff_tails[cid] = tails[cid] ^ flip
        variants = []
        for ci, comp in enumerate(comps):
            toks = [(cid, occ) for cid, _, occ in comp]
            if revs[ci]:
                toks = list(reversed(toks))
            m = len(toks)
            variants.append([toks[r:] + toks[:r] for r in range(m)])

        def search(order_remaining: list[int], prefix: list, idmap: dict, signs: dict):
            nonlocal best
            if not order_remaining:
                if best is None or prefix < best:
                    best = list(prefix)
                return
            for ci in sorted(order_remaining):
                for toks in variants[ci]:
                    new_prefix = list(prefix)
                    if prefix:
                        new_prefix.append(_SEP)
                    idmap2 = dict(idmap)
                    signs2 = dict(signs)
                    viable = True
                    for cid, occ in toks:
                        if cid not in idmap2:
                            idmap2[cid] = len(idmap2) + 1
                            signs2[cid] = 1 if eff_tails[cid] == occ else -1
                        new_prefix.append((types[cid], idmap2[cid], signs2[cid]))
                        if best is not None and new_prefix > best[: len(new_prefix)]:
                            viable = False
                            break
                    if not viable:
                        continue
                    if best is not None and new_prefix > best[: len(new_prefix)]:
                        continue
                    search([c for c in order_remaining if c != ci], new_prefix, idmap2, signs2)

        search(list(range(ncomp)), [], {}, {})

    for reflect in (0, 1):
        for revs in itertools.product((0, 1), repeat=ncomp):
            candidate(reflect, revs)
    return best


def reduce_flat_state(g: GaussCode, ms: MoveSystem, budget: int):
    """Reduce a flat-only code with second-move deletions and legal third
    moves; returns (canonical key, circles shed, saturated).

    The key identifies the fully reduced chorded part ("()" when nothing
    is left); ``shed`` counts components that became bare circles along
    the way, including those bare from the start.
    """
    if budget <= 0:
        raise BudgetExceeded("canonicalization budget must be positive")
    from collections import deque

    start, shed0 = _strip_circles(g)
    start_key = canonical_state_form(start)
    rep: dict[str, GaussCode] = {start_key: start}
    shed: dict[str, int] = {start_key: shed0}
    queue = deque([start_key])
    visited = 0
    saturated = True
    while queue:
        if visited >= budget:
            saturated = False
            break
        key = queue.popleft()
        visited += 1
        cur = rep[key]
        neighbors = []
        for site in _r2_delete_sites(cur, ms):
            neighbors.append(apply_move(cur, site))
        for site in _r3_sites(cur, ms):
            neighbors.append(apply_move(cur, site))
        neighbors.extend(_kink_slide_results(cur, ms))
        neighbors.extend(_kink_cancel_results(cur, ms))
        for nxt in neighbors:
            nxt2, extra = _strip_circles(nxt)
            nkey = canonical_state_form(nxt2)
            total = shed[key] + extra
            if nkey in shed:
                if shed[nkey] != total:
                    raise AssertionError("inconsistent circle count during reduction")
                continue
            rep[nkey] = nxt2
            shed[nkey] = total
            queue.append(nkey)
    min_chords = min(len(rep[k].crossings) for k in rep)
    minimal = [k for k in rep if len(rep[k].crossings) == min_chords]
    sheds = {shed[k] for k in minimal}
    if len(sheds) != 1:
        raise AssertionError("reduction reached minimal states with unequal circle counts")
    if min_chords == 0:
        return "()", shed[minimal[0]], saturated
    return min(minimal), shed[minimal[0]], saturated


def _strip_circles(g: GaussCode) -> tuple[GaussCode, int]:
    keep = tuple(c for c in g.components if c)
    circles = len(g.components) - len(keep)
    if circles == 0:
        return g, 0
    return GaussCode(keep, g.crossings), circles


def canonical_flat_key(g: GaussCode, ms: MoveSystem, budget: int = 20000) -> tuple[str, bool]:
    """Conservative normal-form key for a flat-only state.

    Two states connected by legal flat second/third moves within budget
    receive equal keys; equality of keys certifies equivalence only when
    ``saturated`` is True.
    """
    key, _, saturated = reduce_flat_state(g, ms, budget)
    return key, saturated

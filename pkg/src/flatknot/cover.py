"""Knot diagrams on the cylinder and their images under rotation-pairing.

An ``AnnularCurve`` is a union of closed polylines on the cylinder with
angular coordinate in *turns* (rationals, lifted to the universal cover:
each component's vertex list ends where it started up to an integer
winding) and height in (0, 1).  Self-crossings carry over/under data.

For a fixed order ``d``, two curve points are *equivalent* when they have
the same height and angles differing by a multiple of 1/d.  The map to
flat-virtual diagrams keeps every self-crossing as a classical crossing
and turns each unordered pair of equivalent points into one flat
crossing; all arithmetic is exact, so genericity checks are decisions,
not heuristics.  Projecting by an unbranched degree-p cyclic cover of the
annulus is the same construction with the new double points marked as a
fresh flat type.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .codes import Classical, Flat, GaussCode, MoveSystem, Passage
from .errors import ParseError, PreconditionError, ValidationError
from .planar import PlanarCode, gauss_to_planar

__all__ = [
    "AnnularCurve",
    "phi",
    "phi_code",
    "covering_project",
    "perturb",
    "refine",
]

Point = tuple[Fraction, Fraction]


@dataclass(frozen=True)
class CrossingDecl:
    i: int  # global segment index of one strand
    j: int  # global segment index of the other
    over: str  # "i" or "j"
    type: int = 0  # 0 = classical; >= 1 declares a flat crossing of that type
    sign: int | None = None  # optional; validated against the geometry

    def __post_init__(self):
        if self.over not in ("i", "j"):
            raise ValidationError(f"over must be 'i' or 'j', got {self.over!r}")


class AnnularCurve:
    """Closed polylines on the cylinder with declared self-crossing data.

    Vertices are lifted: the last vertex of each component must equal the
    first shifted by an integer number of turns (the winding).
    """

    def __init__(self, components, crossings=()):
        self.components: tuple[tuple[Point, ...], ...] = tuple(
            tuple((Fraction(a), Fraction(z)) for a, z in comp) for comp in components
        )
        self.crossings: tuple[CrossingDecl, ...] = tuple(crossings)
        for comp in self.components:
            if len(comp) < 2:
                raise ValidationError("a component needs at least two vertices")
            (a0, z0), (a1, z1) = comp[0], comp[-1]
            if z0 != z1 or (a1 - a0).denominator != 1:
                raise ValidationError(
                    "component must close up to an integer winding (same height)"
                )
            if any(not 0 < z < 1 for _, z in comp):
                raise ValidationError("heights must lie strictly between 0 and 1")

    def windings(self) -> list[int]:
        return [int(comp[-1][0] - comp[0][0]) for comp in self.components]

    def segments(self):
        """Global segment list [(index, component, (p, q)), ...]."""
        out = []
        idx = 0
        for ci, comp in enumerate(self.components):
            for si in range(len(comp) - 1):
                out.append((idx, ci, (comp[si], comp[si + 1])))
                idx += 1
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "components": [
                    [[p[0].numerator, p[0].denominator, p[1].numerator, p[1].denominator]
                     for p in comp]
                    for comp in self.components
                ],
                "crossings": [
                    {
                        "i": c.i,
                        "j": c.j,
                        "over": c.over,
                        **({"type": c.type} if c.type else {}),
                        **({"sign": c.sign} if c.sign is not None else {}),
                    }
                    for c in self.crossings
                ],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "AnnularCurve":
        data = json.loads(text)
        try:
            comps = [
                [(Fraction(an, ad), Fraction(zn, zd)) for an, ad, zn, zd in comp]
                for comp in data["components"]
            ]
            crossings = [
                CrossingDecl(c["i"], c["j"], c["over"], c.get("type", 0), c.get("sign"))
                for c in data.get("crossings", [])
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad annular-curve JSON: {exc}") from exc
        return cls(comps, crossings)


def _seg_intersection(p1: Point, p2: Point, q1: Point, q2: Point):
    """Interior transverse intersection parameters, "touch" on boundary
    contact or collinear overlap, or None."""
    d1 = (p2[0] - p1[0], p2[1] - p1[1])
    d2 = (q2[0] - q1[0], q2[1] - q1[1])
    den = d1[0] * d2[1] - d1[1] * d2[0]
    r = (q1[0] - p1[0], q1[1] - p1[1])
    if den == 0:
        cross = r[0] * d1[1] - r[1] * d1[0]
        if cross != 0:
            return None
        # collinear: overlapping interiors are a genericity violation
        def param(pt):
            if d1[0] != 0:
                return Fraction(pt[0] - p1[0], d1[0])
            return Fraction(pt[1] - p1[1], d1[1])
        t1, t2 = sorted((param(q1), param(q2)))
        if t2 <= 0 or t1 >= 1:
            return None
        return "touch"
    t = Fraction(r[0] * d2[1] - r[1] * d2[0], den)
    s = Fraction(r[0] * d1[1] - r[1] * d1[0], den)
    if 0 < t < 1 and 0 < s < 1:
        return (t, s)
    if 0 <= t <= 1 and 0 <= s <= 1:
        return "touch"
    return None


def _events(curve: AnnularCurve, d: int):
    """All unordered pairs of curve points whose angles differ by k/d.

    Returns (events, violations): each event is
    (delta, seg_i, t_i, seg_j, t_j) with the j-passage shifted by +delta
    relative to the i-passage; integer delta means a genuine
    self-crossing of the cylinder curve.
    """
    segs = curve.segments()
    amin = min(p[0] for _, _, (p, q) in segs for p in (p, q))
    amax = max(p[0] for _, _, (p, q) in segs for p in (p, q))
    span = int(amax - amin) + 2
    deltas = []
    for m in range(-span, span + 1):
        for k in range(d):
            delta = Fraction(k, d) + m
            if delta > 0 or (delta == 0 and k == 0 and m == 0):
                deltas.append(delta)
    events = []
    violations = []
    for delta in deltas:
        for i, ci, (p1, p2) in segs:
            for j, cj, (q1, q2) in segs:
                if delta == 0 and j <= i:
                    continue
                q1s = (q1[0] - delta, q1[1])
                q2s = (q2[0] - delta, q2[1])
                hit = _seg_intersection(p1, p2, q1s, q2s)
                if hit is None:
                    continue
                if hit == "touch":
                    if delta.denominator == 1 and ci == cj and _adjacent(curve, i, j):
                        # shared polyline vertex of consecutive segments
                        # (the closing edge meets the first one a winding away)
                        continue
                    violations.append(
                        f"non-transverse contact between segment {i} and segment {j}"
                        f" shifted by {delta}"
                    )
                    continue
                t, s = hit
                events.append((delta, i, t, j, s))
    # distinct passage points along the curve
    seen: dict[tuple[int, Fraction], tuple] = {}
    for ev in events:
        delta, i, t, j, s = ev
        for seg, par in ((i, t), (j, s)):
            key = (seg, par)
            if key in seen and seen[key] is not ev:
                violations.append(
                    f"two crossing events share the curve point at segment {seg}, t={par}"
                )
            seen[key] = ev
    return events, violations


def _adjacent(curve: AnnularCurve, i: int, j: int) -> bool:
    segs = curve.segments()
    _, ci, _ = segs[i]
    _, cj, _ = segs[j]
    if ci != cj:
        return False
    first = min(k for k, c, _ in segs if c == ci)
    count = len(curve.components[ci]) - 1
    a, b = i - first, j - first
    return (a - b) % count in (1, count - 1)


def check_generic(curve: AnnularCurve, d: int) -> None:
    _, violations = _events(curve, d)
    if violations:
        raise PreconditionError("; ".join(sorted(set(violations))[:4]))


def phi_code(
    curve: AnnularCurve, d: int, new_type: int = 1, keep_types: bool = False
) -> GaussCode:
    """Gauss code of the rotation-pairing image (flat crossings typed
    ``new_type``; declared crossings keep their own kinds)."""
    if d < 2:
        raise PreconditionError("the pairing map needs order d >= 2")
    events, violations = _events(curve, d)
    if violations:
        raise PreconditionError("; ".join(sorted(set(violations))[:4]))
    segs = curve.segments()
    seg_dir = {
        i: (q[0] - p[0], q[1] - p[1]) for i, _, (p, q) in segs
    }
    seg_comp = {i: ci for i, ci, _ in segs}

    decl = {}
    for c in curve.crossings:
        decl[frozenset((c.i, c.j))] = c

    self_pairs = [frozenset((i, j)) for delta, i, _, j, _ in events if delta.denominator == 1]
    if len(self_pairs) != len(set(self_pairs)):
        raise PreconditionError(
            "a segment pair crosses itself more than once; refine the polyline"
        )
    declared = set(decl)
    actual = set(self_pairs)
    if declared != actual:
        raise PreconditionError(
            f"crossing table mismatch: declared {sorted(map(sorted, declared - actual))}"
            f" unmatched, undeclared {sorted(map(sorted, actual - declared))}"
        )

    passages: dict[int, list] = {ci: [] for ci in range(len(curve.components))}
    crossings = {}
    first_dir = {}
    for cid, (delta, i, t, j, s) in enumerate(sorted(events), start=1):
        if delta.denominator == 1:
            c = decl[frozenset((i, j))]
            if c.type and not keep_types:
                raise PreconditionError("flat-typed declarations need keep_types")
            kind = "flat-decl" if c.type else "classical"
            flat_type = c.type
            over_is_i = (c.over == "i") == (c.i == i)
        else:
            kind = "flat-new"
        di, dj = seg_dir[i], seg_dir[j]
        det = di[0] * dj[1] - di[1] * dj[0]
        if kind == "classical":
            d_over, d_under = (di, dj) if over_is_i else (dj, di)
            w = 1 if d_over[0] * d_under[1] - d_over[1] * d_under[0] > 0 else -1
            if c.sign is not None and c.sign != w:
                raise ValidationError(
                    f"declared sign {c.sign} contradicts the geometry ({w}) at"
                    f" segments {i},{j}"
                )
            crossings[cid] = Classical(w)
            role_i = "O" if over_is_i else "U"
            role_j = "U" if over_is_i else "O"
            passages[seg_comp[i]].append((i, t, cid, role_i))
            passages[seg_comp[j]].append((j, s, cid, role_j))
        else:
            typ = flat_type if kind == "flat-decl" else new_type
            crossings[cid] = Flat(typ, 1)  # sign fixed after ordering
            first_dir[cid] = (det, i, t, j, s)
            passages[seg_comp[i]].append((i, t, cid, "S"))
            passages[seg_comp[j]].append((j, s, cid, "S"))

    components = []
    position = {}
    for ci in range(len(curve.components)):
        word = sorted(passages[ci], key=lambda e: (e[0], e[1]))
        components.append(tuple(Passage(cid, role) for _, _, cid, role in word))
        for pos, (seg, par, cid, _) in enumerate(word):
            position[(seg, par)] = (ci, pos)

    # flat signs: frame of (first passage direction, second passage direction)
    for cid, (det, i, t, j, s) in first_dir.items():
        pi, pj = position[(i, t)], position[(j, s)]
        i_first = pi < pj
        sign = (1 if det > 0 else -1) if i_first else (-1 if det > 0 else 1)
        crossings[cid] = Flat(crossings[cid].type, sign)

    code = GaussCode(tuple(components), crossings)
    code.validate()
    return code.renumbered()


def phi(curve: AnnularCurve, d: int) -> PlanarCode:
    """Flat-virtual planar diagram of the order-d rotation pairing."""
    return gauss_to_planar(phi_code(curve, d))


def covering_project(
    curve: AnnularCurve, p: int, ms: MoveSystem, ramification: tuple[int, ...] = ()
) -> tuple[PlanarCode, MoveSystem]:
    """Project along the unbranched degree-p cyclic cover of the annulus.

    New double points become flat crossings of type ms.k + 1; same-type
    third moves for the new type exist only for p > 2.
    """
    if ramification:
        raise PreconditionError("only unbranched cyclic covers are supported")
    if p < 2:
        raise PreconditionError("covering degree must be at least 2")
    new_type = ms.k + 1
    if any(c.type > ms.k for c in curve.crossings):
        raise PreconditionError("declared flat types exceed the move system's k")
    code = phi_code(curve, p, new_type=new_type, keep_types=True)
    extended = MoveSystem(
        ms.k + 1, ms.d + (0,), ms.epsilon + ((0 if p == 2 else 1),)
    )
    return gauss_to_planar(code), extended


def perturb(curve: AnnularCurve, d: int, seed: int, magnitude=Fraction(1, 200),
            tries: int = 12) -> AnnularCurve:
    """Deterministic vertex jitter preserving the self-crossing pattern.

    Retries with smaller magnitudes until the result is generic for d and
    shows the same pairs of crossing segments, so the declared over/under
    table still applies.
    """
    import random

    base_pairs = _classical_pairs(curve)
    rng = random.Random(seed)
    mag = Fraction(magnitude)
    for _ in range(tries):
        comps = []
        for comp in curve.components:
            pts = list(comp)
            winding = pts[-1][0] - pts[0][0]
            moved = []
            for a, z in pts[:-1]:
                da = mag * Fraction(rng.randint(-6, 6), 13)
                dz = mag * Fraction(rng.randint(-6, 6), 13)
                moved.append((a + da, max(Fraction(1, 100), min(Fraction(99, 100), z + dz))))
            moved.append((moved[0][0] + winding, moved[0][1]))
            comps.append(moved)
        cand = AnnularCurve(comps, curve.crossings)
        try:
            check_generic(cand, d)
        except PreconditionError:
            mag /= 2
            continue
        if _classical_pairs(cand) == base_pairs:
            return cand
        mag /= 2
    raise PreconditionError("could not find a generic perturbation")


def _classical_pairs(curve: AnnularCurve):
    events, violations = _events(curve, 1)
    if violations:
        raise PreconditionError("; ".join(violations[:3]))
    return {frozenset((i, j)) for delta, i, _, j, _ in events if delta.denominator == 1}


def refine(curve: AnnularCurve, seed: int, splits: int = 3) -> AnnularCurve:
    """Split random edges at their midpoints (the same curve, finer
    polylines); the crossing table is re-indexed accordingly."""
    import random

    rng = random.Random(seed)
    comps = [list(c) for c in curve.components]
    for _ in range(splits):
        ci = rng.randrange(len(comps))
        si = rng.randrange(len(comps[ci]) - 1)
        p, q = comps[ci][si], comps[ci][si + 1]
        mid = ((p[0] + q[0]) / 2, (p[1] + q[1]) / 2)
        comps[ci].insert(si + 1, mid)
        curve = AnnularCurve(comps, _remap_after_split(curve, ci, si))
        comps = [list(c) for c in curve.components]
    return curve


def _remap_after_split(curve: AnnularCurve, ci: int, si: int):
    """New crossing table after segment (ci, si) splits into two halves."""
    segs = curve.segments()
    first = min(k for k, c, _ in segs if c == ci)
    split_global = first + si
    p, q = curve.components[ci][si], curve.components[ci][si + 1]
    mid = ((p[0] + q[0]) / 2, (p[1] + q[1]) / 2)

    def new_index(old: int, point_hint) -> int:
        if old < split_global:
            return old
        if old > split_global:
            return old + 1
        # the split segment: decide the half by the crossing location
        return split_global if point_hint else split_global + 1

    out = []
    for c in curve.crossings:
        hints = {}
        for seg in (c.i, c.j):
            if seg == split_global:
                other = c.j if seg == c.i else c.i
                _, _, (o1, o2) = segs[other]
                hit = _seg_intersection(p, q, o1, o2)
                if not isinstance(hit, tuple):
                    raise PreconditionError("split segment lost its crossing")
                t, _ = hit
                hints[seg] = t < Fraction(1, 2)
        out.append(
            CrossingDecl(
                new_index(c.i, hints.get(c.i, True)),
                new_index(c.j, hints.get(c.j, True)),
                c.over,
                c.type,
            )
        )
    return out

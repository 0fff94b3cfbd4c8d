"""Three-variable Alexander-like determinant of flat-virtual diagrams.

Orient the diagram and cut it at classical underpasses into *long arcs*
(one per classical crossing).  Walking a long arc, the label starts at 1
and picks up ``u^{+-1}`` at each flat crossing and ``v^{+-1}`` at each
virtual crossing, the exponent being the sign of the frame (traversal
direction, other strand direction).  Crossing ``i`` with writhe ``w``,
incoming long arc ``i'`` labelled ``l'`` and overpassing arc ``i''``
labelled ``l''`` contributes the row

    a[i][i] += -1,   a[i][i'] += l' t^w,   a[i][i''] += l'' (1 - t^w),

entries summing when indices coincide.  The determinant, taken up to
``+-t^a u^b v^c``, is invariant under all the diagram moves; it vanishes
identically on classical diagrams, so a nonzero value certifies that the
diagram is not classical.

Flat vertices of type 2 are treated as virtual crossings (they carry the
``v`` label): in the two-type theory the top type is exactly virtual.
"""

from __future__ import annotations

from .errors import PreconditionError
from .laurent import LaurentPoly, lp_det, lp_similar_normalize
from .planar import PlanarCode, insert_positive_curl

__all__ = [
    "build_alexander_matrix",
    "alexander_delta",
    "nonclassicality_check",
]


def _component_events(p: PlanarCode):
    """Per component, the (vertex, enter, exit) walk events in order."""
    out = []
    for dart in p.layout:
        if dart is None:
            out.append([])
            continue
        out.append(list(p.walk(dart)))
    return out


def _vertex_passes(events):
    passes: dict[int, list[tuple[int, int]]] = {}
    for comp in events:
        for vid, enter, exit_ in comp:
            passes.setdefault(vid, []).append((enter, exit_))
    return passes


def _frame_sign(p: PlanarCode, vid: int, my_exit: int, other_exit: int) -> int:
    pos = {h: i for i, h in enumerate(p.vertices[vid].ccw)}
    return 1 if pos[other_exit] == (pos[my_exit] + 1) % 4 else -1


def ensure_underpasses(p: PlanarCode, auto_kink: bool) -> tuple[PlanarCode, list[int]]:
    """Guarantee every component passes under some classical crossing.

    Returns the (possibly kinked) code and the indices of components that
    received a positive curl.  A curl is a legal first move, harmless for
    an invariant defined up to units.
    """
    kinked: list[int] = []
    while True:
        events = _component_events(p)
        bad = None
        for ci, comp in enumerate(events):
            has_under = any(
                p.vertices[vid].kind == "classical" and enter not in p.vertices[vid].over
                for vid, enter, _ in comp
            )
            if not has_under:
                bad = ci
                break
        if bad is None:
            return p, kinked
        if not auto_kink or p.layout[bad] is None:
            raise PreconditionError(
                f"component {bad} has no classical underpass (auto_kink disabled"
                " or bare circle)"
            )
        p = insert_positive_curl(p, bad)
        kinked.append(bad)


def build_alexander_matrix(
    p: PlanarCode, auto_kink: bool = True
) -> tuple[list[list[LaurentPoly]], PlanarCode, list[int]]:
    """The crossing-relation matrix; also returns the diagram actually
    used (after any automatic curls) and the list of curled components."""
    if not any(v.kind == "classical" for v in p.vertices.values()):
        if not auto_kink:
            raise PreconditionError("no classical crossings: determinant undefined")
        if all(d is None for d in p.layout):
            raise PreconditionError("bare circles admit no classical curl here")
    for v in p.vertices.values():
        if v.kind == "flat" and v.type > 2:
            raise PreconditionError(
                "the three-variable invariant is defined for flat types 1 and 2 only"
            )
    p, kinked = ensure_underpasses(p, auto_kink)
    events = _component_events(p)
    passes = _vertex_passes(events)

    def other_exit(vid, my_exit):
        (e1, x1), (e2, x2) = passes[vid]
        return x2 if x1 == my_exit else x1

    # classical crossing signs and arc numbering by first under-exit
    sign: dict[int, int] = {}
    for vid, vert in p.vertices.items():
        if vert.kind != "classical":
            continue
        (e1, x1), (e2, x2) = passes[vid]
        over_exit, under_exit = (x1, x2) if e1 in vert.over else (x2, x1)
        sign[vid] = _frame_sign(p, vid, over_exit, under_exit)

    arc_index: dict[int, int] = {}
    for comp in events:
        for vid, enter, _ in comp:
            vert = p.vertices[vid]
            if vert.kind == "classical" and enter not in vert.over and vid not in arc_index:
                arc_index[vid] = len(arc_index)
    n = len(arc_index)

    one = LaurentPoly.const(1)
    t = LaurentPoly.var("t")
    matrix = [[LaurentPoly.zero() for _ in range(n)] for _ in range(n)]

    for comp in events:
        if not comp:
            continue
        starts = [
            i
            for i, (vid, enter, _) in enumerate(comp)
            if p.vertices[vid].kind == "classical" and enter not in p.vertices[vid].over
        ]
        m = len(comp)
        for start in starts:
            arc = arc_index[comp[start][0]]
            label = one
            i = (start + 1) % m
            while True:
                vid, enter, exit_ = comp[i]
                vert = p.vertices[vid]
                if vert.kind == "classical":
                    row = arc_index[vid]
                    if enter in vert.over:
                        # the overpass of crossing vid lies on this arc
                        matrix[row][arc] = matrix[row][arc] + label * (one - t ** sign[vid])
                    else:
                        # the arc ends at the underpass of crossing vid
                        matrix[row][arc] = matrix[row][arc] + label * t ** sign[vid]
                        break
                else:
                    var = "u" if (vert.kind == "flat" and vert.type == 1) else "v"
                    eps = _frame_sign(p, vid, exit_, other_exit(vid, exit_))
                    label = label * LaurentPoly.var(var, eps)
                i = (i + 1) % m
    for vid, row in arc_index.items():
        matrix[row][row] = matrix[row][row] - one
    return matrix, p, kinked


def alexander_delta(p: PlanarCode, auto_kink: bool = True) -> LaurentPoly:
    """The similarity-normalized determinant in Z[t, u, v] (up to units)."""
    matrix, _, _ = build_alexander_matrix(p, auto_kink)
    return lp_similar_normalize(lp_det(matrix), {"t", "u", "v"})


def nonclassicality_check(p: PlanarCode, auto_kink: bool = True) -> tuple[bool, LaurentPoly]:
    """Nonzero determinant certifies the diagram is not classical; zero is
    inconclusive."""
    delta = alexander_delta(p, auto_kink)
    return (not delta.is_zero(), delta)

"""Planar codes: 4-valent combinatorial maps on the sphere.

A ``PlanarCode`` stores an embedded diagram as a rotation system: each
vertex lists its four half-edges in counterclockwise order, and ``edges``
is the pairing involution on half-edges.  Vertices are classical (with a
marked overpassing pair), flat (typed), or virtual.  ``layout`` records,
per unicursal component, the half-edge the traversal exits just before
reaching the component's first passage (``None`` for a vertex-free
circle), which both orients the component and pins the conversion back to
a Gauss code exactly.

Conversion from a Gauss code first builds the rotation system forced by
the chord signs (the local frame of the two strands at each crossing).
If the resulting map is spherical it is returned with no virtual
crossings; otherwise the arcs are re-routed one at a time through the
partial embedding and every arc/edge crossing becomes a virtual vertex.
Different routings differ by detour moves only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .codes import Classical, Flat, GaussCode, Passage
from .errors import ValidationError

__all__ = [
    "Vertex",
    "PlanarCode",
    "gauss_to_planar",
    "planar_to_gauss",
    "insert_positive_curl",
]


@dataclass(frozen=True)
class Vertex:
    kind: str  # "classical" | "flat" | "virtual"
    type: int  # flat type; 0 for classical and virtual
    ccw: tuple[int, int, int, int]
    over: tuple[int, int] | None  # opposite half-edge pair of the overpass


class PlanarCode:
    __slots__ = ("vertices", "edges", "layout", "_stub_pos")

    def __init__(self, vertices, edges, layout):
        self.vertices: dict[int, Vertex] = dict(vertices)
        self.edges: dict[int, int] = dict(edges)
        self.layout: tuple[int | None, ...] = tuple(layout)
        self._stub_pos: dict[int, tuple[int, int]] = {}
        for vid, vert in self.vertices.items():
            for pos, h in enumerate(vert.ccw):
                self._stub_pos[h] = (vid, pos)

    # -- basic structure ------------------------------------------------

    def vertex_of(self, stub: int) -> int:
        return self._stub_pos[stub][0]

    def position_of(self, stub: int) -> int:
        return self._stub_pos[stub][1]

    def opposite(self, stub: int) -> int:
        vid, pos = self._stub_pos[stub]
        return self.vertices[vid].ccw[(pos + 2) % 4]

    def circles(self) -> int:
        return sum(1 for h in self.layout if h is None)

    def counts(self) -> dict[str, int]:
        out = {"classical": 0, "flat": 0, "virtual": 0}
        for vert in self.vertices.values():
            out[vert.kind] += 1
        return out

    def __eq__(self, other):
        if not isinstance(other, PlanarCode):
            return NotImplemented
        return (
            self.vertices == other.vertices
            and self.edges == other.edges
            and self.layout == other.layout
        )

    def __repr__(self):
        c = self.counts()
        return (
            f"<PlanarCode {c['classical']} classical, {c['flat']} flat, "
            f"{c['virtual']} virtual, {len(self.layout)} components>"
        )

    # -- traversal --------------------------------------------------------

    def walk(self, start_dart: int):
        """Yield (vertex, enter_stub, exit_stub) around one component.

        ``start_dart`` is exited first; the walk ends when it comes up
        again, so the first vertex reported is the one the dart leads to.
        """
        cur = start_dart
        while True:
            enter = self.edges[cur]
            vid = self.vertex_of(enter)
            exit_ = self.opposite(enter)
            yield vid, enter, exit_
            cur = exit_
            if cur == start_dart:
                return

    # -- faces and validation ---------------------------------------------

    def faces(self) -> list[tuple[int, ...]]:
        """Face boundary orbits of the rotation system."""
        nxt = {}
        for h in self._stub_pos:
            partner = self.edges[h]
            vid, pos = self._stub_pos[partner]
            nxt[h] = self.vertices[vid].ccw[(pos + 1) % 4]
        seen: set[int] = set()
        orbits = []
        for h in sorted(nxt):
            if h in seen:
                continue
            orbit = []
            cur = h
            while cur not in seen:
                seen.add(cur)
                orbit.append(cur)
                cur = nxt[cur]
            orbits.append(tuple(orbit))
        return orbits

    def _graph_pieces(self) -> list[set[int]]:
        parent = {v: v for v in self.vertices}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for h, h2 in self.edges.items():
            a, b = find(self.vertex_of(h)), find(self.vertex_of(h2))
            if a != b:
                parent[a] = b
        groups: dict[int, set[int]] = {}
        for v in self.vertices:
            groups.setdefault(find(v), set()).add(v)
        return list(groups.values())

    def validate(self) -> None:
        stubs = set(self._stub_pos)
        if len(self._stub_pos) != 4 * len(self.vertices):
            raise ValidationError("half-edge ids are not distinct")
        if set(self.edges) != stubs:
            raise ValidationError("edge pairing does not cover every half-edge exactly once")
        for h, h2 in self.edges.items():
            if h2 not in stubs or self.edges.get(h2) != h or h2 == h:
                raise ValidationError(f"edge pairing is not a fixed-point-free involution at {h}")
        for vid, vert in self.vertices.items():
            if vert.kind == "classical":
                if vert.over is None:
                    raise ValidationError(f"classical vertex {vid} lacks an over pair")
                pos = sorted(vert.ccw.index(h) for h in vert.over)
                if pos not in ([0, 2], [1, 3]):
                    raise ValidationError(f"over pair at vertex {vid} is not opposite")
            elif vert.over is not None:
                raise ValidationError(f"non-classical vertex {vid} carries an over pair")
            if vert.kind == "flat" and vert.type < 1:
                raise ValidationError(f"flat vertex {vid} needs type >= 1")
            if vert.kind in ("classical", "virtual") and vert.type != 0:
                raise ValidationError(f"vertex {vid} of kind {vert.kind} must have type 0")

        # spherical embedding: Euler characteristic 2 on every connected piece
        face_of = {}
        for orbit in self.faces():
            for h in orbit:
                face_of[h] = orbit[0]
        for piece in self._graph_pieces():
            piece_stubs = [h for h in stubs if self.vertex_of(h) in piece]
            v = len(piece)
            e = len(piece_stubs) // 2
            f = len({face_of[h] for h in piece_stubs})
            if v - e + f != 2:
                raise ValidationError(
                    f"rotation system is not spherical on a piece (V-E+F = {v - e + f})"
                )

        # layout darts: one orientation per unicursal component, all covered
        darts_seen: set[int] = set()
        for dart in self.layout:
            if dart is None:
                continue
            if dart not in stubs:
                raise ValidationError(f"layout dart {dart} is not a half-edge")
            if dart in darts_seen:
                raise ValidationError("layout darts revisit a component")
            for _, enter, exit_ in self.walk(dart):
                darts_seen.update((enter, exit_))
        if darts_seen != stubs:
            raise ValidationError("layout darts do not cover every unicursal component")

    # -- JSON ----------------------------------------------------------------

    def to_json(self) -> str:
        data = {
            "vertices": {
                str(vid): {
                    "kind": v.kind,
                    **({"type": v.type} if v.kind == "flat" else {}),
                    "ccw": list(v.ccw),
                    **({"over": list(v.over)} if v.over is not None else {}),
                }
                for vid, v in sorted(self.vertices.items())
            },
            "edges": sorted([min(h, h2), max(h, h2)] for h, h2 in self.edges.items() if h < h2),
            "layout": list(self.layout),
        }
        return json.dumps(data, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PlanarCode":
        data = json.loads(text)
        vertices = {}
        for vid_text, spec in data["vertices"].items():
            vertices[int(vid_text)] = Vertex(
                kind=spec["kind"],
                type=spec.get("type", 0),
                ccw=tuple(spec["ccw"]),
                over=tuple(spec["over"]) if "over" in spec else None,
            )
        edges = {}
        for h, h2 in data["edges"]:
            edges[h] = h2
            edges[h2] = h
        code = cls(vertices, edges, tuple(data["layout"]))
        code.validate()
        return code


# -- Gauss -> planar -------------------------------------------------------


class _Builder:
    """Chord realization shared by the spherical and the routed path."""

    def __init__(self, g: GaussCode):
        g.validate()
        self.g = g
        order: list[int] = []
        for comp in g.components:
            for p in comp:
                if p.id not in order:
                    order.append(p.id)
        self.chord_index = {cid: i for i, cid in enumerate(order)}
        self.vertices: dict[int, Vertex] = {}
        # per passage (component, position): (enter stub, exit stub)
        self.io: dict[tuple[int, int], tuple[int, int]] = {}
        for cid in order:
            base = 4 * self.chord_index[cid]
            s = (base, base + 1, base + 2, base + 3)
            kind = g.crossings[cid]
            positions = g.passage_positions(cid)
            if isinstance(kind, Classical):
                roles = {g.components[ci][pi].role: (ci, pi) for ci, pi in positions}
                over_p, under_p = roles["O"], roles["U"]
                self.io[over_p] = (s[0], s[2])
                if kind.sign == 1:
                    self.io[under_p] = (s[1], s[3])
                else:
                    self.io[under_p] = (s[3], s[1])
                self.vertices[cid] = Vertex("classical", 0, s, (s[0], s[2]))
            else:
                first_p, second_p = positions
                self.io[first_p] = (s[0], s[2])
                if kind.sign == 1:
                    self.io[second_p] = (s[1], s[3])
                else:
                    self.io[second_p] = (s[3], s[1])
                self.vertices[cid] = Vertex("flat", kind.type, s, None)

        # connection arcs in traversal order, and layout darts
        self.arcs: list[tuple[int, int]] = []
        self.layout: list[int | None] = []
        for ci, comp in enumerate(g.components):
            if not comp:
                self.layout.append(None)
                continue
            n = len(comp)
            for pi in range(n):
                exit_ = self.io[(ci, pi)][1]
                enter = self.io[(ci, (pi + 1) % n)][0]
                self.arcs.append((exit_, enter))
            self.layout.append(self.io[(ci, n - 1)][1])


def _spherical(code: PlanarCode) -> bool:
    face_of = {}
    for orbit in code.faces():
        for h in orbit:
            face_of[h] = orbit[0]
    for piece in code._graph_pieces():
        piece_stubs = [h for h in code.edges if code.vertex_of(h) in piece]
        v = len(piece)
        e = len(piece_stubs) // 2
        f = len({face_of[h] for h in piece_stubs})
        if v - e + f != 2:
            return False
    return True


def gauss_to_planar(g: GaussCode) -> PlanarCode:
    """Realize a Gauss code in the sphere, spending virtual crossings only
    when the forced rotation system is not spherical."""
    b = _Builder(g)
    edges: dict[int, int] = {}
    for x, y in b.arcs:
        edges[x] = y
        edges[y] = x
    direct = PlanarCode(b.vertices, edges, b.layout)
    if not b.vertices:
        return direct
    if _spherical(direct):
        direct.validate()
        return direct
    return _route(b)


def _route(b: _Builder) -> PlanarCode:
    vertices = dict(b.vertices)
    alpha: dict[int, int] = {}
    stub_vertex: dict[int, tuple[int, int]] = {}
    rotations: dict[int, list[int]] = {vid: list(v.ccw) for vid, v in vertices.items()}
    for vid, rot in rotations.items():
        for pos, h in enumerate(rot):
            stub_vertex[h] = (vid, pos)
    next_vid = max(vertices) + 1
    next_stub = 4 * len(vertices)

    # union-find over vertices for connected pieces
    parent: dict[int, int] = {vid: vid for vid in vertices}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b_: int) -> None:
        ra, rb = find(a), find(b_)
        if ra != rb:
            parent[ra] = rb

    def attached_at(vid: int) -> list[int]:
        return [h for h in rotations[vid] if h in alpha]

    def ccw_next_attached(stub: int) -> int:
        vid, pos = stub_vertex[stub]
        rot = rotations[vid]
        for step in range(1, 5):
            cand = rot[(pos + step) % 4]
            if cand in alpha:
                return cand
        raise AssertionError("no attached stub at vertex")

    def face_map() -> dict[int, int]:
        nxt = {h: ccw_next_attached(alpha[h]) for h in alpha}
        face_of: dict[int, int] = {}
        for h in sorted(nxt):
            if h in face_of:
                continue
            orbit = []
            cur = h
            while cur not in face_of:
                face_of[cur] = h
                orbit.append(cur)
                cur = nxt[cur]
        return face_of

    def mouth(stub: int, face_of: dict[int, int]) -> int | None:
        """Face key the unattached stub opens into (None while its vertex
        is completely unattached)."""
        vid, pos = stub_vertex[stub]
        prev = None
        rot = rotations[vid]
        for step in range(1, 5):
            cand = rot[(pos - step) % 4]
            if cand in alpha:
                prev = cand
                break
        if prev is None:
            return None
        return face_of[ccw_next_attached(prev)]

    def attach(x: int, y: int) -> None:
        alpha[x] = y
        alpha[y] = x
        union(stub_vertex[x][0], stub_vertex[y][0])

    def check_euler() -> None:
        face_of = face_map()
        pieces: dict[int, list[int]] = {}
        for vid in vertices:
            if attached_at(vid):
                pieces.setdefault(find(vid), []).append(vid)
        for piece in pieces.values():
            piece_stubs = [h for h in alpha if stub_vertex[h][0] in piece]
            v = len(piece)
            e = len(piece_stubs) // 2
            f = len({face_of[h] for h in piece_stubs})
            if v - e + f != 2:
                raise AssertionError(f"routing broke planarity: V-E+F = {v - e + f}")

    for sa, sb in b.arcs:
        va, vb = stub_vertex[sa][0], stub_vertex[sb][0]
        if not attached_at(va) or not attached_at(vb) or find(va) != find(vb):
            attach(sa, sb)
            check_euler()
            continue
        guard = 0
        cur = sa
        while True:
            face_of = face_map()
            fa, fb = mouth(cur, face_of), mouth(sb, face_of)
            if fa == fb:
                attach(cur, sb)
                break
            # BFS over faces; crossing an edge costs one virtual vertex
            adjacency: dict[int, list[tuple[int, int]]] = {}
            for h in sorted(alpha):
                if h < alpha[h]:
                    f1, f2 = face_of[h], face_of[alpha[h]]
                    adjacency.setdefault(f1, []).append((h, f2))
                    adjacency.setdefault(f2, []).append((h, f1))
            prev_edge: dict[int, tuple[int, int] | None] = {fa: None}
            queue = [fa]
            while queue and fb not in prev_edge:
                nxt_queue = []
                for f in queue:
                    for h, f2 in sorted(adjacency.get(f, [])):
                        if f2 not in prev_edge:
                            prev_edge[f2] = (h, f)
                            nxt_queue.append(f2)
                queue = nxt_queue
            if fb not in prev_edge:
                raise AssertionError("dual graph disconnected during routing")
            # first edge on the path from fa
            step_face = fb
            while prev_edge[step_face][1] != fa:
                step_face = prev_edge[step_face][1]
            cross_stub = prev_edge[step_face][0]
            x, y = cross_stub, alpha[cross_stub]
            # subdivide {x, y} with a virtual vertex
            w = next_vid
            next_vid += 1
            s = (next_stub, next_stub + 1, next_stub + 2, next_stub + 3)
            next_stub += 4
            vertices[w] = Vertex("virtual", 0, s, None)
            rotations[w] = list(s)
            parent[w] = w
            for pos, h in enumerate(s):
                stub_vertex[h] = (w, pos)
            del alpha[x], alpha[y]
            attach(x, s[0])
            attach(s[2], y)
            face_of = face_map()
            f_cur = mouth(cur, face_of)
            m1, m3 = mouth(s[1], face_of), mouth(s[3], face_of)
            if m1 == f_cur:
                attach(cur, s[1])
                cur = s[3]
            elif m3 == f_cur:
                attach(cur, s[3])
                cur = s[1]
            else:
                raise AssertionError("virtual subdivision lost the current face")
            check_euler()
            guard += 1
            if guard > 4 * len(b.arcs) + 2 * len(alpha) + 16:
                raise AssertionError("routing failed to converge")
        check_euler()

    final_vertices = {
        vid: Vertex(v.kind, v.type, tuple(rotations[vid]), v.over)
        for vid, v in vertices.items()
    }
    code = PlanarCode(final_vertices, alpha, b.layout)
    code.validate()
    return code


# -- planar -> Gauss --------------------------------------------------------


def planar_to_gauss(p: PlanarCode) -> GaussCode:
    """Read the Gauss code back off a planar code, dropping virtual vertices."""
    passes: dict[int, list[tuple[int, int]]] = {}
    comps: list[list[tuple[int, int, int]]] = []
    for dart in p.layout:
        if dart is None:
            comps.append([])
            continue
        comp = []
        for vid, enter, exit_ in p.walk(dart):
            passes.setdefault(vid, []).append((enter, exit_))
            comp.append((vid, enter, exit_))
        comps.append(comp)

    crossings: dict[int, Classical | Flat] = {}
    for vid, vert in p.vertices.items():
        if vert.kind == "virtual":
            continue
        (e1, x1), (e2, x2) = passes[vid]
        pos = {h: i for i, h in enumerate(vert.ccw)}
        if vert.kind == "classical":
            if e1 in vert.over:
                over_exit, under_exit = x1, x2
            else:
                over_exit, under_exit = x2, x1
            sign = 1 if pos[under_exit] == (pos[over_exit] + 1) % 4 else -1
            crossings[vid] = Classical(sign)
        else:
            sign = 1 if pos[x2] == (pos[x1] + 1) % 4 else -1
            crossings[vid] = Flat(vert.type, sign)

    components = []
    for comp in comps:
        passages = []
        for vid, enter, _ in comp:
            vert = p.vertices[vid]
            if vert.kind == "virtual":
                continue
            if vert.kind == "classical":
                passages.append(Passage(vid, "O" if enter in vert.over else "U"))
            else:
                passages.append(Passage(vid, "S"))
        components.append(tuple(passages))
    code = GaussCode(tuple(components), crossings)
    code.validate()
    return code


def insert_positive_curl(p: PlanarCode, component: int) -> PlanarCode:
    """Insert a positive classical curl on the given component (a first
    Reidemeister move; used to guarantee an underpass per component)."""
    dart = p.layout[component]
    if dart is None:
        raise ValidationError("cannot curl a vertex-free circle in a planar code")
    next_vid = max(p.vertices) + 1
    next_stub = max(p.edges) + 1
    s = (next_stub, next_stub + 1, next_stub + 2, next_stub + 3)
    vertices = dict(p.vertices)
    vertices[next_vid] = Vertex("classical", 0, s, (s[0], s[2]))
    edges = dict(p.edges)
    y = edges[dart]
    edges[dart] = s[0]
    edges[s[0]] = dart
    edges[s[2]] = s[1]
    edges[s[1]] = s[2]
    edges[s[3]] = y
    edges[y] = s[3]
    out = PlanarCode(vertices, edges, p.layout)
    out.validate()
    return out

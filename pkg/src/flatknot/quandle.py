"""Finite biquandles with typed flat operations, coloring counts, and the
determinant Alexander invariant over Z[t, s_1, ..., s_k].

A structure of this kind has classical operations (under, over) forming a
biquandle, one binary operation per flat type whose columns are
permutations, and exchange laws tying everything together.  Colorings of
the semiarcs of a diagram by such a structure are counted by constraint
propagation; the count is a diagram invariant.

At a flat crossing the two strands are not interchangeable: the strand
whose frame against the other is positive (the *tail* side) applies the
flat operation, the other side applies its inverse in the first slot.
With the symmetric rule a pair of cancelling flat crossings would compose
the operation with itself instead of with its inverse, so no nontrivial
structure could be invariant under the second move; the directional rule
is also the one the determinant invariant's ``s^{+-1}`` labels realize.

The Alexander invariant uses the module presentation with one generator
per long arc (between classical underpasses), flat passages folded into
``s``-monomial labels.  Its full determinant generates the zeroth Fitting
ideal; on classical diagrams that determinant vanishes identically and
the first minor determinant (the classical Alexander polynomial) is
reported instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .codes import Classical, Flat, GaussCode, Passage
from .errors import PreconditionError, ValidationError
from .laurent import LaurentPoly, lp_det, lp_similar_normalize

__all__ = [
    "FiniteKFlatBiquandle",
    "alexander_biquandle",
    "dihedral_biquandle",
    "check_axioms",
    "count_colorings",
    "count_colorings_bruteforce",
    "multiflat_alexander_delta",
    "multiflat_alexander_matrix",
    "semiarc_matrix",
]


@dataclass(frozen=True)
class FiniteKFlatBiquandle:
    """Operation tables on {0..n-1}: under0/over0 and one table per flat
    type, all indexed as table[x][y]."""

    n: int
    k: int
    under0: tuple[tuple[int, ...], ...]
    over0: tuple[tuple[int, ...], ...]
    star: tuple[tuple[tuple[int, ...], ...], ...]  # star[i-1][x][y]

    def __post_init__(self):
        for name, table in (("under0", self.under0), ("over0", self.over0), *(
            (f"star{i + 1}", s) for i, s in enumerate(self.star)
        )):
            if len(table) != self.n or any(len(row) != self.n for row in table):
                raise ValidationError(f"table {name} is not {self.n}x{self.n}")
            if any(not 0 <= v < self.n for row in table for v in row):
                raise ValidationError(f"table {name} has entries outside the carrier")
        if len(self.star) != self.k:
            raise ValidationError(f"expected {self.k} flat tables, got {len(self.star)}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "k": self.k,
                "under0": [list(r) for r in self.under0],
                "over0": [list(r) for r in self.over0],
                "star": [[list(r) for r in s] for s in self.star],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "FiniteKFlatBiquandle":
        data = json.loads(text)
        return cls(
            n=data["n"],
            k=data["k"],
            under0=tuple(tuple(r) for r in data["under0"]),
            over0=tuple(tuple(r) for r in data["over0"]),
            star=tuple(tuple(tuple(r) for r in s) for s in data["star"]),
        )


def alexander_biquandle(modulus: int, t: int, s: tuple[int, ...]) -> FiniteKFlatBiquandle:
    """x under y = t x + (1-t) y, x over y = x, x *_i y = s_i x over Z/m.

    ``t`` and every ``s_i`` must be units mod ``modulus``.
    """
    for unit in (t, *s):
        if _mod_inverse(unit, modulus) is None:
            raise ValidationError(f"{unit} is not a unit mod {modulus}")
    rng = range(modulus)
    under = tuple(tuple((t * x + (1 - t) * y) % modulus for y in rng) for x in rng)
    over = tuple(tuple(x for _ in rng) for x in rng)
    star = tuple(tuple(tuple((si * x) % modulus for _ in rng) for x in rng) for si in s)
    return FiniteKFlatBiquandle(modulus, len(s), under, over, star)


def dihedral_biquandle(n: int) -> FiniteKFlatBiquandle:
    """The dihedral quandle x under y = 2y - x as a biquandle (k = 0)."""
    rng = range(n)
    under = tuple(tuple((2 * y - x) % n for y in rng) for x in rng)
    over = tuple(tuple(x for _ in rng) for x in rng)
    return FiniteKFlatBiquandle(n, 0, under, over, ())


def _mod_inverse(a: int, m: int) -> int | None:
    a %= m
    for b in range(m):
        if (a * b) % m == 1:
            return b
    return None


def check_axioms(b: FiniteKFlatBiquandle) -> tuple[bool, str | None]:
    """All structure axioms on all triples; returns the first violation."""
    n = b.n
    rng = range(n)

    def bijective_columns(table, name):
        for y in rng:
            if sorted(table[x][y] for x in rng) != list(rng):
                return f"{name}(. , {y}) is not a bijection"
        return None

    for name, table in (("under0", b.under0), ("over0", b.over0)):
        msg = bijective_columns(table, name)
        if msg:
            return False, msg
    for x in rng:
        if b.over0[x][x] != b.under0[x][x]:
            return False, f"diagonal: {x} over {x} != {x} under {x}"
    pairs = {(b.over0[x][y], b.under0[y][x]) for x in rng for y in rng}
    if len(pairs) != n * n:
        return False, "classical pair map is not a bijection"
    for x in rng:
        for y in rng:
            for z in rng:
                ov, un = b.over0, b.under0
                if ov[ov[x][y]][ov[z][y]] != ov[ov[x][z]][un[y][z]]:
                    return False, f"classical exchange 1 fails at {(x, y, z)}"
                if ov[un[x][y]][un[z][y]] != un[ov[x][z]][ov[y][z]]:
                    return False, f"classical exchange 2 fails at {(x, y, z)}"
                if un[un[x][y]][un[z][y]] != un[un[x][z]][ov[y][z]]:
                    return False, f"classical exchange 3 fails at {(x, y, z)}"
    for i, table in enumerate(b.star, start=1):
        msg = bijective_columns(table, f"star{i}")
        if msg:
            return False, msg
        pairs = {(table[x][y], table[y][x]) for x in rng for y in rng}
        if len(pairs) != n * n:
            return False, f"flat pair map {i} is not a bijection"
        for x in rng:
            for y in rng:
                for z in rng:
                    if table[table[x][y]][table[z][y]] != table[table[x][z]][table[y][z]]:
                        return False, f"flat exchange fails for type {i} at {(x, y, z)}"
    # mixed laws for i < j; for i > 0 the under/over operations coincide
    ops = [(b.over0, b.under0)] + [(s, s) for s in b.star]
    for i in range(0, b.k + 1):
        for j in range(i + 1, b.k + 1):
            ov_i, un_i = ops[i]
            sj = b.star[j - 1]
            for x in rng:
                for y in rng:
                    for z in rng:
                        if sj[ov_i[x][y]][sj[z][y]] != ov_i[sj[x][z]][sj[y][z]]:
                            return False, f"mixed law 1 fails for ({i},{j}) at {(x, y, z)}"
                        if sj[un_i[x][y]][sj[z][y]] != un_i[sj[x][z]][sj[y][z]]:
                            return False, f"mixed law 2 fails for ({i},{j}) at {(x, y, z)}"
                        if sj[sj[x][y]][ov_i[z][y]] != sj[sj[x][z]][un_i[y][z]]:
                            return False, f"mixed law 3 fails for ({i},{j}) at {(x, y, z)}"
    return True, None


# -- colorings ----------------------------------------------------------------


def _column_inverse(table):
    n = len(table)
    inv = [[0] * n for _ in range(n)]
    for y in range(n):
        for x in range(n):
            inv[table[x][y]][y] = x
    return inv


def _coloring_constraints(g: GaussCode, b: FiniteKFlatBiquandle):
    """Uniform constraints (x1, x2, y1, y2, F): F(c[x1], c[x2]) must equal
    (c[y1], c[y2]).  Negative classical crossings are stated with inputs
    and outputs exchanged, which is the inverse pair map."""
    star_inv = [_column_inverse(s) for s in b.star]
    index = {}
    for ci, comp in enumerate(g.components):
        for pos in range(max(len(comp), 1)):
            index[(ci, pos)] = len(index)

    def around(ci, pos):
        m = len(g.components[ci])
        return index[(ci, (pos - 1) % m)], index[(ci, pos)]

    constraints = []
    for cid, kind in g.crossings.items():
        (c1, p1), (c2, p2) = g.passage_positions(cid)
        in1, out1 = around(c1, p1)
        in2, out2 = around(c2, p2)
        if isinstance(kind, Classical):
            role1 = g.components[c1][p1].role
            u_in, u_out = (in1, out1) if role1 == "U" else (in2, out2)
            o_in, o_out = (in2, out2) if role1 == "U" else (in1, out1)

            def fwd(u, o, un=b.under0, ov=b.over0):
                return un[u][o], ov[o][u]

            if kind.sign == 1:
                constraints.append((u_in, o_in, u_out, o_out, fwd))
            else:
                constraints.append((u_out, o_out, u_in, o_in, fwd))
        else:
            s = b.star[kind.type - 1]
            sinv = star_inv[kind.type - 1]
            tail_first = kind.sign == 1
            t_in, t_out = (in1, out1) if tail_first else (in2, out2)
            h_in, h_out = (in2, out2) if tail_first else (in1, out1)

            def fwd(tc, hc, s=s, sinv=sinv):
                return s[tc][hc], sinv[hc][tc]

            constraints.append((t_in, h_in, t_out, h_out, fwd))
    return len(index), constraints


def count_colorings(g: GaussCode, b: FiniteKFlatBiquandle) -> int:
    """Number of semiarc colorings satisfying the crossing conditions.

    Semiarcs are the arcs between consecutive passages; a bare circle has
    one free semiarc.  Counted by backtracking with forward/backward
    propagation through the crossing pair maps.
    """
    ok, msg = check_axioms(b)
    if not ok:
        raise PreconditionError(f"structure fails axioms: {msg}")
    g.validate()
    if any(isinstance(k, Flat) and k.type > b.k for k in g.crossings.values()):
        raise PreconditionError("diagram uses flat types beyond the structure's k")

    nsemi, constraints = _coloring_constraints(g, b)
    backward = []
    for x1, x2, y1, y2, fwd in constraints:
        inv: dict[tuple[int, int], tuple[int, int]] | None = {}
        for u in range(b.n):
            for o in range(b.n):
                key = fwd(u, o)
                if key in inv:
                    inv = None
                    break
                inv[key] = (u, o)
            if inv is None:
                break
        backward.append(inv)

    colors: list[int | None] = [None] * nsemi

    def propagate() -> bool:
        changed = True
        while changed:
            changed = False
            for (x1, x2, y1, y2, fwd), inv in zip(constraints, backward):
                a, c = colors[x1], colors[x2]
                if a is not None and c is not None:
                    v1, v2 = fwd(a, c)
                    for idx, val in ((y1, v1), (y2, v2)):
                        if colors[idx] is None:
                            colors[idx] = val
                            changed = True
                        elif colors[idx] != val:
                            return False
                elif inv is not None and colors[y1] is not None and colors[y2] is not None:
                    v1, v2 = inv[(colors[y1], colors[y2])]
                    for idx, val in ((x1, v1), (x2, v2)):
                        if colors[idx] is None:
                            colors[idx] = val
                            changed = True
                        elif colors[idx] != val:
                            return False
        return True

    def verify() -> bool:
        return all(
            fwd(colors[x1], colors[x2]) == (colors[y1], colors[y2])
            for x1, x2, y1, y2, fwd in constraints
        )

    def search() -> int:
        snapshot = list(colors)
        if not propagate():
            colors[:] = snapshot
            return 0
        if None not in colors:
            count = 1 if verify() else 0
            colors[:] = snapshot
            return count
        free = colors.index(None)
        total = 0
        for value in range(b.n):
            colors[free] = value
            total += search()
            colors[free] = None
        colors[:] = snapshot
        return total

    return search()


def count_colorings_bruteforce(g: GaussCode, b: FiniteKFlatBiquandle) -> int:
    """Exhaustive oracle over all color assignments (tiny diagrams only)."""
    import itertools

    nsemi, constraints = _coloring_constraints(g, b)
    if b.n ** nsemi > 4_000_000:
        raise PreconditionError("brute force oracle limited to tiny instances")
    count = 0
    for assign in itertools.product(range(b.n), repeat=nsemi):
        if all(
            fwd(assign[x1], assign[x2]) == (assign[y1], assign[y2])
            for x1, x2, y1, y2, fwd in constraints
        ):
            count += 1
    return count


# -- the determinant invariant over Z[t, s_1..s_k] ------------------------------


def _ensure_underpasses_code(g: GaussCode, auto_kink: bool) -> tuple[GaussCode, list[int]]:
    from .moves import R1Insert, apply_move

    kinked = []
    while True:
        bad = None
        for ci, comp in enumerate(g.components):
            if not any(p.role == "U" for p in comp):
                bad = ci
                break
        if bad is None:
            return g, kinked
        if not auto_kink:
            raise PreconditionError(f"component {bad} has no classical underpass")
        g = apply_move(g, R1Insert(bad, 0, 1, 0, 1, over_first=True))
        kinked.append(bad)


def multiflat_alexander_matrix(
    g: GaussCode, k: int | None = None, auto_kink: bool = True
) -> tuple[list[list[LaurentPoly]], GaussCode, list[int]]:
    """Long-arc relation matrix over Z[t, s_1..s_k] (one row per classical
    crossing, flat passages folded into labels)."""
    g.validate()
    if k is None:
        k = max(g.flat_types(), default=0)
    if any(t > k for t in g.flat_types()):
        raise PreconditionError(f"diagram uses flat types beyond k={k}")
    if not g.classical_ids() and not auto_kink:
        raise PreconditionError("no classical crossings: determinant undefined")
    g, kinked = _ensure_underpasses_code(g, auto_kink)

    tails = {cid: g.flat_tail_is_first(cid) for cid in g.flat_ids()}
    occurrence_first: dict[int, tuple[int, int]] = {}
    for ci, comp in enumerate(g.components):
        for pi, p in enumerate(comp):
            occurrence_first.setdefault(p.id, (ci, pi))

    arc_index: dict[int, int] = {}
    for comp in g.components:
        for p in comp:
            if p.role == "U" and p.id not in arc_index:
                arc_index[p.id] = len(arc_index)
    n = len(arc_index)
    one = LaurentPoly.const(1)
    t = LaurentPoly.var("t")
    matrix = [[LaurentPoly.zero() for _ in range(n)] for _ in range(n)]

    for ci, comp in enumerate(g.components):
        m = len(comp)
        starts = [i for i, p in enumerate(comp) if p.role == "U"]
        for start in starts:
            arc = arc_index[comp[start].id]
            label = one
            i = (start + 1) % m
            while True:
                p = comp[i]
                kind = g.crossings[p.id]
                if isinstance(kind, Classical):
                    row = arc_index[p.id]
                    if p.role == "O":
                        matrix[row][arc] = matrix[row][arc] + label * (one - t ** kind.sign)
                    else:
                        matrix[row][arc] = matrix[row][arc] + label * t ** kind.sign
                        break
                else:
                    at_tail = (occurrence_first[p.id] == (ci, i)) == tails[p.id]
                    eps = 1 if at_tail else -1
                    label = label * LaurentPoly.var(f"s{kind.type}", eps)
                i = (i + 1) % m
    for cid, row in arc_index.items():
        matrix[row][row] = matrix[row][row] - one
    return matrix, g, kinked


def multiflat_alexander_delta(
    g: GaussCode, k: int | None = None, auto_kink: bool = True
) -> LaurentPoly:
    """Generator of the first nonvanishing Fitting ideal, normalized.

    The full determinant when it is nonzero; on classical-like diagrams
    (where it vanishes identically) the first minor determinant, which is
    the classical Alexander polynomial.
    """
    if k is None:
        k = max(g.flat_types(), default=0)
    matrix, _, _ = multiflat_alexander_matrix(g, k, auto_kink)
    units = {"t", *(f"s{i}" for i in range(1, k + 1))}
    delta = lp_det(matrix)
    if delta.is_zero() and len(matrix) > 1:
        minor = [row[:-1] for row in matrix[:-1]]
        delta = lp_det(minor)
    return lp_similar_normalize(delta, units)


def semiarc_matrix(g: GaussCode, k: int | None = None) -> list[list[LaurentPoly]]:
    """Square presentation with one generator per semiarc and two
    relations per crossing (no folding); determinant agrees with the
    folded presentation up to units."""
    g.validate()
    if k is None:
        k = max(g.flat_types(), default=0)
    index = {}
    for ci, comp in enumerate(g.components):
        if not comp:
            raise PreconditionError("bare circles have no crossing relations")
        for pos in range(len(comp)):
            index[(ci, pos)] = len(index)
    nsemi = len(index)

    def around(ci, pos):
        m = len(g.components[ci])
        return index[(ci, (pos - 1) % m)], index[(ci, pos)]

    t = LaurentPoly.var("t")
    one = LaurentPoly.const(1)
    rows = []
    for cid, kind in g.crossings.items():
        (c1, p1), (c2, p2) = g.passage_positions(cid)
        in1, out1 = around(c1, p1)
        in2, out2 = around(c2, p2)
        if isinstance(kind, Classical):
            role1 = g.components[c1][p1].role
            u_in, u_out = (in1, out1) if role1 == "U" else (in2, out2)
            o_in, o_out = (in2, out2) if role1 == "U" else (in1, out1)
            tw = t ** kind.sign
            row = [LaurentPoly.zero() for _ in range(nsemi)]
            row[u_out] = row[u_out] - one
            row[u_in] = row[u_in] + tw
            row[o_in] = row[o_in] + (one - tw)
            rows.append(row)
            row = [LaurentPoly.zero() for _ in range(nsemi)]
            row[o_out] = row[o_out] - one
            row[o_in] = row[o_in] + one
            rows.append(row)
        else:
            s = LaurentPoly.var(f"s{kind.type}")
            tail_first = kind.sign == 1
            t_in, t_out = (in1, out1) if tail_first else (in2, out2)
            h_in, h_out = (in2, out2) if tail_first else (in1, out1)
            row = [LaurentPoly.zero() for _ in range(nsemi)]
            row[t_out] = row[t_out] - one
            row[t_in] = row[t_in] + s
            rows.append(row)
            row = [LaurentPoly.zero() for _ in range(nsemi)]
            row[h_out] = row[h_out] - one
            row[h_in] = row[h_in] + s ** -1
            rows.append(row)
    return rows

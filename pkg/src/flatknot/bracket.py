"""Picture-valued Kauffman bracket and Jones polynomial.

Classical crossings are smoothed in both ways, weights ``a`` and
``a^{-1}``; all flat crossings survive into the resulting states.  Each
state is a flat-only diagram: bare circles convert to factors of
``(-a^2 - a^-2)`` (one circle is kept as the basis element ``()``), and
what remains is reduced to a canonical key by the state-move search in
``moves``.  The bracket is the key-indexed sum of weights; the Jones
polynomial rescales by ``(-a)^{-3w}`` with ``w`` the writhe, which
cancels the first-move scaling.

Which reconnection is the ``a``-weighted one is fixed by a convention
flag: under the default ``L`` the a-smoothing of a positive crossing is
the orientation-respecting splice, which makes a positive classical curl
contribute ``(-a)^3`` (the mirror convention ``R`` swaps a and 1/a).
"""

from __future__ import annotations

from .codes import Classical, Flat, GaussCode, MoveSystem, writhe
from .errors import BudgetExceeded, PreconditionError
from .laurent import LaurentPoly
from .moves import _tokens, reduce_flat_state

__all__ = ["BracketValue", "bracket", "jones", "specialize_flat"]

CIRCLE_KEY = "()"

_DELTA = LaurentPoly({(("a", 2),): -1, (("a", -2),): -1})


class BracketValue:
    """Finitely supported map from canonical state keys to Laurent
    polynomials in ``a``, with a saturation flag per key."""

    __slots__ = ("coeffs", "saturated", "states")

    def __init__(self, coeffs=None, saturated=None, states=0):
        self.coeffs: dict[str, LaurentPoly] = dict(coeffs or {})
        self.saturated: dict[str, bool] = dict(saturated or {})
        self.states = states

    def add(self, key: str, value: LaurentPoly, saturated: bool) -> None:
        acc = self.coeffs.get(key, LaurentPoly.zero()) + value
        if acc.is_zero():
            self.coeffs.pop(key, None)
        else:
            self.coeffs[key] = acc
        self.saturated[key] = self.saturated.get(key, True) and saturated

    def items(self):
        return sorted(self.coeffs.items())

    def scaled(self, factor: LaurentPoly) -> "BracketValue":
        return BracketValue(
            {k: v * factor for k, v in self.coeffs.items()}, self.saturated, self.states
        )

    def __eq__(self, other):
        if not isinstance(other, BracketValue):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def is_unknot_like(self) -> bool:
        return set(self.coeffs) <= {CIRCLE_KEY}

    def __repr__(self):
        if not self.coeffs:
            return "<bracket 0>"
        parts = [f"[{k}]: {v}" for k, v in self.items()]
        return "<bracket " + "; ".join(parts) + ">"

    def to_obj(self) -> list[dict]:
        return [
            {"key": k, "coeff": str(v), "saturated": self.saturated.get(k, True)}
            for k, v in self.items()
        ]


def _splice(comps, tails, flips, cid, oriented):
    """Smooth chord ``cid`` out of the token words.

    ``oriented`` keeps all traversal directions; the other splice
    reverses one arc, flipping the recorded tail of every chord with
    exactly one passage on it.
    """
    locs = [
        (ci, pi)
        for ci, comp in enumerate(comps)
        for pi, tok in enumerate(comp)
        if tok[0] == cid
    ]
    (c1, p1), (c2, p2) = locs
    if c1 == c2:
        word = comps[c1]
        p, q = sorted((p1, p2))
        middle = word[p + 1:q]
        outside = word[:p] + word[q + 1:]
        if oriented:
            comps[c1] = outside
            comps.append(middle)
        else:
            comps[c1] = word[:p] + middle[::-1] + word[q + 1:]
            _flip_single(middle, flips)
    else:
        w1, w2 = comps[c1], comps[c2]
        other = w2[p2 + 1:] + w2[:p2]
        if oriented:
            merged = w1[:p1] + other + w1[p1 + 1:]
        else:
            merged = w1[:p1] + other[::-1] + w1[p1 + 1:]
            _flip_single(other, flips)
        comps[c1] = merged
        del comps[c2]


def _flip_single(segment, flips):
    counts: dict[int, int] = {}
    for tok in segment:
        counts[tok[0]] = counts.get(tok[0], 0) + 1
    for cid, cnt in counts.items():
        if cnt == 1:
            flips[cid] = flips.get(cid, 0) ^ 1


def bracket(
    g: GaussCode,
    ms: MoveSystem | None = None,
    budget: int = 20000,
    cap: int = 20,
    convention: str = "L",
) -> BracketValue:
    """State sum over all smoothings of the classical crossings."""
    g.validate()
    if ms is None:
        ms = MoveSystem.flat_virtual()
    if convention not in ("L", "R"):
        raise PreconditionError(f"unknown smoothing convention {convention!r}")
    classical = g.classical_ids()
    n = len(classical)
    if n > cap:
        raise BudgetExceeded(f"{n} classical crossings exceed the cap {cap}")

    base_comps, base_tails = _tokens(g)
    signs = {cid: g.crossings[cid].sign for cid in classical}
    result = BracketValue(states=2**n)
    for mask in range(2**n):
        comps = [list(c) for c in base_comps]
        tails = dict(base_tails)
        flips: dict[int, int] = {}
        alpha = 0
        for bit, cid in enumerate(classical):
            choose_a = not (mask >> bit) & 1
            if choose_a:
                alpha += 1
            base_oriented = choose_a == ((signs[cid] == 1) == (convention == "L"))
            oriented = base_oriented ^ bool(flips.get(cid, 0))
            _splice(comps, tails, flips, cid, oriented)
        # materialize the flat state with accumulated tail flips
        state_tails = {
            cid: occ ^ flips.get(cid, 0) for cid, occ in tails.items()
        }
        crossings = {cid: g.crossings[cid] for cid in tails}
        state = _state_code(comps, crossings, state_tails)
        key, shed, saturated = reduce_flat_state(state, ms, budget)
        weight = LaurentPoly.var("a", 2 * alpha - n)
        circles = shed - 1 if key == CIRCLE_KEY else shed
        result.add(key, weight * _DELTA**circles, saturated)
    return result


def _state_code(comps, crossings, tails) -> GaussCode:
    from .moves import _rebuild

    return _rebuild([list(c) for c in comps], crossings, tails)


def jones(
    g: GaussCode,
    ms: MoveSystem | None = None,
    budget: int = 20000,
    cap: int = 20,
    convention: str = "L",
) -> BracketValue:
    """Writhe-normalized bracket ``(-a)^{-3w} <g>``; invariant under first
    classical moves as well."""
    w = writhe(g)
    factor = LaurentPoly.monomial((-1) ** (w % 2), a=-3 * w)
    return bracket(g, ms, budget, cap, convention).scaled(factor)


def specialize_flat(value: BracketValue) -> BracketValue:
    """Substitute a := -1 (the integer-coefficient flat specialization)."""
    out = BracketValue(states=value.states)
    for key, coeff in value.coeffs.items():
        spec = coeff.substitute("a", -1)
        if not spec.is_zero():
            out.add(key, spec, value.saturated.get(key, True))
    return out

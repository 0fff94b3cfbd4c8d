"""Gauss codes for diagrams with classical and typed flat crossings.

A diagram is stored as cyclic words of *passages*.  A classical crossing
is passed once over (``O``) and once under (``U``) and carries a writhe
sign.  A flat crossing of type ``i >= 1`` is passed twice with role ``S``
and carries one bit of local information, stored as a sign.  Virtual
crossings never appear here: they are an artifact of drawing the code in
the plane and are quotiented away by the detour move (see ``planar``).

Sign conventions
----------------
Orient every component by its word.  At a crossing the two strands cross
transversally; write det(x, y) for the sign of the frame formed by the
direction of strand x followed by the direction of strand y.

* classical sign  = det(over strand, under strand)  (the usual writhe);
* flat sign       = det(first passage, second passage), where "first"
  means earlier in the stored word order (components in order, positions
  within a component from its stored starting point).

The passage of a flat chord whose frame against the other strand is
positive is called the *tail* of the chord; the flat sign is ``+`` exactly
when the tail is the first passage.  Rotating a stored word past a flat
endpoint therefore flips the stored sign while describing the same
diagram; all move and canonicalization code accounts for this.

Text grammar: components separated by ``;``, whitespace-separated tokens
``O<id><sign>``, ``U<id><sign>``, ``F<type>.<id><sign>`` with ``sign`` one
of ``+-``.  Canonical spelling renumbers ids 1..n in order of first
appearance.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .errors import ParseError, ValidationError

__all__ = [
    "Classical",
    "Flat",
    "Passage",
    "GaussCode",
    "MoveSystem",
    "parse_gauss",
    "writhe",
    "forget_classical",
    "flatten_to_virtual",
    "retype_inclusion",
    "merge_types",
]


@dataclass(frozen=True)
class Classical:
    sign: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValidationError(f"classical sign must be +-1, got {self.sign}")


@dataclass(frozen=True)
class Flat:
    type: int
    sign: int

    def __post_init__(self):
        if self.type < 1:
            raise ValidationError(f"flat type must be >= 1, got {self.type}")
        if self.sign not in (1, -1):
            raise ValidationError(f"flat sign must be +-1, got {self.sign}")


class Passage(NamedTuple):
    id: int
    role: str  # "O" / "U" for classical, "S" for flat


class GaussCode:
    """Immutable multi-component Gauss code."""

    __slots__ = ("components", "crossings", "_hash")

    def __init__(self, components, crossings):
        self.components: tuple[tuple[Passage, ...], ...] = tuple(
            tuple(Passage(p[0], p[1]) for p in comp) for comp in components
        )
        self.crossings: dict[int, Classical | Flat] = dict(crossings)
        self._hash = None

    def __eq__(self, other):
        if not isinstance(other, GaussCode):
            return NotImplemented
        return self.components == other.components and self.crossings == other.crossings

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.components, tuple(sorted(self.crossings.items()))))
        return self._hash

    def __repr__(self):
        return f"GaussCode({self.serialize()!r})"

    # -- basic queries -------------------------------------------------

    def num_components(self) -> int:
        return len(self.components)

    def classical_ids(self) -> list[int]:
        return sorted(i for i, k in self.crossings.items() if isinstance(k, Classical))

    def flat_ids(self) -> list[int]:
        return sorted(i for i, k in self.crossings.items() if isinstance(k, Flat))

    def flat_types(self) -> set[int]:
        return {k.type for k in self.crossings.values() if isinstance(k, Flat)}

    def is_empty(self) -> bool:
        return not self.crossings

    def passage_positions(self, cid: int) -> list[tuple[int, int]]:
        """The (component, position) pairs of a crossing, in word order."""
        out = [
            (ci, pi)
            for ci, comp in enumerate(self.components)
            for pi, p in enumerate(comp)
            if p.id == cid
        ]
        return out

    def flat_tail_is_first(self, cid: int) -> bool:
        kind = self.crossings[cid]
        if not isinstance(kind, Flat):
            raise ValueError(f"crossing {cid} is not flat")
        return kind.sign == 1

    # -- validation ------------------------------------------------------

    def validate(self) -> None:
        seen: dict[int, list[str]] = {}
        for comp in self.components:
            for p in comp:
                if p.id not in self.crossings:
                    raise ValidationError(f"passage references unknown crossing {p.id}")
                seen.setdefault(p.id, []).append(p.role)
        for cid, kind in self.crossings.items():
            roles = sorted(seen.get(cid, []))
            if isinstance(kind, Classical):
                if roles != ["O", "U"]:
                    raise ValidationError(
                        f"classical crossing {cid} needs one O and one U passage, got {roles}"
                    )
            elif isinstance(kind, Flat):
                if roles != ["S", "S"]:
                    raise ValidationError(
                        f"flat crossing {cid} needs exactly two S passages, got {roles}"
                    )
            else:
                raise ValidationError(f"crossing {cid} has unsupported kind {kind!r}")

    # -- serialization -----------------------------------------------------

    def serialize(self, renumber: bool = True) -> str:
        """Canonical text spelling (ids renumbered in first-appearance order)."""
        mapping: dict[int, int] = {}
        if renumber:
            for comp in self.components:
                for p in comp:
                    if p.id not in mapping:
                        mapping[p.id] = len(mapping) + 1
        else:
            mapping = {i: i for i in self.crossings}
        chunks = []
        for comp in self.components:
            tokens = []
            for p in comp:
                kind = self.crossings[p.id]
                cid = mapping[p.id]
                if isinstance(kind, Classical):
                    tokens.append(f"{p.role}{cid}{'+' if kind.sign > 0 else '-'}")
                else:
                    tokens.append(f"F{kind.type}.{cid}{'+' if kind.sign > 0 else '-'}")
            chunks.append(" ".join(tokens))
        return " ; ".join(chunks)

    def renumbered(self) -> "GaussCode":
        mapping: dict[int, int] = {}
        for comp in self.components:
            for p in comp:
                if p.id not in mapping:
                    mapping[p.id] = len(mapping) + 1
        comps = tuple(tuple(Passage(mapping[p.id], p.role) for p in comp) for comp in self.components)
        crossings = {mapping[i]: k for i, k in self.crossings.items()}
        return GaussCode(comps, crossings)


_TOKEN_RE = re.compile(r"^(?:([OU])([1-9][0-9]*)([+-])|F([1-9][0-9]*)\.([1-9][0-9]*)([+-]))$")


def parse_gauss(text: str) -> GaussCode:
    """Parse the Gauss-code grammar; raises ParseError / ValidationError."""
    components = []
    crossings: dict[int, Classical | Flat] = {}
    for ci, chunk in enumerate(text.split(";")):
        passages = []
        for token in chunk.split():
            m = _TOKEN_RE.match(token)
            if not m:
                raise ParseError(f"bad token {token!r} in component {ci + 1}")
            if m.group(1):
                role, cid, sign = m.group(1), int(m.group(2)), 1 if m.group(3) == "+" else -1
                kind = Classical(sign)
            else:
                typ, cid, sign = int(m.group(4)), int(m.group(5)), 1 if m.group(6) == "+" else -1
                role, kind = "S", Flat(typ, sign)
            if cid in crossings:
                if crossings[cid] != kind:
                    raise ParseError(
                        f"crossing {cid}: conflicting declarations "
                        f"{crossings[cid]!r} vs {kind!r} (sign/type mismatch)"
                    )
            else:
                crossings[cid] = kind
            passages.append(Passage(cid, role))
        components.append(tuple(passages))
    code = GaussCode(tuple(components), crossings)
    code.validate()
    return code


# -- diagram maps -------------------------------------------------------


def writhe(g: GaussCode) -> int:
    """Sum of classical crossing signs; flat crossings contribute nothing."""
    return sum(k.sign for k in g.crossings.values() if isinstance(k, Classical))


def forget_classical(g: GaussCode) -> GaussCode:
    """Forget over/under data: every classical crossing becomes flat type 1.

    The flat sign of a converted chord is the frame of (first passage,
    second passage), which equals the writhe sign when the first passage
    was the overpass and its negative otherwise.
    """
    crossings: dict[int, Classical | Flat] = {}
    first_role: dict[int, str] = {}
    for comp in g.components:
        for p in comp:
            first_role.setdefault(p.id, p.role)
    for cid, kind in g.crossings.items():
        if isinstance(kind, Classical):
            sign = kind.sign if first_role[cid] == "O" else -kind.sign
            crossings[cid] = Flat(1, sign)
        else:
            crossings[cid] = kind
    comps = tuple(
        tuple(Passage(p.id, "S" if isinstance(g.crossings[p.id], Classical) else p.role) for p in comp)
        for comp in g.components
    )
    return GaussCode(comps, crossings)


def flatten_to_virtual(g: GaussCode) -> GaussCode:
    """Turn all flat crossings virtual: they vanish from the abstract code."""
    flat = {i for i, k in g.crossings.items() if isinstance(k, Flat)}
    comps = tuple(tuple(p for p in comp if p.id not in flat) for comp in g.components)
    crossings = {i: k for i, k in g.crossings.items() if i not in flat}
    return GaussCode(comps, crossings)


def retype_inclusion(g: GaussCode, sigma: dict[int, int] | Iterable[int]) -> GaussCode:
    """Retype crossings along a strictly increasing type map.

    ``sigma`` maps present types (0 = classical) to new types.  With
    sigma[0] = 0 classical crossings are preserved; with sigma[0] > 0 they
    become flat of that type and the over/under data is erased.
    """
    if not isinstance(sigma, dict):
        sigma = {i: s for i, s in enumerate(sigma)}
    values = [sigma[k] for k in sorted(sigma)]
    if any(b <= a for a, b in zip(values, values[1:])) or any(v < 0 for v in values):
        raise ValidationError(f"type map must be strictly increasing and nonnegative: {sigma}")
    present = ({0} if any(isinstance(k, Classical) for k in g.crossings.values()) else set()) | g.flat_types()
    missing = present - set(sigma)
    if missing:
        raise ValidationError(f"type map does not cover present types {sorted(missing)}")

    erase_classical = sigma.get(0, 0) > 0
    first_role: dict[int, str] = {}
    for comp in g.components:
        for p in comp:
            first_role.setdefault(p.id, p.role)
    crossings: dict[int, Classical | Flat] = {}
    for cid, kind in g.crossings.items():
        if isinstance(kind, Classical):
            if erase_classical:
                sign = kind.sign if first_role[cid] == "O" else -kind.sign
                crossings[cid] = Flat(sigma[0], sign)
            else:
                crossings[cid] = kind
        else:
            new_type = sigma[kind.type]
            if new_type < 1:
                raise ValidationError("flat types must stay >= 1")
            crossings[cid] = Flat(new_type, kind.sign)
    if erase_classical:
        comps = tuple(
            tuple(
                Passage(p.id, "S" if isinstance(g.crossings[p.id], Classical) else p.role)
                for p in comp
            )
            for comp in g.components
        )
    else:
        comps = g.components
    return GaussCode(comps, crossings)


# -- move systems -------------------------------------------------------


@dataclass(frozen=True)
class MoveSystem:
    """Which Reidemeister moves are legal: first moves of multiplicity
    ``d[i]`` per type, second moves always, same-type third moves when
    ``epsilon[i] = 1``, mixed third moves always."""

    k: int
    d: tuple[int, ...]
    epsilon: tuple[int, ...]

    def __post_init__(self):
        if self.k < 0:
            raise ValidationError("k must be >= 0")
        if len(self.d) != self.k + 1 or len(self.epsilon) != self.k + 1:
            raise ValidationError("d and epsilon must have length k+1")
        if any(x < 0 for x in self.d) or any(e not in (0, 1) for e in self.epsilon):
            raise ValidationError("d entries >= 0 and epsilon entries in {0,1}")

    @classmethod
    def flat_virtual(cls) -> "MoveSystem":
        return cls(2, (1, 1, 1), (1, 1, 1))

    @classmethod
    def restricted_flat_virtual(cls) -> "MoveSystem":
        return cls(2, (1, 1, 1), (1, 0, 1))

    @classmethod
    def classical(cls) -> "MoveSystem":
        return cls(0, (1,), (1,))

    @classmethod
    def uniform(cls, k: int) -> "MoveSystem":
        return cls(k, (1,) * (k + 1), (1,) * (k + 1))

    def with_d(self, **overrides: int) -> "MoveSystem":
        """Copy with d[i] replaced, e.g. ``with_d(d1=0)`` to drop flat R1."""
        d = list(self.d)
        for key, value in overrides.items():
            d[int(key[1:])] = value
        return MoveSystem(self.k, tuple(d), self.epsilon)

    def allows_r1(self, type_: int) -> bool:
        return type_ <= self.k and self.d[type_] > 0

    def allows_r3(self, i: int, j: int) -> bool:
        """Third move with stationary type i and sliding pair of type j."""
        if max(i, j) > self.k:
            return False
        if i == j:
            return self.epsilon[i] == 1
        return i < j

    @classmethod
    def parse(cls, text: str) -> "MoveSystem":
        """Parse ``k:d0,d1,...:e0,e1,...``."""
        try:
            k_text, d_text, e_text = text.split(":")
            k = int(k_text)
            d = tuple(int(x) for x in d_text.split(","))
            e = tuple(int(x) for x in e_text.split(","))
        except ValueError as exc:
            raise ParseError(f"bad move-system spec {text!r}") from exc
        return cls(k, d, e)

    def spec(self) -> str:
        return f"{self.k}:{','.join(map(str, self.d))}:{','.join(map(str, self.epsilon))}"


def merge_types(g: GaussCode, l: int, ms: MoveSystem) -> tuple[GaussCode, MoveSystem]:
    """Merge crossing types l and l+1 (l = 0 merges classical into flat).

    Types above l drop by one; the merged level keeps first moves of
    multiplicity gcd(d_l, d_{l+1}) and gains the same-type third move.
    """
    if not 0 <= l < ms.k:
        raise ValidationError(f"merge level {l} out of range for k={ms.k}")
    if l == 0:
        g2 = forget_classical(g)
        crossings = {
            cid: Flat(kind.type - 1, kind.sign) if kind.type >= 2 else kind
            for cid, kind in g2.crossings.items()
        }
        g2 = GaussCode(g2.components, crossings)
    else:
        crossings = {
            cid: Flat(kind.type - 1, kind.sign)
            if isinstance(kind, Flat) and kind.type > l
            else kind
            for cid, kind in g.crossings.items()
        }
        g2 = GaussCode(g.components, crossings)
    d = list(ms.d)
    e = list(ms.epsilon)
    merged_d = math.gcd(d[l], d[l + 1])
    new_d = tuple(d[:l] + [merged_d] + d[l + 2:])
    new_e = tuple(e[:l] + [1] + e[l + 2:])
    return g2, MoveSystem(ms.k - 1, new_d, new_e)

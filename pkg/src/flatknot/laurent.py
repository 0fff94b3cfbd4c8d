"""Exact multivariate Laurent polynomials over the integers.

Coefficients are arbitrary-precision integers and exponents may be
negative.  The variable universe is ordered ``a < t < u < v < s1 < s2 < ...``
and every normal form computed here (term order, determinants, similarity
representatives) is deterministic, so printed output is stable across runs.

Two polynomials P, P' are *similar* (written P == P' up to units) when
P' = +-m*P for a monomial m in a designated set of unit variables.
``lp_similar_normalize`` picks a canonical representative of that class.
"""

from __future__ import annotations

import re
from functools import cmp_to_key

__all__ = [
    "LaurentPoly",
    "lp_add",
    "lp_mul",
    "lp_det",
    "lp_det_cofactor",
    "lp_similar_normalize",
    "lp_similar_eq",
    "parse_poly",
]

Monomial = tuple[tuple[str, int], ...]

_ONE_MONO: Monomial = ()

_VAR_RE = re.compile(r"^(a|t|u|v|s[1-9][0-9]*)$")


def _var_rank(name: str) -> tuple[int, int]:
    """Position of a variable in the fixed global order."""
    fixed = {"a": 0, "t": 1, "u": 2, "v": 3}
    if name in fixed:
        return (fixed[name], 0)
    if name.startswith("s") and name[1:].isdigit():
        return (4, int(name[1:]))
    raise ValueError(f"unknown variable name: {name!r}")


def _mono(items) -> Monomial:
    cleaned = tuple(sorted(((v, e) for v, e in items if e != 0), key=lambda p: _var_rank(p[0])))
    return cleaned


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    acc = dict(m1)
    for v, e in m2:
        acc[v] = acc.get(v, 0) + e
    return _mono(acc.items())


def _mono_div(m1: Monomial, m2: Monomial) -> Monomial:
    if not m2:
        return m1
    acc = dict(m1)
    for v, e in m2:
        acc[v] = acc.get(v, 0) - e
    return _mono(acc.items())


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _mono_cmp(m1: Monomial, m2: Monomial) -> int:
    """Graded-lex comparison; ties broken by exponents in variable order."""
    d1, d2 = _mono_degree(m1), _mono_degree(m2)
    if d1 != d2:
        return -1 if d1 < d2 else 1
    e1, e2 = dict(m1), dict(m2)
    for name in sorted(set(e1) | set(e2), key=_var_rank):
        x, y = e1.get(name, 0), e2.get(name, 0)
        if x != y:
            return -1 if x < y else 1
    return 0


_MONO_KEY = cmp_to_key(_mono_cmp)


def _display_cmp(m1: Monomial, m2: Monomial) -> int:
    """Display order: ascending |degree|, then higher variables first."""
    d1, d2 = abs(_mono_degree(m1)), abs(_mono_degree(m2))
    if d1 != d2:
        return -1 if d1 < d2 else 1
    e1, e2 = dict(m1), dict(m2)
    for name in sorted(set(e1) | set(e2), key=_var_rank, reverse=True):
        x, y = e1.get(name, 0), e2.get(name, 0)
        if x != y:
            # larger exponent on the most significant variable prints first
            return -1 if x > y else 1
    return 0


_DISPLAY_KEY = cmp_to_key(_display_cmp)


class LaurentPoly:
    """Immutable Laurent polynomial with integer coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms=None):
        data: dict[Monomial, int] = {}
        if terms:
            for m, c in (terms.items() if isinstance(terms, dict) else terms):
                if c:
                    m = _mono(m)
                    c0 = data.get(m, 0) + c
                    if c0:
                        data[m] = c0
                    elif m in data:
                        del data[m]
        self._terms = data
        self._hash = None

    # -- constructors ------------------------------------------------

    @classmethod
    def zero(cls) -> "LaurentPoly":
        return cls()

    @classmethod
    def const(cls, c: int) -> "LaurentPoly":
        return cls({_ONE_MONO: c})

    @classmethod
    def var(cls, name: str, exp: int = 1, coeff: int = 1) -> "LaurentPoly":
        _var_rank(name)
        return cls({_mono([(name, exp)]): coeff})

    @classmethod
    def monomial(cls, coeff: int, **exps: int) -> "LaurentPoly":
        return cls({_mono(exps.items()): coeff})

    # -- ring structure ----------------------------------------------

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = LaurentPoly.const(other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly({m: -c for m, c in self._terms.items()})

    def __add__(self, other) -> "LaurentPoly":
        if isinstance(other, int):
            other = LaurentPoly.const(other)
        acc = dict(self._terms)
        for m, c in other._terms.items():
            c0 = acc.get(m, 0) + c
            if c0:
                acc[m] = c0
            elif m in acc:
                del acc[m]
        out = LaurentPoly.__new__(LaurentPoly)
        out._terms = acc
        out._hash = None
        return out

    __radd__ = __add__

    def __sub__(self, other) -> "LaurentPoly":
        if isinstance(other, int):
            other = LaurentPoly.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other) -> "LaurentPoly":
        if isinstance(other, int):
            if other == 0:
                return LaurentPoly.zero()
            return LaurentPoly({m: c * other for m, c in self._terms.items()})
        acc: dict[Monomial, int] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                c0 = acc.get(m, 0) + c1 * c2
                if c0:
                    acc[m] = c0
                elif m in acc:
                    del acc[m]
        out = LaurentPoly.__new__(LaurentPoly)
        out._terms = acc
        out._hash = None
        return out

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "LaurentPoly":
        if k == 0:
            return LaurentPoly.const(1)
        if k < 0:
            if len(self._terms) != 1:
                raise ValueError("negative powers only defined for monomials")
            (m, c), = self._terms.items()
            if c not in (1, -1):
                raise ValueError("negative powers need a unit coefficient")
            inv = LaurentPoly({_mono((v, -e) for v, e in m): c})
            return inv ** (-k)
        result = LaurentPoly.const(1)
        base = self
        n = k
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- queries -----------------------------------------------------

    def terms(self):
        """Terms as (monomial, coeff) pairs in ascending graded-lex order."""
        return sorted(self._terms.items(), key=lambda t: _MONO_KEY(t[0]))

    def variables(self) -> set[str]:
        return {v for m in self._terms for v, _ in m}

    def constant_value(self) -> int:
        """The integer value, if the polynomial is constant."""
        if not self._terms:
            return 0
        if set(self._terms) == {_ONE_MONO}:
            return self._terms[_ONE_MONO]
        raise ValueError(f"not a constant polynomial: {self}")

    def leading(self) -> tuple[Monomial, int]:
        m = max(self._terms, key=_MONO_KEY)
        return m, self._terms[m]

    def least(self) -> tuple[Monomial, int]:
        m = min(self._terms, key=_MONO_KEY)
        return m, self._terms[m]

    # -- substitution ------------------------------------------------

    def substitute(self, name: str, value) -> "LaurentPoly":
        """Substitute an integer or a single-term unit for a variable.

        Integer values other than +-1 are only accepted when the variable
        occurs with nonnegative exponents.
        """
        acc = LaurentPoly.zero()
        for m, c in self._terms.items():
            e = dict(m).get(name, 0)
            rest = LaurentPoly({_mono((v, k) for v, k in m if v != name): c})
            if e == 0:
                acc = acc + rest
                continue
            if isinstance(value, int):
                if value in (1, -1):
                    acc = acc + rest * (value ** abs(e))
                elif e < 0:
                    raise ValueError(f"cannot substitute {value} for {name}^{e}")
                else:
                    acc = acc + rest * (value ** e)
            else:
                acc = acc + rest * (value ** e)
        return acc

    def rename(self, old: str, new: str) -> "LaurentPoly":
        return LaurentPoly(
            {_mono((new if v == old else v, e) for v, e in m): c for m, c in self._terms.items()}
        )

    # -- exact division ----------------------------------------------

    def divide_exact(self, divisor: "LaurentPoly") -> "LaurentPoly":
        """Exact division; raises InexactDivision when it does not divide.

        Exactness is guaranteed for the fraction-free determinant steps,
        so a failure here signals an implementation bug, not bad input.
        """
        if divisor.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        if self.is_zero():
            return LaurentPoly.zero()
        rem = dict(self._terms)
        dm, dc = divisor.leading()
        out: dict[Monomial, int] = {}
        while rem:
            rm = max(rem, key=_MONO_KEY)
            rc = rem[rm]
            if rc % dc != 0:
                raise InexactDivision(f"leading coefficient {rc} not divisible by {dc}")
            qm = _mono_div(rm, dm)
            qc = rc // dc
            out[qm] = out.get(qm, 0) + qc
            for m, c in divisor._terms.items():
                mm = _mono_mul(qm, m)
                c0 = rem.get(mm, 0) - qc * c
                if c0:
                    rem[mm] = c0
                elif mm in rem:
                    del rem[mm]
        return LaurentPoly(out)

    # -- printing ----------------------------------------------------

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for m in sorted(self._terms, key=_DISPLAY_KEY):
            c = self._terms[m]
            factors = []
            for v, e in sorted(m, key=lambda p: _var_rank(p[0])):
                factors.append(v if e == 1 else f"{v}^{e}")
            if not factors:
                body = str(abs(c))
            elif abs(c) == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(abs(c))] + factors)
            pieces.append(("-" if c < 0 else "+", body))
        sign0, body0 = pieces[0]
        text = ("-" if sign0 == "-" else "") + body0
        for sign, body in pieces[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self) -> str:
        return f"LaurentPoly({self})"


class InexactDivision(ArithmeticError):
    """Exact polynomial division failed (implementation bug indicator)."""


# -- module-level operations ------------------------------------------


def lp_add(p: LaurentPoly, q: LaurentPoly) -> LaurentPoly:
    return p + q


def lp_mul(p: LaurentPoly, q: LaurentPoly) -> LaurentPoly:
    return p * q


def lp_det(matrix: list[list[LaurentPoly]]) -> LaurentPoly:
    """Determinant by fraction-free (Bareiss) elimination.

    Stays in the integer Laurent ring throughout; every division performed
    is exact because the ring has no zero divisors.
    """
    n = len(matrix)
    if any(len(row) != n for row in matrix):
        raise ValueError("matrix is not square")
    if n == 0:
        return LaurentPoly.const(1)
    m = [list(row) for row in matrix]
    sign = 1
    prev = LaurentPoly.const(1)
    for k in range(n - 1):
        if m[k][k].is_zero():
            pivot_row = next((r for r in range(k + 1, n) if not m[r][k].is_zero()), None)
            if pivot_row is None:
                return LaurentPoly.zero()
            m[k], m[pivot_row] = m[pivot_row], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[k][k] * m[i][j] - m[i][k] * m[k][j]).divide_exact(prev)
            m[i][k] = LaurentPoly.zero()
        prev = m[k][k]
    result = m[n - 1][n - 1]
    return result if sign == 1 else -result


def lp_det_cofactor(matrix: list[list[LaurentPoly]]) -> LaurentPoly:
    """Determinant by cofactor expansion (independent cross-check path)."""
    n = len(matrix)
    if any(len(row) != n for row in matrix):
        raise ValueError("matrix is not square")
    cache: dict[tuple[int, int], LaurentPoly] = {}

    def minor(row: int, cols: int) -> LaurentPoly:
        if row == n:
            return LaurentPoly.const(1)
        key = (row, cols)
        if key in cache:
            return cache[key]
        acc = LaurentPoly.zero()
        sign = 1
        for j in range(n):
            if not (cols >> j) & 1:
                continue
            entry = matrix[row][j]
            if entry:
                acc = acc + entry * minor(row + 1, cols & ~(1 << j)) * sign
            sign = -sign
        cache[key] = acc
        return acc

    return minor(0, (1 << n) - 1)


def lp_similar_normalize(p: LaurentPoly, unit_vars) -> LaurentPoly:
    """Canonical representative of p up to +-(monomial in unit_vars).

    The monomial content in the unit variables is divided out (every unit
    variable then has minimum exponent 0), and the sign is fixed so the
    graded-lex-least term has a positive coefficient.
    """
    if p.is_zero():
        return p
    unit_vars = set(unit_vars)
    mins: dict[str, int] = {}
    for m, _ in p._terms.items():
        exps = dict(m)
        for v in unit_vars:
            e = exps.get(v, 0)
            if v not in mins or e < mins[v]:
                mins[v] = e
    shift = _mono((v, -e) for v, e in mins.items() if e)
    q = LaurentPoly({_mono_mul(m, shift): c for m, c in p._terms.items()})
    _, c = q.least()
    return q if c > 0 else -q


def lp_similar_eq(p: LaurentPoly, q: LaurentPoly, unit_vars) -> bool:
    return lp_similar_normalize(p, unit_vars) == lp_similar_normalize(q, unit_vars)


# -- parsing -----------------------------------------------------------

_TERM_SPLIT = re.compile(r"(?<!\^)(?=[+-])")
_FACTOR_RE = re.compile(r"^(?:(\d+)|([a-z][a-z0-9]*)(?:\^(-?\d+))?)$")


def parse_poly(text: str) -> LaurentPoly:
    """Parse the textual form produced by ``str(LaurentPoly)``."""
    text = text.strip()
    if not text:
        raise ValueError("empty polynomial text")
    if text == "0":
        return LaurentPoly.zero()
    acc = LaurentPoly.zero()
    for chunk in _TERM_SPLIT.split(text.replace(" ", "")):
        if not chunk:
            continue
        sign = 1
        if chunk[0] == "+":
            chunk = chunk[1:]
        elif chunk[0] == "-":
            sign = -1
            chunk = chunk[1:]
        if not chunk:
            raise ValueError(f"dangling sign in polynomial text: {text!r}")
        coeff = sign
        exps: dict[str, int] = {}
        for factor in chunk.split("*"):
            match = _FACTOR_RE.match(factor)
            if not match:
                raise ValueError(f"bad factor {factor!r} in polynomial text")
            num, var, exp = match.groups()
            if num is not None:
                coeff *= int(num)
            else:
                if not _VAR_RE.match(var):
                    raise ValueError(f"unknown variable {var!r}")
                exps[var] = exps.get(var, 0) + (int(exp) if exp is not None else 1)
        acc = acc + LaurentPoly({_mono(exps.items()): coeff})
    return acc

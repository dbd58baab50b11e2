"""Exact scalars, sparse parametric polynomials and fraction-free linear algebra.

Scalars are :class:`fractions.Fraction`.  A :class:`ParamPoly` is an immutable
sparse polynomial over the rationals in named variables; a :class:`RatMatrix`
is a dense grid of them.  Everything here is pure and safe to share between
threads.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Rational as _RationalABC
from typing import Iterable, Mapping, Sequence

__all__ = [
    "Fraction",
    "ParamPoly",
    "RatMatrix",
    "ParametricSolveResult",
    "binom",
    "poly_gcd",
    "poly_divmod",
    "poly_invert_mod",
    "squarefree_part",
    "rational_roots",
    "solve_linear",
    "det",
    "substitute",
    "var_key",
]

_NAME_SPLIT = re.compile(r"(\d+)")


@lru_cache(maxsize=None)
def var_key(name: str) -> tuple:
    """Natural sort key, so that b2 < b10 and x[2,3] < x[10,0]."""
    parts = _NAME_SPLIT.split(name)
    return tuple(int(p) if i % 2 else p for i, p in enumerate(parts))


def binom(a: int, b: int) -> int:
    """Binomial coefficient, zero when b < 0, a < 0 or b > a."""
    if a < 0 or b < 0 or b > a:
        return 0
    return math.comb(a, b)


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, _RationalABC)):
        return Fraction(c)
    raise TypeError(f"not an exact rational: {c!r}")


def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items(), key=lambda ve: var_key(ve[0])))


class ParamPoly:
    """Sparse multivariate polynomial with rational coefficients.

    Terms are stored as ``{monomial: coefficient}`` where a monomial is a tuple
    of ``(name, exponent)`` pairs sorted by :func:`var_key`.  Zero
    coefficients are never stored.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[tuple, Fraction] | None = None):
        clean = {}
        if terms:
            for m, c in terms.items():
                c = _as_fraction(c)
                if c:
                    clean[m] = c
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "ParamPoly":
        p = cls.__new__(cls)
        p._terms = terms
        p._hash = None
        return p

    @classmethod
    def const(cls, c) -> "ParamPoly":
        c = _as_fraction(c)
        return cls._raw({(): c} if c else {})

    @classmethod
    def var(cls, name: str, exp: int = 1) -> "ParamPoly":
        if exp == 0:
            return cls.const(1)
        return cls._raw({((name, exp),): Fraction(1)})

    @classmethod
    def coerce(cls, x) -> "ParamPoly":
        if isinstance(x, ParamPoly):
            return x
        if isinstance(x, str):
            return cls.parse(x)
        return cls.const(x)

    @classmethod
    def from_univariate(cls, coeffs: Sequence, name: str) -> "ParamPoly":
        """Build from low-to-high coefficients in one variable."""
        terms = {}
        for e, c in enumerate(coeffs):
            c = _as_fraction(c)
            if c:
                terms[((name, e),) if e else ()] = c
        return cls._raw(terms)

    # -- inspection -------------------------------------------------------

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    @property
    def variables(self) -> tuple[str, ...]:
        names = {v for m in self._terms for v, _ in m}
        return tuple(sorted(names, key=var_key))

    def exponent_vectors(self) -> dict[tuple[int, ...], Fraction]:
        """Terms keyed by dense exponent vectors over :attr:`variables`."""
        names = self.variables
        out = {}
        for m, c in self._terms.items():
            d = dict(m)
            out[tuple(d.get(v, 0) for v in names)] = c
        return out

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and () in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"not a constant: {self}")
        return self._terms.get((), Fraction(0))

    def constant_term(self) -> Fraction:
        return self._terms.get((), Fraction(0))

    def degree(self, name: str | None = None) -> int:
        """Total degree, or the degree in one variable; -1 for zero."""
        if not self._terms:
            return -1
        if name is None:
            return max(sum(e for _, e in m) for m in self._terms)
        return max(dict(m).get(name, 0) for m in self._terms)

    def num_terms(self) -> int:
        return len(self._terms)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, ParamPoly):
            try:
                other = ParamPoly.const(other)
            except TypeError:
                return NotImplemented
        if not other._terms:
            return self
        if not self._terms:
            return other
        t = dict(self._terms)
        for m, c in other._terms.items():
            s = t.get(m, 0) + c
            if s:
                t[m] = s
            else:
                t.pop(m, None)
        return ParamPoly._raw(t)

    __radd__ = __add__

    def __neg__(self):
        return ParamPoly._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, ParamPoly):
            try:
                other = ParamPoly.const(other)
            except TypeError:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "ParamPoly":
        c = _as_fraction(c)
        if not c:
            return ParamPoly._raw({})
        if c == 1:
            return self
        return ParamPoly._raw({m: v * c for m, v in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, ParamPoly):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        if not self._terms or not other._terms:
            return ParamPoly._raw({})
        if other.is_constant():
            return self.scale(other._terms[()])
        if self.is_constant():
            return other.scale(self._terms[()])
        t: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                s = t.get(m, 0) + c1 * c2
                if s:
                    t[m] = s
                else:
                    t.pop(m, None)
        return ParamPoly._raw(t)

    __rmul__ = __mul__

    def __truediv__(self, other):
        """Division by a nonzero rational, or exact division by a polynomial."""
        if isinstance(other, ParamPoly):
            if other.is_constant():
                return self.scale(1 / other.constant_value())
            return self.exact_div(other)
        return self.scale(1 / _as_fraction(other))

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        result = ParamPoly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, ParamPoly):
            return self._terms == other._terms
        try:
            return self._terms == ParamPoly.const(other)._terms
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # -- ordering and text ------------------------------------------------

    def sorted_terms(self) -> list[tuple[tuple, Fraction]]:
        """Terms in graded-lexicographic order, largest first."""
        names = self.variables
        pos = {v: i for i, v in enumerate(names)}

        def key(item):
            m = item[0]
            vec = [0] * len(names)
            for v, e in m:
                vec[pos[v]] = e
            return (-sum(vec), [-e for e in vec])

        return sorted(self._terms.items(), key=key)

    def leading_term(self) -> tuple[tuple, Fraction]:
        return self.sorted_terms()[0]

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for idx, (m, c) in enumerate(self.sorted_terms()):
            mono = "*".join(v if e == 1 else f"{v}^{e}" for v, e in m)
            a = abs(c)
            if not mono:
                body = _frac_str(a)
            elif a == 1:
                body = mono
            else:
                body = f"{_frac_str(a)}*{mono}"
            if idx == 0:
                pieces.append(("-" if c < 0 else "") + body)
            else:
                pieces.append((" - " if c < 0 else " + ") + body)
        return "".join(pieces)

    def __repr__(self) -> str:
        return f"ParamPoly({str(self)!r})"

    @classmethod
    def parse(cls, text: str) -> "ParamPoly":
        return _Parser(text).parse()

    # -- calculus and structure -------------------------------------------

    def diff(self, name: str) -> "ParamPoly":
        t = {}
        for m, c in self._terms.items():
            d = dict(m)
            e = d.get(name, 0)
            if not e:
                continue
            if e == 1:
                del d[name]
            else:
                d[name] = e - 1
            nm = tuple(sorted(d.items(), key=lambda ve: var_key(ve[0])))
            t[nm] = t.get(nm, 0) + c * e
        return ParamPoly(t)

    def coeffs_in(self, name: str) -> dict[int, "ParamPoly"]:
        """Split as a polynomial in one variable: ``{exponent: coefficient}``."""
        parts: dict[int, dict] = {}
        for m, c in self._terms.items():
            e = 0
            rest = []
            for v, k in m:
                if v == name:
                    e = k
                else:
                    rest.append((v, k))
            parts.setdefault(e, {})[tuple(rest)] = c
        return {e: ParamPoly._raw(t) for e, t in parts.items()}

    def univariate_coeffs(self, name: str | None = None) -> list[Fraction]:
        """Low-to-high coefficients; the polynomial must involve at most one variable."""
        names = self.variables
        if len(names) > 1 or (name is not None and names and names[0] != name):
            raise ValueError(f"not univariate in {name}: {self}")
        if not self._terms:
            return []
        deg = self.degree()
        out = [Fraction(0)] * (deg + 1)
        for m, c in self._terms.items():
            out[m[0][1] if m else 0] = c
        return out

    def evaluate(self, point: Mapping[str, object]) -> Fraction:
        """Exact value at a point binding every variable."""
        missing = [v for v in self.variables if v not in point]
        if missing:
            raise KeyError(f"unbound variables: {', '.join(missing)}")
        total = Fraction(0)
        for m, c in self._terms.items():
            v = c
            for name, e in m:
                v *= _as_fraction(point[name]) ** e
            total += v
        return total

    def content(self) -> Fraction:
        """Positive rational whose quotient has coprime integer coefficients."""
        if not self._terms:
            return Fraction(0)
        num = 0
        den = 1
        for c in self._terms.values():
            num = math.gcd(num, c.numerator)
            den = den * c.denominator // math.gcd(den, c.denominator)
        return Fraction(num, den)

    def primitive(self) -> "ParamPoly":
        """Integer coefficients with gcd 1 and a positive leading coefficient."""
        if not self._terms:
            return self
        p = self.scale(1 / self.content())
        if p.leading_term()[1] < 0:
            p = -p
        return p

    def monic(self) -> "ParamPoly":
        if not self._terms:
            return self
        return self.scale(1 / self.leading_term()[1])

    def divmod(self, other: "ParamPoly") -> tuple["ParamPoly", "ParamPoly"]:
        """Multivariate division by one polynomial under the graded order."""
        if not other._terms:
            raise ZeroDivisionError("division by the zero polynomial")
        lm, lc = other.leading_term()
        lmd = dict(lm)
        rem = dict(self._terms)
        quot: dict = {}
        remainder: dict = {}
        names = sorted({v for m in rem for v, _ in m} | set(lmd), key=var_key)
        pos = {v: i for i, v in enumerate(names)}

        def order(m):
            vec = [0] * len(names)
            for v, e in m:
                vec[pos[v]] = e
            return (sum(vec), vec)

        while rem:
            m = max(rem, key=order)
            c = rem[m]
            md = dict(m)
            if all(md.get(v, 0) >= e for v, e in lmd.items()):
                qd = {v: md[v] - lmd.get(v, 0) for v in md}
                qm = tuple(sorted(((v, e) for v, e in qd.items() if e), key=lambda ve: var_key(ve[0])))
                qc = c / lc
                quot[qm] = quot.get(qm, 0) + qc
                for om, oc in other._terms.items():
                    pm = _mono_mul(qm, om)
                    s = rem.get(pm, 0) - qc * oc
                    if s:
                        rem[pm] = s
                    else:
                        rem.pop(pm, None)
            else:
                remainder[m] = c
                del rem[m]
        return ParamPoly(quot), ParamPoly(remainder)

    def exact_div(self, other: "ParamPoly") -> "ParamPoly":
        if other.is_constant():
            return self.scale(1 / other.constant_value())
        q, r = self.divmod(other)
        if r:
            raise ArithmeticError(f"{other} does not divide {self}")
        return q

    def divides(self, other: "ParamPoly") -> bool:
        if not self._terms:
            return not other._terms
        return not other.divmod(self)[1]

    def rem_univariate(self, name: str, modulus: Sequence[Fraction]) -> "ParamPoly":
        """Reduce coefficient-wise as a polynomial in ``name`` modulo a univariate polynomial."""
        parts = self.coeffs_in(name)
        deg_h = len(modulus) - 1
        if deg_h < 1 or not parts or max(parts) < deg_h:
            return self
        lead = modulus[-1]
        coeffs = [parts.get(e, ParamPoly.const(0)) for e in range(max(parts) + 1)]
        for e in range(len(coeffs) - 1, deg_h - 1, -1):
            c = coeffs[e]
            if not c:
                continue
            f = c.scale(1 / lead)
            for i in range(deg_h + 1):
                coeffs[e - deg_h + i] = coeffs[e - deg_h + i] - f.scale(modulus[i])
        out = ParamPoly.const(0)
        for e in range(deg_h):
            if coeffs[e]:
                out = out + coeffs[e] * ParamPoly.var(name, e)
        return out


def _frac_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*(?:\[-?\d+(?:,-?\d+)*\])?)|(?P<op>[-+*/^()]))"
)


class _Parser:
    """Recursive-descent reader for polynomial text; division only by constants."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise ValueError(f"unexpected character at {pos} in {self.text!r}")
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def parse(self) -> ParamPoly:
        if not self.tokens:
            raise ValueError("empty polynomial")
        p = self.expr()
        if self.i != len(self.tokens):
            raise ValueError(f"trailing input in {self.text!r}")
        return p

    def expr(self) -> ParamPoly:
        sign = 1
        kind, val = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            sign = -1 if val == "-" else 1
        p = self.term().scale(sign)
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                t = self.term()
                p = p + t if val == "+" else p - t
            else:
                return p

    def term(self) -> ParamPoly:
        p = self.power()
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                f = self.power()
                if val == "*":
                    p = p * f
                else:
                    if not f.is_constant() or not f:
                        raise ValueError(f"division by non-constant in {self.text!r}")
                    p = p.scale(1 / f.constant_value())
            else:
                return p

    def power(self) -> ParamPoly:
        base = self.atom()
        kind, val = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, val = self.take()
            if kind != "num":
                raise ValueError(f"exponent must be a non-negative integer in {self.text!r}")
            return base ** int(val)
        return base

    def atom(self) -> ParamPoly:
        kind, val = self.take()
        if kind == "num":
            return ParamPoly.const(int(val))
        if kind == "name":
            return ParamPoly.var(val)
        if kind == "op" and val == "(":
            p = self.expr()
            if self.take() != ("op", ")"):
                raise ValueError(f"unbalanced parenthesis in {self.text!r}")
            return p
        if kind == "op" and val == "-":
            return -self.atom()
        raise ValueError(f"unexpected token {val!r} in {self.text!r}")


def substitute(p: ParamPoly, bindings: Mapping[str, object]) -> ParamPoly:
    """Compose ``p`` with ``{name: value}``; unbound variables pass through."""
    if not bindings:
        return p
    vals = {k: ParamPoly.coerce(v) for k, v in bindings.items()}
    out = ParamPoly.const(0)
    cache: dict = {}
    for m, c in p._terms.items():
        term = ParamPoly.const(c)
        keep = []
        for v, e in m:
            if v in vals:
                key = (v, e)
                if key not in cache:
                    cache[key] = vals[v] ** e
                term = term * cache[key]
            else:
                keep.append((v, e))
        if keep:
            term = term * ParamPoly._raw({tuple(keep): Fraction(1)})
        out = out + term
    return out


# -- univariate helpers on coefficient lists (low to high) -------------------


def _trim(a: list) -> list:
    a = list(a)
    while a and not a[-1]:
        a.pop()
    return a


def _udivmod(a: list, b: list) -> tuple[list, list]:
    a = _trim(a)
    b = _trim(b)
    if not b:
        raise ZeroDivisionError("division by zero polynomial")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    r = list(a)
    while len(r) >= len(b) and r:
        f = r[-1] / b[-1]
        shift = len(r) - len(b)
        q[shift] = f
        for i, c in enumerate(b):
            r[shift + i] -= f * c
        r = _trim(r)
    return q, r


def _ugcd(a: list, b: list) -> list:
    a, b = _trim(a), _trim(b)
    while b:
        a, b = b, _udivmod(a, b)[1]
    if not a:
        return []
    return [c / a[-1] for c in a]


def _single_var(*polys: ParamPoly) -> str | None:
    names = set()
    for p in polys:
        names.update(p.variables)
    if len(names) > 1:
        raise ValueError("expected univariate polynomials in one shared variable")
    return names.pop() if names else None


def poly_gcd(a, b) -> ParamPoly:
    """Monic greatest common divisor of two univariate polynomials over the rationals."""
    a, b = ParamPoly.coerce(a), ParamPoly.coerce(b)
    if not a and not b:
        raise ValueError("gcd of zeros undefined")
    name = _single_var(a, b) or "x"
    g = _ugcd(a.univariate_coeffs(), b.univariate_coeffs())
    return ParamPoly.from_univariate(g, name)


def poly_divmod(a, b) -> tuple[ParamPoly, ParamPoly]:
    """Quotient and remainder of univariate polynomials."""
    a, b = ParamPoly.coerce(a), ParamPoly.coerce(b)
    name = _single_var(a, b) or "x"
    q, r = _udivmod(a.univariate_coeffs(), b.univariate_coeffs())
    return ParamPoly.from_univariate(q, name), ParamPoly.from_univariate(r, name)


def _umul(a: list, b: list) -> list:
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim(out)


def _usub(a: list, b: list) -> list:
    n = max(len(a), len(b))
    return _trim([(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)])


def poly_invert_mod(a, h) -> ParamPoly:
    """Inverse of ``a`` modulo the univariate ``h``; ArithmeticError if they share a factor."""
    a, h = ParamPoly.coerce(a), ParamPoly.coerce(h)
    name = _single_var(a, h) or "x"
    r0, r1 = _trim(h.univariate_coeffs()), _udivmod(a.univariate_coeffs(), h.univariate_coeffs())[1]
    s0, s1 = [], [Fraction(1)]
    while r1:
        quo, rem = _udivmod(r0, r1)
        r0, r1 = r1, rem
        s0, s1 = s1, _usub(s0, _umul(quo, s1))
    if len(r0) != 1:
        raise ArithmeticError(f"{a} is not invertible modulo {h}")
    inv = [c / r0[0] for c in s0]
    return ParamPoly.from_univariate(_udivmod(inv, h.univariate_coeffs())[1], name)


def squarefree_part(p) -> ParamPoly:
    """Monic product of the distinct irreducible factors of a univariate polynomial."""
    p = ParamPoly.coerce(p)
    name = _single_var(p) or "x"
    a = p.univariate_coeffs()
    if len(a) <= 1:
        return ParamPoly.const(1) if a else p
    da = [i * c for i, c in enumerate(a)][1:]
    g = _ugcd(a, da)
    q, _ = _udivmod(a, g)
    return ParamPoly.from_univariate([c / q[-1] for c in q], name)


def _divisors(n: int) -> list[int]:
    n = abs(n)
    small, large = [], []
    i = 1
    while i * i <= n:
        if n % i == 0:
            small.append(i)
            if i != n // i:
                large.append(n // i)
        i += 1
    return small + large[::-1]


def rational_roots(p) -> list[Fraction]:
    """Distinct rational roots of a nonzero univariate polynomial, ascending."""
    p = ParamPoly.coerce(p)
    if not p:
        raise ValueError("rational roots of the zero polynomial are undefined")
    _single_var(p)
    coeffs = p.univariate_coeffs()
    roots = set()
    low = 0
    while not coeffs[low]:
        low += 1
    if low:
        roots.add(Fraction(0))
    coeffs = coeffs[low:]
    den = 1
    for c in coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [int(c * den) for c in coeffs]
    g = 0
    for c in ints:
        g = math.gcd(g, c)
    ints = [c // g for c in ints]
    if len(ints) > 1:
        for num in _divisors(ints[0]):
            for dd in _divisors(ints[-1]):
                if math.gcd(num, dd) != 1:
                    continue
                for cand in (Fraction(num, dd), Fraction(-num, dd)):
                    if cand not in roots and _horner(ints, cand) == 0:
                        roots.add(cand)
    return sorted(roots)


def _horner(coeffs: Sequence, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


# -- matrices ----------------------------------------------------------------


class RatMatrix:
    """Immutable dense matrix of :class:`ParamPoly` entries."""

    __slots__ = ("rows", "cols", "_entries")

    def __init__(self, entries: Iterable[Iterable], rows: int | None = None, cols: int | None = None):
        grid = tuple(tuple(ParamPoly.coerce(x) for x in row) for row in entries)
        nr = len(grid)
        nc = len(grid[0]) if grid else (cols or 0)
        if any(len(row) != nc for row in grid):
            raise ValueError("ragged matrix rows")
        if rows is not None and rows != nr or cols is not None and cols != nc:
            raise ValueError("entry grid does not match the declared shape")
        self.rows = nr
        self.cols = nc
        self._entries = grid

    @classmethod
    def identity(cls, n: int) -> "RatMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    def __getitem__(self, ij: tuple[int, int]) -> ParamPoly:
        i, j = ij
        return self._entries[i][j]

    def row(self, i: int) -> tuple[ParamPoly, ...]:
        return self._entries[i]

    def tolist(self) -> list[list[ParamPoly]]:
        return [list(r) for r in self._entries]

    def __eq__(self, other):
        return isinstance(other, RatMatrix) and self._entries == other._entries and self.cols == other.cols

    def __hash__(self):
        return hash(self._entries)

    def __matmul__(self, other: "RatMatrix") -> "RatMatrix":
        if self.cols != other.rows:
            raise ValueError("dimension mismatch in product")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = ParamPoly.const(0)
                for k in range(self.cols):
                    a = self._entries[i][k]
                    if a:
                        acc = acc + a * other._entries[k][j]
                row.append(acc)
            out.append(row)
        return RatMatrix(out, cols=other.cols)

    def map(self, fn) -> "RatMatrix":
        return RatMatrix([[fn(x) for x in r] for r in self._entries], cols=self.cols)

    def evaluate(self, point: Mapping[str, object]) -> "RatMatrix":
        return self.map(lambda x: ParamPoly.const(x.evaluate(point)))

    def rank(self) -> int:
        """Rank of a matrix whose entries are all constants."""
        rows = [[x.constant_value() for x in r] for r in self._entries]
        rank = 0
        for c in range(self.cols):
            piv = next((i for i in range(rank, len(rows)) if rows[i][c]), None)
            if piv is None:
                continue
            rows[rank], rows[piv] = rows[piv], rows[rank]
            p = rows[rank][c]
            for i in range(rank + 1, len(rows)):
                f = rows[i][c] / p
                if f:
                    rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
            rank += 1
        return rank

    def __repr__(self) -> str:
        body = "; ".join(", ".join(str(x) for x in r) for r in self._entries)
        return f"RatMatrix([{body}])"


@dataclass(frozen=True)
class ParametricSolveResult:
    """Outcome of :func:`solve_linear`.

    ``solution[c] / denominator`` is the value of column ``c``; free columns
    appear as their placeholder variables.  ``constraints`` must vanish for
    the system to be solvable and ``genericity`` lists the parametric pivots
    assumed nonzero.
    """

    kind: str  # "unique" | "free" | "inconsistent"
    solution: tuple[ParamPoly, ...]
    denominator: ParamPoly
    free: tuple[int, ...] = ()
    free_names: tuple[str, ...] = ()
    constraints: tuple[ParamPoly, ...] = ()
    genericity: tuple[ParamPoly, ...] = ()
    pivots: tuple[tuple[int, int], ...] = field(default=(), compare=False)

    def values(self) -> tuple[ParamPoly, ...]:
        """Solution vector, dividing by the denominator when that is exact."""
        if self.denominator == 1:
            return self.solution
        return tuple(x.exact_div(self.denominator) for x in self.solution)


def _pick_pivot(rows, start, col, constant_only):
    best = None
    for i in range(start, len(rows)):
        a = rows[i].get(col)
        if a is None:
            continue
        if a.is_constant():
            return i
        if not constant_only and (best is None or a.num_terms() < rows[best][col].num_terms()):
            best = i
    return best


def solve_linear(
    m: RatMatrix,
    rhs: Sequence,
    *,
    constant_pivots_only: bool = False,
    free_names: Sequence[str] | None = None,
) -> ParametricSolveResult:
    """Solve ``m x = rhs`` over the polynomial ring by fraction-free elimination.

    Constant pivots are preferred.  With ``constant_pivots_only`` a column with
    no constant pivot is left free even if it has parametric entries, so the
    solver never assumes a parametric expression is nonzero.  Free columns
    become the variables in ``free_names`` (default ``free<c>``).
    """
    if m.rows != len(rhs):
        raise ValueError(f"dimension mismatch: {m.rows} rows but {len(rhs)} right-hand sides")
    n = m.cols
    rows = []
    original_index = []
    for i in range(m.rows):
        r = {j: m[i, j] for j in range(n) if m[i, j]}
        b = ParamPoly.coerce(rhs[i])
        if b:
            r[n] = b
        rows.append(r)
        original_index.append(i)

    prev = ParamPoly.const(1)
    rank = 0
    free = []
    genericity = []
    pivots = []
    for c in range(n):
        piv = _pick_pivot(rows, rank, c, constant_pivots_only)
        if piv is None:
            free.append(c)
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        original_index[rank], original_index[piv] = original_index[piv], original_index[rank]
        prow = rows[rank]
        p = prow[c]
        if not p.is_constant():
            genericity.append(p)
        const_step = p.is_constant() and prev.is_constant()
        for i in range(rank + 1, len(rows)):
            row = rows[i]
            a = row.get(c)
            new = {}
            if a is None:
                if const_step:
                    f = p.constant_value() / prev.constant_value()
                    for j, x in row.items():
                        new[j] = x.scale(f)
                else:
                    for j, x in row.items():
                        new[j] = (p * x).exact_div(prev) if not prev.is_constant() else (p * x).scale(1 / prev.constant_value())
            else:
                for j in set(row) | set(prow):
                    if j == c:
                        continue
                    x = p * row.get(j, ParamPoly.const(0)) - a * prow.get(j, ParamPoly.const(0))
                    if not x:
                        continue
                    x = x.scale(1 / prev.constant_value()) if prev.is_constant() else x.exact_div(prev)
                    if x:
                        new[j] = x
            rows[i] = {j: x for j, x in new.items() if x}
        pivots.append((original_index[rank], c))
        prev = p
        rank += 1

    if free_names is None:
        free_names = [f"free{c}" for c in free]
    elif len(free_names) < len(free):
        raise ValueError("not enough names for the free columns")
    free_names = list(free_names[: len(free)])
    free_vars = {c: ParamPoly.var(nm) for c, nm in zip(free, free_names)}

    constraints = []
    for row in rows[rank:]:
        expr = -row.get(n, ParamPoly.const(0))
        for j, x in row.items():
            if j != n:
                expr = expr + x * free_vars[j]
        if expr:
            constraints.append(expr)

    denom = prev
    numer: dict[int, ParamPoly] = {c: denom * free_vars[c] for c in free}
    for k in range(rank - 1, -1, -1):
        row = rows[k]
        c = pivots[k][1]
        acc = denom * row.get(n, ParamPoly.const(0))
        for j, x in row.items():
            if j == n or j == c:
                continue
            acc = acc - x * numer[j]
        numer[c] = acc.exact_div(row[c])
    solution = [numer[c] for c in range(n)]

    if denom.is_constant():
        inv = 1 / denom.constant_value()
        solution = [x.scale(inv) for x in solution]
        denom = ParamPoly.const(1)
    else:
        try:
            solution = [x.exact_div(denom) for x in solution]
            denom = ParamPoly.const(1)
        except ArithmeticError:
            genericity.append(denom)

    if any(x.is_constant() for x in constraints):
        kind = "inconsistent"
    elif free:
        kind = "free"
    else:
        kind = "unique"
    return ParametricSolveResult(
        kind=kind,
        solution=tuple(solution),
        denominator=denom,
        free=tuple(free),
        free_names=tuple(free_names),
        constraints=tuple(constraints),
        genericity=tuple(dict.fromkeys(genericity)),
        pivots=tuple(pivots),
    )


def det(m: RatMatrix) -> ParamPoly:
    """Exact determinant by Bareiss elimination."""
    if m.rows != m.cols:
        raise ValueError(f"determinant of a non-square {m.rows}x{m.cols} matrix")
    n = m.rows
    if n == 0:
        return ParamPoly.const(1)
    a = [list(r) for r in m.tolist()]
    sign = 1
    prev = ParamPoly.const(1)
    for k in range(n - 1):
        piv = None
        for i in range(k, n):
            if a[i][k]:
                if a[i][k].is_constant():
                    piv = i
                    break
                if piv is None:
                    piv = i
        if piv is None:
            return ParamPoly.const(0)
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            sign = -sign
        p = a[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                x = p * a[i][j] - a[i][k] * a[k][j]
                a[i][j] = x.exact_div(prev) if not prev.is_constant() else x.scale(1 / prev.constant_value())
            a[i][k] = ParamPoly.const(0)
        prev = p
    return a[n - 1][n - 1].scale(sign)

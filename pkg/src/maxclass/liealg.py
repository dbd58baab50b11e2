"""Graded Lie algebras with one-dimensional components, given by structure constants.

An algebra has a basis ``e_i`` indexed by its support and brackets
``[e_i, e_j] = lambda_{i,j} e_{i+j}``.  Only pairs ``i < j`` with ``i >= 2``
are stored; ``lambda_{1,i} = 1`` (the canonical basis) and antisymmetry are
implied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from types import MappingProxyType
from typing import Mapping, Sequence

from .exactnum import ParamPoly, binom, substitute, var_key

__all__ = [
    "GradedAlgebra",
    "IsoWitness",
    "NotIsomorphic",
    "ParseError",
    "build_m0q",
    "build_mq",
    "build_witt",
    "witt_constant",
    "build_extension_family",
    "build_appendix_b",
    "jacobi_check",
    "jacobi_residual",
    "verify_leibniz",
    "graded_iso",
    "format_algebra",
    "parse_algebra",
]

_ZERO = ParamPoly.const(0)
_ONE = ParamPoly.const(1)


def natural_support(q: int, top: int) -> tuple[int, ...]:
    """``{1, q, q+1, ..., top}``; for q = 2 this is every degree up to top."""
    return (1,) + tuple(range(q, top + 1))


@dataclass(frozen=True)
class GradedAlgebra:
    q: int
    top: int
    support: tuple[int, ...]
    constants: Mapping[tuple[int, int], ParamPoly]
    params: tuple[str, ...] = ()
    _support_set: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        support = tuple(sorted(set(self.support)))
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "_support_set", frozenset(support))
        if self.q < 2:
            raise ValueError("q must be at least 2")
        if not support or support[0] != 1 or support[-1] != self.top:
            raise ValueError("support must start at 1 and end at top")
        clean = {}
        for (i, j), v in self.constants.items():
            v = ParamPoly.coerce(v)
            if i == 1:
                if v != 1:
                    raise ValueError(f"lambda_(1,{j}) must be 1 in a canonical basis")
                continue
            if not i < j:
                raise ValueError(f"only pairs i < j are stored, got ({i},{j})")
            if i not in self._support_set or j not in self._support_set:
                raise ValueError(f"pair ({i},{j}) outside the support")
            if i + j > self.top or i + j not in self._support_set:
                if v:
                    raise ValueError(f"lambda_({i},{j}) must vanish: {i + j} is not a degree")
                continue
            if v:
                clean[(i, j)] = v
        object.__setattr__(self, "constants", MappingProxyType(dict(sorted(clean.items()))))
        names = set(self.params)
        for v in clean.values():
            names.update(v.variables)
        object.__setattr__(self, "params", tuple(sorted(names, key=var_key)))

    def __hash__(self):
        return hash((self.q, self.top, self.support, tuple(self.constants.items())))

    def __eq__(self, other):
        if not isinstance(other, GradedAlgebra):
            return NotImplemented
        return (
            self.q == other.q
            and self.top == other.top
            and self.support == other.support
            and dict(self.constants) == dict(other.constants)
        )

    def in_support(self, d: int) -> bool:
        return d in self._support_set

    def lam(self, i: int, j: int) -> ParamPoly:
        """``lambda_{i,j}`` with antisymmetry and zero outside the grading."""
        if i == j:
            return _ZERO
        if i > j:
            return -self.lam(j, i)
        s = i + j
        if s > self.top or s not in self._support_set or i not in self._support_set or j not in self._support_set:
            return _ZERO
        if i == 1:
            return _ONE
        return self.constants.get((i, j), _ZERO)

    def pairs(self) -> list[tuple[int, int]]:
        """All pairs ``i < j`` (``i >= 2``) whose bracket lands in the support."""
        sup = self.support[1:]
        return [(i, j) for i, j in combinations(sup, 2) if i + j <= self.top and (i + j) in self._support_set]

    def is_parameter_free(self) -> bool:
        return all(v.is_constant() for v in self.constants.values())

    def replace(self, constants=None, params=None, top=None, support=None) -> "GradedAlgebra":
        return GradedAlgebra(
            self.q,
            self.top if top is None else top,
            self.support if support is None else support,
            dict(self.constants) if constants is None else constants,
            self.params if params is None else params,
        )

    def substitute(self, bindings: Mapping[str, object]) -> "GradedAlgebra":
        consts = {k: substitute(v, bindings) for k, v in self.constants.items()}
        left = tuple(p for p in self.params if p not in bindings)
        return GradedAlgebra(self.q, self.top, self.support, consts, left)

    def truncate(self, top: int) -> "GradedAlgebra":
        sup = tuple(d for d in self.support if d <= top)
        consts = {(i, j): v for (i, j), v in self.constants.items() if i + j <= top}
        return GradedAlgebra(self.q, top, sup, consts, ())

    def level(self, n: int) -> dict[tuple[int, int], ParamPoly]:
        """Stored constants whose bracket lands in degree n."""
        return {k: v for k, v in self.constants.items() if sum(k) == n}

    def __str__(self) -> str:
        return format_algebra(self)


def build_m0q(q: int, n: int) -> GradedAlgebra:
    """Truncation of the algebra whose only brackets are ``[e_1, e_i] = e_{i+1}``."""
    if q < 2:
        raise ValueError("q must be at least 2")
    if n <= q:
        raise ValueError(f"top degree {n} must exceed q = {q}")
    return GradedAlgebra(q, n, natural_support(q, n), {})


def build_mq(q: int, n: int) -> GradedAlgebra:
    """Truncation with ``[e_1, e_i] = e_{i+1}`` and ``[e_q, e_i] = e_{q+i}``."""
    if q < 2:
        raise ValueError("q must be at least 2")
    if n < 2 * q + 1:
        raise ValueError(f"top degree {n} is below 2q+1 = {2 * q + 1}")
    consts = {(q, i): 1 for i in range(q + 1, n - q + 1)}
    return GradedAlgebra(q, n, natural_support(q, n), consts)


def witt_constant(q: int) -> Fraction:
    """Scale making ``lambda_{q,q+1} = 1`` after the basis change ``e_i -> (i-2)! e_i``."""
    return Fraction(math.factorial(2 * q - 1), math.factorial(q - 2) * math.factorial(q - 1))


def build_witt(q: int, n: int) -> GradedAlgebra:
    """Positive Witt algebra on ``{1, q, q+1, ...}`` in a canonical basis.

    ``lambda_{i,j} = C (i-2)! (j-2)! (j-i) / (i+j-2)!`` with ``C`` from
    :func:`witt_constant` (60 when q = 3).
    """
    if q < 2:
        raise ValueError("q must be at least 2")
    if n <= q:
        raise ValueError(f"top degree {n} must exceed q = {q}")
    c = witt_constant(q)
    f = math.factorial
    consts = {}
    for i in range(q, n + 1):
        for j in range(i + 1, n - i + 1):
            consts[(i, j)] = c * Fraction(f(i - 2) * f(j - 2) * (j - i), f(i + j - 2))
    return GradedAlgebra(q, n, natural_support(q, n), consts)


def _sign(n: int) -> int:
    return -1 if n % 2 else 1


def family_constant(k: int, r: int, m: int, betas: Sequence[ParamPoly]) -> ParamPoly:
    """``lambda_{r, 2k+m-r}`` of the extension family at level ``2k+m`` (m >= 1)."""
    if m == 1:
        return ParamPoly.const(_sign(r - k) if r <= k else 0)
    if m == 2:
        return ParamPoly.const(_sign(r - k) * (k + 1 - r) if r <= k + 1 else 0)
    return general_family_constant(k, r, m, betas)


def general_family_constant(k: int, r: int, m: int, betas: Sequence[ParamPoly]) -> ParamPoly:
    d = k - r
    val = ParamPoly.const(binom(d + m - 1, d))
    for i in range(1, (m - 1) // 2 + 1):
        c = binom(d + m - 1 - i, d + i)
        if c:
            val = val + betas[i - 1].scale(_sign(i) * c)
    return val.scale(_sign(d))


def build_extension_family(q: int, k: int, s: int, betas: Sequence = (), scale=1) -> GradedAlgebra:
    """The ``s``-step extension family of the truncation of degree ``2k``.

    Level ``2k+m`` carries ``lambda_{r,2k+m-r} = (-1)^(k-r) (C(k-r+m-1, k-r)
    + sum_i (-1)^i C(k-r+m-1-i, k-r+i) beta_i)``.  Levels 1 and 2 use their
    closed forms.  ``scale`` multiplies every new constant; it is the free
    parameter of the first step, normalised to 1 by a graded rescaling.
    """
    if q < 3:
        raise ValueError("the extension family needs q >= 3")
    if k < q:
        raise ValueError(f"k = {k} must be at least q = {q}")
    if s < 0:
        raise ValueError("s must be non-negative")
    need = max(0, (s + 1) // 2 - 1)
    if len(betas) != need:
        raise ValueError(f"s = {s} needs {need} parameters, got {len(betas)}")
    betas = [ParamPoly.coerce(b) for b in betas]
    scale = ParamPoly.coerce(scale)
    top = 2 * k + s
    consts = {}
    for m in range(1, s + 1):
        n = 2 * k + m
        for r in range(q, (n + 1) // 2):
            v = family_constant(k, r, m, betas)
            if v:
                consts[(r, n - r)] = v * scale
    return GradedAlgebra(q, top, natural_support(q, top), consts)


_M04_10 = {(2, 5): -1, (3, 4): 1, (2, 6): -2, (3, 5): 1, (3, 6): -2, (4, 5): 3, (4, 6): 3, (3, 7): -5, (2, 8): 5}
_M05_11 = dict(_M04_10)
_M05_11.update({(3, 8): Fraction(5, 2), (2, 9): Fraction(5, 2), (4, 7): Fraction(-15, 2), (5, 6): Fraction(21, 2)})


def build_appendix_b(name: str, k: int | None = None) -> GradedAlgebra:
    """Algebras on the full support ``{1, ..., top}``: ``m03`` (needs k), ``m04_10``, ``m05_11``."""
    if name == "m03":
        if k is None or k < 3:
            raise ValueError("m03 needs k >= 3")
        top = 2 * k + 3
        consts = {}
        for l in range(2, k + 1):
            consts[(l, 2 * k + 1 - l)] = _sign(l + 1)
        for j in range(2, k + 1):
            consts[(j, 2 * k + 2 - j)] = _sign(j + 1) * (k - j + 1)
        for m in range(3, k + 2):
            consts[(m, 2 * k + 3 - m)] = _sign(m) * ((m - 2) * k - Fraction((m - 2) * (m - 1), 2))
        return GradedAlgebra(2, top, natural_support(2, top), consts)
    if name == "m04_10":
        return GradedAlgebra(2, 10, natural_support(2, 10), _M04_10)
    if name == "m05_11":
        return GradedAlgebra(2, 11, natural_support(2, 11), _M05_11)
    raise ValueError(f"unknown algebra name {name!r}")


def jacobi_residual(a: GradedAlgebra, i: int, j: int, k: int) -> ParamPoly:
    lam = a.lam
    return lam(i, j) * lam(i + j, k) + lam(j, k) * lam(j + k, i) + lam(k, i) * lam(k + i, j)


def jacobi_check(a: GradedAlgebra) -> list[tuple[tuple[int, int, int], ParamPoly]]:
    """Triples ``i < j < k`` whose Jacobi sum is not identically zero."""
    out = []
    sup = a.support
    for x in range(len(sup)):
        i = sup[x]
        if 3 * i + 3 > a.top:
            break
        for y in range(x + 1, len(sup)):
            j = sup[y]
            if i + 2 * j + 1 > a.top:
                break
            for z in range(y + 1, len(sup)):
                k = sup[z]
                n = i + j + k
                if n > a.top:
                    break
                if not a.in_support(n):
                    continue
                r = jacobi_residual(a, i, j, k)
                if r:
                    out.append(((i, j, k), r))
    return out


def verify_leibniz(a: GradedAlgebra) -> list[tuple[tuple[int, int], ParamPoly]]:
    """Pairs violating ``lambda_{i,j} = lambda_{i+1,j} + lambda_{i,j+1}``."""
    out = []
    sup = a.support[1:]
    for x, i in enumerate(sup):
        for j in sup[x + 1 :]:
            if i + j + 1 > a.top:
                break
            d = a.lam(i, j) - a.lam(i + 1, j) - a.lam(i, j + 1)
            if d:
                out.append(((i, j), d))
    return out


@dataclass(frozen=True)
class IsoWitness:
    """Graded isomorphism ``e_i -> alpha_i e'_i`` with ``alpha_i = alpha1^(i-q) alphaq``."""

    alpha1: ParamPoly
    alphaq: ParamPoly

    def alpha(self, i: int, q: int) -> ParamPoly:
        if i == 1:
            return self.alpha1
        if i < q:
            raise ValueError(f"degree {i} is not in a support starting at q = {q}")
        return self.alpha1 ** (i - q) * self.alphaq

    def ratio(self, q: int) -> Fraction:
        """Common factor ``lambda = c lambda'`` realised by the witness."""
        return self.alphaq.constant_value() / self.alpha1.constant_value() ** q


@dataclass(frozen=True)
class NotIsomorphic:
    reason: str
    pairs: tuple = ()

    def __bool__(self):
        return False


def graded_iso(a: GradedAlgebra, b: GradedAlgebra) -> IsoWitness | NotIsomorphic:
    """Decide whether a diagonal graded map ``e_i -> alpha_i e'_i`` identifies ``a`` with ``b``.

    Such a map must have ``alpha_{i+1} = alpha_1 alpha_i`` from the
    canonical brackets, and then sends every other constant to
    ``(alpha_q / alpha_1^q) lambda'``.  So the algebras are isomorphic
    exactly when one nonzero ratio relates all constants.
    """
    if (a.q, a.top, a.support) != (b.q, b.top, b.support):
        raise ValueError("graded_iso needs matching q, top and support")
    if not (a.is_parameter_free() and b.is_parameter_free()):
        raise ValueError("graded_iso needs parameter-free algebras")
    ratio = None
    first = None
    for key in sorted(set(a.constants) | set(b.constants)):
        x, y = a.lam(*key).constant_value(), b.lam(*key).constant_value()
        if (x == 0) != (y == 0):
            return NotIsomorphic(f"lambda{key} is {x} in one algebra and {y} in the other", (key,))
        if x == 0:
            continue
        c = x / y
        if ratio is None:
            ratio, first = c, key
        elif c != ratio:
            return NotIsomorphic(
                f"lambda{first} forces ratio {ratio} but lambda{key} forces {c}", (first, key)
            )
    return IsoWitness(ParamPoly.const(1), ParamPoly.const(ratio if ratio is not None else 1))


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def format_algebra(a: GradedAlgebra) -> str:
    lines = [
        f"q={a.q}",
        f"top={a.top}",
        "support=" + ",".join(str(d) for d in a.support),
        "params=" + ",".join(a.params),
    ]
    for (i, j), v in a.constants.items():
        lines.append(f"lambda {i} {j} = {v}")
    return "\n".join(lines) + "\n"


def parse_algebra(text: str) -> GradedAlgebra:
    header = {}
    consts = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("lambda"):
            left, sep, right = line.partition("=")
            parts = left.split()
            if not sep or len(parts) != 3:
                raise ParseError(no, f"expected 'lambda <i> <j> = <poly>', got {raw!r}")
            try:
                i, j = int(parts[1]), int(parts[2])
            except ValueError:
                raise ParseError(no, f"bad indices in {raw!r}") from None
            try:
                v = ParamPoly.parse(right)
            except ValueError as exc:
                raise ParseError(no, str(exc)) from None
            if i > j:
                i, j, v = j, i, -v
            if (i, j) in consts:
                raise ParseError(no, f"duplicate constant ({i},{j})")
            consts[(i, j)] = v
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in ("q", "top", "support", "params"):
            raise ParseError(no, f"unrecognised line {raw!r}")
        if key in header:
            raise ParseError(no, f"duplicate header {key}")
        value = value.strip()
        try:
            if key in ("q", "top"):
                header[key] = int(value)
            elif key == "support":
                header[key] = tuple(int(x) for x in value.split(",") if x.strip())
            else:
                header[key] = tuple(x.strip() for x in value.split(",") if x.strip())
        except ValueError:
            raise ParseError(no, f"bad value for {key}: {value!r}") from None
    for key in ("q", "top"):
        if key not in header:
            raise ParseError(0, f"missing header {key}")
    support = header.get("support") or natural_support(header["q"], header["top"])
    try:
        return GradedAlgebra(header["q"], header["top"], support, consts, header.get("params", ()))
    except ValueError as exc:
        raise ParseError(0, str(exc)) from None

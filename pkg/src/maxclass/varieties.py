"""Quadratic systems cutting out the varieties M_n of filiform Lie algebras.

Variables are ``x[j,s]`` (row j, weight s) and ``xm1`` (weight -1).  A
coordinate change may introduce other names such as ``z[a,t]``; the
bracketed second index is always read as the weight.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .exactnum import ParamPoly, RatMatrix, binom, solve_linear, substitute

__all__ = [
    "VarietyVar",
    "PolySystem",
    "xvar",
    "XM1",
    "gen_F",
    "gen_G",
    "assemble_system",
    "change_coords",
    "restrict",
    "eliminate",
    "jacobian",
    "eval_point",
    "rank_at",
    "weight_of",
    "Z_MAPS",
    "z_map",
    "component",
]

XM1 = "xm1"
_NAME = re.compile(r"([A-Za-z]\w*)\[(-?\d+),(-?\d+)\]$")


@dataclass(frozen=True, order=True)
class VarietyVar:
    kind: str  # "x" or "xm1"
    j: int = 0
    s: int = -1

    @property
    def name(self) -> str:
        return XM1 if self.kind == XM1 else f"{self.kind}[{self.j},{self.s}]"

    @classmethod
    def parse(cls, name: str) -> "VarietyVar":
        if name == XM1:
            return cls(XM1)
        m = _NAME.match(name)
        if not m:
            raise ValueError(f"not a variety variable: {name!r}")
        return cls(m.group(1), int(m.group(2)), int(m.group(3)))

    def __str__(self) -> str:
        return self.name


def xvar(j: int, s: int) -> ParamPoly:
    return ParamPoly.var(f"x[{j},{s}]")


def weight_of(name: str) -> int:
    return VarietyVar.parse(name).s


def _var_order(name: str):
    v = VarietyVar.parse(name)
    return (v.s, v.kind != XM1, v.kind, v.j)


def gen_F(j: int, q: int, r: int) -> ParamPoly:
    """The quadratic form ``F_{j,q,r}``; every monomial is ``x[a,t] x[b,r-t]``."""
    if not 2 <= j < q:
        raise ValueError(f"F needs 2 <= j < q, got j={j}, q={q}")
    if r < 0:
        raise ValueError(f"F needs r >= 0, got {r}")
    terms: dict = {}

    def add(c, a, t, b, u):
        if c:
            key = (a, t, b, u)
            terms[key] = terms.get(key, 0) + c

    for t in range(r + 1):
        for l in range(j, (j + q - 1) // 2 + 1):
            for m in range(q + 1, q + (j + t) // 2 + 1):
                c = binom(q - l - 1, l - j) * binom(j + q - m + t - 1, m - q - 1)
                add((-1) ** (l - j + m - q) * c, l, t, m, r - t)
        for l in range(j, (j + q) // 2 + 1):
            for m in range(q, q + (j + t) // 2 + 1):
                c = binom(q - l, l - j) * binom(j + q - m + t, m - q)
                add((-1) ** (l - j + m - q) * c, l, t, m, r - t)
        for m in range(j, q + (j + t) // 2 + 1):
            add((-1) ** (m - j + 1) * binom(2 * q - m + t, m - j), q, t, m, r - t)
    out = ParamPoly.const(0)
    for (a, t, b, u), c in terms.items():
        out = out + xvar(a, t) * xvar(b, u) * c
    return out


def gen_G(j: int, q: int, r: int) -> ParamPoly:
    """The linear form ``G_{j,q,r}`` in the weight ``r+1`` variables."""
    if not 2 <= j < q:
        raise ValueError(f"G needs 2 <= j < q, got j={j}, q={q}")
    if r < -1:
        raise ValueError(f"G needs r >= -1, got {r}")
    w = r + 1
    out = ParamPoly.const(0)
    for l in range(j, (j + q - 1) // 2 + 1):
        out = out + xvar(l, w) * ((-1) ** l * binom(q - l - 1, l - j))
    for l in range(j, (j + q) // 2 + 1):
        out = out + xvar(l, w) * ((-1) ** l * binom(q - l, l - j))
    return out - xvar(q, w) * (-1) ** q


@dataclass(frozen=True)
class PolySystem:
    """Labelled polynomials with the variables that actually occur."""

    n: int
    polys: tuple[tuple[str, ParamPoly], ...]
    vars: tuple[str, ...] = ()

    def __post_init__(self):
        names = set()
        for _, p in self.polys:
            names.update(p.variables)
        object.__setattr__(self, "vars", tuple(sorted(names, key=_var_order)))

    def __len__(self):
        return len(self.polys)

    def __iter__(self):
        return iter(self.polys)

    @property
    def labels(self) -> list[str]:
        return [lab for lab, _ in self.polys]

    def __getitem__(self, label: str) -> ParamPoly:
        for lab, p in self.polys:
            if lab == label:
                return p
        raise KeyError(label)

    def export(self) -> str:
        return "".join(f"{lab}: {p}\n" for lab, p in self.polys)


def _label_key(label: str):
    nums = [int(x) for x in re.findall(r"-?\d+", label)]
    return tuple(nums), label


def assemble_system(n: int) -> PolySystem:
    """Defining equations of M_n, ordered by (j, q, r)."""
    if n < 9:
        raise ValueError(f"the systems start at n = 9, got {n}")
    polys = []
    xm1 = ParamPoly.var(XM1)
    for q in range(3, n):
        for j in range(2, q):
            if n % 2:
                for r in range(0, n - j - 2 * q):
                    polys.append((f"F({j},{q},{r})", gen_F(j, q, r)))
                continue
            for r in range(0, n - j - 2 * q - 1):
                polys.append((f"F({j},{q},{r})", gen_F(j, q, r)))
            r = n - j - 2 * q - 1
            if r >= 0:
                sign = -1 if (n // 2 - j - q) % 2 else 1
                polys.append((f"F+xG({j},{q},{r})", gen_F(j, q, r) + xm1 * gen_G(j, q, r) * sign))
            if j + 2 * q == n:
                polys.append((f"xG({j},{q},-1)", xm1 * gen_G(j, q, -1)))
    polys = [(lab, p) for lab, p in polys if p]
    polys.sort(key=lambda lp: _label_key(lp[0]))
    return PolySystem(n, tuple(polys))


def _linear_parts(form: ParamPoly, names: list[str]) -> list[Fraction]:
    row = []
    for v in names:
        part = form.coeffs_in(v).get(1, ParamPoly.const(0))
        row.append(part.constant_value() if part.is_constant() else None)
    return row


def change_coords(sys: PolySystem, forward: Mapping[str, object]) -> PolySystem:
    """Rewrite ``sys`` in new coordinates given as ``new_name -> linear form in old variables``.

    The map must be invertible on the old variables it involves; those
    variables are replaced and the rest are kept.
    """
    fwd = {k: ParamPoly.coerce(v) for k, v in forward.items()}
    old = sorted({v for f in fwd.values() for v in f.variables}, key=_var_order)
    new = list(fwd)
    if len(old) != len(new):
        raise ValueError(f"map is not invertible: {len(new)} new coordinates for {len(old)} old variables")
    rows = []
    for name in new:
        f = fwd[name]
        if f.constant_term() or any(sum(e for _, e in m) != 1 for m in f.terms if m):
            raise ValueError(f"{name} is not a linear form")
        rows.append(_linear_parts(f, old))
    # solve A x = z for x: one right-hand side per new coordinate
    zs = [ParamPoly.var(n) for n in new]
    sol = solve_linear(RatMatrix(rows), zs)
    if sol.kind != "unique":
        raise ValueError("map is not invertible")
    inv = dict(zip(old, sol.values()))
    polys = tuple((lab, substitute(p, inv)) for lab, p in sys.polys)
    return PolySystem(sys.n, polys)


def _zero_set(sys: PolySystem, zeroed: Iterable) -> set[str]:
    names = set()
    for z in zeroed:
        if isinstance(z, int):
            names.update(v for v in sys.vars if weight_of(v) == z)
        else:
            names.add(str(z))
    return names


def restrict(sys: PolySystem, zeroed: Iterable) -> PolySystem:
    """Set variables to zero; integers in ``zeroed`` stand for whole weight classes."""
    names = _zero_set(sys, zeroed)
    sub = {v: 0 for v in names}
    polys = tuple((lab, q) for lab, q in ((lab, substitute(p, sub)) for lab, p in sys.polys) if q)
    return PolySystem(sys.n, polys)


def eliminate(sys: PolySystem, name: str, label: str | None = None) -> PolySystem:
    """Solve a polynomial linear in ``name`` (constant coefficient) and substitute it away."""
    for lab, p in sys.polys:
        if label is not None and lab != label:
            continue
        parts = p.coeffs_in(name)
        if parts and max(parts) == 1 and parts[1].is_constant():
            value = -parts.get(0, ParamPoly.const(0)) / parts[1].constant_value()
            polys = tuple(
                (l2, q) for l2, q in ((l2, substitute(p2, {name: value})) for l2, p2 in sys.polys if l2 != lab) if q
            )
            return PolySystem(sys.n, polys)
    raise ValueError(f"no equation solves for {name}")


def jacobian(sys: PolySystem) -> RatMatrix:
    """Rows are the polynomials, columns the variables in ``sys.vars`` order."""
    return RatMatrix([[p.diff(v) for v in sys.vars] for _, p in sys.polys], cols=len(sys.vars))


def eval_point(sys: PolySystem, point: Mapping[str, object]) -> list[Fraction]:
    missing = [v for v in sys.vars if v not in point]
    if missing:
        raise KeyError(f"point does not bind {', '.join(missing)}")
    return [p.evaluate(point) for _, p in sys.polys]


def rank_at(sys: PolySystem, point: Mapping[str, object]) -> int:
    """Rank of the Jacobian at a rational point."""
    return jacobian(sys).evaluate(point).rank()


def _z(a: int, t: int) -> str:
    return f"z[{a},{t}]"


def _x(j: int, s: int) -> ParamPoly:
    return xvar(j, s)


# Coordinate changes that bring the n = 10 components and M_11 to their short forms.
Z_MAPS: dict[str, dict[str, ParamPoly]] = {
    "M10_0": {
        _z(0, 0): 2 * _x(2, 0) + _x(3, 0),
        _z(1, 0): _x(3, 0),
        _z(2, 0): _x(4, 0),
        _z(0, 1): 3 * (_x(2, 1) + _x(3, 1)),
        _z(1, 1): _x(3, 1),
        _z(2, 1): _x(4, 1),
    },
    "M11": {
        _z(0, 0): 2 * _x(2, 0) + _x(3, 0),
        _z(1, 0): _x(3, 0),
        _z(2, 0): _x(4, 0),
        _z(3, 0): _x(5, 0) - 6 * _x(4, 0),
        _z(0, 1): 3 * (_x(2, 1) + _x(3, 1)),
        _z(1, 1): _x(3, 1),
        _z(2, 1): _x(4, 1),
        _z(0, 2): 2 * _x(2, 2) + _x(3, 2),
        _z(1, 2): _x(3, 2),
        _z(2, 2): _x(4, 2),
    },
}
Z_MAPS["M10_1"] = dict(Z_MAPS["M10_0"])
# note the roles of z[0,2] and z[1,2] are swapped relative to M11
Z_MAPS["M10_1"].update({_z(0, 2): _x(3, 2), _z(1, 2): 2 * _x(2, 2) + _x(3, 2)})


def z_map(name: str) -> dict[str, ParamPoly]:
    try:
        return dict(Z_MAPS[name])
    except KeyError:
        raise ValueError(f"unknown coordinate change {name!r}; known: {', '.join(sorted(Z_MAPS))}") from None


def component(n: int, which: int) -> PolySystem:
    """For even n: the component ``xm1 = 0`` (which=0) or ``xm1 != 0`` (which=1, xm1 divided out)."""
    if n % 2:
        raise ValueError("components by xm1 are defined for even n")
    sys = assemble_system(n)
    if which == 0:
        return restrict(sys, [XM1])
    if which != 1:
        raise ValueError("which must be 0 or 1")
    polys = []
    for lab, p in sys.polys:
        if lab.startswith("xG"):
            p = p.exact_div(ParamPoly.var(XM1))
            lab = lab[1:]
        polys.append((lab, p))
    return PolySystem(n, tuple(polys))

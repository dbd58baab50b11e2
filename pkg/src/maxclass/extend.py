"""One-dimensional graded central extensions and the binomial obstruction matrix."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Sequence

from .exactnum import ParamPoly, RatMatrix, binom, solve_linear, substitute, var_key
from .liealg import GradedAlgebra, format_algebra, jacobi_check, jacobi_residual

__all__ = [
    "ExtensionOutcome",
    "UNIQUE",
    "FAMILY",
    "INCONSISTENT",
    "extend_once",
    "extend_chain",
    "extension_system",
    "binomial_matrix",
    "fresh_param",
    "certified_nonzero",
    "forced_binding",
]

UNIQUE = "Unique"
FAMILY = "OneParamFamily"
INCONSISTENT = "Inconsistent"

_PARAM = re.compile(r"b(\d+)$")


@dataclass(frozen=True)
class ExtensionOutcome:
    """Result of extending by one degree.

    ``constraints[i]`` is the Jacobi residual of ``sources[i]`` at the
    computed solution; all of them must vanish.  ``bindings`` records
    parameters fixed by constraints with a constant coefficient (only
    :func:`extend_chain` fills it).
    """

    kind: str
    algebra: GradedAlgebra | None
    degree: int
    free_slot: tuple[int, int] | None = None
    fresh: str | None = None
    constraints: tuple[ParamPoly, ...] = ()
    sources: tuple[tuple[int, int, int], ...] = ()
    genericity: tuple[ParamPoly, ...] = ()
    bindings: dict = field(default_factory=dict)

    def report(self) -> dict:
        """Structured form: canonical text for every polynomial."""
        return {
            "kind": self.kind,
            "degree": self.degree,
            "free_slot": list(self.free_slot) if self.free_slot else None,
            "fresh": self.fresh,
            "constraints": [
                {"triple": list(s), "poly": str(c)} for s, c in zip(self.sources, self.constraints)
            ],
            "genericity": [str(g) for g in self.genericity],
            "bindings": {k: str(v) for k, v in self.bindings.items()},
            "algebra": format_algebra(self.algebra) if self.algebra is not None else None,
        }


def fresh_param(a: GradedAlgebra, taken: Sequence[str] = ()) -> str:
    """Next unused name ``b<i>``."""
    used = 0
    for name in tuple(a.params) + tuple(taken):
        m = _PARAM.match(name)
        if m:
            used = max(used, int(m.group(1)))
    return f"b{used + 1}"


def _triples(support: Sequence[int], total: int) -> list[tuple[int, int, int]]:
    sup = sorted(support)
    out = []
    for x, i in enumerate(sup):
        for y in range(x + 1, len(sup)):
            j = sup[y]
            k = total - i - j
            if k <= j:
                break
            if k in support:
                out.append((i, j, k))
    return out


def extension_system(a: GradedAlgebra):
    """Linear system for the constants of a new top degree.

    Returns ``(unknowns, triples, matrix, rhs)``.  Unknown ``r`` stands for
    ``lambda_{r, N+1-r}``; rows are the Jacobi triples summing to ``N+1``,
    those containing ``e_1`` first.
    """
    d = a.top + 1
    support = set(a.support) | {d}
    unknowns = [r for r in a.support if r >= 2 and r < d - r and (d - r) in support]
    col = {r: c for c, r in enumerate(unknowns)}
    triples = _triples(support - {d}, d)
    triples.sort(key=lambda t: (t[0] != 1, t))
    zero = ParamPoly.const(0)
    rows, rhs = [], []
    for i, j, k in triples:
        coeffs = [zero] * len(unknowns)
        const = zero
        for x, y, z in ((i, j, k), (j, k, i), (k, i, j)):
            low = a.lam(x, y)
            if not low:
                continue
            u, v, sign = x + y, z, 1
            if u > v:
                u, v, sign = v, u, -1
            if u == v:
                continue
            if u == 1:
                const = const + low.scale(sign)
            elif u in col:
                coeffs[col[u]] = coeffs[col[u]] + low.scale(sign)
        rows.append(coeffs)
        rhs.append(-const)
    return unknowns, triples, RatMatrix(rows, cols=len(unknowns)), rhs


def certified_nonzero(c: ParamPoly, assume_nonzero: Sequence[ParamPoly] = ()) -> bool:
    """True when ``c`` is a nonzero constant times a product of assumed-nonzero factors."""
    if not c:
        return False
    for f in assume_nonzero:
        f = ParamPoly.coerce(f)
        if f.is_constant():
            continue
        while c and not c.is_constant() and f.divides(c):
            c = c.exact_div(f)
    return c.is_constant() and bool(c)


def extend_once(
    a: GradedAlgebra, *, check: bool = True, assume_nonzero: Sequence = (), taken: Sequence[str] = ()
) -> ExtensionOutcome:
    """Extend ``a`` by the degree ``top + 1``.

    The unknown constants are solved with constant pivots only, so no
    parametric expression is ever assumed nonzero.  A column left without a
    pivot becomes a fresh parameter.  Every Jacobi triple of the new degree
    is then evaluated at the solution; nonzero residuals are returned as
    constraints and a nonzero constant among them makes the outcome
    inconsistent.  Names in ``taken`` are not reused for the fresh parameter.
    """
    if check:
        bad = jacobi_check(a)
        if bad:
            (i, j, k), r = bad[0]
            raise ValueError(f"input is not a Lie algebra: J({i},{j},{k}) = {r}")
    d = a.top + 1
    unknowns, triples, m, rhs = extension_system(a)
    fresh = fresh_param(a, taken)
    names = [fresh] + [f"{fresh}_{i}" for i in range(1, len(unknowns))]
    sol = solve_linear(m, rhs, constant_pivots_only=True, free_names=names)
    values = sol.values()
    consts = dict(a.constants)
    for r, v in zip(unknowns, values):
        consts[(r, d - r)] = v
    new = GradedAlgebra(a.q, d, tuple(a.support) + (d,), consts, a.params + tuple(sol.free_names))
    sources, constraints = [], []
    for t in triples:
        res = jacobi_residual(new, *t)
        if res:
            sources.append(t)
            constraints.append(res)
    assume = [ParamPoly.coerce(x) for x in assume_nonzero]
    if any(certified_nonzero(c, assume) for c in constraints):
        kind = INCONSISTENT
    elif sol.free:
        kind = FAMILY
    else:
        kind = UNIQUE
    if len(sol.free) > 1:
        raise ArithmeticError(f"{len(sol.free)} free constants at degree {d}; graded filiform extensions have at most one")
    slot = None
    if sol.free:
        r = unknowns[sol.free[0]]
        slot = (r, d - r)
    return ExtensionOutcome(
        kind=kind,
        algebra=new,
        degree=d,
        free_slot=slot,
        fresh=sol.free_names[0] if sol.free else None,
        constraints=tuple(constraints),
        sources=tuple(sources),
        genericity=sol.genericity,
    )


def forced_binding(c: ParamPoly, protected: Sequence[str] = ()) -> tuple[str, ParamPoly] | None:
    """A parameter that ``c = 0`` fixes polynomially: linear with a constant coefficient.

    The most recently introduced parameter is preferred.
    """
    for name in sorted(c.variables, key=var_key, reverse=True):
        if name in protected:
            continue
        parts = c.coeffs_in(name)
        if max(parts) != 1 or not parts[1].is_constant():
            continue
        rest = parts.get(0, ParamPoly.const(0))
        return name, rest.scale(-1 / parts[1].constant_value())
    return None


def extend_chain(a: GradedAlgebra, steps: int, *, assume_nonzero: Sequence = ()) -> list[ExtensionOutcome]:
    """Apply :func:`extend_once` repeatedly, carrying parameters forward.

    After each step, constraints that fix a parameter polynomially are
    applied and recorded in that step's ``bindings``.  The outcome's
    ``constraints`` are all still-pending relations.  The chain stops at the
    first inconsistency.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    assume = [ParamPoly.coerce(x) for x in assume_nonzero]
    out: list[ExtensionOutcome] = []
    cur = a
    pending: list[tuple[tuple, ParamPoly]] = []
    used: list[str] = list(a.params)
    for step in range(steps):
        o = extend_once(cur, check=(step == 0), assume_nonzero=assume, taken=used)
        if o.fresh:
            used.append(o.fresh)
        if o.kind == INCONSISTENT:
            out.append(o)
            break
        cur = o.algebra
        seen = {c for _, c in pending}
        for s, c in zip(o.sources, o.constraints):
            if c not in seen:
                seen.add(c)
                pending.append((s, c))
        bindings = {}
        while True:
            found = None
            for src, c in pending:
                found = forced_binding(c)
                if found:
                    break
            if not found:
                break
            name, value = found
            sub = {name: value}
            bindings = {k: substitute(v, sub) for k, v in bindings.items()}
            bindings[name] = value
            cur = cur.substitute(sub)
            assume = [substitute(f, sub) for f in assume]
            pending = [(s, substitute(c, sub)) for s, c in pending]
            pending = [(s, c) for s, c in pending if c]
        bad = [(s, c) for s, c in pending if certified_nonzero(c, assume)]
        kind = o.kind
        if o.fresh and o.fresh in bindings:
            kind = UNIQUE
        if bad:
            kind = INCONSISTENT
        out.append(
            replace(
                o,
                kind=kind,
                algebra=cur,
                constraints=tuple(c for _, c in pending),
                sources=tuple(s for s, _ in pending),
                bindings=bindings,
            )
        )
        if bad:
            break
    return out


def binomial_matrix(q: int, k: int) -> RatMatrix:
    """``q x q`` matrix with row r equal to ``[C(k-r+c, k-r-1-c) for c in 0..q-1]``."""
    if k <= 2 * q:
        raise ValueError(f"k = {k} must exceed 2q = {2 * q}")
    return RatMatrix([[binom(k - r + c, k - r - 1 - c) for c in range(q)] for r in range(q)])

"""Branch analysis of extension chains: the q = 3 classification and the main theorem at desk scale."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .exactnum import (
    ParamPoly,
    RatMatrix,
    poly_divmod,
    poly_gcd,
    poly_invert_mod,
    rational_roots,
    solve_linear,
    squarefree_part,
    substitute,
    var_key,
)
from .extend import INCONSISTENT, extend_chain, extend_once, forced_binding
from .liealg import (
    GradedAlgebra,
    build_extension_family,
    build_m0q,
    build_mq,
    build_witt,
    format_algebra,
    graded_iso,
    jacobi_residual,
)

log = logging.getLogger(__name__)

__all__ = [
    "Terminal",
    "BranchNode",
    "ClassificationReport",
    "classify_q3",
    "explore",
    "recognize_type",
    "verify_main_theorem",
    "verify_k_lemmas",
    "k_lemma_system",
    "beta_values",
]

DEAD = "DeadEnd"
RECOGNIZED = "RecognizedType"
OPEN = "OpenFamily"
SPLIT = "Split"


@dataclass(frozen=True)
class Terminal:
    tag: str
    name: str | None = None
    witnesses: tuple = ()  # ((triple or None, ParamPoly), ...)

    def __str__(self) -> str:
        if self.tag == RECOGNIZED:
            return f"{self.tag}({self.name})"
        if self.tag == DEAD:
            inner = "; ".join(f"J{tuple(s)}: {p}" if s else str(p) for s, p in self.witnesses)
            return f"{self.tag}({inner})"
        return self.tag


@dataclass
class BranchNode:
    """One segment of the exploration tree.

    ``algebra`` is the algebra the segment starts from (the parent's
    extension specialised at ``binding``); ``reached`` is where it stopped.
    A node either has a terminal tag or splits into ``children``.
    """

    algebra: GradedAlgebra
    binding: str | None = None
    reached: GradedAlgebra | None = None
    terminal: Terminal | None = None
    children: list["BranchNode"] = field(default_factory=list)
    events: list[str] = field(default_factory=list)
    equations: list[ParamPoly] = field(default_factory=list)
    bindings: dict = field(default_factory=dict)
    label: str = ""

    def walk(self, depth: int = 0):
        yield depth, self
        for c in self.children:
            yield from c.walk(depth + 1)

    def leaves(self):
        return [n for _, n in self.walk() if not n.children]

    def find(self, label: str) -> "BranchNode | None":
        for _, n in self.walk():
            if n.label == label:
                return n
        return None

    def records(self) -> list[dict]:
        out = []
        for depth, n in self.walk():
            out.append(
                {
                    "label": n.label,
                    "depth": depth,
                    "binding": n.binding,
                    "dimension": len(n.reached.support) if n.reached else len(n.algebra.support),
                    "top": n.reached.top if n.reached else n.algebra.top,
                    "terminal": n.terminal.tag if n.terminal else SPLIT,
                    "type": n.terminal.name if n.terminal else None,
                    "witnesses": [
                        {"triple": list(s) if s else None, "poly": str(p)} for s, p in (n.terminal.witnesses if n.terminal else ())
                    ],
                    "equations": [str(e) for e in n.equations],
                    "bindings": {k: str(v) for k, v in n.bindings.items()},
                    "events": list(n.events),
                }
            )
        return out

    def render(self) -> str:
        lines = []
        for depth, n in self.walk():
            pad = "  " * depth
            head = n.label or "node"
            if n.binding:
                head += f" [{n.binding}]"
            top = n.reached.top if n.reached else n.algebra.top
            tail = str(n.terminal) if n.terminal else f"{SPLIT} into {len(n.children)}"
            lines.append(f"{pad}{head}: degree {n.algebra.top}..{top}, {tail}")
            for e in n.equations:
                lines.append(f"{pad}  equation: {e} = 0")
        return "\n".join(lines)


@dataclass
class ClassificationReport:
    tree: BranchNode
    survivors: list[tuple[str, str]]  # (label, type)
    max_dim: int

    def summary(self) -> str:
        kinds = ", ".join(sorted({t for _, t in self.survivors}))
        return f"{len(self.survivors)} surviving types: {kinds}"


# -- recognition ---------------------------------------------------------------


def recognize_type(a: GradedAlgebra) -> str:
    """``m0q``, ``mq`` or ``wittq`` when ``a`` is graded-isomorphic to that truncation, else ``unknown``."""
    if not a.is_parameter_free():
        raise ValueError("recognize_type needs a parameter-free algebra")
    q, top = a.q, a.top
    candidates = [("m0q", lambda: build_m0q(q, top))]
    if q == 3:
        # the m_q family is only defined for q = 3 here
        candidates.append(("mq", lambda: build_mq(q, top)))
    candidates.append(("wittq", lambda: build_witt(q, top)))
    for name, build in candidates:
        try:
            b = build()
        except ValueError:
            continue
        if b.support == a.support and graded_iso(a, b):
            return name
    return "unknown"


# -- branch engine -------------------------------------------------------------


def _fmt(r: Fraction) -> str:
    return str(r.numerator) if r.denominator == 1 else f"{r.numerator}/{r.denominator}"


def _pseudo_sub(p: ParamPoly, name: str, rel: ParamPoly) -> ParamPoly:
    """Eliminate ``name`` from ``p`` using ``rel = c*name + d``: returns c^deg * p(-d/c)."""
    parts = p.coeffs_in(name)
    if not parts or len(parts) == 1 and 0 in parts:
        return p
    rp = rel.coeffs_in(name)
    c, d = rp[1], -rp.get(0, ParamPoly.const(0))
    n = max(parts)
    out = ParamPoly.const(0)
    for e, coef in parts.items():
        out = out + coef * d**e * c ** (n - e)
    return out


def _reduce_primitive(p: ParamPoly) -> ParamPoly:
    return p.primitive() if p else p


def _is_univariate_in(p: ParamPoly, t: str | None) -> bool:
    return t is not None and set(p.variables) == {t}


@dataclass
class _State:
    alg: GradedAlgebra
    used: list
    pending: list  # [(triple, poly)]
    base: str | None = None
    modulus: ParamPoly | None = None  # ideal mode: base taken modulo this irreducible-free squarefree poly
    pins: list = field(default_factory=list)  # [(name, relation)]
    history: dict = field(default_factory=dict)  # name -> value (direct substitutions)
    snapshots: dict = field(default_factory=dict)  # name -> (algebra, pending) at introduction
    spawned: set = field(default_factory=set)

    def copy_for_restart(self, alg, pending, base_name):
        return _State(
            alg=alg,
            used=list(self.used),
            pending=list(pending),
            base=None,
            history={k: v for k, v in self.history.items() if var_key(k) < var_key(base_name)},
            snapshots={k: v for k, v in self.snapshots.items() if var_key(k) < var_key(base_name)},
        )


class _Explorer:
    def __init__(self, max_dim: int, slack: int, normalize: bool = True):
        self.max_dim = max_dim
        self.cap = max_dim + slack
        self.normalize = normalize

    # reductions
    def reduce(self, st: _State, p: ParamPoly) -> ParamPoly:
        if st.modulus is not None:
            return p.rem_univariate(st.base, st.modulus.univariate_coeffs())
        for name, rel in reversed(st.pins):
            p = _pseudo_sub(p, name, rel)
        return p

    def substitute_all(self, st: _State, name: str, value: ParamPoly):
        sub = {name: value}
        st.alg = st.alg.substitute(sub)
        st.history = {k: substitute(v, sub) for k, v in st.history.items()}
        st.history[name] = value
        st.pending = [(s, substitute(c, sub)) for s, c in st.pending]
        if st.modulus is not None:
            h = st.modulus.univariate_coeffs()
            st.alg = st.alg.replace(
                constants={k: v.rem_univariate(st.base, h) for k, v in st.alg.constants.items()}
            )
            st.pending = [(s, c.rem_univariate(st.base, h)) for s, c in st.pending]
        st.pending = [(s, c) for s, c in st.pending if c]

    def restart(self, st: _State, node: BranchNode, binding_kind: str, value) -> BranchNode:
        """Child that replays the chain from where the base was introduced."""
        t = st.base
        alg, pending = st.snapshots[t]
        new = st.copy_for_restart(alg, pending, t)
        for k, v in new.history.items():
            new.alg = new.alg.substitute({k: v})
            new.pending = [(s, substitute(c, {k: v})) for s, c in new.pending]
        if binding_kind == "root":
            val = ParamPoly.const(value)
            new.alg = new.alg.substitute({t: val})
            new.history[t] = val
            new.pending = [(s, substitute(c, {t: val})) for s, c in new.pending]
            new.pending = [(s, c) for s, c in new.pending if c]
            binding = f"{t} = {_fmt(value)}"
        else:
            h = value
            new.base = t
            new.modulus = h
            hc = h.univariate_coeffs()
            new.alg = new.alg.replace(constants={k: v.rem_univariate(t, hc) for k, v in new.alg.constants.items()})
            new.pending = [(s, c.rem_univariate(t, hc)) for s, c in new.pending]
            new.pending = [(s, c) for s, c in new.pending if c]
            new.snapshots[t] = st.snapshots[t]
            binding = f"{h.primitive()} = 0"
        child = BranchNode(algebra=new.alg, binding=binding, label=f"{node.label}/{binding}")
        self.run(new, child)
        return child

    def spawn(self, st: _State, node: BranchNode, poly: ParamPoly, why: str):
        """Children for the vanishing locus of a univariate ``poly`` in the base."""
        roots = rational_roots(poly)
        for r in roots:
            key = ("root", r)
            if key not in st.spawned:
                st.spawned.add(key)
                node.events.append(f"{why}: {st.base} = {_fmt(r)}")
                node.children.append(self.restart(st, node, "root", r))
        rest = squarefree_part(poly)
        for r in roots:
            rest = poly_divmod(rest, ParamPoly.var(st.base) - r)[0]
        if rest.degree() >= 1:
            key = ("ideal", rest.monic())
            if key not in st.spawned:
                st.spawned.add(key)
                node.events.append(f"{why}: {rest.primitive()} = 0")
                node.children.append(self.restart(st, node, "ideal", rest.monic()))

    def split_ideal(self, st: _State, node: BranchNode, g: ParamPoly, why: str):
        h = st.modulus
        other = poly_divmod(h, g)[0]
        node.events.append(f"{why}: {g.primitive()} | {h.primitive()}")
        for part in (g.monic(), other.monic()):
            if part.degree() == 1:
                (r,) = rational_roots(part)
                key = ("root", r)
                if key not in st.spawned:
                    st.spawned.add(key)
                    node.children.append(self.restart(st, node, "root", r))
            else:
                key = ("ideal", part)
                if key not in st.spawned:
                    st.spawned.add(key)
                    node.children.append(self.restart(st, node, "ideal", part))

    def oldest_free(self, st: _State) -> str | None:
        pinned = {n for n, _ in st.pins}
        free = [p for p in st.alg.params if p not in pinned]
        return min(free, key=var_key) if free else None

    # one pass over pending constraints; returns "progress", "stop" or None
    def process(self, st: _State, node: BranchNode):
        for idx, (src, raw) in enumerate(st.pending):
            r = self.reduce(st, raw)
            if not r:
                del st.pending[idx]
                return "progress"
            if r.is_constant():
                node.terminal = Terminal(DEAD, witnesses=((src, raw),) if raw.is_constant() else ((src, raw), (None, r)))
                return "stop"
            if st.modulus is None and st.base is None:
                st.base = self.oldest_free(st)
            t = st.base
            pinned = {n for n, _ in st.pins}
            found = forced_binding(r, protected=pinned | ({t} if st.pins or st.modulus is not None else set()))
            if found:
                name, value = found
                node.events.append(f"J{src} at degree {st.alg.top} forces {name} = {value}")
                node.bindings[name] = value
                self.substitute_all(st, name, value)
                node.bindings = {k: substitute(v, {name: value}) for k, v in node.bindings.items()}
                if st.base == name:
                    st.base = None
                return "progress"
            if _is_univariate_in(r, t):
                if st.modulus is None:
                    eq = _reduce_primitive(r)
                    node.equations.append(eq)
                    node.events.append(f"J{src} reduces to a univariate equation of degree {eq.degree()}")
                    self.spawn(st, node, eq, f"root of J{src}")
                    node.terminal = None
                    return "stop"
                g = poly_gcd(r, st.modulus)
                if g.is_constant():
                    node.terminal = Terminal(DEAD, witnesses=((src, raw), (None, st.modulus.primitive())))
                    node.events.append(f"J{src} is coprime to {st.modulus.primitive()}")
                    return "stop"
                self.split_ideal(st, node, g, f"J{src} shares a factor")
                return "stop"
            newest = max((v for v in r.variables if v != t), key=var_key, default=None)
            if newest is None or newest in pinned:
                continue
            parts = r.coeffs_in(newest)
            if max(parts) != 1 or not set(r.variables) <= {newest, t}:
                continue
            c = parts[1]
            if st.modulus is None:
                # keep the raw relation: reducing it first would multiply in side conditions
                if raw.degree(newest) != 1 or not set(raw.variables) <= pinned | {newest, t}:
                    continue
                st.pins.append((newest, raw))
                node.events.append(f"J{src} at degree {st.alg.top} pins {newest} (side condition {c.primitive()} != 0)")
                self.spawn(st, node, c, f"side condition of {newest}")
                return "progress"
            g = poly_gcd(c, st.modulus)
            if g.is_constant():
                inv = poly_invert_mod(c, st.modulus)
                value = (-(parts.get(0, ParamPoly.const(0))) * inv).rem_univariate(t, st.modulus.univariate_coeffs())
                node.events.append(f"J{src} at degree {st.alg.top} forces {newest} modulo {st.modulus.primitive()}")
                node.bindings[newest] = value
                self.substitute_all(st, newest, value)
                return "progress"
            self.split_ideal(st, node, g, f"coefficient of {newest} in J{src}")
            return "stop"
        return None

    def run(self, st: _State, node: BranchNode):
        while True:
            while True:
                res = self.process(st, node)
                if res == "stop":
                    node.reached = st.alg
                    return
                if res is None:
                    break
            top = st.alg.top
            if top >= self.max_dim and not st.pending and st.alg.is_parameter_free():
                kind = recognize_type(st.alg)
                if kind != "unknown":
                    node.terminal = Terminal(RECOGNIZED, kind)
                    node.reached = st.alg
                    return
            if top >= self.cap:
                node.terminal = Terminal(OPEN)
                node.reached = st.alg
                return
            spine = not st.alg.constants
            o = extend_once(st.alg, check=False, taken=st.used)
            if o.kind == INCONSISTENT:
                node.terminal = Terminal(DEAD, witnesses=tuple(zip(o.sources, o.constraints)))
                node.reached = o.algebra
                return
            if spine and o.fresh and self.normalize:
                if o.degree > self.max_dim:
                    node.terminal = Terminal(RECOGNIZED, "m0q")
                    node.reached = st.alg
                    return
                self.branch_spine(st, node, o)
                return
            st.alg = o.algebra
            if o.fresh:
                st.used.append(o.fresh)
                seen = {c for _, c in st.pending}
                st.snapshots[o.fresh] = (o.algebra, list(st.pending) + [(s, c) for s, c in zip(o.sources, o.constraints) if c not in seen])
            seen = {c for _, c in st.pending}
            for s, c in zip(o.sources, o.constraints):
                c = self.reduce_mod(st, c)
                if c and c not in seen:
                    seen.add(c)
                    st.pending.append((s, c))

    def reduce_mod(self, st, c):
        if st.modulus is not None:
            return c.rem_univariate(st.base, st.modulus.univariate_coeffs())
        return c

    def branch_spine(self, st: _State, node: BranchNode, o):
        """On a parameter-free spine a new family parameter is either zero or scaled to one."""
        p = o.fresh
        k = (o.degree - 1) // 2
        node.reached = st.alg
        node.events.append(f"degree {o.degree}: family in {p} at {o.free_slot}")
        for val, label in ((0, "spine"), (1, f"family k={k}")):
            alg = o.algebra.substitute({p: val})
            child = BranchNode(algebra=alg, binding=f"{p} = {val}", label=label)
            new = _State(alg=alg, used=list(st.used) + [p], pending=[])
            new.history[p] = ParamPoly.const(val)
            node.children.append(child)
            self.run(new, child)


def explore(a: GradedAlgebra, max_dim: int, *, slack: int | None = None, label: str = "root") -> BranchNode:
    """Explore every extension branch of ``a`` up to ``max_dim``.

    Branches that are not recognised at ``max_dim`` are followed further,
    up to ``max_dim + slack``, so that dead ends are reached.
    """
    if slack is None:
        slack = 4 * a.q
    root = BranchNode(algebra=a, label=label)
    st = _State(alg=a, used=list(a.params), pending=[])
    _Explorer(max_dim, slack).run(st, root)
    return root


def classify_q3(max_dim: int = 30) -> ClassificationReport:
    """Full branch analysis for q = 3 starting from the truncation of degree 6."""
    if max_dim < 16:
        raise ValueError("max_dim must be at least 16 to reach the deciding constraints")
    tree = explore(build_m0q(3, 6), max_dim, label="spine")
    survivors = [(n.label, n.terminal.name) for n in tree.leaves() if n.terminal and n.terminal.tag == RECOGNIZED]
    return ClassificationReport(tree=tree, survivors=survivors, max_dim=max_dim)


# -- main theorem ---------------------------------------------------------------


def _deviation(args) -> dict:
    q, l = args
    o = extend_once(build_m0q(q, 2 * l), check=False)
    alg = o.algebra.substitute({o.fresh: 1})
    chain = extend_chain(alg, 2 * q - 1)
    return {
        "l": l,
        "steps": len(chain),
        "died": chain[-1].kind == INCONSISTENT,
        "degree": chain[-1].degree,
        "witness": [list(s) for s in chain[-1].sources],
    }


def verify_main_theorem(q: int, max_dim: int, *, workers: int = 1) -> dict:
    """Follow the spine from the truncation of degree 2q under the vanishing hypothesis.

    At each odd degree 2l+1 the spine admits a one-parameter family.  For
    l <= 2q the hypothesis sets the parameter to zero; for l > 2q the
    parameter, scaled to one, must die within 2q-1 further steps.  The
    deviating chains are independent and run on ``workers`` processes.
    """
    if q < 3:
        raise ValueError("q must be at least 3")
    if max_dim < 4 * q + 4:
        raise ValueError(f"max_dim must be at least {4 * q + 4}")
    cur = build_m0q(q, 2 * q)
    excluded, jobs = [], []
    spine_ok = True
    while cur.top < max_dim:
        o = extend_once(cur, check=False)
        if o.kind == INCONSISTENT:
            spine_ok = False
            break
        if o.fresh:
            l = (o.degree - 1) // 2
            if l > 2 * q:
                jobs.append((q, l))
            else:
                excluded.append(l)
            cur = o.algebra.substitute({o.fresh: 0})
        else:
            cur = o.algebra
        if cur != build_m0q(q, cur.top):
            spine_ok = False
            break
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            deviations = list(pool.map(_deviation, jobs))
    else:
        deviations = [_deviation(j) for j in jobs]
    ok = spine_ok and all(d["died"] for d in deviations)
    return {
        "q": q,
        "max_dim": max_dim,
        "survivor": "m0q" if spine_ok else None,
        "top": cur.top,
        "excluded_by_hypothesis": excluded,
        "deviations": deviations,
        "ok": ok,
    }


# -- the k = 4, 5, 6 lemmas -----------------------------------------------------


def beta_values(a: GradedAlgebra, k: int) -> list:
    """``beta_l = lambda_{k+l, k+l+1}`` for every level present."""
    out = []
    l = 1
    while 2 * (k + l) + 1 <= a.top:
        out.append(a.lam(k + l, k + l + 1))
        l += 1
    return out


def k_lemma_system(k: int = 6) -> tuple[RatMatrix, list, list[str]]:
    """Linear system ``lambda_{3,2k+1} = lambda_{3,2k+2} = lambda_{3,2k+3} = 0`` in beta_1, beta_2."""
    b = [ParamPoly.var("beta1"), ParamPoly.var("beta2")]
    fam = build_extension_family(3, k, 6, b)
    rows, rhs, labels = [], [], []
    for j in (2 * k + 1, 2 * k + 2, 2 * k + 3):
        v = fam.lam(3, j)
        parts = [v.coeffs_in(n).get(1, ParamPoly.const(0)) for n in ("beta1", "beta2")]
        rows.append(parts)
        rhs.append(-v.constant_term())
        labels.append(f"lambda_3,{j} = {v}")
    return RatMatrix(rows), rhs, labels


def verify_k_lemmas() -> dict:
    """The k = 4, 5, 6 branches of q = 3: forced parameters and the contradictions that end them."""
    out = {}
    for k in (4, 5, 6):
        start = extend_once(build_m0q(3, 2 * k))
        fam = start.algebra.substitute({start.fresh: 1})
        chain = extend_chain(fam, 8)
        last = chain[-1]
        final = chain[-2].algebra if len(chain) > 1 else fam
        betas = beta_values(final, k)
        rec = {
            "betas": [str(b) for b in betas],
            "dead": last.kind == INCONSISTENT,
            "degree": last.degree,
            "witness": {f"J{s}": str(c) for s, c in zip(last.sources, last.constraints)},
        }
        if k == 5:
            rec["values"] = {
                "lambda_3,13": str(last.algebra.lam(3, 13)) if last.algebra else None,
                "lambda_5,11": str(last.algebra.lam(5, 11)) if last.algebra else None,
                "lambda_5,8": str(final.lam(5, 8)),
            }
        if k == 6:
            m, rhs, labels = k_lemma_system(6)
            sol = solve_linear(m, rhs)
            rec["system"] = labels
            rec["system_kind"] = sol.kind
        out[k] = rec
    return out

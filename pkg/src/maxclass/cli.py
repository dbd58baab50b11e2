"""Command-line front end.

Exit codes: 0 when the checked statement holds, 1 on a mathematical failure
(Jacobi violation, inconsistency, dead hypothesis), 2 on usage or parse errors.
Structured output is one JSON object per line with sorted keys.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from fractions import Fraction
from pathlib import Path

from .classify import classify_q3, verify_k_lemmas, verify_main_theorem
from .exactnum import ParamPoly, det
from .extend import INCONSISTENT, binomial_matrix, extend_chain
from .liealg import (
    GradedAlgebra,
    ParseError,
    build_appendix_b,
    build_extension_family,
    build_m0q,
    build_mq,
    build_witt,
    format_algebra,
    jacobi_check,
    parse_algebra,
)
from .varieties import (
    XM1,
    assemble_system,
    change_coords,
    component,
    eval_point,
    jacobian,
    rank_at,
    restrict,
    z_map,
)

log = logging.getLogger("maxclass")

OK, FAIL, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class Reporter:
    """Collects output so that structured runs are byte-identical."""

    def __init__(self, fmt: str, stream=None):
        self.fmt = fmt
        self.stream = stream or sys.stdout

    def record(self, rec: dict, human: str | None = None):
        if self.fmt == "structured":
            self.stream.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
        elif human is not None:
            self.stream.write(human.rstrip("\n") + "\n")


def threads_from_env() -> int:
    raw = os.environ.get("MAXCLASS_THREADS", "1").strip() or "1"
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"MAXCLASS_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise UsageError("MAXCLASS_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def _read_algebra(path: str) -> GradedAlgebra:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    return parse_algebra(text)


def _need(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required for {args.command}")


# -- commands ----------------------------------------------------------------


def cmd_jacobi(args, rep: Reporter) -> int:
    a = _read_algebra(args.path)
    bad = jacobi_check(a)
    for (i, j, k), r in bad:
        rep.record({"triple": [i, j, k], "residual": str(r)}, f"J({i},{j},{k}) = {r}")
    status = "LIE ALGEBRA" if not bad else "NOT A LIE ALGEBRA"
    rep.record({"status": status, "violations": len(bad)}, status)
    return OK if not bad else FAIL


def cmd_extend(args, rep: Reporter) -> int:
    if args.steps is None or args.steps < 1:
        raise UsageError("--steps must be at least 1")
    a = _read_algebra(args.path)
    chain = extend_chain(a, args.steps)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    for step, o in enumerate(chain, 1):
        rec = o.report()
        rec["step"] = step
        if out and o.kind != INCONSISTENT:
            f = out / f"step{step:02d}_top{o.degree}.alg"
            f.write_text(format_algebra(o.algebra))
            rec["file"] = f.name
            rec.pop("algebra")
        lines = [f"step {step}: degree {o.degree} {o.kind}"]
        if o.free_slot:
            lines.append(f"  free slot lambda{o.free_slot} = {o.fresh}")
        for k, v in o.bindings.items():
            lines.append(f"  forced {k} = {v}")
        for s, c in zip(o.sources, o.constraints):
            lines.append(f"  J{s}: {c} = 0")
        if not out and o.kind != INCONSISTENT:
            lines.append(format_algebra(o.algebra))
        rep.record(rec, "\n".join(lines))
    return FAIL if chain[-1].kind == INCONSISTENT else OK


def cmd_classify(args, rep: Reporter) -> int:
    q = args.q if args.q is not None else 3
    max_dim = args.max_dim if args.max_dim is not None else 30
    if q != 3:
        raise UsageError("the full branch analysis is implemented for q = 3; use main-theorem for other q")
    if max_dim < 16:
        raise UsageError("--max-dim must be at least 16")
    report = classify_q3(max_dim)
    if rep.fmt == "structured":
        for r in report.tree.records():
            rep.record(r)
    else:
        rep.record({}, report.tree.render())
    rep.record({"summary": report.summary(), "survivors": [t for _, t in report.survivors]}, report.summary())
    return OK if len(report.survivors) == 3 else FAIL


def cmd_main_theorem(args, rep: Reporter) -> int:
    _need(args, "q")
    max_dim = args.max_dim if args.max_dim is not None else 4 * args.q + 4
    if args.q < 3 or max_dim < 4 * args.q + 4:
        raise UsageError(f"need q >= 3 and --max-dim >= {4 * args.q + 4}")
    r = verify_main_theorem(args.q, max_dim, workers=threads_from_env())
    lines = [f"q={r['q']} up to degree {r['top']}: survivor {r['survivor']}"]
    lines.append(f"  levels set to zero by hypothesis: {r['excluded_by_hypothesis']}")
    for d in r["deviations"]:
        fate = "dies" if d["died"] else "SURVIVES"
        lines.append(f"  deviation at l={d['l']}: {fate} after {d['steps']} steps (degree {d['degree']})")
    rep.record(r, "\n".join(lines))
    return OK if r["ok"] else FAIL


def cmd_k_lemmas(args, rep: Reporter) -> int:
    r = verify_k_lemmas()
    ok = True
    for k, rec in r.items():
        ok = ok and rec["dead"]
        lines = [f"k={k}: betas {', '.join(rec['betas'])}; dead at degree {rec['degree']}"]
        if "system" in rec:
            lines += [f"  {s} = 0" for s in rec["system"]]
            lines.append(f"  system is {rec['system_kind']}")
        rep.record({"k": k, **rec}, "\n".join(lines))
    return OK if ok else FAIL


def _parse_point(items) -> dict:
    point = {}
    for it in items or ():
        if "=" not in it:
            raise UsageError(f"point entries look like name=value, got {it!r}")
        k, v = it.split("=", 1)
        try:
            point[k.strip()] = Fraction(v.strip())
        except ValueError:
            raise UsageError(f"not a rational number: {v!r}") from None
    return point


def cmd_variety(args, rep: Reporter) -> int:
    _need(args, "n")
    if args.n < 9:
        raise UsageError("--n must be at least 9")
    if args.component is not None:
        sys_ = component(args.n, args.component)
    else:
        sys_ = assemble_system(args.n)
    if args.coords:
        sys_ = change_coords(sys_, z_map(args.coords))
    if args.zero:
        zs = []
        for z in args.zero:
            try:
                zs.append(int(z))
            except ValueError:
                zs.append(z)
        sys_ = restrict(sys_, zs)
    action = args.action
    if action == "emit":
        for lab, p in sys_:
            rep.record({"label": lab, "poly": str(p)}, f"{lab}: {p}")
        rep.record({"n": sys_.n, "polys": len(sys_), "vars": list(sys_.vars)}, f"# {len(sys_)} polynomials in {len(sys_.vars)} variables")
        return OK
    if action == "jacobian":
        m = jacobian(sys_)
        rep.record(
            {"vars": list(sys_.vars), "rows": [[str(x) for x in row] for row in m.tolist()]},
            "vars: " + " ".join(sys_.vars) + "\n" + "\n".join(" | ".join(str(x) for x in row) for row in m.tolist()),
        )
        return OK
    if action == "eval":
        point = _parse_point(args.point)
        if args.fill_zero:
            for v in sys_.vars:
                point.setdefault(v, Fraction(0))
        try:
            res = eval_point(sys_, point)
        except KeyError as e:
            raise UsageError(str(e.args[0])) from None
        rank = rank_at(sys_, point)
        on = all(r == 0 for r in res)
        rep.record(
            {"residuals": [str(r) for r in res], "on_variety": on, "jacobian_rank": rank},
            "residuals: " + ", ".join(str(r) for r in res) + f"\non variety: {on}; jacobian rank {rank}",
        )
        return OK if on else FAIL
    raise UsageError(f"unknown variety action {action!r}")


def cmd_matrix(args, rep: Reporter) -> int:
    _need(args, "q", "k")
    if args.k <= 2 * args.q:
        raise UsageError("--k must exceed 2q")
    m = binomial_matrix(args.q, args.k)
    d = det(m)
    rows = [[str(x) for x in row] for row in m.tolist()]
    rep.record(
        {"q": args.q, "k": args.k, "matrix": rows, "det": str(d), "nonzero": bool(d)},
        "\n".join(" ".join(f"{x:>8}" for x in row) for row in rows) + f"\ndet = {d}",
    )
    return OK if d else FAIL


def cmd_build(args, rep: Reporter) -> int:
    name = args.name
    if name in ("m0q", "mq", "witt"):
        _need(args, "q", "n")
        a = {"m0q": build_m0q, "mq": build_mq, "witt": build_witt}[name](args.q, args.n)
    elif name == "family":
        _need(args, "q", "k")
        s = args.s or 0
        betas = [ParamPoly.parse(b) for b in (args.beta or [])]
        a = build_extension_family(args.q, args.k, s, betas)
    elif name == "m03":
        _need(args, "k")
        a = build_appendix_b("m03", args.k)
    else:
        a = build_appendix_b(name)
    text = format_algebra(a)
    if args.out:
        Path(args.out).write_text(text)
        rep.record({"file": args.out, "top": a.top}, f"wrote {args.out}")
    else:
        rep.record({"algebra": text}, text)
    return OK


def cmd_sweep(args, rep: Reporter) -> int:
    """Random extension families checked for the Jacobi identity."""
    rng = random.Random(args.seed if args.seed is not None else 0)
    count = args.count
    failures = 0
    for i in range(count):
        q = rng.randint(3, 5)
        k = rng.randint(q, q + 3)
        s = rng.randint(0, q)
        need = max(0, (s + 1) // 2 - 1)
        betas = [Fraction(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(need)]
        a = build_extension_family(q, k, s, betas)
        bad = jacobi_check(a)
        failures += bool(bad)
        rep.record(
            {"i": i, "q": q, "k": k, "s": s, "betas": [str(b) for b in betas], "lie": not bad},
            f"{i}: q={q} k={k} s={s} betas={[str(b) for b in betas]} {'ok' if not bad else 'VIOLATION'}",
        )
    return OK if not failures else FAIL


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("human", "structured"), default="human")
    common.add_argument("--out", help="output directory (extend) or file (build)")
    common.add_argument("--seed", type=int, help="seed for randomized sweeps")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="maxclass", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("jacobi", parents=[common], help="check the Jacobi identity of an algebra file")
    s.add_argument("path")

    s = sub.add_parser("extend", parents=[common], help="extend an algebra file degree by degree")
    s.add_argument("path")
    s.add_argument("--steps", type=int, default=1)

    s = sub.add_parser("classify", parents=[common], help="branch analysis for q = 3")
    s.add_argument("--q", type=int)
    s.add_argument("--max-dim", type=int)

    s = sub.add_parser("main-theorem", parents=[common], help="spine and deviations under the vanishing hypothesis")
    s.add_argument("--q", type=int)
    s.add_argument("--max-dim", type=int)

    sub.add_parser("k-lemmas", parents=[common], help="the k = 4, 5, 6 branches for q = 3")

    s = sub.add_parser("variety", parents=[common], help="equations of M_n")
    s.add_argument("action", choices=("emit", "jacobian", "eval"))
    s.add_argument("--n", type=int)
    s.add_argument("--component", type=int, choices=(0, 1), help="even n: xm1 = 0 or xm1 != 0")
    s.add_argument("--coords", help="named coordinate change (M10_0, M10_1, M11)")
    s.add_argument("--zero", nargs="*", help="weights or variable names to set to zero")
    s.add_argument("--point", nargs="*", help="name=value pairs for eval")
    s.add_argument("--fill-zero", action="store_true", help="unbound variables default to 0")

    s = sub.add_parser("matrix", parents=[common], help="binomial obstruction matrix and its determinant")
    s.add_argument("--q", type=int)
    s.add_argument("--k", type=int)

    s = sub.add_parser("build", parents=[common], help="write a standard algebra file")
    s.add_argument("name", choices=("m0q", "mq", "witt", "family", "m03", "m04_10", "m05_11"))
    s.add_argument("--q", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--k", type=int)
    s.add_argument("--s", type=int)
    s.add_argument("--beta", action="append", help="family parameter (repeatable)")

    s = sub.add_parser("sweep", parents=[common], help="random Jacobi checks of extension families")
    s.add_argument("--count", type=int, default=50)
    return p


COMMANDS = {
    "jacobi": cmd_jacobi,
    "extend": cmd_extend,
    "classify": cmd_classify,
    "main-theorem": cmd_main_theorem,
    "k-lemmas": cmd_k_lemmas,
    "variety": cmd_variety,
    "matrix": cmd_matrix,
    "build": cmd_build,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    rep = Reporter(args.format)
    try:
        return COMMANDS[args.command](args, rep)
    except ParseError as e:
        print(f"{getattr(args, 'path', '')}: {e}", file=sys.stderr)
        return USAGE
    except UsageError as e:
        print(f"maxclass {args.command}: {e}", file=sys.stderr)
        return USAGE
    except ValueError as e:
        # precondition violations from the library
        print(f"maxclass {args.command}: {e}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())

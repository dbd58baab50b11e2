import math
from fractions import Fraction as F
from itertools import combinations

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from maxclass.exactnum import ParamPoly
from maxclass.liealg import (
    GradedAlgebra,
    NotIsomorphic,
    ParseError,
    build_appendix_b,
    build_extension_family,
    build_m0q,
    build_mq,
    build_witt,
    format_algebra,
    graded_iso,
    jacobi_check,
    jacobi_residual,
    parse_algebra,
    verify_leibniz,
    witt_constant,
)
from oracles import family_constant as printed_constant
from oracles import to_sympy

b = ParamPoly.var


def sgn(n):
    return -1 if n % 2 else 1


def nonzero(a):
    return {k: v for k, v in a.constants.items() if v}


def brute_jacobi(a):
    """Cyclic sums over every triple, computed straight from lam()."""
    bad = []
    for i, j, k in combinations(a.support, 3):
        if i + j + k > a.top:
            continue
        s = a.lam(i, j) * a.lam(i + j, k) + a.lam(j, k) * a.lam(j + k, i) + a.lam(k, i) * a.lam(k + i, j)
        if s:
            bad.append((i, j, k))
    return bad


# -- builders ------------------------------------------------------------------


def test_m0q():
    a = build_m0q(3, 8)
    assert a.support == (1, 3, 4, 5, 6, 7, 8)
    assert nonzero(a) == {}
    assert [a.lam(1, i) for i in range(3, 8)] == [1] * 5
    assert a.lam(1, 8) == 0
    small = build_m0q(3, 4)
    assert small.support == (1, 3, 4) and small.lam(1, 3) == 1 and nonzero(small) == {}
    assert jacobi_check(build_m0q(5, 20)) == []
    with pytest.raises(ValueError):
        build_m0q(3, 3)


def test_mq():
    a = build_mq(3, 12)
    assert nonzero(a) == {(3, i): 1 for i in range(4, 10)}
    assert nonzero(build_mq(3, 7)) == {(3, 4): 1}
    assert jacobi_check(build_mq(3, 15)) == []
    with pytest.raises(ValueError):
        build_mq(3, 6)


def test_witt_printed_constants():
    a = build_witt(3, 12)
    assert witt_constant(3) == 60
    assert a.lam(3, 4) == 1 and a.lam(3, 5) == 1
    for (i, j), v in a.constants.items():
        if i > 1:
            expect = F(60 * math.factorial(i - 2) * math.factorial(j - 2) * (j - i), math.factorial(i + j - 2))
            assert v == expect
    assert jacobi_check(build_witt(3, 20)) == []


@pytest.mark.parametrize("q", [3, 4, 5, 6, 7])
def test_witt_general_q_oracle(q):
    # positive Witt algebra [w_i, w_j] = (j - i) w_{i+j}; build the canonical basis in sympy
    top = 3 * q + 4
    alpha = {q: sp.Integer(1)}
    for i in range(q, top):
        alpha[i + 1] = alpha[i] * (i - 1)  # [w_1, f_i] = (i - 1) f_{i+1}
    a = build_witt(q, top)
    assert a.lam(q, q + 1) == 1
    ratio = None
    for i in range(q, top + 1):
        for j in range(i + 1, top - i + 1):
            ref = alpha[i] * alpha[j] * (j - i) / alpha[i + j]
            got = to_sympy(a.lam(i, j))
            ratio = ratio or got / ref
            assert got == ratio * ref
    assert jacobi_check(a) == []


def test_family_printed_levels():
    k = 5
    for q in (3, 4):
        a1 = build_extension_family(q, k, 1)
        for r in range(q, k + 1):
            assert a1.lam(r, 2 * k + 1 - r) == sgn(r - k)
        a2 = build_extension_family(q, k, 2)
        for r in range(q, k + 2):
            assert a2.lam(r, 2 * k + 2 - r) == sgn(r - k) * (k + 1 - r)
        a3 = build_extension_family(q, k, 3, [b("b1")])
        for r in range(q, k + 2):
            expect = (math.comb(k - r + 2, k - r) if k >= r else 0) - b("b1")
            assert a3.lam(r, 2 * k + 3 - r) == expect.scale(sgn(r - k))


@pytest.mark.parametrize("q", [3, 4, 5])
@pytest.mark.parametrize("k", [5, 7, 9])
def test_family_matches_printed_recursion(q, k):
    s = 2 * q + 2
    betas = [b(f"b{i}") for i in range(1, (s + 1) // 2)]
    a = build_extension_family(q, k, s, betas)
    sym = [sp.Symbol(f"b{i}") for i in range(1, len(betas) + 1)]
    for m in range(3, s + 1):
        n = 2 * k + m
        l = (m + 1) // 2 - 1
        for r in range(q, k + m // 2 + 1):
            if r >= n - r:
                continue
            assert to_sympy(a.lam(r, n - r)) == printed_constant(k, r, m, sym[:l]), (m, r)


def test_family_truncation_consistency():
    betas = [b("b1"), b("b2"), b("b3")]
    a = build_extension_family(4, 6, 8, betas)
    assert a.truncate(2 * 6 + 7) == build_extension_family(4, 6, 7, betas[:3])
    assert a.truncate(2 * 6 + 6) == build_extension_family(4, 6, 6, betas[:2])


def test_family_zero_betas_is_mq():
    for s in range(1, 6):
        betas = [0] * max(0, (s + 1) // 2 - 1)
        fam = build_extension_family(3, 3, s, betas)
        assert graded_iso(fam, build_mq(3, 6 + s))


def test_family_parameter_count():
    with pytest.raises(ValueError):
        build_extension_family(3, 4, 5, [1])


def test_appendix_b_tables():
    m04 = build_appendix_b("m04_10")
    printed = {(2, 5): -1, (3, 4): 1, (2, 6): -2, (3, 5): 1, (3, 6): -2, (4, 5): 3, (4, 6): 3, (3, 7): -5, (2, 8): 5}
    assert nonzero(m04) == printed
    m05 = build_appendix_b("m05_11")
    printed.update({(3, 8): F(5, 2), (2, 9): F(5, 2), (4, 7): F(-15, 2), (5, 6): F(21, 2)})
    assert nonzero(m05) == printed
    assert m05.lam(5, 6) == F(21, 2)
    m03 = build_appendix_b("m03", 3)
    assert m03.lam(2, 5) == -1
    assert jacobi_check(m05) == [] and jacobi_check(m04) == []
    for k in range(3, 11):
        assert jacobi_check(build_appendix_b("m03", k)) == []
    with pytest.raises(ValueError):
        build_appendix_b("m06")


def test_appendix_b_m03_formula():
    for k in range(3, 9):
        a = build_appendix_b("m03", k)
        for l in range(2, k + 1):
            assert a.lam(l, 2 * k + 1 - l) == sgn(l + 1)
            assert a.lam(l, 2 * k + 2 - l) == sgn(l + 1) * (k - l + 1)
        for m in range(3, k + 2):
            assert a.lam(m, 2 * k + 3 - m) == sgn(m) * ((m - 2) * k - F((m - 2) * (m - 1), 2))


# -- checkers ------------------------------------------------------------------


def test_jacobi_against_brute_force():
    fam = build_extension_family(3, 4, 8, [F(4, 3), F(50, 33), F(92, 33)])
    assert {t for t, _ in jacobi_check(fam)} == set(brute_jacobi(fam))
    assert jacobi_residual(fam, 3, 5, 8) != 0


def test_leibniz_planted_defect():
    assert verify_leibniz(build_witt(3, 15)) == []
    assert verify_leibniz(build_m0q(3, 12)) == []
    a = build_m0q(3, 9)
    bad = a.replace(constants={**a.constants, (3, 4): ParamPoly.const(1)})
    assert (3, 4) in [p for p, _ in verify_leibniz(bad)]


def test_out_of_support_brackets_are_zero():
    a = build_m0q(4, 10)
    assert a.lam(1, 2) == 0 and a.lam(2, 5) == 0


def test_antisymmetry():
    a = build_witt(3, 14)
    for i in a.support:
        assert a.lam(i, i) == 0
        for j in a.support:
            assert a.lam(j, i) == -a.lam(i, j)


# -- isomorphism ---------------------------------------------------------------


def test_iso_identity():
    w = graded_iso(build_m0q(3, 10), build_m0q(3, 10))
    assert w and w.alpha1 == 1


def test_iso_distinct_betas():
    a = build_extension_family(3, 5, 3, [F(1, 2)])
    c = build_extension_family(3, 5, 3, [F(2, 3)])
    assert isinstance(graded_iso(a, c), NotIsomorphic)


def test_iso_beta_zero_vs_one():
    fam = build_extension_family(3, 4, 1)
    res = graded_iso(fam, build_m0q(3, 9))
    assert not res and (3, 6) in res.pairs


def test_iso_rejects_mismatch():
    with pytest.raises(ValueError):
        graded_iso(build_m0q(3, 10), build_m0q(3, 11))


nonzero_frac = st.builds(F, st.integers(1, 8), st.integers(1, 9)).flatmap(lambda f: st.sampled_from([f, -f]))


@settings(max_examples=60, deadline=None)
@given(nonzero_frac, nonzero_frac)
def test_iso_equivalence(c1, c2):
    base = build_witt(3, 12)
    a = base.replace(constants={k: (v if k[0] == 1 else v.scale(c1)) for k, v in base.constants.items()})
    c = base.replace(constants={k: (v if k[0] == 1 else v.scale(c2)) for k, v in base.constants.items()})
    ab, ba, ac, cb = graded_iso(a, base), graded_iso(base, a), graded_iso(a, c), graded_iso(c, base)
    assert graded_iso(a, a).ratio(3) == 1
    assert ab.ratio(3) * ba.ratio(3) == 1
    assert ac.ratio(3) * cb.ratio(3) == ab.ratio(3)


# -- file format -----------------------------------------------------------------


@pytest.mark.parametrize(
    "alg",
    [
        build_m0q(3, 9),
        build_witt(3, 13),
        build_appendix_b("m05_11"),
        build_extension_family(3, 4, 5, [b("b1"), b("b2")]),
    ],
)
def test_roundtrip(alg):
    text = format_algebra(alg)
    back = parse_algebra(text)
    assert back == alg
    assert format_algebra(back) == text


def test_parse_errors_carry_line():
    text = "q=3\ntop=7\nsupport=1,3,4,5,6,7\nparams=\nlambda 3 x = 1\n"
    with pytest.raises(ParseError) as exc:
        parse_algebra(text)
    assert exc.value.line == 5


def test_parse_rejects_bad_target():
    text = "q=3\ntop=7\nsupport=1,3,4,5,6,7\nparams=\nlambda 3 5 = 1\n"
    with pytest.raises(ValueError):
        parse_algebra(text)

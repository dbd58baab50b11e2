import random
from fractions import Fraction as F
from functools import lru_cache

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from maxclass.exactnum import ParamPoly, substitute
from maxclass.varieties import (
    XM1,
    PolySystem,
    assemble_system,
    change_coords,
    component,
    eliminate,
    eval_point,
    gen_F,
    gen_G,
    jacobian,
    rank_at,
    restrict,
    weight_of,
    z_map,
)

P = ParamPoly.parse


@lru_cache(maxsize=None)
def system(n):
    return assemble_system(n)


def scale_between(got, want):
    """The rational c with got == c * want, or None (and the first differing monomial)."""
    if not want:
        return (F(1), None) if not got else (None, "want is zero")
    mono = next(iter(want.terms))
    c = got.terms.get(mono, F(0)) / want.terms[mono]
    if c and got == want.scale(c):
        return c, None
    for m in set(got.terms) | set(want.terms):
        if got.terms.get(m, 0) != c * want.terms.get(m, 0):
            return None, f"{m}: got {got.terms.get(m, 0)}, want {c * want.terms.get(m, 0)}"
    return None, "zero scale"


def assert_matches(sys, printed):
    assert sys.labels == list(printed), sys.labels
    for lab, want in printed.items():
        c, diff = scale_between(sys[lab], P(want))
        assert c, f"{lab}: {diff}"


# -- printed fixtures ------------------------------------------------------------------

F230 = "2*x[2,0]*x[4,0] - 3*x[3,0]^2 + x[3,0]*x[4,0]"
F231 = "-2*x[2,0]*x[4,1] + 7*x[3,0]*x[3,1] - x[3,0]*x[4,1] - 3*x[4,0]*x[2,1] - 3*x[4,0]*x[3,1]"
M9 = {"F(2,3,0)": F230}
M10 = {
    "F(2,3,0)": F230,
    "F+xG(2,3,1)": F231 + " + xm1*(2*x[2,2] + x[3,2])",
    "xG(2,4,-1)": "xm1*(2*x[2,0] - x[3,0] - x[4,0])",
}
M11 = {
    "F(2,3,0)": F230,
    "F(2,3,1)": F231,
    "F(2,3,2)": "-2*x[2,0]*x[4,2] + 8*x[3,0]*x[3,2] - x[3,0]*x[4,2] - 4*x[4,0]*x[2,2] - 6*x[4,0]*x[3,2]"
    " + 2*x[5,0]*x[2,2] + x[5,0]*x[3,2] - 3*x[2,1]*x[4,1] + 4*x[3,1]^2 - 3*x[3,1]*x[4,1]",
    "F(2,4,0)": "-2*x[2,0]*x[5,0] + 4*x[3,0]*x[4,0] - 6*x[4,0]^2 + x[3,0]*x[5,0] + x[4,0]*x[5,0]",
}


def test_parse_accepts_grouped_products():
    assert P("xm1*(2*x[2,0] - x[3,0])") == P("2*xm1*x[2,0] - xm1*x[3,0]")


@pytest.mark.parametrize("n, printed", [(9, M9), (10, M10), (11, M11)])
def test_systems_match_printed(n, printed):
    assert_matches(assemble_system(n), printed)


def test_f232_coefficient_on_x22_x40():
    p = gen_F(2, 3, 2)
    assert p.coeffs_in("x[2,2]")[1].coeffs_in("x[4,0]")[1] == -4


def test_mismatch_names_the_coefficient():
    wrong = F230.replace("- 3*x[3,0]^2", "- 4*x[3,0]^2")
    c, diff = scale_between(system(9)["F(2,3,0)"], P(wrong))
    assert c is None and "x[3,0]" in diff


def test_m9_value_at_basis_point():
    # our sign convention is the negative of the printed form
    assert eval_point(system(9), {"x[2,0]": 0, "x[3,0]": 1, "x[4,0]": 0}) == [3]


def test_generator_domains():
    with pytest.raises(ValueError):
        gen_F(3, 3, 0)
    with pytest.raises(ValueError):
        gen_F(2, 3, -1)
    with pytest.raises(ValueError):
        gen_G(2, 3, -2)
    with pytest.raises(ValueError):
        assemble_system(8)


# -- coordinate changes ---------------------------------------------------------------

Z = {
    "M10_0": {
        "F(2,3,0)": "z[0,0]*z[2,0] - 3*z[1,0]^2",
        "F+xG(2,3,1)": "-z[0,0]*z[2,1] + 7*z[1,0]*z[1,1] - z[2,0]*z[0,1]",
    },
    "M10_1": {
        "F(2,3,0)": "z[0,0]*z[2,0] - 3*z[1,0]^2",
        "F+xG(2,3,1)": "-z[0,0]*z[2,1] + 7*z[1,0]*z[1,1] - z[2,0]*z[0,1] + xm1*z[1,2]",
        "G(2,4,-1)": "z[0,0] - 2*z[1,0] - z[2,0]",
    },
    "M11": {
        "F(2,3,0)": "z[0,0]*z[2,0] - 3*z[1,0]^2",
        "F(2,3,1)": "-z[0,0]*z[2,1] + 7*z[1,0]*z[1,1] - z[2,0]*z[0,1]",
        "F(2,3,2)": "-z[0,0]*z[2,2] - z[0,1]*z[2,1] + 4*z[1,1]^2 + 8*z[1,0]*z[1,2]"
        " + 4*z[2,0]*(z[0,2] - z[1,2]) + z[3,0]*z[0,2]",
        "F(2,4,0)": "z[3,0]*(2*z[1,0] - z[0,0] + z[2,0]) + z[2,0]*(16*z[1,0] - 6*z[0,0])",
    },
}


def z_form(name):
    base = {"M10_0": component(10, 0), "M10_1": component(10, 1), "M11": system(11)}[name]
    return change_coords(base, z_map(name))


@pytest.mark.parametrize("name", sorted(Z))
def test_z_presentations(name):
    assert_matches(z_form(name), Z[name])


def test_m10_1_after_eliminating_z00():
    sys = eliminate(z_form("M10_1"), "z[0,0]", "G(2,4,-1)")
    c, _ = scale_between(sys["F(2,3,0)"], P("(3*z[1,0] + z[2,0])*(z[1,0] - z[2,0])"))
    assert c
    c, _ = scale_between(
        sys["F+xG(2,3,1)"], P("(2*z[1,0] + z[2,0])*z[2,1] - 7*z[1,0]*z[1,1] + z[2,0]*z[0,1] - xm1*z[1,2]")
    )
    assert c


def test_change_coords_rejects_singular_map():
    with pytest.raises(ValueError):
        change_coords(system(9), {"z[0,0]": P("x[2,0] + x[3,0]"), "z[1,0]": P("2*x[2,0] + 2*x[3,0]")})
    with pytest.raises(ValueError):
        z_map("M12")


def test_jacobian_and_singular_locus():
    sys = z_form("M10_0")
    cols = ["z[0,0]", "z[1,0]", "z[2,0]", "z[0,1]", "z[1,1]", "z[2,1]"]
    assert sorted(sys.vars) == sorted(cols)
    jac = jacobian(sys)
    idx = [sys.vars.index(c) for c in cols]
    row0 = [jac[0, i] for i in idx]
    row1 = [jac[1, i] for i in idx]
    printed0 = [P("z[2,0]"), P("-6*z[1,0]"), P("z[0,0]"), 0, 0, 0]
    printed1 = [P("-z[2,1]"), P("7*z[1,1]"), P("-z[0,1]"), P("-z[2,0]"), P("7*z[1,0]"), P("-z[0,0]")]
    assert row0 == [ParamPoly.coerce(p).scale(-1) for p in printed0]
    assert row1 == [ParamPoly.coerce(p) for p in printed1]
    generic = {"z[0,0]": 3, "z[1,0]": 1, "z[2,0]": 1, "z[0,1]": 2, "z[1,1]": 5, "z[2,1]": -1}
    on_z = {**generic, "z[0,0]": 0, "z[1,0]": 0, "z[2,0]": 0}
    assert eval_point(sys, generic)[0] == 0
    assert rank_at(sys, generic) == 2 and rank_at(sys, on_z) == 1


def test_eval_point_needs_every_variable():
    with pytest.raises(KeyError):
        eval_point(system(9), {"x[2,0]": 1})


def test_components_need_even_n():
    with pytest.raises(ValueError):
        component(11, 0)
    assert XM1 not in component(10, 0).vars
    assert len(component(10, 1)) == 3


# -- restriction propositions ---------------------------------------------------------


def only_weight(p, w):
    return substitute(p, {v: 0 for v in p.variables if weight_of(v) != w})


@pytest.mark.parametrize("n", range(9, 26, 2))
def test_odd_n_low_weights_vanish(n):
    sys = system(n)
    w = (n - 9) // 2
    assert len(restrict(sys, range(0, w + 1))) == 0
    assert max(weight_of(v) for v in sys.vars) <= n - 9


@pytest.mark.parametrize("n", range(9, 26))
def test_single_weight_leaves_one_equation(n):
    w = (n - 9) // 2
    rest = restrict(system(n), [i for i in range(-1, n) if i != w])
    assert len(rest) == 1
    assert rest.polys[0][1] == only_weight(gen_F(2, 3, 2 * w), w)


@pytest.mark.parametrize("n", range(11, 26))
def test_next_weight_leaves_two_or_three(n):
    w = (n - 9) // 2 - 1
    rest = restrict(system(n), [i for i in range(-1, n) if i != w])
    r = n - 11 if n % 2 else n - 12
    want = {only_weight(gen_F(2, 3, r), w), only_weight(gen_F(2, 4, r), w)}
    if n % 2 == 0:
        want.add(only_weight(gen_F(3, 4, r), w))
    assert {p for _, p in rest} == want


# -- properties ------------------------------------------------------------------------


def poly_weights(p):
    return {sum(weight_of(v) * e for v, e in mono) for mono in p.terms}


def expected_weight(label):
    kind, rest = label.split("(")
    r = int(rest.rstrip(")").split(",")[2])
    return r if kind != "G" else r + 1


def test_weighted_homogeneity_all_generated():
    for n in range(9, 26):
        for lab, p in system(n):
            assert poly_weights(p) == {expected_weight(lab)}, (n, lab)
    for q in range(3, 13):
        for j in range(2, q):
            for r in range(0, 14):
                assert poly_weights(gen_F(j, q, r)) <= {r}
            for r in range(-1, 14):
                assert poly_weights(gen_G(j, q, r)) <= {r + 1}


@settings(max_examples=60, deadline=None)
@given(st.integers(9, 18), st.integers(1, 9), st.integers(1, 5), st.integers(0, 10**6))
def test_torus_action_scales_each_equation(n, num, den, seed):
    # x[a,t] -> c^t x[a,t] multiplies an equation of weight w by c^w
    c = F(num, den)
    sys = system(n)
    rng = random.Random(seed)
    pt = {v: F(rng.randint(-5, 5), rng.randint(1, 4)) for v in sys.vars}
    moved = {v: c ** weight_of(v) * x for v, x in pt.items()}
    for (lab, _), a, b in zip(sys, eval_point(sys, pt), eval_point(sys, moved)):
        assert b == c ** expected_weight(lab) * a


@settings(max_examples=40, deadline=None)
@given(st.integers(9, 16), st.sets(st.integers(-1, 7)), st.sets(st.integers(-1, 7)))
def test_restrict_composes(n, a, b):
    sys = system(n)
    assert restrict(restrict(sys, a), b) == restrict(sys, a | b) == restrict(restrict(sys, b), a)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["M10_0", "M10_1", "M11"]), st.integers(0, 10**6))
def test_coordinate_round_trip(name, seed):
    # push through the named map, then through a random unitriangular map and back
    sys = z_form(name)
    names = list(sys.vars)
    rng = random.Random(seed)
    fwd, back = {}, {}
    for i, v in enumerate(names):
        form = ParamPoly.var(v)
        for u in names[:i]:
            form = form + ParamPoly.var(u) * rng.randint(-2, 2)
        fwd[f"y[{i},0]"] = form
    there = change_coords(sys, fwd)
    # the inverse, computed independently with sympy
    ys = sp.symbols(f"y0:{len(names)}")
    xs = sp.symbols(f"v0:{len(names)}")
    eqs = [to_sympy_form(f, names, xs) - y for f, y in zip(fwd.values(), ys)]
    sol = sp.solve(eqs, xs, dict=True)[0]
    for i, v in enumerate(names):
        back[v] = from_sympy_form(sol[xs[i]], ys)
    again = change_coords(there, back)
    assert again == sys


def to_sympy_form(form, names, xs):
    return sum(sp.Rational(str(form.coeffs_in(n).get(1, ParamPoly.const(0)))) * x for n, x in zip(names, xs))


def from_sympy_form(expr, ys):
    out = ParamPoly.const(0)
    for i, y in enumerate(ys):
        c = sp.Rational(expr.coeff(y))
        if c:
            out = out + ParamPoly.var(f"y[{i},0]") * F(int(c.p), int(c.q))
    return out


def test_restrict_by_name_and_weight():
    sys = system(10)
    assert restrict(sys, [XM1]) == restrict(sys, [-1]) == component(10, 0)
    assert isinstance(restrict(sys, []), PolySystem) and restrict(sys, []) == sys

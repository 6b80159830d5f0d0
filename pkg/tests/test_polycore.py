import cmath
import math
import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import polys, to_sympy
from iets.errors import InputError, ModeError, UnsupportedDivisorError
from iets.polycore import (EXACT, FLOAT, GaussQ, MultiPoly, divide_exact, divide_monic_in_var,
                           divides, evaluate, homogeneous_parts, leading_form, partial_derivative)

X1 = ["x1"]
X12 = ["x1", "x2"]
XZ = ["x", "z"]


def P(expr, names, mode=EXACT):
    return MultiPoly.from_expr(expr, names, mode)


# -- evaluation -----------------------------------------------------------------------------

def test_eval_square_on_lattice_point():
    v = evaluate(P("x1^2", X1), [2j * math.pi * 3])
    assert v == pytest.approx(-(6 * math.pi) ** 2)
    assert abs(v + 355.3057584392169) < 1e-9


def test_eval_constant():
    assert evaluate(P("1", X12), [0.3 + 2j, -7]) == 1


def test_eval_mixed_monomials():
    assert evaluate(P("x1*x2 - x2", X12), [3, 2j]) == 4j


def test_eval_dimension_mismatch():
    with pytest.raises(InputError):
        evaluate(P("x1*x2", X12), [1])


@settings(max_examples=60)
@given(polys(nvars=3, max_deg=5, max_terms=8),
       st.lists(st.tuples(st.fractions(-5, 5, max_denominator=7),
                          st.fractions(-5, 5, max_denominator=7)),
                min_size=3, max_size=3))
def test_eval_matches_exact_rational_oracle(p, pt):
    syms = sympy.symbols("a b c")
    exact = to_sympy(p, syms).subs({s: sympy.Rational(re.numerator, re.denominator)
                                    + sympy.I * sympy.Rational(im.numerator, im.denominator)
                                    for s, (re, im) in zip(syms, pt)})
    exact = complex(sympy.N(exact, 30))
    got = evaluate(p, [complex(float(re), float(im)) for re, im in pt])
    scale = p.abs_bound([abs(complex(float(re), float(im))) for re, im in pt]) or 1.0
    # 13 significant digits relative to the size of the terms
    assert abs(got - exact) <= 1e-13 * scale


def test_exact_evaluation_with_gaussian_points():
    p = P("x1^2*x2 + (1/3)*x2 - I", X12)
    v = p.evaluate([GaussQ(1, 1), GaussQ(Fraction(1, 2))], coerce=lambda c: c)
    # (1+i)^2 / 2 + 1/6 - i = 1/6
    assert v == GaussQ(Fraction(1, 6))


# -- derivatives -------------------------------------------------------------------------------

def test_partial_derivative_examples():
    assert partial_derivative(P("x1^2*x2", X12), 0) == P("2*x1*x2", X12)
    assert partial_derivative(P("x1^3", X12), 1).is_zero()
    assert evaluate(partial_derivative(P("x1^3 + 2*x1", X1), 0), [1]) == 5


def test_partial_derivative_index_bounds():
    with pytest.raises(InputError):
        partial_derivative(P("x1", X1), 1)


@settings(max_examples=80)
@given(polys(nvars=3), polys(nvars=3), st.integers(0, 2), st.integers(-5, 5))
def test_derivative_linear_and_leibniz(p, q, var, c):
    d = lambda f: partial_derivative(f, var)  # noqa: E731
    assert d(p + q * c) == d(p) + d(q) * c
    assert d(p * q) == d(p) * q + p * d(q)


# -- homogeneous parts -----------------------------------------------------------------------------

def test_homogeneous_parts_example():
    parts = homogeneous_parts(P("x1^2 + x1*x2 + x1 + 1", X12))
    assert [(d, h) for d, h in parts] == [(2, P("x1^2 + x1*x2", X12)), (1, P("x1", X12)),
                                          (0, P("1", X12))]


def test_homogeneous_input_single_part():
    assert homogeneous_parts(P("x1*x2", X12)) == [(2, P("x1*x2", X12))]


def test_homogeneous_parts_zero_rejected():
    with pytest.raises(InputError):
        homogeneous_parts(MultiPoly.zero(2))


def test_homogeneous_parts_resum_random_degree_five(rng):
    for _ in range(20):
        terms = {}
        for _ in range(12):
            e = tuple(rng.randint(0, 5) for _ in range(3))
            if sum(e) <= 5:
                terms[e] = rng.randint(-9, 9)
        if not terms or all(v == 0 for v in terms.values()):
            continue
        p = MultiPoly(3, terms)
        parts = homogeneous_parts(p)
        # oracle: regroup terms by total degree
        regroup = {}
        for e, c in p.terms.items():
            regroup.setdefault(sum(e), {})[e] = c
        assert {d: MultiPoly(3, t) for d, t in regroup.items()} == dict(parts)
        total = MultiPoly.zero(3)
        for _, h in parts:
            total = total + h
        assert total == p
        assert not parts[0][1].is_zero() and parts[0][0] == p.total_degree()


@settings(max_examples=60)
@given(polys(nvars=3, nonzero=True), st.complex_numbers(min_magnitude=0.1, max_magnitude=3),
       st.lists(st.complex_numbers(max_magnitude=2), min_size=3, max_size=3))
def test_homogeneous_parts_scale(p, t, x):
    for d, h in homogeneous_parts(p):
        lhs = evaluate(h, [t * v for v in x])
        rhs = t ** d * evaluate(h, x)
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, h.abs_bound([abs(t * v) for v in x]))


# -- division ------------------------------------------------------------------------------------------

def test_divide_difference_of_squares():
    q, r = divide_monic_in_var(P("z^2 - x^2", XZ), P("z - x", XZ), 1)
    assert q == P("z + x", XZ) and r.is_zero()


def test_divide_synthetic():
    q, r = divide_monic_in_var(P("z^2 + 1", XZ), P("z - x", XZ), 1)
    assert q == P("z + x", XZ) and r == P("x^2 + 1", XZ)


def test_divide_constructed_product_remainder():
    d = P("z^3 - 4*x^2", XZ)
    p = d * P("x*z + 3", XZ) + P("z - 7", XZ)
    q, r = divide_monic_in_var(p, d, 1)
    assert r == P("z - 7", XZ)
    assert q == P("x*z + 3", XZ)


def test_divide_errors():
    with pytest.raises(UnsupportedDivisorError):
        divide_monic_in_var(P("z^2", XZ), P("x*z - 1", XZ), 1)
    with pytest.raises(ModeError):
        divide_monic_in_var(P("z^2", XZ, FLOAT), P("z - 1", XZ, FLOAT), 1)


@st.composite
def monic_divisor(draw):
    var = draw(st.integers(0, 2))
    body = draw(polys(nvars=3, max_deg=3, max_terms=4))
    deg = draw(st.integers(1, 3))
    # drop body terms whose degree in var is >= deg so the leading coefficient is +-1
    terms = {e: c for e, c in body.terms.items() if e[var] < deg}
    lead = [0, 0, 0]
    lead[var] = deg
    terms[tuple(lead)] = GaussQ(draw(st.sampled_from([1, -1])))
    return MultiPoly(3, terms), var


@settings(max_examples=200)
@given(polys(nvars=3, max_deg=5, max_terms=8), monic_divisor())
def test_division_identity(p, dv):
    d, var = dv
    q, r = divide_monic_in_var(p, d, var)
    assert (p - (d * q + r)).is_zero()
    assert r.is_zero() or r.degree_in(var) < d.degree_in(var)


@settings(max_examples=60)
@given(polys(nvars=2, max_deg=3, max_terms=4, nonzero=True),
       polys(nvars=2, max_deg=3, max_terms=4, nonzero=True))
def test_general_division_detects_products(a, b):
    q, r = divide_exact(a * b, b)
    assert r.is_zero() and q * b == a * b
    q, r = divide_exact(a, b)
    assert (a - (b * q + r)).is_zero()


@settings(max_examples=60)
@given(polys(nvars=2, max_deg=3, max_terms=4, nonzero=True, gaussian=False),
       polys(nvars=2, max_deg=2, max_terms=3, nonzero=True, gaussian=False))
def test_divides_matches_sympy(p, d):
    x, y = sympy.symbols("x y")
    oracle = sympy.cancel(to_sympy(p, (x, y)) / to_sympy(d, (x, y)))
    expected = not oracle.as_numer_denom()[1].free_symbols
    assert divides(d, p) == expected


# -- misc ------------------------------------------------------------------------------------------------

def test_degree_of_zero_is_error():
    with pytest.raises(InputError):
        MultiPoly.zero(2).total_degree()


def test_no_zero_coefficients_stored():
    p = P("x1 - x1 + 2*x2", X12)
    assert list(p.terms) == [(0, 1)]


def test_mixed_mode_promotes_to_float():
    p = P("x1", X12) + P("2.5*x2", X12, FLOAT)
    assert p.mode == FLOAT


@settings(max_examples=60)
@given(polys(nvars=3))
def test_json_round_trip(p):
    assert MultiPoly.from_json(p.to_json()) == p
    f = p.to_float()
    assert MultiPoly.from_json(f.to_json()) == f


def test_sorted_terms_grlex():
    p = P("x1 + x2^2 + x1*x2 + 1", X12)
    assert [e for e, _ in p.sorted_terms()] == [(1, 1), (0, 2), (1, 0), (0, 0)]


def test_leading_form():
    assert leading_form(P("x1^2 - x2^2 + x1", X12)) == P("x1^2 - x2^2", X12)


def test_parse_imaginary_unit():
    p = P("I*x1 + 2", X1)
    assert evaluate(p, [1]) == 2 + 1j
    assert cmath.isclose(evaluate(P("x1^3", X1), [1j]), -1j)


def test_parse_error():
    with pytest.raises(InputError):
        P("x1 +* 2", X1)
    with pytest.raises(InputError):
        P("sin(x1)", X1)


def test_random_division_by_known_factor():
    r = random.Random(5)
    for _ in range(30):
        a = MultiPoly(2, {(r.randint(0, 3), r.randint(0, 3)): r.randint(1, 5) for _ in range(3)})
        d = P("z^2 - 3*x", XZ)
        q, rem = divide_monic_in_var(a * d, d, 1)
        assert rem.is_zero() and q == a

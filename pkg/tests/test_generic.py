import math
import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest
import sympy

from conftest import random_poly, sympy_divides, to_sympy
from iets.errors import InputError, ModeError, NotApplicableError
from iets.exptower import ExpTower
from iets.generic import (TD_ONE, THREE_ITER_TUPLE, TWO_ITER, bad_rationals_three_var,
                          bad_rationals_two_var, bad_tuples_tower, diagnose_relations, diagnose_values,
                          enumerate_bad_relations, exclusion_margins, find_integer_relation,
                          generic_solve_plan, multiplicative_independence_check, power_product,
                          tower_tuples)
from iets.polycore import EXACT, FLOAT, MultiPoly
from iets.seedcert import enumerate_roots

XY = ["x", "y"]
XYZ = ["x", "y", "z"]


def P(expr, names, mode=EXACT):
    return MultiPoly.from_expr(expr, names, mode)


def T(k, expr):
    return ExpTower.parse(k, expr)


# -- two variables ---------------------------------------------------------------------------------

def test_two_var_binomial():
    (rel,) = bad_rationals_two_var(P("x^2 - 3*y^3", XY))
    assert rel.kind == TWO_ITER
    assert rel.coeffs[:2] == (2, 3) and rel.coeffs[2] == 3


def test_two_var_product_shape():
    (rel,) = bad_rationals_two_var(P("2*x*y^2 - 6", XY))
    assert rel.coeffs[:2] == (1, 2) and rel.coeffs[2] == 3


def test_two_var_not_binomial():
    assert bad_rationals_two_var(P("x + y + 1", XY)) == []
    assert bad_rationals_two_var(P("x^2 - y^4", XY)) == []  # gcd 2


def test_two_var_errors():
    with pytest.raises(ModeError):
        bad_rationals_two_var(P("x - y", XY, FLOAT))
    with pytest.raises(InputError):
        bad_rationals_two_var(P("x + 1", XY))


def _two_var_oracle(p):
    """Support inspection: exactly two monomials of a binomial shape with coprime exponents."""
    if len(p.terms) != 2:
        return False
    a, b = sorted(p.terms)
    for u, v in ((a, b), (b, a)):
        if u[1] == 0 and v[0] == 0 and u[0] > 0 and v[1] > 0 and math.gcd(u[0], v[1]) == 1:
            return True
        if u[0] > 0 and u[1] > 0 and v == (0, 0) and math.gcd(*u) == 1:
            return True
    return False


def test_two_var_matches_support_scan(rng):
    seen = 0
    for _ in range(100):
        if rng.random() < 0.5:
            n, m = rng.randint(1, 5), rng.randint(1, 5)
            c = Fraction(rng.choice([-3, -1, 2, 5]), rng.randint(1, 3))
            shape = [{(n, 0): 1, (0, m): c}, {(n, m): 1, (0, 0): c}][rng.randint(0, 1)]
            p = MultiPoly(2, shape)
        else:
            p = random_poly(rng, 2, 4, 3)
        if not (p.depends_on(0) and p.depends_on(1)):
            continue
        seen += 1
        assert bool(bad_rationals_two_var(p)) == _two_var_oracle(p)
    assert seen > 50


# -- three variables -----------------------------------------------------------------------------------

def test_three_var_z_minus_y():
    rels = bad_rationals_three_var(P("z - y", XYZ))
    # r = -1 gives the divisor z*x + 1, which does not divide z + x
    assert [r.coeffs for r in rels] == [(Fraction(1),)]
    assert rels[0].kind == THREE_ITER_TUPLE


def test_three_var_no_y():
    assert bad_rationals_three_var(P("z - x^2", XYZ)) == []


def test_three_var_identically_zero():
    rels = bad_rationals_three_var(P("(y - 2*x)*z", XYZ))
    assert [r.coeffs for r in rels] == [(Fraction(2),)]
    assert rels[0].vanishes_identically


def _sym_three_var_oracle(p, H):
    x, y, z = sympy.symbols("x y z")
    e = to_sympy(p, (x, y, z))
    out = []
    for m in range(1, H + 1):
        for n in range(-H, H + 1):
            if n == 0 or math.gcd(n, m) != 1:
                continue
            r = sympy.Rational(n, m)
            g = sympy.expand(e.subs(y, r * x))
            d = z ** m - r ** n * x ** n if n > 0 else z ** m * x ** (-n) - r ** n
            if g == 0 or sympy_divides(d, g, (x, z)):
                out.append(Fraction(n, m))
    return sorted(out)


def test_three_var_matches_sympy_oracle(rng):
    cases = [P("z - y", XYZ), P("(z^2 - 4*x^2)*(y + 1)", XYZ), P("z*x - 1 + y - y", XYZ)]
    for _ in range(12):
        p = random_poly(rng, 3, 3, 3)
        if rng.random() < 0.5:
            # plant a relation: multiply by a divisor for a random r
            n, m = rng.choice([1, -1, 2, -2]), rng.choice([1, 2])
            d = P(f"z^{m} - ({n}/{m})^{n}*x^{n}" if n > 0 else f"z^{m}*x^{-n} - ({n}/{m})^({n})", XYZ)
            p = p * d
        if p.depends_on(2) and (p.depends_on(0) or p.depends_on(1)):
            cases.append(p)
    for p in cases:
        H = p.total_degree()
        assert [r.coeffs[0] for r in bad_rationals_three_var(p)] == _sym_three_var_oracle(p, H)


# -- towers -------------------------------------------------------------------------------------------

def test_tower_tuple_scan_bound():
    for k in (2, 3):
        for H in (1, 2):
            tuples = list(tower_tuples(k, H))
            assert len(tuples) <= (2 * H + 1) ** k
            assert len(set(tuples)) == len(tuples)
            assert all(t[-1] > 0 and math.gcd(*t) == 1 for t in tuples)


def test_tower_examples():
    assert [r.coeffs for r in bad_tuples_tower(T(2, "y2 - y1"))] == [(1, 1)]
    # e^a = a is a genuine relation for this tower: fixed points of exp solve e^{e^z} = z
    assert [r.coeffs for r in bad_tuples_tower(T(2, "y2 - x"))] == [(1, 1)]
    assert bad_tuples_tower(T(3, "y3 - x")) == []
    assert [r.coeffs for r in bad_tuples_tower(T(3, "y3 - y2^2*y1"))] == [(1, 2, 1)]


def test_tower_errors():
    with pytest.raises(NotApplicableError):
        bad_tuples_tower(T(1, "y1 - x"))
    with pytest.raises(ModeError):
        bad_tuples_tower(ExpTower(2, P("y2 - 0.5*x", ["x", "y1", "y2"], FLOAT)))


def _sym_tower_oracle(t, H):
    k = t.k
    xs = sympy.symbols(f"v0:{k + 1}")
    e = to_sympy(t.p, xs)
    out = []
    for m in tower_tuples(k, H):
        lead = m[-1]
        lin = sum(sympy.Rational(mi, lead) * xs[i] for i, mi in enumerate(m[:-1]))
        g = sympy.expand(e.subs(xs[k - 1], lin))
        X = list(xs[1:k - 1]) + [lin]
        neg = xs[k] ** lead * sympy.Mul(*[Xi ** (-mi) for mi, Xi in zip(m[:-1], X) if mi < 0])
        pos = sympy.Mul(*[Xi ** mi for mi, Xi in zip(m[:-1], X) if mi > 0])
        gens = tuple(xs[:k - 1]) + (xs[k],)
        if g == 0 or sympy_divides(sympy.expand(neg - pos), g, gens):
            out.append(tuple(m))
    return out


def test_tower_matches_sympy_oracle(rng):
    cases = [T(2, "y2 - y1"), T(3, "y3 - x"), T(3, "y3 - y2^2*y1"), T(2, "(y2 - x)*(y1 + 1)")]
    for _ in range(10):
        k = rng.choice([2, 3])
        p = random_poly(rng, k + 1, 2, 3)
        if p.depends_on(k):
            cases.append(ExpTower(k, p))
    for t in cases:
        H = t.p.total_degree()
        assert [r.coeffs for r in bad_tuples_tower(t)] == _sym_tower_oracle(t, H)


def test_witness_divides_specialized():
    x, y, z = sympy.symbols("x y z")
    rels = bad_rationals_three_var(P("(z - y)*(z^2 - 4*x^2)", XYZ))
    rels += bad_tuples_tower(T(2, "y2 - y1")) + bad_tuples_tower(T(3, "y3 - y2^2*y1"))
    assert rels
    for rel in rels:
        n = rel.witness.nvars
        syms = sympy.symbols(f"w0:{n}")
        g = to_sympy(rel.specialized, syms)
        assert g == 0 or sympy_divides(to_sympy(rel.witness, syms), g, syms)


def test_enumerate_bad_relations_dispatch():
    assert enumerate_bad_relations(T(1, "y1 - x")) == []
    (rel,) = enumerate_bad_relations(T(2, "x^2 - 3*y2^3"))
    assert rel.kind == TWO_ITER and rel.form == (-2, 3)
    assert [r.coeffs for r in enumerate_bad_relations(T(2, "y2 - y1"))] == [(Fraction(1),)]


def test_bad_relation_json():
    (rel,) = bad_rationals_two_var(P("x^2 - 3*y^3", XY))
    out = rel.to_json()
    assert out["kind"] == "TwoIter" and out["coeffs"] == ["2/1", "3/1", "3/1"]


# -- multiplicative independence --------------------------------------------------------------------

@pytest.mark.parametrize("cs,verdict,m", [
    ((2, 3), True, None),
    ((2, 4), False, (2, -1)),
    ((6, 10, 15), True, None),
    ((-1,), False, (2,)),
    ((1,), False, (1,)),
    ((-2, -8), False, (3, -1)),
    ((Fraction(1, 2), 2), False, (1, 1)),
])
def test_independence_examples(cs, verdict, m):
    v = multiplicative_independence_check(cs)
    assert v.independent is verdict and v.relation == m
    if m:
        assert power_product(cs, m) == 1


def test_independence_zero_rejected():
    with pytest.raises(InputError):
        multiplicative_independence_check([2, 0])


def _prime_exponents(n, primes):
    out = []
    for p in primes:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        out.append(e)
    assert n == 1
    return out


def test_independence_matches_numpy_rank():
    r = random.Random(7)
    primes = [2, 3, 5, 7]
    for _ in range(100):
        size = r.randint(1, 4)
        cs = []
        for _ in range(size):
            num = math.prod(r.choice(primes) for _ in range(r.randint(0, 3)))
            den = math.prod(r.choice(primes) for _ in range(r.randint(0, 2)))
            cs.append(Fraction(num * r.choice([1, -1]), den))
        M = np.array([np.subtract(_prime_exponents(c.numerator * (1 if c > 0 else -1), primes),
                                  _prime_exponents(c.denominator, primes)) for c in cs])
        independent = np.linalg.matrix_rank(M) == size if M.any() else False
        v = multiplicative_independence_check(cs)
        assert v.independent == independent
        if not v.independent:
            assert any(v.relation) and power_product(cs, v.relation) == 1


# -- integer relations --------------------------------------------------------------------------------

def test_integer_relation_small():
    rel = find_integer_relation([1, 2, 3], H=4)
    assert rel.m == (1, 1, -1) and rel.residual == 0


def test_integer_relation_none():
    with mpmath.workdps(40):
        v = [mpmath.mpf(1), mpmath.sqrt(2), mpmath.pi]
    assert find_integer_relation(v, H=10, digits=30) is None


def test_planted_relations_are_found():
    r = random.Random(3)
    for _ in range(30):
        n = r.randint(2, 4)
        with mpmath.workdps(50):
            v = [mpmath.mpc(r.uniform(-5, 5), r.uniform(-5, 5)) for _ in range(n - 1)]
            m = [r.randint(-5, 5) for _ in range(n - 1)]
            v.append(mpmath.fsum(mi * vi for mi, vi in zip(m, v)))
        rel = find_integer_relation(v, H=10, digits=30)
        assert rel is not None
        with mpmath.workdps(50):
            res = abs(mpmath.fsum(mi * vi for mi, vi in zip(rel.m, v)))
            norm = math.sqrt(sum(e * e for e in rel.m)) * mpmath.sqrt(sum(abs(z) ** 2 for z in v))
        assert res < mpmath.mpf(10) ** -15 * norm


def test_diagnose_multiplicative_relation():
    # log 2, log 3 and log 6 are dependent through 2 pi i only when branches differ
    with mpmath.workdps(40):
        v = [mpmath.log(2), mpmath.log(3), mpmath.log(6) + 2j * mpmath.pi]
    d = diagnose_values(v)
    assert d.linear is None and d.multiplicative is not None
    assert d.verdict == "candidate"


def test_diagnose_tower_root_none_found():
    t = T(3, "y3 - x")
    plan = generic_solve_plan(t)
    rec = enumerate_roots(plan.system, 1).roots[0]
    d = diagnose_relations(rec, t, H=10, digits=30)
    assert d.verdict == "none-found"
    assert rec.relation_report["verdict"] == "none-found"
    assert len(d.vector) == 4


# -- plans ---------------------------------------------------------------------------------------------

def test_plan_k1_is_bare():
    plan = generic_solve_plan(T(1, "y1 - x"))
    assert plan.system.n == 1 and plan.excluded == []


def test_plan_k2_degree_form_and_two_iter_coincide():
    plan = generic_solve_plan(T(2, "y2 - x"))
    assert plan.forms == [(-1, 1)]
    assert plan.system.n == 3


def test_plan_binomial_excludes_two_iter_form():
    plan = generic_solve_plan(T(2, "x^2 - 3*y2^3"))
    kinds = [r.kind for r in plan.excluded]
    assert kinds[0] == TWO_ITER and plan.forms[0] == (-2, 3)
    assert plan.system.rhs[2].P == P("3*x1 - 2*x0", ["x0", "x1", "u"])


def test_plan_k3_adds_degree_form():
    plan = generic_solve_plan(T(3, "y3 - x"))
    assert [r.kind for r in plan.excluded] == [TD_ONE]
    assert plan.forms == [(-1, 1, 0)]


@pytest.mark.parametrize("k,expr", [(2, "y2 - x"), (2, "x^2 - 3*y2^3"), (3, "y3 - x")])
def test_plan_roots_respect_margins(k, expr):
    plan = generic_solve_plan(T(k, expr))
    res = enumerate_roots(plan.system, 3)
    assert len(res.roots) == 3
    for rec in res.roots:
        assert min(exclusion_margins(rec, plan.forms)) >= 1e-6

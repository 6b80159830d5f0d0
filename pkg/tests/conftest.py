import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from iets.polycore import EXACT, GaussQ, MultiPoly

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


# -- helpers shared by several test modules ----------------------------------------------


def to_sympy(p: MultiPoly, syms):
    """Independent conversion used by the sympy-based oracles."""
    expr = sympy.Integer(0)
    for exps, c in p.terms.items():
        if isinstance(c, GaussQ):
            coeff = sympy.Rational(c.re.numerator, c.re.denominator) + \
                sympy.I * sympy.Rational(c.im.numerator, c.im.denominator)
        else:
            coeff = sympy.Float(c.real, 20) + sympy.I * sympy.Float(c.imag, 20)
        term = coeff
        for s, e in zip(syms, exps):
            term *= s ** e
        expr += term
    return sympy.expand(expr)


def sympy_divides(d, g, gens) -> bool:
    """Exact divisibility by sympy's recursive division (oracle)."""
    if g == 0:
        return True
    _, r = sympy.div(sympy.Poly(g, *gens, domain="QQ_I"), sympy.Poly(d, *gens, domain="QQ_I"))
    return r.is_zero


def random_poly(rng: random.Random, nvars: int, max_deg: int, max_terms: int, coeff=5,
                gaussian=False) -> MultiPoly:
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        while True:
            e = [rng.randint(0, max_deg) for _ in range(nvars)]
            if sum(e) <= max_deg:
                break
        c = GaussQ(Fraction(rng.randint(-coeff, coeff), rng.randint(1, 3)),
                   Fraction(rng.randint(-coeff, coeff), rng.randint(1, 3)) if gaussian else 0)
        terms[tuple(e)] = c
    p = MultiPoly(nvars, terms, EXACT)
    if p.is_zero():
        return MultiPoly.const(nvars, 1)
    return p


@st.composite
def polys(draw, nvars=2, max_deg=4, max_terms=6, gaussian=True, nonzero=False):
    n_terms = draw(st.integers(0 if not nonzero else 1, max_terms))
    terms = {}
    for _ in range(n_terms):
        e = tuple(draw(st.lists(st.integers(0, max_deg), min_size=nvars, max_size=nvars)))
        if sum(e) > max_deg:
            continue
        re = Fraction(draw(st.integers(-9, 9)), draw(st.integers(1, 4)))
        im = Fraction(draw(st.integers(-9, 9)), draw(st.integers(1, 4))) if gaussian else 0
        terms[e] = GaussQ(re, im)
    p = MultiPoly(nvars, terms, EXACT)
    if nonzero and p.is_zero():
        p = MultiPoly.const(nvars, 1)
    return p


@pytest.fixture
def rng():
    return random.Random(20240611)

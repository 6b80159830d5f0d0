"""Bad rational relations, their exclusion, and numerical relation diagnostics.

A root ``a`` of ``p(z, e_1(z), ..., e_k(z))`` fails to be generic when its tower values
satisfy a rational linear relation. Under Schanuel's conjecture only finitely many such
relations can hold on the zero set; they are detected here by exact divisibility, which is
unconditional algebra. Their interpretation as "the only obstructions" is SC-conditional.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Sequence

import mpmath
import numpy as np
import sympy
from sympy.polys.matrices import DomainMatrix

from .errors import InputError, ModeError, NotApplicableError
from .exptower import ExpTower
from .massersys import (BranchRhs, MasserSystem, augment_exclude_relations, estimate_branch_degree,
                        from_tower)
from .polycore import EXACT, GaussQ, MultiPoly, divide_exact

TWO_ITER = "TwoIter"
THREE_ITER_TUPLE = "ThreeIterTuple"
TD_ONE = "TdOne"

SC_NOTE = ("relations are found by exact divisibility; reading them as the only obstructions "
           "to genericity assumes Schanuel's conjecture")


def _frac(f) -> str:
    if isinstance(f, GaussQ):
        if f.im == 0:
            return _frac(f.re)
        return f"{_frac(f.re)}+{_frac(f.im)}*I"
    f = Fraction(f)
    return f"{f.numerator}/{f.denominator}"


@dataclass(frozen=True)
class BadRelation:
    """A rational relation compatible with ``p``.

    ``form`` is the linear form on the chain variables ``(x_0, ..., x_{k-1})`` whose
    vanishing expresses the relation; ``witness`` is the divisor found to divide
    ``specialized`` (which may be identically zero).
    """

    kind: str
    coeffs: tuple
    witness: MultiPoly | None
    specialized: MultiPoly | None
    height: int
    form: tuple

    @property
    def vanishes_identically(self) -> bool:
        return self.specialized is not None and self.specialized.is_zero()

    def to_json(self):
        out = {"kind": self.kind,
               "coeffs": [_frac(c) for c in self.coeffs],
               "form": [_frac(c) for c in self.form],
               "height": self.height}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        if self.vanishes_identically:
            out["identicallyZero"] = True
        return out


def _require_exact(p: MultiPoly):
    if p.mode != EXACT:
        raise ModeError("bad-relation enumeration needs exact coefficients")


def _mono(nvars, exps, c=1):
    return MultiPoly(nvars, {tuple(exps): c}, EXACT)


# -- two variables: p(x, y) with y = e_2 ---------------------------------------------


def bad_rationals_two_var(p: MultiPoly) -> list:
    """Binomial shapes ``x^n - s*y^m`` or ``x^n*y^m - r`` with ``gcd(n, m) = 1``.

    ``coeffs`` is ``(n, m, s)`` (or ``(n, m, r)``), normalised so the ``x``-term is monic.
    """
    _require_exact(p)
    if p.nvars != 2:
        raise InputError("expected a polynomial in (x, y)")
    if not (p.depends_on(0) and p.depends_on(1)):
        raise InputError("polynomial must depend on both x and y")
    if len(p) != 2:
        return []
    (e1, c1), (e2, c2) = p.sorted_terms()
    for (ea, ca), (eb, cb) in (((e1, c1), (e2, c2)), ((e2, c2), (e1, c1))):
        # x^n - s y^m
        if ea[1] == 0 and eb[0] == 0 and ea[0] > 0 and eb[1] > 0:
            n, m = ea[0], eb[1]
            if math.gcd(n, m) == 1:
                s = -cb / ca
                return [BadRelation(TWO_ITER, (n, m, s), p.scale(1 / ca), p, max(n, m),
                                    (Fraction(-n), Fraction(m)))]
        # x^n y^m - r
        if ea[0] > 0 and ea[1] > 0 and eb == (0, 0):
            n, m = ea
            if math.gcd(n, m) == 1:
                r = -cb / ca
                return [BadRelation(TWO_ITER, (n, m, r), p.scale(1 / ca), p, max(n, m),
                                    (Fraction(n), Fraction(m)))]
    return []


# -- three variables: p(x, y, z) with y = e_1, z = e_2 ------------------------------


def _rationals(height: int):
    out = []
    for m in range(1, height + 1):
        for n in range(-height, height + 1):
            if n != 0 and math.gcd(n, m) == 1:
                out.append(Fraction(n, m))
    return sorted(out)


def three_var_divisor(r: Fraction) -> MultiPoly:
    """``z^m - r^n x^n`` for ``n > 0``, else ``z^m x^|n| - r^n``, in variables ``(x, z)``."""
    n, m = r.numerator, r.denominator
    rn = GaussQ(r) ** n
    if n > 0:
        return _mono(2, (0, m)) - _mono(2, (n, 0), rn)
    return _mono(2, (-n, m)) - MultiPoly.const(2, rn, EXACT)


def specialize_three_var(p: MultiPoly, r: Fraction) -> MultiPoly:
    """``p(x, r*x, z)`` as a polynomial in ``(x, z)``."""
    x, z = MultiPoly.var(2, 0), MultiPoly.var(2, 1)
    return p.compose([x, x * GaussQ(r), z])


def bad_rationals_three_var(p: MultiPoly, height: int | None = None) -> list:
    """All ``r = n/m`` (lowest terms, ``max(|n|, m) <= height``) with ``p(x, rx, z)``
    identically zero or divisible by the divisor of :func:`three_var_divisor`."""
    _require_exact(p)
    if p.nvars != 3:
        raise InputError("expected a polynomial in (x, y, z)")
    if not (p.depends_on(0) or p.depends_on(1)) or not p.depends_on(2):
        raise InputError("polynomial must depend on x (or y) and on z")
    H = p.total_degree() if height is None else height
    found = []
    for r in _rationals(H):
        g = specialize_three_var(p, r)
        q = three_var_divisor(r)
        if g.is_zero() or divide_exact(g, q)[1].is_zero():
            found.append(BadRelation(THREE_ITER_TUPLE, (r,), q, g, H,
                                     (Fraction(-r.numerator), Fraction(r.denominator))))
    return found


# -- general tower tuples ---------------------------------------------------------------


def tower_tuples(k: int, height: int):
    """Tuples ``(m_0, ..., m_{k-1})`` with ``0 < m_{k-1}``, some other entry nonzero,
    gcd 1 and all entries bounded by ``height``; lexicographic order."""
    rng = range(-height, height + 1)
    for head in itertools.product(rng, repeat=k - 1):
        if not any(head):
            continue
        for last in range(1, height + 1):
            m = head + (last,)
            if reduce(math.gcd, m) == 1:
                yield m


def specialize_tower(p: MultiPoly, m: Sequence[int]) -> MultiPoly:
    """``g(x~, z) = p(x~, r~ . x~, z)`` in variables ``(x, y_1, ..., y_{k-2}, z)``.

    ``p`` is in ``(x, y_1, ..., y_k)``; ``y_{k-1}`` is replaced by ``sum r_i x~_i`` with
    ``r_i = m_i / m_{k-1}``, and ``z = y_k``.
    """
    k = p.nvars - 1
    N = k
    lead = m[-1]
    xs = [MultiPoly.var(N, i) for i in range(k - 1)]
    lin = MultiPoly.zero(N)
    for mi, xi in zip(m[:-1], xs):
        if mi:
            lin = lin + xi * GaussQ(Fraction(mi, lead))
    return p.compose(xs + [lin, MultiPoly.var(N, N - 1)])


def tower_divisor(m: Sequence[int], nvars: int) -> MultiPoly:
    """``z^{m_{k-1}} prod_{m_i<0} X_i^{-m_i} - prod_{m_i>0} X_i^{m_i}``.

    Here ``X_i = e_{i+1}``: the variable ``y_{i+1}`` for ``i <= k-3`` and, for ``i = k-2``,
    the linear form that replaced ``y_{k-1}``. Variables are ``(x, y_1, ..., y_{k-2}, z)``.
    """
    k = nvars
    lead = m[-1]
    X = [MultiPoly.var(nvars, i + 1) for i in range(k - 2)]
    lin = MultiPoly.zero(nvars)
    for i, mi in enumerate(m[:-1]):
        if mi:
            lin = lin + MultiPoly.var(nvars, i) * GaussQ(Fraction(mi, lead))
    X.append(lin)
    neg = MultiPoly.var(nvars, nvars - 1) ** lead
    pos = MultiPoly.const(nvars, 1, EXACT)
    for mi, Xi in zip(m[:-1], X):
        if mi < 0:
            neg = neg * Xi ** (-mi)
        elif mi > 0:
            pos = pos * Xi ** mi
    return neg - pos


def _divisor_degrees(m: Sequence[int]) -> tuple:
    """``(deg_z, total degree)`` of :func:`tower_divisor` without building it."""
    lead = m[-1]
    neg = sum(-v for v in m[:-1] if v < 0)
    pos = sum(v for v in m[:-1] if v > 0)
    return lead, max(lead + neg, pos)


# Probing happens in F_P with P = 1 mod 4, where i maps to a square root of -1. This is a
# ring map from Q(i) (away from denominators divisible by P), so a nonzero image proves that
# the specialised polynomial is not identically zero.
_P = 1_000_000_009
_I = pow(next(g for g in range(2, 100) if pow(g, (_P - 1) // 2, _P) == _P - 1), (_P - 1) // 4, _P)
_PROBE = (3, -5, 7, 11, -13, 17, 19, -23)


def _mod(c) -> int | None:
    c = c if isinstance(c, GaussQ) else GaussQ(c)
    out = 0
    for part, unit in ((c.re, 1), (c.im, _I)):
        if part:
            if part.denominator % _P == 0:
                return None
            out += part.numerator * pow(part.denominator, -1, _P) * unit
    return out % _P


def _nonzero_on_hyperplane(p: MultiPoly, m: Sequence[int]) -> bool:
    k = p.nvars - 1
    lead_inv = pow(m[-1], -1, _P)
    xs = [_PROBE[i] % _P for i in range(k - 1)]
    pt = xs + [sum(mi * x for mi, x in zip(m[:-1], xs)) * lead_inv % _P, (_PROBE[k - 1] + 2) % _P]
    total = 0
    for e, c in p.terms.items():
        cm = _mod(c)
        if cm is None:
            return False
        term = cm
        for v, ev in zip(pt, e):
            if ev:
                term = term * pow(v, ev, _P) % _P
        total += term
    return total % _P != 0


def bad_tuples_tower(t: ExpTower, height: int | None = None) -> list:
    """Tuples ``m`` with ``m_{k-1} e_{k-1}(a) = sum m_i e_i(a)`` compatible with ``p``."""
    _require_exact(t.p)
    if t.k < 2:
        raise NotApplicableError("tower tuples need k >= 2")
    H = t.p.total_degree() if height is None else height
    dz, dtot = t.p.degree_in(t.k), t.p.total_degree()
    found = []
    for m in tower_tuples(t.k, H):
        sz, sdeg = _divisor_degrees(m)
        # specialising raises neither degree, so s can only divide a zero g here
        if (sz > dz or sdeg > dtot) and _nonzero_on_hyperplane(t.p, m):
            continue
        g = specialize_tower(t.p, m)
        if not g.is_zero():
            if g.degree_in(t.k - 1) < sz or g.total_degree() < sdeg:
                continue
            s = tower_divisor(m, t.k)
            if s.is_zero() or not divide_exact(g, s)[1].is_zero():
                continue
        form = tuple(Fraction(-v) for v in m[:-1]) + (Fraction(m[-1]),)
        found.append(BadRelation(THREE_ITER_TUPLE, tuple(m), tower_divisor(m, t.k), g, H, form))
    return found


# -- multiplicative independence -------------------------------------------------------


@dataclass
class IndependenceVerdict:
    independent: bool
    relation: tuple | None = None
    primes: tuple = ()

    def to_json(self):
        return {"independent": self.independent,
                "relation": list(self.relation) if self.relation else None}


def exponent_matrix(constants: Sequence[Fraction]):
    """Rows: prime exponent vectors of ``|c_i|`` (numerator minus denominator)."""
    facts = []
    for c in constants:
        f = dict(sympy.factorint(abs(c.numerator)))
        for pr, e in sympy.factorint(c.denominator).items():
            f[pr] = f.get(pr, 0) - e
        f.pop(1, None)
        facts.append(f)
    primes = tuple(sorted(set().union(*facts))) if facts else ()
    return [[f.get(pr, 0) for pr in primes] for f in facts], primes


def multiplicative_independence_check(constants: Sequence) -> IndependenceVerdict:
    """Independent iff no nonzero integer ``m`` has ``prod c_i^{m_i} = 1``.

    Signs are not rank columns: ``-1`` is torsion, so a kernel vector of the prime matrix
    whose sign product is ``-1`` is doubled instead.
    """
    cs = [Fraction(c) for c in constants]
    if any(c == 0 for c in cs):
        raise InputError("constants must be nonzero")
    if not cs:
        return IndependenceVerdict(True)
    rows, primes = exponent_matrix(cs)
    A = sympy.Matrix(len(cs), len(primes), lambda i, j: rows[i][j]) if primes else \
        sympy.zeros(len(cs), 0)
    kernel = A.T.nullspace() if primes else [sympy.Matrix([int(i == 0) for i in range(len(cs))])]
    if not kernel:
        return IndependenceVerdict(True, None, primes)
    v = kernel[0]
    den = reduce(sympy.ilcm, [sympy.fraction(e)[1] for e in v], 1)
    ints = [int(e * den) for e in v]
    g = reduce(math.gcd, ints)
    ints = [e // g for e in ints]
    odd = sum(e for e, c in zip(ints, cs) if c < 0) % 2
    if odd:
        ints = [2 * e for e in ints]
    first = next(e for e in ints if e)
    if first < 0:
        ints = [-e for e in ints]
    return IndependenceVerdict(False, tuple(ints), primes)


def power_product(constants: Sequence, m: Sequence[int]) -> Fraction:
    out = Fraction(1)
    for c, e in zip(constants, m):
        out *= Fraction(c) ** e
    return out


def constant_terms(s: MasserSystem) -> list:
    """``f_i(0)`` for polynomial right-hand sides with rational constant terms, else None."""
    out = []
    for r in s.rhs:
        P = getattr(r, "P", None)
        if P is None or P.mode != EXACT:
            return None
        c = P.constant_term()
        if not c.is_real():
            return None
        out.append(c.re)
    return out


# -- integer relations --------------------------------------------------------------------


@dataclass
class RelationCandidate:
    m: tuple
    residual: float

    def to_json(self):
        return {"m": list(self.m), "residual": self.residual}


def _normalise_sign(m):
    first = next((v for v in m if v), 0)
    return tuple(-v for v in m) if first < 0 else tuple(m)


def find_integer_relation(vector, H: int = 10, digits: int = 30) -> RelationCandidate | None:
    """Smallest integer ``m`` (entries ``<= H``) with ``m . vector ~ 0`` over C.

    Lattice reduction on rows ``[e_j | W Re v_j | W Im v_j]`` with ``W = 10^(digits-2)``;
    candidates must satisfy ``|m.v| < 10^(-digits/2) |m| |v|``.
    """
    with mpmath.workdps(digits + 10):
        v = [mpmath.mpc(z) if not isinstance(z, mpmath.mpc) else z for z in vector]
        n = len(v)
        if n < 2:
            return None
        norm_v = mpmath.sqrt(sum(abs(z) ** 2 for z in v))
        if norm_v == 0:
            return RelationCandidate((1,) + (0,) * (n - 1), 0.0)
        scale = max(abs(z) for z in v)
        W = mpmath.mpf(10) ** (digits - 2)
        cols_re = [int(mpmath.nint(W * z.real / scale)) for z in v]
        cols_im = [int(mpmath.nint(W * z.imag / scale)) for z in v]
        extra = [c for c in (cols_re, cols_im) if any(c)]
        rows = [[int(i == j) for j in range(n)] + [c[i] for c in extra] for i in range(n)]
        reduced = DomainMatrix([[sympy.ZZ(e) for e in row] for row in rows],
                               (n, n + len(extra)), sympy.ZZ).lll().to_Matrix()
        tol = mpmath.mpf(10) ** (-digits / 2)
        best = None
        for i in range(reduced.rows):
            m = [int(reduced[i, j]) for j in range(n)]
            if not any(m) or max(abs(e) for e in m) > H:
                continue
            res = abs(mpmath.fsum(mi * zi for mi, zi in zip(m, v)))
            norm_m = math.sqrt(sum(e * e for e in m))
            if res < tol * norm_m * norm_v:
                key = (norm_m, _normalise_sign(m))
                if best is None or key < best[0]:
                    best = (key, RelationCandidate(_normalise_sign(m), float(res)))
        return best[1] if best else None


@dataclass
class RelationDiagnostic:
    vector: list
    H: int
    digits: int
    linear: RelationCandidate | None = None
    multiplicative: RelationCandidate | None = None
    flags: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "candidate" if (self.linear or self.multiplicative) else "none-found"

    def to_json(self):
        out = {"verdict": self.verdict, "H": self.H, "digits": self.digits,
               "vector": [[float(mpmath.re(z)), float(mpmath.im(z))] for z in self.vector],
               "note": "heuristic: no relation found is evidence, not proof"}
        if self.linear:
            out["linear"] = self.linear.to_json()
        if self.multiplicative:
            out["multiplicative"] = self.multiplicative.to_json()
        if self.flags:
            out["flags"] = list(self.flags)
        return out


def diagnose_values(values, H: int = 10, digits: int = 30) -> RelationDiagnostic:
    """Linear relations among ``values`` and among ``values + (2 pi i)``."""
    with mpmath.workdps(digits + 10):
        vals = [mpmath.mpc(z) for z in values]
        diag = RelationDiagnostic(vals, H, digits)
        diag.linear = find_integer_relation(vals, H, digits)
        mult = find_integer_relation(vals + [2j * mpmath.pi], H, digits)
        # a relation not involving 2 pi i is already a linear one
        if mult is not None and mult.m[-1] != 0:
            diag.multiplicative = mult
        return diag


def diagnose_relations(root, tower: ExpTower, H: int = 10, digits: int = 30) -> RelationDiagnostic:
    """Recompute ``(a, e_1(a), ..., e_k(a))`` at ``digits`` digits and search for relations.

    Relations are sought among ``(a, e_1, ..., e_{k-1})``: ``e_k`` is tied to these by ``p``
    itself, so including it would report the defining equation (e.g. ``e_3 = a``).
    Multiplicative relations are tested through the logarithms together with ``2 pi i``.
    """
    from .verify import mp_polish

    x = np.asarray(getattr(root, "solution", root), dtype=complex)[: tower.k]
    base = from_tower(tower)
    flags = []
    try:
        chain = mp_polish(base, x, digits)
    except (ZeroDivisionError, ValueError):
        chain = [mpmath.mpc(v) for v in x]
        flags.append("polish-failed")
    with mpmath.workdps(digits + 10):
        top = mpmath.exp(chain[-1])
        if not mpmath.isfinite(top):
            flags.append("overflow")
        diag = diagnose_values(chain, H, digits)
        diag.vector = list(chain) + [top]
    diag.flags.extend(flags)
    if hasattr(root, "relation_report"):
        root.relation_report = diag.to_json()
    return diag


# -- planning ----------------------------------------------------------------------------


def _normalise_form(form):
    first = next(c for c in form if c)
    return tuple(c / first for c in form)


def rhs_degree(s: MasserSystem, i: int, q) -> Fraction:
    r = s.rhs[i]
    if isinstance(r, BranchRhs):
        return estimate_branch_degree(r, 2j * math.pi * np.asarray(q, dtype=float))
    return Fraction(r.P.total_degree())


def degree_form(s: MasserSystem, q) -> tuple:
    """``d_0 x_1 - d_1 x_0`` with ``d_i`` the growth degree of right-hand side ``i``."""
    d0, d1 = rhs_degree(s, 0, q), rhs_degree(s, 1, q)
    return (-d1, d0) + (Fraction(0),) * (s.n - 2)


@dataclass
class SolvePlan:
    system: MasserSystem
    excluded: list

    @property
    def forms(self):
        return [rel.form for rel in self.excluded]


def generic_solve_plan(t: ExpTower, height: int | None = None) -> SolvePlan:
    """Chain system of ``t`` with every bad relation (and the degree form) excluded."""
    from .seedcert import find_seed_vector

    _require_exact(t.p)
    base = from_tower(t)
    rels = enumerate_bad_relations(t, height)
    if t.k >= 2:
        q = find_seed_vector(base)
        form = degree_form(base, q)
        if any(form):
            rels.append(BadRelation(TD_ONE, tuple(form[:2]), None, None, 0, form))
    seen, forms, kept = set(), [], []
    for rel in rels:
        key = _normalise_form(rel.form)
        if key in seen:
            continue
        seen.add(key)
        forms.append(rel.form)
        kept.append(rel)
    system = augment_exclude_relations(base, forms)
    return SolvePlan(system, kept)


def enumerate_bad_relations(t: ExpTower, height: int | None = None) -> list:
    """Run whichever enumerator fits the depth of ``t`` (none for ``k = 1``)."""
    _require_exact(t.p)
    rels: list = []
    p = t.p
    if t.k == 2:
        if not p.depends_on(1):
            two = MultiPoly(2, {(e[0], e[2]): c for e, c in p.terms.items()}, EXACT)
            if two.depends_on(0) and two.depends_on(1):
                rels += bad_rationals_two_var(two)
        elif p.depends_on(2):
            rels += bad_rationals_three_var(p, height)
    elif t.k >= 3:
        rels += bad_tuples_tower(t, height)
    return rels


def exclusion_margins(root, forms) -> list:
    """``|l_j(x)|`` for each excluded linear form at a root."""
    x = np.asarray(getattr(root, "solution", root), dtype=complex)
    return [abs(sum(complex(float(c)) * x[i] for i, c in enumerate(f))) for f in forms]

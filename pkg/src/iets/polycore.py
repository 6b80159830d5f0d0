"""Sparse multivariate polynomials over Gaussian rationals or floating complex numbers.

Two coefficient modes exist:

* ``"exact"``: coefficients are :class:`GaussQ` (pairs of :class:`fractions.Fraction`),
* ``"float"``: coefficients are Python ``complex``.

A :class:`MultiPoly` is immutable. Terms are kept in a dict keyed by exponent tuples;
every listing of terms uses graded-lexicographic order (largest first) so output and
division are reproducible.
"""

from __future__ import annotations

import ast
import cmath
import math
from fractions import Fraction
from numbers import Rational
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .errors import InputError, ModeError, UnsupportedDivisorError

EXACT = "exact"
FLOAT = "float"


class GaussQ:
    """Gaussian rational ``re + im*i`` with exact Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def coerce(cls, value) -> "GaussQ":
        if isinstance(value, GaussQ):
            return value
        if isinstance(value, (int, Rational)):
            return cls(value)
        if isinstance(value, str):
            return cls(Fraction(value))
        raise ModeError(f"cannot use {value!r} as an exact coefficient")

    def __add__(self, other):
        other = _as_gauss(other)
        if other is NotImplemented:
            return other
        return GaussQ(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_gauss(other)
        if other is NotImplemented:
            return other
        return GaussQ(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _as_gauss(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = _as_gauss(other)
        if other is NotImplemented:
            return other
        return GaussQ(self.re * other.re - self.im * other.im,
                      self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_gauss(other)
        if other is NotImplemented:
            return other
        den = other.re * other.re + other.im * other.im
        if den == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return GaussQ((self.re * other.re + self.im * other.im) / den,
                      (self.im * other.re - self.re * other.im) / den)

    def __rtruediv__(self, other):
        other = _as_gauss(other)
        if other is NotImplemented:
            return other
        return other / self

    def __neg__(self):
        return GaussQ(-self.re, -self.im)

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return GaussQ(1) / (self ** -n)
        result, base = GaussQ(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        other = _as_gauss(other)
        if other is NotImplemented:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def is_real(self) -> bool:
        return self.im == 0

    def __repr__(self):
        return f"GaussQ({str(self.re)!r}, {str(self.im)!r})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}*I"
        return f"({self.re}{'+' if self.im > 0 else '-'}{abs(self.im)}*I)"


def _as_gauss(value):
    if isinstance(value, GaussQ):
        return value
    if isinstance(value, (int, Rational)):
        return GaussQ(value)
    return NotImplemented


def _coerce_coeff(value, mode):
    if mode == EXACT:
        return GaussQ.coerce(value)
    c = complex(value)
    if not (math.isfinite(c.real) and math.isfinite(c.imag)):
        raise InputError(f"non-finite coefficient {value!r}")
    return c


def _infer_mode(values) -> str:
    for v in values:
        if isinstance(v, (float, complex)) and not isinstance(v, bool):
            return FLOAT
    return EXACT


def grlex_key(exps: tuple) -> tuple:
    return (sum(exps), exps)


class MultiPoly:
    """Immutable sparse polynomial in ``nvars`` variables."""

    __slots__ = ("nvars", "mode", "_terms", "_tree")

    def __init__(self, nvars: int, terms: Mapping | Iterable | None = None, mode: str | None = None):
        if nvars < 0:
            raise InputError("nvars must be nonnegative")
        items = list(terms.items()) if isinstance(terms, Mapping) else list(terms or ())
        if mode is None:
            mode = _infer_mode(c for _, c in items)
        if mode not in (EXACT, FLOAT):
            raise InputError(f"unknown coefficient mode {mode!r}")
        acc: dict = {}
        zero = GaussQ(0) if mode == EXACT else 0j
        for exps, c in items:
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars:
                raise InputError(f"exponent vector {exps} does not have length {nvars}")
            if any(e < 0 for e in exps):
                raise InputError(f"negative exponent in {exps}")
            acc[exps] = acc.get(exps, zero) + _coerce_coeff(c, mode)
        self.nvars = nvars
        self.mode = mode
        self._terms = {e: c for e, c in acc.items() if c != 0}
        self._tree = None

    # -- constructors ---------------------------------------------------------

    @classmethod
    def _raw(cls, nvars, terms, mode):
        obj = cls.__new__(cls)
        obj.nvars = nvars
        obj.mode = mode
        obj._terms = {e: c for e, c in terms.items() if c != 0}
        obj._tree = None
        return obj

    @classmethod
    def zero(cls, nvars, mode=EXACT):
        return cls._raw(nvars, {}, mode)

    @classmethod
    def const(cls, nvars, c, mode=None):
        return cls(nvars, {(0,) * nvars: c}, mode)

    @classmethod
    def var(cls, nvars, i, mode=EXACT):
        if not 0 <= i < nvars:
            raise InputError(f"variable index {i} out of range for {nvars} variables")
        exps = [0] * nvars
        exps[i] = 1
        return cls(nvars, {tuple(exps): 1}, mode)

    @classmethod
    def from_expr(cls, expr: str, names: Sequence[str], mode: str = EXACT) -> "MultiPoly":
        """Parse ``expr`` (Python syntax, ``^`` allowed for powers, ``I`` for i)."""
        try:
            tree = ast.parse(expr.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise InputError(f"cannot parse polynomial {expr!r}: {exc}") from None
        env = {name: cls.var(len(names), i, mode) for i, name in enumerate(names)}
        out = _eval_ast(tree.body, env, len(names), mode)
        return out if isinstance(out, MultiPoly) else cls.const(len(names), out, mode)

    # -- basic queries --------------------------------------------------------

    @property
    def terms(self) -> Mapping:
        return MappingProxyType(self._terms)

    def sorted_terms(self):
        return sorted(self._terms.items(), key=lambda t: grlex_key(t[0]), reverse=True)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    def total_degree(self) -> int:
        if not self._terms:
            raise InputError("degree of the zero polynomial is undefined")
        return max(sum(e) for e in self._terms)

    def degree_in(self, var: int) -> int:
        if not self._terms:
            raise InputError("degree of the zero polynomial is undefined")
        return max(e[var] for e in self._terms)

    def depends_on(self, var: int) -> bool:
        return any(e[var] > 0 for e in self._terms)

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self._terms}) <= 1

    def leading_term(self):
        if not self._terms:
            raise InputError("zero polynomial has no leading term")
        exps = max(self._terms, key=grlex_key)
        return exps, self._terms[exps]

    def constant_term(self):
        zero = GaussQ(0) if self.mode == EXACT else 0j
        return self._terms.get((0,) * self.nvars, zero)

    # -- arithmetic -----------------------------------------------------------

    def _lift(self, other):
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise InputError(f"variable count mismatch: {self.nvars} vs {other.nvars}")
            return other
        mode = self.mode
        if isinstance(other, (float, complex)) and not isinstance(other, bool):
            mode = FLOAT
        elif not isinstance(other, (int, Rational, GaussQ)):
            return NotImplemented
        return MultiPoly.const(self.nvars, other, mode)

    @staticmethod
    def _common_mode(a, b):
        return EXACT if a.mode == EXACT and b.mode == EXACT else FLOAT

    def _coeffs_in(self, mode):
        if mode == self.mode:
            return self._terms
        return {e: complex(c) for e, c in self._terms.items()}

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        mode = self._common_mode(self, other)
        acc = dict(self._coeffs_in(mode))
        for e, c in other._coeffs_in(mode).items():
            acc[e] = acc[e] + c if e in acc else c
        return MultiPoly._raw(self.nvars, acc, mode)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly._raw(self.nvars, {e: -c for e, c in self._terms.items()}, self.mode)

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        mode = self._common_mode(self, other)
        a, b = self._coeffs_in(mode), other._coeffs_in(mode)
        acc: dict = {}
        for ea, ca in a.items():
            for eb, cb in b.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                acc[e] = acc[e] + ca * cb if e in acc else ca * cb
        return MultiPoly._raw(self.nvars, acc, mode)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise InputError("polynomial powers must be nonnegative integers")
        result = MultiPoly.const(self.nvars, 1, self.mode)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c):
        return self * c

    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                return False
            if self.mode != other.mode:
                return self._coeffs_in(FLOAT) == other._coeffs_in(FLOAT)
            return self._terms == other._terms
        lifted = self._lift(other)
        if lifted is NotImplemented:
            return NotImplemented
        return self == lifted

    def __hash__(self):
        return hash((self.nvars, frozenset(self._coeffs_in(FLOAT).items())))

    def to_float(self) -> "MultiPoly":
        return MultiPoly._raw(self.nvars, self._coeffs_in(FLOAT), FLOAT)

    # -- structure ------------------------------------------------------------

    def coeffs_in(self, var: int) -> dict:
        """Split by powers of ``var``: ``{j: C_j}`` with ``p = sum C_j * x_var^j``."""
        out: dict = {}
        for e, c in self._terms.items():
            rest = e[:var] + (0,) + e[var + 1:]
            out.setdefault(e[var], {})[rest] = c
        return {j: MultiPoly._raw(self.nvars, t, self.mode) for j, t in out.items()}

    def embed(self, nvars: int, index_map: Sequence[int]) -> "MultiPoly":
        """Rename variable ``i`` to ``index_map[i]`` inside an ``nvars``-variable ring."""
        terms = {}
        for e, c in self._terms.items():
            new = [0] * nvars
            for i, k in enumerate(e):
                if k:
                    new[index_map[i]] += k
            terms[tuple(new)] = c
        return MultiPoly._raw(nvars, terms, self.mode)

    def compose(self, images: Sequence["MultiPoly"]) -> "MultiPoly":
        """Substitute ``x_i := images[i]``; all images share one variable count."""
        if len(images) != self.nvars:
            raise InputError("need one image per variable")
        if not images:
            return self
        m = images[0].nvars
        mode = self.mode
        if any(im.mode == FLOAT for im in images):
            mode = FLOAT
        powers = [{0: MultiPoly.const(m, 1, mode)} for _ in images]

        def power(i, k):
            if k not in powers[i]:
                powers[i][k] = power(i, k - 1) * images[i]
            return powers[i][k]

        result = MultiPoly.zero(m, mode)
        for e, c in self.sorted_terms():
            term = MultiPoly.const(m, c, mode)
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            result = result + term
        return result

    def abs_bound(self, radii: Sequence[float]) -> float:
        """``sum |c| * prod radii_i^e_i``: bounds |p| on the polydisc with those radii."""
        total = 0.0
        for e, c in self._terms.items():
            t = abs(complex(c))
            for r, k in zip(radii, e):
                if k:
                    t *= r ** k
            total += t
        return total

    # -- evaluation -----------------------------------------------------------

    def _horner_tree(self):
        if self._tree is None:
            self._tree = _build_tree(
                [(e, complex(c)) for e, c in self._terms.items()], 0, self.nvars)
        return self._tree

    def evaluate(self, point, coerce=None):
        """Evaluate at ``point`` by nested Horner accumulation.

        Works elementwise on numpy arrays. ``coerce`` maps each stored exact or float
        coefficient to the arithmetic type (e.g. an mpmath converter).
        """
        if len(point) != self.nvars:
            raise InputError(f"point has {len(point)} coordinates, polynomial has {self.nvars} variables")
        if coerce is None:
            return _eval_tree(self._horner_tree(), point, 0)
        tree = _build_tree([(e, coerce(c)) for e, c in self._terms.items()], 0, self.nvars)
        return _eval_tree(tree, point, 0)

    __call__ = evaluate

    # -- text / json ----------------------------------------------------------

    def format(self, names: Sequence[str] | None = None) -> str:
        if names is None:
            names = [f"x{i}" for i in range(self.nvars)]
        if not self._terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(n if k == 1 else f"{n}^{k}" for n, k in zip(names, e) if k)
            cs = str(c) if self.mode == EXACT else repr(c)
            if not mono:
                parts.append(cs)
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{cs}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self):
        return f"MultiPoly({self.nvars}, {self.format()!r}, mode={self.mode!r})"

    def to_json(self) -> dict:
        terms = []
        for e, c in self.sorted_terms():
            if self.mode == EXACT:
                re, im = _frac_str(c.re), _frac_str(c.im)
            else:
                re, im = c.real, c.imag
            terms.append({"exps": list(e), "re": re, "im": im})
        return {"nvars": self.nvars, "mode": self.mode, "terms": terms}

    @classmethod
    def from_json(cls, data: Mapping) -> "MultiPoly":
        try:
            nvars = int(data["nvars"])
            mode = data.get("mode", EXACT)
            terms = []
            for t in data["terms"]:
                if mode == EXACT:
                    c = GaussQ(Fraction(str(t.get("re", "0"))), Fraction(str(t.get("im", "0"))))
                else:
                    c = complex(float(t.get("re", 0.0)), float(t.get("im", 0.0)))
                terms.append((tuple(t["exps"]), c))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise InputError(f"malformed polynomial JSON: {exc}") from None
        return cls(nvars, terms, mode)


def _frac_str(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def _build_tree(terms, var, nvars):
    if var == nvars:
        return sum(c for _, c in terms)
    groups: dict = {}
    for e, c in terms:
        groups.setdefault(e[var], []).append((e, c))
    return sorted(((k, _build_tree(g, var + 1, nvars)) for k, g in groups.items()),
                  key=lambda kv: -kv[0])


def _eval_tree(tree, point, var):
    if not isinstance(tree, list):
        return tree
    x = point[var]
    acc = 0
    prev = None
    for k, sub in tree:
        if prev is not None:
            acc = acc * _ipow(x, prev - k)
        acc = acc + _eval_tree(sub, point, var + 1)
        prev = k
    if prev:
        acc = acc * _ipow(x, prev)
    return acc


def _ipow(x, k):
    return x if k == 1 else x ** k


_BINOPS = {ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b,
           ast.Mult: lambda a, b: a * b}


def _eval_ast(node, env, nvars, mode):
    if isinstance(node, ast.BinOp):
        left = _eval_ast(node.left, env, nvars, mode)
        right = _eval_ast(node.right, env, nvars, mode)
        if type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](left, right)
        if isinstance(node.op, ast.Pow):
            if isinstance(right, MultiPoly):
                raise InputError("exponents must be integer literals")
            if isinstance(right, Fraction) and right.denominator == 1:
                right = int(right)
            if not isinstance(right, int):
                raise InputError("exponents must be integer literals")
            return left ** right
        if isinstance(node.op, ast.Div):
            if isinstance(right, MultiPoly):
                if right.total_degree() != 0:
                    raise InputError("division by a nonconstant polynomial")
                right = right.constant_term()
            if mode == EXACT:
                inv = GaussQ(1) / GaussQ.coerce(right) if not isinstance(right, GaussQ) else GaussQ(1) / right
            else:
                inv = 1 / complex(right)
            return left * inv
        raise InputError(f"unsupported operator {type(node.op).__name__}")
    if isinstance(node, ast.UnaryOp):
        val = _eval_ast(node.operand, env, nvars, mode)
        if isinstance(node.op, ast.USub):
            return -val
        if isinstance(node.op, ast.UAdd):
            return val
        raise InputError("unsupported unary operator")
    if isinstance(node, ast.Name):
        if node.id == "I":
            return GaussQ(0, 1) if mode == EXACT else 1j
        if node.id not in env:
            raise InputError(f"unknown variable {node.id!r}")
        return env[node.id]
    if isinstance(node, ast.Constant):
        v = node.value
        if isinstance(v, bool) or not isinstance(v, (int, float, complex)):
            raise InputError(f"unsupported literal {v!r}")
        if mode == EXACT:
            if isinstance(v, complex):
                raise ModeError("complex literals need float mode; use I in exact mode")
            return Fraction(v) if isinstance(v, int) else Fraction(str(v))
        return v
    raise InputError(f"unsupported syntax {type(node).__name__}")


# -- module-level operations --------------------------------------------------

def evaluate(p: MultiPoly, point) -> complex:
    return p.evaluate(point)


def partial_derivative(p: MultiPoly, var: int) -> MultiPoly:
    if not 0 <= var < p.nvars:
        raise InputError(f"variable index {var} out of range")
    terms = {}
    for e, c in p.terms.items():
        k = e[var]
        if k:
            terms[e[:var] + (k - 1,) + e[var + 1:]] = c * k
    return MultiPoly._raw(p.nvars, terms, p.mode)


def homogeneous_parts(p: MultiPoly) -> list:
    """Decompose into ``[(d, Q_d), ...]`` sorted by decreasing degree."""
    if p.is_zero():
        raise InputError("homogeneous decomposition of the zero polynomial")
    groups: dict = {}
    for e, c in p.terms.items():
        groups.setdefault(sum(e), {})[e] = c
    return [(d, MultiPoly._raw(p.nvars, groups[d], p.mode)) for d in sorted(groups, reverse=True)]


def leading_form(p: MultiPoly) -> MultiPoly:
    return homogeneous_parts(p)[0][1]


def divide_monic_in_var(p: MultiPoly, d: MultiPoly, var: int):
    """Return ``(q, r)`` with ``p = d*q + r`` and ``deg_var(r) < deg_var(d)``.

    ``d`` must have leading coefficient ``+1`` or ``-1`` in ``var``.
    """
    if p.mode != EXACT or d.mode != EXACT:
        raise ModeError("exact division needs exact coefficients")
    if p.nvars != d.nvars:
        raise InputError("variable count mismatch")
    if d.is_zero():
        raise UnsupportedDivisorError("division by zero polynomial")
    D = d.degree_in(var)
    lc = d.coeffs_in(var)[D]
    if lc.total_degree() != 0 or lc.constant_term() not in (GaussQ(1), GaussQ(-1)):
        raise UnsupportedDivisorError(f"divisor is not monic in variable {var}")
    sign = lc.constant_term()
    q = MultiPoly.zero(p.nvars)
    r = p
    while not r.is_zero():
        e = r.degree_in(var)
        if e < D:
            break
        top = r.coeffs_in(var)[e]
        shift = [0] * p.nvars
        shift[var] = e - D
        step = top * MultiPoly(p.nvars, {tuple(shift): sign})
        q = q + step
        r = r - step * d
    return q, r


def divide_exact(p: MultiPoly, d: MultiPoly):
    """Single-divisor division under graded-lex order: ``p = d*q + r``.

    The remainder is the normal form of ``p`` modulo the principal ideal ``(d)``, so it is
    zero exactly when ``d`` divides ``p``. Works for any nonzero divisor.
    """
    if p.mode != EXACT or d.mode != EXACT:
        raise ModeError("exact division needs exact coefficients")
    if d.is_zero():
        raise UnsupportedDivisorError("division by zero polynomial")
    lexp, lc = d.leading_term()
    n = p.nvars
    work = dict(p.terms)
    quot: dict = {}
    rem: dict = {}
    d_terms = list(d.terms.items())
    while work:
        e = max(work, key=grlex_key)
        c = work[e]
        if all(a >= b for a, b in zip(e, lexp)):
            shift = tuple(a - b for a, b in zip(e, lexp))
            f = c / lc
            quot[shift] = quot.get(shift, GaussQ(0)) + f
            for de, dc in d_terms:
                k = tuple(a + b for a, b in zip(de, shift))
                v = work.get(k, GaussQ(0)) - f * dc
                if v:
                    work[k] = v
                else:
                    work.pop(k, None)
        else:
            rem[e] = c
            del work[e]
    return MultiPoly._raw(n, quot, EXACT), MultiPoly._raw(n, rem, EXACT)


def divides(d: MultiPoly, p: MultiPoly) -> bool:
    return divide_exact(p, d)[1].is_zero()


def univariate_roots(coeffs: Sequence[complex]):
    """Roots of ``sum coeffs[j] u^j`` via numpy's companion matrix."""
    import numpy as np

    c = list(coeffs)
    while c and c[-1] == 0:
        c.pop()
    if len(c) <= 1:
        return np.array([], dtype=complex)
    return np.roots(c[::-1]).astype(complex)


def as_exact(value) -> GaussQ:
    """Convert a float/complex with a short decimal form to an exact Gaussian rational."""
    if isinstance(value, GaussQ):
        return value
    if isinstance(value, (int, Rational)):
        return GaussQ(value)
    z = complex(value)
    if not (cmath.isfinite(z)):
        raise InputError("non-finite value")
    return GaussQ(Fraction(repr(z.real)), Fraction(repr(z.imag)))

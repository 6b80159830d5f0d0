"""Masser systems ``exp(x_i) = f_i(x)`` and the transformations applied to them.

Right-hand sides come in three flavours: polynomials, quotients of polynomials, and
branches of algebraic functions (a root ``u`` of ``q(x, u) = 0`` tracked by continuation).
"""

from __future__ import annotations

import cmath
import copy
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .errors import (BranchAmbiguityWarning, BranchUndefinedError, DegenerateTowerError,
                     InputError)
from .exptower import ExpTower, is_degenerate
from .polycore import (EXACT, GaussQ, MultiPoly, leading_form, partial_derivative,
                       univariate_roots)

AMBIGUITY_GAP = 1e-9


def mp_coerce(c):
    if isinstance(c, GaussQ):
        return mpmath.mpc(mpmath.mpf(c.re.numerator) / c.re.denominator,
                          mpmath.mpf(c.im.numerator) / c.im.denominator)
    return mpmath.mpc(c)


def _mp_eval(p: MultiPoly, y):
    return p.evaluate(y, coerce=mp_coerce)


def _leading_value_exact(p: MultiPoly, q: Sequence[int]):
    lead = leading_form(p)
    if p.mode == EXACT:
        return lead.evaluate([GaussQ(v) for v in q], coerce=lambda c: c)
    return lead.evaluate([complex(v) for v in q])


def _nonvanishing(p: MultiPoly, q) -> bool:
    v = _leading_value_exact(p, q)
    if p.mode == EXACT:
        return bool(v)
    scale = leading_form(p).abs_bound([abs(x) for x in q])
    return abs(v) > 1e-12 * max(scale, 1e-300)


@dataclass
class PolyRhs:
    P: MultiPoly
    kind = "poly"

    def __post_init__(self):
        if self.P.is_zero():
            raise InputError("polynomial right-hand side must be nonzero")
        n = self.P.nvars
        self._grad = [partial_derivative(self.P, h) for h in range(n)]
        self._hess = [[partial_derivative(g, l) for l in range(n)] for g in self._grad]

    @property
    def nvars(self):
        return self.P.nvars

    def value(self, y) -> complex:
        return complex(self.P.evaluate(y))

    def value_and_gradient(self, y):
        return self.value(y), np.array([complex(g.evaluate(y)) for g in self._grad])

    def second_bound(self, center, radius: float) -> float:
        """Upper bound of ``sum_{h,l} |d^2 P / dx_h dx_l|`` on the polydisc around center."""
        radii = [abs(c) + radius for c in center]
        return sum(h.abs_bound(radii) for row in self._hess for h in row)

    def leading_ok(self, q) -> bool:
        return _nonvanishing(self.P, q)

    def mp_value_and_gradient(self, y, hint=None):
        return _mp_eval(self.P, y), [_mp_eval(g, y) for g in self._grad]

    def to_json(self):
        return {"kind": "poly", "P": self.P.to_json()}


@dataclass
class RationalRhs:
    num: MultiPoly
    den: MultiPoly
    kind = "rational"

    def __post_init__(self):
        if self.den.is_zero():
            raise InputError("rational right-hand side has zero denominator")
        if self.num.is_zero():
            raise InputError("rational right-hand side must be nonzero")
        if self.num.nvars != self.den.nvars:
            raise InputError("numerator and denominator variable counts differ")
        self._gn = [partial_derivative(self.num, h) for h in range(self.nvars)]
        self._gd = [partial_derivative(self.den, h) for h in range(self.nvars)]

    @property
    def nvars(self):
        return self.num.nvars

    def value(self, y) -> complex:
        return complex(self.num.evaluate(y)) / complex(self.den.evaluate(y))

    def value_and_gradient(self, y):
        n, d = complex(self.num.evaluate(y)), complex(self.den.evaluate(y))
        grad = [(complex(gn.evaluate(y)) * d - n * complex(gd.evaluate(y))) / d ** 2
                for gn, gd in zip(self._gn, self._gd)]
        return n / d, np.array(grad)

    def second_bound(self, center, radius):
        raise InputError("rational right-hand sides must be doubled with rational_to_integral first")

    def leading_ok(self, q) -> bool:
        return _nonvanishing(self.num, q) and _nonvanishing(self.den, q)

    def mp_value_and_gradient(self, y, hint=None):
        n, d = _mp_eval(self.num, y), _mp_eval(self.den, y)
        grad = [(_mp_eval(gn, y) * d - n * _mp_eval(gd, y)) / d ** 2 for gn, gd in zip(self._gn, self._gd)]
        return n / d, grad

    def to_json(self):
        return {"kind": "rational", "num": self.num.to_json(), "den": self.den.to_json()}


def _pick_largest(roots):
    mags = np.abs(roots)
    top = mags.max()
    tied = [r for r, m in zip(roots, mags) if m >= top * (1 - 1e-9)]

    def key(r):
        a = cmath.phase(r)
        return (0 if -math.pi / 2 < a <= math.pi / 2 else 1, a)

    return min(tied, key=key)


@dataclass
class BranchRhs:
    """Algebraic function ``u(x)`` with ``defining(x, u) = 0``; ``u`` is the last variable.

    ``state`` is the last branch value returned. With no state the root of largest modulus
    is taken; afterwards the root nearest to ``state`` (continuation).
    """

    defining: MultiPoly
    branch_degree: Fraction | None = None
    state: complex | None = None
    kind = "branch"

    def __post_init__(self):
        q = self.defining
        if q.nvars < 1:
            raise InputError("branch defining polynomial needs a u variable")
        u = q.nvars - 1
        if q.is_zero() or q.degree_in(u) < 1:
            raise InputError("branch defining polynomial must have degree >= 1 in u")
        if len(q) == 1 and next(iter(q.terms)) == (0,) * u + (1,):
            raise InputError("branch defining polynomial is a constant times u")
        n = u
        self._coeffs = {j: c.embed(n, list(range(n)) + [0]) for j, c in q.coeffs_in(u).items()}
        self._q_x = [partial_derivative(q, h) for h in range(n)]
        self._q_u = partial_derivative(q, u)
        self._q_uu = partial_derivative(self._q_u, u)
        self._q_xu = [partial_derivative(g, u) for g in self._q_x]
        self._q_xx = [[partial_derivative(g, l) for l in range(n)] for g in self._q_x]
        self.ambiguous = False

    @property
    def nvars(self):
        return self.defining.nvars - 1

    @property
    def degree_u(self):
        return self.defining.degree_in(self.nvars)

    def roots(self, y):
        top = max(self._coeffs)
        coeffs = [complex(self._coeffs[j].evaluate(y)) if j in self._coeffs else 0j
                  for j in range(top + 1)]
        if not any(coeffs[1:]):
            raise BranchUndefinedError(f"defining polynomial vanishes identically in u at {list(y)}")
        return univariate_roots(coeffs)

    def value(self, y) -> complex:
        roots = self.roots(y)
        if len(roots) == 0:
            raise BranchUndefinedError(f"no branch value at {list(y)}")
        if self.state is None:
            u = _pick_largest(roots)
        else:
            u = roots[np.argmin(np.abs(roots - self.state))]
        others = roots[np.abs(roots - u) > 0]
        self.ambiguous = len(roots) > 1 and (
            len(others) < len(roots) - 1 or np.min(np.abs(others - u)) < AMBIGUITY_GAP * (1 + abs(u)))
        if self.ambiguous:
            warnings.warn(f"branch ambiguity near u={u}", BranchAmbiguityWarning, stacklevel=2)
        self.state = complex(u)
        return complex(u)

    def _partials(self, y, u):
        pt = list(y) + [u]
        qu = complex(self._q_u.evaluate(pt))
        if qu == 0:
            raise BranchUndefinedError("branch point: dq/du vanishes")
        grad = np.array([-complex(g.evaluate(pt)) / qu for g in self._q_x])
        return pt, qu, grad

    def value_and_gradient(self, y):
        u = self.value(y)
        _, _, grad = self._partials(y, u)
        return u, grad

    def second_partials(self, y, u) -> np.ndarray:
        """Implicit second derivatives ``d^2 u / dx_h dx_l``."""
        pt, qu, g = self._partials(y, u)
        n = self.nvars
        quu = complex(self._q_uu.evaluate(pt))
        qxu = [complex(p.evaluate(pt)) for p in self._q_xu]
        H = np.empty((n, n), dtype=complex)
        for h in range(n):
            for l in range(n):
                qhl = complex(self._q_xx[h][l].evaluate(pt))
                H[h, l] = -(qhl + qxu[h] * g[l] + qxu[l] * g[h] + quu * g[h] * g[l]) / qu
        return H

    def second_bound(self, center, radius: float) -> float:
        """Sampled bound of ``sum |u_hl|`` over the ball, inflated by 1.5."""
        saved = self.state
        center = np.asarray(center, dtype=complex)
        u0 = self.value(center)
        n = self.nvars
        pts = [center]
        for h in range(n):
            for d in (1, -1, 1j, -1j):
                e = np.zeros(n, dtype=complex)
                e[h] = d * radius
                pts.append(center + e)
        for d in (1, -1, 1j, -1j):
            pts.append(center + d * radius * np.ones(n))
        worst = 0.0
        for y in pts:
            self.state = u0
            u = self.value(y)
            worst = max(worst, float(np.abs(self.second_partials(y, u)).sum()))
        self.state = saved
        return 1.5 * worst

    def leading_ok(self, q) -> bool:
        probe = BranchRhs(self.defining)
        try:
            v = probe.value(2j * math.pi * 256 * np.asarray(q, dtype=complex))
        except BranchUndefinedError:
            return False
        return abs(v) > 1e-6

    def mp_value_and_gradient(self, y, hint=None):
        top = max(self._coeffs)
        coeffs = [_mp_eval(self._coeffs[j], y) if j in self._coeffs else mpmath.mpc(0)
                  for j in range(top, -1, -1)]
        while coeffs and coeffs[0] == 0:
            coeffs.pop(0)
        if len(coeffs) < 2:
            raise BranchUndefinedError("defining polynomial vanishes identically in u")
        if len(coeffs) == 2:
            u = -coeffs[1] / coeffs[0]
        else:
            roots = mpmath.polyroots(coeffs, maxsteps=200, extraprec=2 * mpmath.mp.prec)
            ref = hint if hint is not None else self.state
            u = min(roots, key=lambda r: abs(r - ref)) if ref is not None else max(roots, key=abs)
        pt = list(y) + [u]
        qu = _mp_eval(self._q_u, pt)
        return u, [-_mp_eval(g, pt) / qu for g in self._q_x]

    def to_json(self):
        out = {"kind": "branch", "defining": self.defining.to_json()}
        if self.branch_degree is not None:
            out["degree"] = f"{self.branch_degree.numerator}/{self.branch_degree.denominator}"
        return out


RHS_KINDS = {"poly": PolyRhs, "rational": RationalRhs, "branch": BranchRhs}


def rhs_from_json(data):
    try:
        kind = data["kind"]
        if kind == "poly":
            return PolyRhs(MultiPoly.from_json(data["P"]))
        if kind == "rational":
            return RationalRhs(MultiPoly.from_json(data["num"]), MultiPoly.from_json(data["den"]))
        if kind == "branch":
            deg = data.get("degree")
            return BranchRhs(MultiPoly.from_json(data["defining"]),
                             Fraction(deg) if deg is not None else None)
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed right-hand side: {exc}") from None
    raise InputError(f"unknown right-hand side kind {data.get('kind')!r}")


@dataclass
class MasserSystem:
    """``exp(x_i) = rhs[i](x)`` for ``i < n``."""

    n: int
    rhs: list
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.rhs) != self.n:
            raise InputError(f"system has {self.n} variables but {len(self.rhs)} equations")
        for r in self.rhs:
            if r.nvars != self.n:
                raise InputError(f"right-hand side has {r.nvars} variables, system has {self.n}")

    def clone(self) -> "MasserSystem":
        return copy.deepcopy(self)

    def reset_branches(self):
        for r in self.rhs:
            if isinstance(r, BranchRhs):
                r.state = None

    @property
    def has_branches(self):
        return any(isinstance(r, BranchRhs) for r in self.rhs)

    def residuals(self, z) -> list:
        """Relative residuals ``|exp(z_i) - f_i(z)| / max(1, |f_i(z)|)``."""
        out = []
        for zi, r in zip(z, self.rhs):
            f = r.value(z)
            out.append(abs(cmath.exp(zi) - f) / max(1.0, abs(f)))
        return out

    def to_json(self):
        return {"n": self.n, "rhs": [r.to_json() for r in self.rhs], "provenance": self.provenance}

    @classmethod
    def from_json(cls, data):
        try:
            n = int(data["n"])
            rhs = [rhs_from_json(r) for r in data["rhs"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed system JSON: {exc}") from None
        return cls(n, rhs, dict(data.get("provenance", {})))

    @classmethod
    def from_polys(cls, exprs: Sequence[str], names: Sequence[str] | None = None, mode=EXACT):
        n = len(exprs)
        names = names or [f"x{i}" for i in range(n)]
        return cls(n, [PolyRhs(MultiPoly.from_expr(e, names, mode)) for e in exprs])


def from_tower(t: ExpTower) -> MasserSystem:
    """Chain reduction: ``exp(x_j) = x_{j+1}`` for ``j < k-1`` and a branch for ``e_k``.

    Variables ``(x_0, ..., x_{k-1})`` stand for ``(z, e_1(z), ..., e_{k-1}(z))``; the last
    equation reads ``exp(x_{k-1}) = u`` with ``p(x_0, ..., x_{k-1}, u) = 0``.
    """
    flag, witness = is_degenerate(t)
    if flag:
        raise DegenerateTowerError("tower polynomial has the exceptional form g(x)*monomial", witness)
    k = t.k
    rhs = [PolyRhs(MultiPoly.var(k, j + 1, t.p.mode)) for j in range(k - 1)]
    rhs.append(BranchRhs(t.p))
    return MasserSystem(k, rhs, {"tower": t.to_json(), "excluded": []})


def rational_to_integral(s: MasserSystem) -> MasserSystem:
    """Double a system with rational right-hand sides into a polynomial one.

    ``exp(x_i) = g_i(x - y)``, ``exp(y_i) = h_i(x - y)``; a solution ``(a, b)`` gives
    ``a - b`` for the original. Polynomial entries are read as ``P/1``.
    """
    if any(isinstance(r, BranchRhs) for r in s.rhs):
        raise InputError("branch right-hand sides are already integral; doubling unsupported")
    if not any(isinstance(r, RationalRhs) for r in s.rhs):
        return s
    n = s.n
    diff = [MultiPoly.var(2 * n, i) - MultiPoly.var(2 * n, n + i) for i in range(n)]
    nums, dens = [], []
    for r in s.rhs:
        if isinstance(r, RationalRhs):
            nums.append(r.num.compose(diff))
            dens.append(r.den.compose(diff))
        else:
            nums.append(r.P.compose(diff))
            dens.append(MultiPoly.const(2 * n, 1, r.P.mode))
    prov = dict(s.provenance)
    prov["recovery"] = {"map": "difference", "n": n, "parent": s.to_json()}
    return MasserSystem(2 * n, [PolyRhs(p) for p in nums + dens], prov)


def recover_solution(s: MasserSystem, x):
    rec = s.provenance.get("recovery")
    if not rec:
        return np.asarray(x)
    n = rec["n"]
    x = np.asarray(x)
    return x[:n] - x[n:2 * n]


def branch_eval(r: BranchRhs, x) -> complex:
    return r.value(np.asarray(x, dtype=complex))


def augment_exclude_relations(s: MasserSystem, relations: Sequence[Sequence]) -> MasserSystem:
    """Append ``exp(u_j) = l_j(x)`` for each rational linear form ``l_j``.

    Since ``exp(u_j)`` never vanishes, every solution has ``l_j(x) != 0``.
    """
    relations = [tuple(Fraction(c) for c in rel) for rel in relations]
    if not relations:
        return s
    n, m = s.n, len(relations)
    for rel in relations:
        if len(rel) != n:
            raise InputError(f"linear form {rel} does not have {n} coefficients")
        if not any(rel):
            raise InputError("cannot exclude the zero linear form")
    N = n + m
    keep = list(range(n))
    rhs = []
    for r in s.rhs:
        if isinstance(r, PolyRhs):
            rhs.append(PolyRhs(r.P.embed(N, keep)))
        elif isinstance(r, RationalRhs):
            rhs.append(RationalRhs(r.num.embed(N, keep), r.den.embed(N, keep)))
        else:
            rhs.append(BranchRhs(r.defining.embed(N + 1, keep + [N]), r.branch_degree))
    for rel in relations:
        form = MultiPoly(N, {tuple(int(i == j) for i in range(N)): c for j, c in enumerate(rel) if c})
        rhs.append(PolyRhs(form))
    prov = dict(s.provenance)
    prov.setdefault("base_n", n)
    prov["excluded"] = list(prov.get("excluded", [])) + [
        [f"{c.numerator}/{c.denominator}" for c in rel] for rel in relations]
    return MasserSystem(N, rhs, prov)


def estimate_branch_degree(r: BranchRhs, direction, ts=None) -> Fraction:
    """Growth exponent of ``u(t*direction)``, rounded to denominator <= deg_u."""
    ts = ts or [2.0 ** j for j in range(6, 11)]
    probe = BranchRhs(r.defining)
    v = np.asarray(direction, dtype=complex)
    logs = [math.log(abs(probe.value(t * v))) for t in ts]
    slope = np.polyfit(np.log(ts), logs, 1)[0]
    return Fraction(float(slope)).limit_denominator(max(1, probe.degree_u))

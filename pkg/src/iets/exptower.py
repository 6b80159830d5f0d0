"""Iterated exponential polynomials ``f(z) = p(z, e_1(z), ..., e_k(z))``.

``e_0(z) = z`` and ``e_{j+1}(z) = exp(e_j(z))``. Tower values overflow doubles almost
immediately, so they are carried as :class:`LogMagComplex` (log-modulus plus argument).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError
from .polycore import EXACT, MultiPoly, partial_derivative

OVERFLOW_LOG = 700.0
ARG_REDUCTION_LIMIT = 1e12
FLOAT_MAX = np.finfo(float).max


def _reduce_arg(theta: float) -> float:
    r = math.remainder(theta, 2 * math.pi)
    return math.pi if r == -math.pi else r


@dataclass(frozen=True)
class LogMagComplex:
    """The number ``exp(log_abs + i*arg)``; ``log_abs = -inf`` encodes zero."""

    log_abs: float
    arg: float = 0.0

    def __post_init__(self):
        if math.isfinite(self.arg):
            object.__setattr__(self, "arg", _reduce_arg(self.arg))

    @classmethod
    def from_complex(cls, z: complex) -> "LogMagComplex":
        z = complex(z)
        if z == 0:
            return cls(-math.inf, 0.0)
        return cls(math.log(abs(z)), math.atan2(z.imag, z.real))

    @classmethod
    def exp_of(cls, w: complex) -> "LogMagComplex":
        return cls(w.real, w.imag)

    @property
    def representable(self) -> bool:
        return self.log_abs < OVERFLOW_LOG

    def to_complex(self) -> complex:
        if self.log_abs == -math.inf:
            return 0j
        if not self.representable:
            raise OverflowError(f"|value| = exp({self.log_abs:.6g}) exceeds float range")
        r = math.exp(self.log_abs)
        if r == 0.0:
            return 0j
        return complex(r * math.cos(self.arg), r * math.sin(self.arg))

    def __mul__(self, other):
        if not isinstance(other, LogMagComplex):
            other = LogMagComplex.from_complex(other)
        return LogMagComplex(self.log_abs + other.log_abs, self.arg + other.arg)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n == 0:
            return LogMagComplex(0.0, 0.0)
        return LogMagComplex(self.log_abs * n, self.arg * n)

    def __add__(self, other):
        if not isinstance(other, LogMagComplex):
            other = LogMagComplex.from_complex(other)
        if other.log_abs == -math.inf:
            return self
        if self.log_abs == -math.inf:
            return other
        big, small = (self, other) if self.log_abs >= other.log_abs else (other, self)
        ratio = math.exp(small.log_abs - big.log_abs)
        s = complex(math.cos(big.arg), math.sin(big.arg)) + ratio * complex(
            math.cos(small.arg), math.sin(small.arg))
        if s == 0:
            return LogMagComplex(-math.inf, 0.0)
        return LogMagComplex(big.log_abs + math.log(abs(s)), math.atan2(s.imag, s.real))

    __radd__ = __add__

    def __neg__(self):
        return LogMagComplex(self.log_abs, self.arg + math.pi)

    def __sub__(self, other):
        if not isinstance(other, LogMagComplex):
            other = LogMagComplex.from_complex(other)
        return self + (-other)

    def magnitude(self) -> float:
        """``|value|`` as a float, saturating at the largest double."""
        if self.log_abs >= math.log(FLOAT_MAX):
            return float(FLOAT_MAX)
        return math.exp(self.log_abs)


@dataclass(frozen=True)
class ExpTower:
    """``p`` in variables ``(x, y_1, ..., y_k)`` denoting ``p(z, e_1(z), ..., e_k(z))``."""

    k: int
    p: MultiPoly

    def __post_init__(self):
        if self.k < 1:
            raise InputError("iteration depth k must be at least 1")
        if self.p.nvars != self.k + 1:
            raise InputError(f"tower polynomial needs {self.k + 1} variables, has {self.p.nvars}")
        if self.p.is_zero():
            raise InputError("tower polynomial is zero")
        if not self.p.depends_on(self.k):
            raise InputError(f"tower polynomial does not depend on y_{self.k}")

    @property
    def names(self):
        return ["x"] + [f"y{j}" for j in range(1, self.k + 1)]

    @classmethod
    def parse(cls, k: int, expr: str, mode: str = EXACT) -> "ExpTower":
        names = ["x"] + [f"y{j}" for j in range(1, k + 1)]
        return cls(k, MultiPoly.from_expr(expr, names, mode))

    def to_json(self) -> dict:
        return {"k": self.k, "p": self.p.to_json()}

    @classmethod
    def from_json(cls, data) -> "ExpTower":
        try:
            k = int(data["k"])
            p = data["p"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed tower JSON: {exc}") from None
        if isinstance(p, str):
            return cls.parse(k, p, data.get("mode", EXACT))
        return cls(k, MultiPoly.from_json(p))

    def __str__(self):
        return self.p.format(self.names)


def is_degenerate(t: ExpTower):
    """Katzberg exceptional form ``p = g(x) * y_1^n_1 ... y_k^n_k``.

    Returns ``(flag, witness)``; the witness is ``(g, exps)`` with ``g`` univariate.
    """
    groups: dict = {}
    for e, c in t.p.terms.items():
        groups.setdefault(e[1:], {})[(e[0],)] = c
    if len(groups) != 1:
        return False, None
    (exps, g_terms), = groups.items()
    return True, (MultiPoly(1, g_terms, t.p.mode), tuple(exps))


@dataclass
class TowerEval:
    value: complex | None
    trace: list = field(default_factory=list)
    low_precision: bool = False


def tower_values(z: complex, k: int):
    """``[e_1(z), ..., e_k(z)]`` as LogMagComplex, plus a low-precision flag."""
    trace = []
    low = abs(complex(z).imag) > ARG_REDUCTION_LIMIT
    w = complex(z)
    for _ in range(k):
        cur = LogMagComplex.exp_of(w)
        trace.append(cur)
        if cur.representable:
            w = cur.to_complex()
        else:
            # modulus beyond double range: keep the sign of the real part, lose the argument
            c = math.cos(cur.arg)
            re = math.copysign(math.inf, c) if cur.log_abs > 709.0 else math.exp(cur.log_abs) * c
            w = complex(re, math.nan)
            low = True
            continue
        if abs(w.imag) > ARG_REDUCTION_LIMIT:
            low = True
    return trace, low


def eval_tower(t: ExpTower, z: complex) -> TowerEval:
    trace, low = tower_values(z, t.k)
    if all(v.representable for v in trace):
        point = [complex(z)] + [v.to_complex() for v in trace]
        return TowerEval(complex(t.p.evaluate(point)), trace, low)
    return TowerEval(None, trace, low)


def poly_lmc(p: MultiPoly, values: Sequence[LogMagComplex]) -> LogMagComplex:
    """Evaluate ``p`` with LogMagComplex arithmetic (no overflow)."""
    total = LogMagComplex(-math.inf)
    for e, c in p.sorted_terms():
        term = LogMagComplex.from_complex(complex(c))
        for v, k in zip(values, e):
            if k:
                term = term * (v ** k)
        total = total + term
    return total


def chain_residual(xbar: Sequence[complex]) -> float:
    """``max_j |x_{j+1} - exp(x_j)|``, saturating instead of overflowing."""
    worst = 0.0
    for a, b in zip(xbar[:-1], xbar[1:]):
        e = LogMagComplex.exp_of(complex(a))
        if e.representable:
            r = abs(complex(b) - e.to_complex())
        else:
            r = (e - LogMagComplex.from_complex(complex(b))).magnitude()
        worst = max(worst, r)
    return worst


def tower_residual(t: ExpTower, xbar: Sequence[complex]) -> float:
    """Consistency of a reduced-system solution with the tower.

    ``xbar`` holds ``(z, e_1, ..., e_{k-1})`` (length k) or also ``e_k`` (length k+1).
    Returns ``max(chain residual, |p(z, e_1, ..., e_k)|)``.
    """
    xbar = [complex(v) for v in xbar]
    if len(xbar) == t.k:
        last = LogMagComplex.exp_of(xbar[-1])
        values = [LogMagComplex.from_complex(v) for v in xbar] + [last]
    elif len(xbar) == t.k + 1:
        values = [LogMagComplex.from_complex(v) for v in xbar]
    else:
        raise InputError(f"expected {t.k} or {t.k + 1} coordinates, got {len(xbar)}")
    return max(chain_residual(xbar), poly_lmc(t.p, values).magnitude())


def tower_derivative_arrays(t: ExpTower, z: np.ndarray):
    """Vectorised ``f(z)``, ``f'(z)`` and an overflow mask for contour work."""
    z = np.asarray(z, dtype=complex)
    values = [z]
    derivs = [np.ones_like(z)]
    overflow = np.zeros(z.shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(t.k):
            w = values[-1]
            overflow |= ~np.isfinite(w) | (w.real > OVERFLOW_LOG)
            e = np.exp(np.where(overflow, 0, w))
            values.append(e)
            derivs.append(e * derivs[-1])
        f = t.p.evaluate(values)
        df = sum(partial_derivative(t.p, j).evaluate(values) * derivs[j]
                 for j in range(t.k + 1) if t.p.depends_on(j))
    return np.asarray(f) + 0 * z, np.asarray(df) + 0 * z, overflow

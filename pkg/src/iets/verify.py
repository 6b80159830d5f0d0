"""Independent checks on solver output.

* high-precision residual re-evaluation (mpmath), with optional Newton polishing;
* zero counting in rectangles by the argument principle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np

from .errors import InconclusiveCount, InputError, RegionUnsupported
from .exptower import ExpTower, tower_derivative_arrays
from .massersys import MasserSystem, PolyRhs
from .polycore import MultiPoly, partial_derivative

# -- high precision ----------------------------------------------------------------


def _mp_rhs(system: MasserSystem, x):
    """Values and gradients of all right-hand sides at ``x`` (current mp precision)."""
    vals, grads = [], []
    for i, r in enumerate(system.rhs):
        v, g = r.mp_value_and_gradient(x, hint=complex(mpmath.exp(x[i])))
        vals.append(v)
        grads.append(g)
    return vals, grads


def mp_residual(system: MasserSystem, x, digits: int = 30) -> float:
    """Max relative residual ``|exp(x_i) - f_i(x)| / max(1, |f_i(x)|)`` at ``digits`` digits."""
    with mpmath.workdps(digits + 10):
        x = [mpmath.mpc(complex(v)) if not isinstance(v, mpmath.mpc) else v for v in x]
        vals, _ = _mp_rhs(system, x)
        worst = mpmath.mpf(0)
        for xi, f in zip(x, vals):
            worst = max(worst, abs(mpmath.exp(xi) - f) / max(1, abs(f)))
        return float(worst)


def mp_polish(system: MasserSystem, x, digits: int = 30, max_iter: int = 50):
    """Newton on ``exp(x) - f(x)`` in mpmath starting from ``x``; returns mpc list."""
    with mpmath.workdps(digits + 10):
        x = [mpmath.mpc(complex(v)) if not isinstance(v, mpmath.mpc) else +v for v in x]
        n = len(x)
        target = mpmath.mpf(10) ** (-(digits + 3))
        for _ in range(max_iter):
            vals, grads = _mp_rhs(system, x)
            ex = [mpmath.exp(v) for v in x]
            G = mpmath.matrix([ex[i] - vals[i] for i in range(n)])
            J = mpmath.matrix(n, n)
            for i in range(n):
                for h in range(n):
                    J[i, h] = (ex[i] if i == h else 0) - grads[i][h]
            dx = mpmath.lu_solve(J, -G)
            x = [x[i] + dx[i] for i in range(n)]
            scale = 1 + max(abs(v) for v in x)
            if max(abs(dx[i]) for i in range(n)) < target * scale:
                break
        return x


def recheck_residual(system: MasserSystem, root, digits: int = 30, polish: bool = False) -> float:
    """Residual of ``root`` (RootRecord or vector) at ``digits`` digits; annotates records."""
    vec = getattr(root, "solution", root)
    point = mp_polish(system, vec, digits) if polish else vec
    res = mp_residual(system, point, digits)
    if hasattr(root, "solution"):
        root.recheck = res
        if np.max(np.abs(np.asarray(vec).imag)) > 1e12 and "precision-limited" not in root.flags:
            root.flags.append("precision-limited")
    return res


# -- argument principle ---------------------------------------------------------------

VectorFn = Callable[[np.ndarray], tuple]


def _as_log_derivative(f) -> VectorFn:
    """Return ``z -> (f(z), f'(z), overflow_mask)`` for the supported inputs."""
    if isinstance(f, ExpTower):
        return lambda z: tower_derivative_arrays(f, z)
    if isinstance(f, MultiPoly):
        if f.nvars != 1:
            raise InputError("zero counting needs a univariate polynomial")
        df = partial_derivative(f, 0)
        return lambda z: (np.asarray(f.evaluate([z])) + 0 * z, np.asarray(df.evaluate([z])) + 0 * z,
                          np.zeros(z.shape, dtype=bool))
    if isinstance(f, MasserSystem):
        if f.n != 1 or not isinstance(f.rhs[0], PolyRhs):
            raise InputError("only one-variable polynomial systems reduce to a scalar function")
        P = f.rhs[0].P
        dP = partial_derivative(P, 0)

        def g(z):
            with np.errstate(over="ignore", invalid="ignore"):
                e = np.exp(z)
            return (e - P.evaluate([z]), e - dP.evaluate([z]), ~np.isfinite(e))
        return g
    if isinstance(f, tuple) and len(f) == 2:
        fn, dfn = f
        return lambda z: (np.asarray(fn(z), dtype=complex), np.asarray(dfn(z), dtype=complex),
                          np.zeros(z.shape, dtype=bool))
    raise InputError(f"cannot count zeros of {type(f).__name__}")


@dataclass
class CountResult:
    count: int
    pieces: list = field(default_factory=list)
    nudged: bool = False

    def __int__(self):
        return self.count

    def to_json(self):
        return {"count": self.count, "pieces": [{"rect": list(r), "count": c} for r, c in self.pieces],
                "nudged": self.nudged}


class _Inconclusive(Exception):
    pass


def _edges(rect):
    x0, y0, x1, y1 = rect
    c = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    return [(c[i], c[(i + 1) % 4]) for i in range(4)]


def _edge_winding(g: VectorFn, a: complex, b: complex, n0: int, n_max: int = 2 ** 17):
    """Trapezoid estimate of ``(1/2 pi i) int f'/f`` on ``[a, b]`` with doubling refinement."""
    prev = None
    n = n0
    while True:
        s = np.linspace(0.0, 1.0, n + 1)
        z = a + (b - a) * s
        f, df, over = g(z)
        if np.any(over) or not np.all(np.isfinite(f)) or not np.all(np.isfinite(df)):
            raise RegionUnsupported(f"function overflows on the contour segment {a} -> {b}")
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = df / f
        if not np.all(np.isfinite(ratio)):
            return None, np.min(np.abs(f))
        vals = ratio * (b - a)
        val = (vals.sum() - 0.5 * (vals[0] + vals[-1])) / n / (2j * math.pi)
        dist = float(np.min(np.abs(f) / np.maximum(np.abs(df), 1e-300)))
        if prev is not None and abs(val - prev) < 1e-3:
            return val, dist
        if n >= n_max:
            raise _Inconclusive(f"quadrature did not settle on {a} -> {b}")
        prev = val
        n *= 2


def _winding(g: VectorFn, rect, samples: int):
    total = 0j
    closest = math.inf
    for a, b in _edges(rect):
        val, dist = _edge_winding(g, a, b, samples)
        if val is None:
            return None, 0.0
        total += val
        closest = min(closest, dist)
    return total, closest


def _nudge(rect, amount):
    x0, y0, x1, y1 = rect
    return (x0 - amount, y0 - amount, x1 + amount, y1 + amount)


SPLIT = 0.5123  # off-centre so that symmetric zeros avoid the new edges


def _quadrants(rect):
    x0, y0, x1, y1 = rect
    xm, ym = x0 + SPLIT * (x1 - x0), y0 + SPLIT * (y1 - y0)
    return [(x0, y0, xm, ym), (xm, y0, x1, ym), (x0, ym, xm, y1), (xm, ym, x1, y1)]


def _count_rect(g, rect, depth, samples, out: CountResult, may_nudge=True) -> int:
    try:
        w, closest = _winding(g, rect, samples)
    except _Inconclusive:
        w, closest = None, math.inf
    if (w is None or closest < 1e-6) and may_nudge:
        # a zero sits on (or very near) the contour: move the contour off it
        out.nudged = True
        size = max(rect[2] - rect[0], rect[3] - rect[1])
        return _count_rect(g, _nudge(rect, 1e-3 * size), depth, samples, out, False)
    if w is not None:
        k = round(w.real)
        if abs(w - k) < 0.25:
            out.pieces.append((tuple(rect), int(k)))
            return int(k)
    if depth <= 0:
        raise InconclusiveCount(f"winding number on {rect} did not snap to an integer ({w})")
    # children never nudge: that would make neighbouring pieces overlap
    return sum(_count_rect(g, q, depth - 1, samples, out, False) for q in _quadrants(rect))


def count_zeros_detail(f, region, depth: int = 4, samples: int = 64) -> CountResult:
    """Zeros (with multiplicity) of ``f`` in ``region = (x0, y0, x1, y1)``.

    Nonconclusive rectangles are split into quadrants, at most ``depth`` times.
    """
    x0, y0, x1, y1 = (float(v) for v in region)
    if not (x1 > x0 and y1 > y0):
        raise InputError(f"degenerate rectangle {region}")
    out = CountResult(0)
    out.count = _count_rect(_as_log_derivative(f), (x0, y0, x1, y1), depth, samples, out)
    return out


def count_zeros(f, region, depth: int = 4, samples: int = 64) -> int:
    return count_zeros_detail(f, region, depth, samples).count


def roots_in_rect(points, region) -> int:
    x0, y0, x1, y1 = region
    return sum(1 for z in points if x0 <= complex(z).real <= x1 and y0 <= complex(z).imag <= y1)


def phase_winding(f, region, n: int = 4096) -> float:
    """Winding number by summing phase increments; a cross-check for the quadrature."""
    g = _as_log_derivative(f)
    total = 0.0
    for a, b in _edges(region):
        z = a + (b - a) * np.linspace(0, 1, n + 1)
        vals = g(z)[0]
        total += float(np.sum(np.angle(vals[1:] / vals[:-1])))
    return total / (2 * math.pi)

"""Lattice seeds, Kantorovich certification and Newton refinement for Masser systems.

A seed is ``omega = 2*pi*i*t*q`` for an integer vector ``q``. With ``A_i = f_i(omega)`` and
``a_i = Log A_i`` the system is shifted to ``F_i(x) = exp(x_i) - f_i(c + x)/A_i`` around
``c = omega + a``; since ``exp(omega_i + a_i) = A_i`` the zeros of ``F`` are exactly the
zeros of the original system moved by ``c``. For large ``t`` the shifted Jacobian at 0 tends
to the identity and ``|F(0)| = O(log T / T)``, which makes the Kantorovich test pass.
"""

from __future__ import annotations

import cmath
import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (BranchUndefinedError, CertificationFailed, IetsError, InputError,
                     InvalidSeedError, NoSeedError, SolverFailed)
from .massersys import MasserSystem, RationalRhs

SAFETY = 0.5
MAX_NEWTON = 60
EPS = np.finfo(float).eps


@dataclass
class SeedRay:
    qvec: tuple
    t: int
    omega: np.ndarray
    normalizers: np.ndarray
    log_shifts: np.ndarray
    T: float

    @property
    def center(self) -> np.ndarray:
        return self.omega + self.log_shifts

    @property
    def log_constant(self) -> float:
        """Smallest ``C`` with ``max |a_i| <= C log T``."""
        return float(np.max(np.abs(self.log_shifts))) / math.log(self.T)

    def to_json(self):
        return {"q": list(self.qvec), "t": self.t}


@dataclass
class KantorovichCertificate:
    eta: float
    inv_jac_norm: float
    hess_bound: float
    condition: float
    ball_radius: float
    verdict: str
    jac_deviation: float = math.nan
    residual0: float = math.nan

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"

    def to_json(self):
        return {"eta": self.eta, "M": self.hess_bound, "invJacNorm": self.inv_jac_norm,
                "condition": self.condition}


@dataclass
class RootRecord:
    solution: np.ndarray
    residuals: list
    certificate: KantorovichCertificate
    seed: SeedRay
    shifted_residual: float = math.nan
    newton_steps: list = field(default_factory=list)
    offset: np.ndarray | None = None
    relation_report: dict | None = None
    flags: list = field(default_factory=list)
    recheck: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.residuals)

    def to_json(self):
        out = {"x": [[z.real, z.imag] for z in self.solution],
               "residual": self.max_residual,
               "certificate": self.certificate.to_json(),
               "seed": self.seed.to_json(),
               "relations": self.relation_report or {}}
        if self.recheck is not None:
            out["recheck"] = self.recheck
        if self.flags:
            out["flags"] = list(self.flags)
        out.update(self.extras)
        return out


def _graded_candidates(n: int, radius: int):
    vals = [v for r in range(1, radius + 1) for v in (r, -r)]
    cands = list(itertools.product(vals, repeat=n))
    cands.sort(key=lambda q: (sum(abs(v) for v in q), [(abs(v), v < 0) for v in q]))
    return cands


def leading_parts_ok(s: MasserSystem, q) -> bool:
    return all(r.leading_ok(q) for r in s.rhs)


def find_seed_vector(s: MasserSystem, search_radius: int = 3) -> tuple:
    """First ``q`` in graded order (no zero entries) where every leading part is nonzero."""
    for q in _graded_candidates(s.n, search_radius):
        if leading_parts_ok(s, q):
            return q
    raise NoSeedError(f"no seed vector with entries in [-{search_radius}, {search_radius}]")


def sign_patterns(s: MasserSystem, q) -> list:
    """``q`` and its sign flips that keep every leading part nonzero, ``q`` first."""
    out = []
    for flips in itertools.product((1, -1), repeat=len(q)):
        cand = tuple(f * v for f, v in zip(flips, q))
        if cand == tuple(q) or leading_parts_ok(s, cand):
            if cand not in out:
                out.append(cand)
    return out


def make_seed(s: MasserSystem, q, t: int) -> SeedRay:
    """Evaluate the normalisers ``A_i = f_i(2 pi i t q)``. Sets branch states in ``s``."""
    if isinstance(t, bool) or int(t) != t or t < 1:
        raise InvalidSeedError(f"seed scale t must be a positive integer, got {t!r}")
    q = tuple(int(v) for v in q)
    if len(q) != s.n:
        raise InputError(f"seed vector has {len(q)} entries, system has {s.n} variables")
    omega = 2j * math.pi * t * np.array(q, dtype=complex)
    try:
        A = np.array([r.value(omega) for r in s.rhs], dtype=complex)
    except (BranchUndefinedError, ZeroDivisionError) as exc:
        raise InvalidSeedError(f"seed q={q}, t={t}: {exc}") from None
    if np.any(A == 0) or not np.all(np.isfinite(A)):
        raise InvalidSeedError(f"seed q={q}, t={t}: some normaliser A_i vanishes")
    a = np.array([cmath.log(v) for v in A])
    T = 1.0 + sum(abs(t * v) for v in q)
    return SeedRay(q, int(t), omega, A, a, T)


class ShiftedSystem:
    """``F(x) = exp(x) - f(c + x)/A`` with Jacobian and second-derivative bounds."""

    def __init__(self, s: MasserSystem, seed: SeedRay):
        if any(isinstance(r, RationalRhs) for r in s.rhs):
            raise InputError("double rational systems with rational_to_integral before solving")
        self.system = s
        self.seed = seed
        self.center = seed.center
        self.A = seed.normalizers
        self.n = s.n

    def F(self, x) -> np.ndarray:
        y = self.center + x
        return np.exp(x) - np.array([r.value(y) for r in self.system.rhs]) / self.A

    def FJ(self, x):
        y = self.center + x
        vals = np.empty(self.n, dtype=complex)
        J = np.empty((self.n, self.n), dtype=complex)
        for i, r in enumerate(self.system.rhs):
            v, g = r.value_and_gradient(y)
            vals[i] = v
            J[i] = -g / self.A[i]
        ex = np.exp(x)
        J[np.diag_indices(self.n)] += ex
        return ex - vals / self.A, J

    def hessian_bound(self, radius: float) -> float:
        """``max_i sum_{h,l} sup |d^2 F_i / dx_h dx_l|`` over the ball of given radius."""
        growth = math.exp(radius)
        return max(growth + r.second_bound(self.center, radius) / abs(a)
                   for r, a in zip(self.system.rhs, self.A))

    def original(self, x) -> np.ndarray:
        return self.center + np.asarray(x)


def shift_system(s: MasserSystem, seed: SeedRay) -> ShiftedSystem:
    return ShiftedSystem(s, seed)


def _inf_norm(v) -> float:
    return float(np.max(np.abs(v))) if len(v) else 0.0


def certify(F: ShiftedSystem) -> KantorovichCertificate:
    zero = np.zeros(F.n, dtype=complex)
    F0, J0 = F.FJ(zero)
    dev = float(np.abs(J0 - np.eye(F.n)).sum(axis=1).max())
    failed = dict(eta=math.inf, inv_jac_norm=math.inf, hess_bound=math.inf, condition=math.inf,
                  ball_radius=math.inf, verdict="failed", jac_deviation=dev, residual0=_inf_norm(F0))
    if not np.all(np.isfinite(J0)) or not np.all(np.isfinite(F0)):
        return KantorovichCertificate(**failed)
    try:
        Jinv = np.linalg.inv(J0)
    except np.linalg.LinAlgError:
        return KantorovichCertificate(**failed)
    inv_norm = float(np.abs(Jinv).sum(axis=1).max()) * (1 + 10 * F.n * EPS)
    eta = _inf_norm(Jinv @ F0)
    radius = 2 * eta
    try:
        M = F.hessian_bound(radius)
    except (BranchUndefinedError, OverflowError):
        return KantorovichCertificate(**{**failed, "eta": eta, "inv_jac_norm": inv_norm})
    cond = 2 * M * eta * inv_norm
    verdict = "certified" if cond < SAFETY else "failed"
    return KantorovichCertificate(eta, inv_norm, M, cond, radius, verdict, dev, _inf_norm(F0))


def newton_solve(F: ShiftedSystem, cert: KantorovichCertificate, tol: float = 1e-12) -> RootRecord:
    if not cert.certified:
        raise CertificationFailed(f"seed q={F.seed.qvec}, t={F.seed.t}: condition {cert.condition:.3g}")
    x = np.zeros(F.n, dtype=complex)
    steps = []
    converged = False
    res = math.inf
    for _ in range(MAX_NEWTON):
        Fx, Jx = F.FJ(x)
        res = _inf_norm(Fx)
        if res < tol:
            converged = True
            break
        dx = np.linalg.solve(Jx, -Fx)
        steps.append(_inf_norm(dx))
        x = x + dx
        if _inf_norm(x) > 2 * cert.ball_radius:
            raise SolverFailed(f"seed q={F.seed.qvec}, t={F.seed.t}: Newton left twice the ball")
    if converged:
        # one more step, kept only if it helps: costs nothing and buys a few digits
        dx = np.linalg.solve(Jx, -Fx)
        Fy = F.F(x + dx)
        if _inf_norm(Fy) < res:
            steps.append(_inf_norm(dx))
            x, res = x + dx, _inf_norm(Fy)
    if not converged:
        raise SolverFailed(f"seed q={F.seed.qvec}, t={F.seed.t}: no convergence in {MAX_NEWTON} steps "
                           f"(|F| = {res:.3g})")
    if _inf_norm(x) > cert.ball_radius * (1 + 1e-9) + 1e-15:
        raise SolverFailed(f"seed q={F.seed.qvec}, t={F.seed.t}: limit outside the Kantorovich ball")
    z = F.original(x)
    flags = ["precision-limited"] if np.max(np.abs(z.imag)) > 1e12 else []
    return RootRecord(solution=z, residuals=F.system.residuals(z), certificate=cert, seed=F.seed,
                      shifted_residual=res, newton_steps=steps, offset=x, flags=flags)


def solve_seed(s: MasserSystem, q, t: int, tol: float = 1e-12) -> RootRecord:
    """Certify and solve from one seed on a private copy of ``s``."""
    work = s.clone()
    work.reset_branches()
    seed = make_seed(work, q, t)
    F = shift_system(work, seed)
    cert = certify(F)
    return newton_solve(F, cert, tol)


def default_schedule(t_max: int = 2 ** 14, start: int = 4) -> list:
    return [2 ** j for j in range(start, 64) if 2 ** j <= t_max]


@dataclass
class Enumeration:
    roots: list
    failures: list
    requested: int

    @property
    def shortfall(self) -> int:
        return max(0, self.requested - len(self.roots))


def default_workers() -> int:
    env = os.environ.get("IETS_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _distinct(root, accepted, m) -> bool:
    for other in accepted:
        a, b = root.solution[:m], other.solution[:m]
        if _inf_norm(a - b) < 1e-6 * (1 + max(_inf_norm(a), _inf_norm(b))):
            return False
    return True


def enumerate_roots(s: MasserSystem, count: int, t_schedule: Sequence[int] | None = None,
                    tol: float = 1e-12, t_max: int = 2 ** 14, workers: int | None = None,
                    search_radius: int = 3, base_q=None) -> Enumeration:
    """Certified distinct roots from seeds ``t*q`` over ``t_schedule`` and sign flips of ``q``.

    Output order is by ``(t, sign pattern)``; it does not depend on the worker count.
    Roots are compared on the original variables only: exclusion variables added by
    :func:`augment_exclude_relations` are logarithms, defined only up to ``2 pi i``.
    """
    if count <= 0:
        return Enumeration([], [], max(count, 0))
    ts = list(t_schedule) if t_schedule is not None else default_schedule(t_max)
    q0 = tuple(base_q) if base_q is not None else find_seed_vector(s, search_radius)
    patterns = sign_patterns(s, q0)
    workers = workers or default_workers()
    roots, failures = [], []
    m = s.provenance.get("base_n", s.n)

    def attempt(job):
        t, q = job
        try:
            return job, solve_seed(s, q, t, tol), None
        except IetsError as exc:
            return job, None, f"{exc.stage}: {exc}"
        except (np.linalg.LinAlgError, FloatingPointError, OverflowError) as exc:
            return job, None, f"numeric: {exc}"

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for t in ts:
            jobs = [(t, q) for q in patterns]
            for (tt, q), rec, err in pool.map(attempt, jobs):
                if rec is None:
                    failures.append({"seed": {"q": list(q), "t": tt}, "reason": err})
                elif len(roots) < count and _distinct(rec, roots, m):
                    roots.append(rec)
            if len(roots) >= count:
                break
    return Enumeration(roots, failures, count)


def certificate_profile(s: MasserSystem, q, ts: Sequence[int]) -> list:
    """Certificates at seeds ``t*q`` for each ``t`` (no Newton)."""
    out = []
    for t in ts:
        work = s.clone()
        work.reset_branches()
        seed = make_seed(work, q, t)
        out.append((seed, certify(shift_system(work, seed))))
    return out

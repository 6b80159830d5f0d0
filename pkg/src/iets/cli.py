"""Command-line entry point (``python -m iets`` or ``iets``).

Results go to stdout (or ``--out``) as JSON lines with floats printed to 17 significant
digits, so identical inputs give byte-identical output.

Exit codes: 0 success, 1 other failure, 2 degenerate tower, 3 root shortfall, 4 bad input.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import numbers
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import DegenerateTowerError, IetsError, InputError
from .exptower import ExpTower, is_degenerate, tower_residual
from .generic import (diagnose_relations, diagnose_values, enumerate_bad_relations,
                      exclusion_margins, generic_solve_plan, multiplicative_independence_check,
                      constant_terms)
from .massersys import MasserSystem, from_tower, rational_to_integral, recover_solution
from .polycore import EXACT, FLOAT
from .seedcert import default_workers, enumerate_roots
from .verify import count_zeros_detail, recheck_residual

EXIT_OK, EXIT_FAIL, EXIT_DEGENERATE, EXIT_SHORTFALL, EXIT_PARSE = 0, 1, 2, 3, 4


@dataclass
class RunConfig:
    subcommand: str
    input: str | None = None
    k: int | None = None
    p: str | None = None
    equations: list = field(default_factory=list)
    mode: str = EXACT
    tol: float = 1e-12
    roots: int = 3
    height: int = 10
    scan_height: int | None = None
    digits: int = 30
    t_max: int = 2 ** 14
    workers: int | None = None
    region: tuple | None = None
    root: complex | None = None
    out: str | None = None
    plot: str | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise InputError("tolerance must be positive")
        if self.roots < 0:
            raise InputError("root count must be nonnegative")
        if self.height < 1 or self.digits < 5:
            raise InputError("height must be >= 1 and digits >= 5")


# -- deterministic JSON ---------------------------------------------------------------------


def dumps(obj) -> str:
    """JSON with every float written as ``%.17g`` (non-finite values become null)."""
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, numbers.Integral):
        return str(int(obj))
    if isinstance(obj, Fraction):
        return json.dumps(f"{obj.numerator}/{obj.denominator}")
    if isinstance(obj, numbers.Real):
        v = float(obj)
        return format(v, ".17g") if math.isfinite(v) else "null"
    if isinstance(obj, numbers.Complex):
        return dumps([obj.real, obj.imag])
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


class Emitter:
    def __init__(self, path):
        self.fh = open(path, "w", encoding="utf-8") if path else sys.stdout
        self.owned = bool(path)

    def line(self, obj):
        self.fh.write(dumps(obj) + "\n")
        self.fh.flush()

    def close(self):
        if self.owned:
            self.fh.close()


def _fail(stage: str, message: str, code: int, **extra) -> int:
    sys.stderr.write(dumps({"error": message, "stage": stage, **extra}) + "\n")
    return code


# -- inputs ------------------------------------------------------------------------------------


def _read_json(path: str):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def load_tower(cfg: RunConfig) -> ExpTower:
    if cfg.p is not None:
        if cfg.k is None:
            raise InputError("--p needs --k")
        return ExpTower.parse(cfg.k, cfg.p, cfg.mode)
    if cfg.input is None:
        raise InputError("no tower given (input file or --k/--p)")
    return ExpTower.from_json(_read_json(cfg.input))


def load_system(cfg: RunConfig) -> MasserSystem:
    if cfg.equations:
        return MasserSystem.from_polys(cfg.equations, mode=cfg.mode)
    if cfg.input is None:
        raise InputError("no system given (input file or --eq)")
    data = _read_json(cfg.input)
    if isinstance(data, dict) and "equations" in data:
        return MasserSystem.from_polys(data["equations"], data.get("names"), data.get("mode", EXACT))
    return MasserSystem.from_json(data)


# -- subcommands -------------------------------------------------------------------------------


def _write_plot(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "residual"])
        for z, res in rows:
            w.writerow([format(z.real, ".17g"), format(z.imag, ".17g"), format(res, ".17g")])


def _shortfall(enum) -> int:
    reasons = [f["reason"] for f in enum.failures[-5:]]
    return _fail("enumerate", f"found {len(enum.roots)} of {enum.requested} roots", EXIT_SHORTFALL,
                 failures=enum.failures[-20:], lastReasons=reasons)


def cmd_solve(cfg: RunConfig, out: Emitter) -> int:
    original = load_system(cfg)
    system = rational_to_integral(original)
    enum = enumerate_roots(system, cfg.roots, tol=cfg.tol, t_max=cfg.t_max, workers=cfg.workers)
    consts = constant_terms(original)
    verdict = multiplicative_independence_check(consts).to_json() \
        if consts and all(consts) else None
    plot = []
    for rec in enum.roots:
        recheck_residual(system, rec, cfg.digits)
        data = rec.to_json()
        if system is not original:
            x = recover_solution(system, rec.solution)
            data["recovered"] = [[v.real, v.imag] for v in x]
            data["recoveredResidual"] = max(original.residuals(x))
        if verdict is not None:
            data["relations"] = {"constants": verdict}
        out.line(data)
        plot.append((complex(rec.solution[0]), rec.max_residual))
    if cfg.plot:
        _write_plot(cfg.plot, plot)
    return EXIT_OK if not enum.shortfall else _shortfall(enum)


def cmd_solve_tower(cfg: RunConfig, out: Emitter) -> int:
    tower = load_tower(cfg)
    if tower.p.mode == EXACT:
        plan = generic_solve_plan(tower, cfg.scan_height)
        system, excluded = plan.system, plan.excluded
    else:
        system, excluded = from_tower(tower), []
    forms = [rel.form for rel in excluded]
    enum = enumerate_roots(system, cfg.roots, tol=cfg.tol, t_max=cfg.t_max, workers=cfg.workers)
    plot = []
    for rec in enum.roots:
        recheck_residual(system, rec, cfg.digits)
        diagnose_relations(rec, tower, cfg.height, cfg.digits)
        data = rec.to_json()
        z = complex(rec.solution[0])
        data["z"] = [z.real, z.imag]
        data["towerResidual"] = tower_residual(tower, rec.solution[: tower.k])
        data["excluded"] = [rel.to_json() for rel in excluded]
        data["margins"] = exclusion_margins(rec, forms)
        out.line(data)
        plot.append((z, rec.max_residual))
    if cfg.plot:
        _write_plot(cfg.plot, plot)
    return EXIT_OK if not enum.shortfall else _shortfall(enum)


def cmd_check_degenerate(cfg: RunConfig, out: Emitter) -> int:
    tower = load_tower(cfg)
    flag, witness = is_degenerate(tower)
    data = {"degenerate": flag}
    if flag:
        g, exps = witness
        data["witness"] = {"g": g.to_json(), "gText": g.format(["x"]), "exps": list(exps)}
    out.line(data)
    return EXIT_DEGENERATE if flag else EXIT_OK


def cmd_bad_relations(cfg: RunConfig, out: Emitter) -> int:
    tower = load_tower(cfg)
    rels = enumerate_bad_relations(tower, cfg.scan_height)
    out.line([rel.to_json() for rel in rels])
    return EXIT_OK


def cmd_count_roots(cfg: RunConfig, out: Emitter) -> int:
    if cfg.region is None:
        raise InputError("count-roots needs --region x0,y0,x1,y1")
    tower = load_tower(cfg)
    res = count_zeros_detail(tower, cfg.region)
    out.line(res.to_json())
    return EXIT_OK


def cmd_diagnose(cfg: RunConfig, out: Emitter) -> int:
    tower = load_tower(cfg)
    if cfg.root is not None:
        import mpmath

        with mpmath.workdps(cfg.digits + 10):
            vals = [mpmath.mpc(cfg.root)]
            for _ in range(tower.k - 1):
                vals.append(mpmath.exp(vals[-1]))
            diag = diagnose_values(vals, cfg.height, cfg.digits)
            diag.vector = vals + [mpmath.exp(vals[-1])]
        out.line(diag.to_json())
        return EXIT_OK
    enum = enumerate_roots(from_tower(tower), 1, tol=cfg.tol, t_max=cfg.t_max, workers=cfg.workers)
    if not enum.roots:
        return _shortfall(enum)
    out.line(diagnose_relations(enum.roots[0], tower, cfg.height, cfg.digits).to_json())
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "solve-tower": cmd_solve_tower, "check-degenerate": cmd_check_degenerate,
            "bad-relations": cmd_bad_relations, "count-roots": cmd_count_roots, "diagnose": cmd_diagnose}


def run(cfg: RunConfig) -> int:
    out = Emitter(cfg.out)
    try:
        return COMMANDS[cfg.subcommand](cfg, out)
    except DegenerateTowerError as exc:
        g, exps = exc.witness
        return _fail(exc.stage, str(exc), EXIT_DEGENERATE, witness={"gText": g.format(["x"]),
                                                                   "exps": list(exps)})
    except InputError as exc:
        return _fail(exc.stage, str(exc), EXIT_PARSE)
    except IetsError as exc:
        return _fail(exc.stage, str(exc), EXIT_FAIL)
    finally:
        out.close()


# -- argument parsing -------------------------------------------------------------------------


def _region(text: str):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad region {text!r}") from None
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("region needs four numbers x0,y0,x1,y1")
    return vals


def _complex(text: str):
    try:
        if "," in text:
            re, im = text.split(",")
            return complex(float(re), float(im))
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad complex number {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="iets", description="Certified zeros of exponential systems "
                                                        "and iterated exponential polynomials.")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("input", nargs="?", help="JSON input file ('-' for stdin)")
        sp.add_argument("--k", type=int, help="tower depth (with --p)")
        sp.add_argument("--p", help="tower polynomial in x, y1, ..., yk")
        sp.add_argument("--eq", action="append", default=[], dest="equations",
                        help="right-hand side f_i in x0, x1, ... (repeat per equation)")
        sp.add_argument("--float", action="store_const", const=FLOAT, default=EXACT, dest="mode",
                        help="parse coefficients as floats")
        sp.add_argument("--tol", type=float, default=1e-12)
        sp.add_argument("--roots", type=int, default=3)
        sp.add_argument("--height", type=int, default=10, help="relation height for diagnostics")
        sp.add_argument("--scan-height", type=int, default=None,
                        help="height for bad-relation scans (default: total degree; cost grows "
                             "like (2H+1)^k)")
        sp.add_argument("--digits", type=int, default=30)
        sp.add_argument("--t-max", type=int, default=2 ** 14)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--region", type=_region)
        sp.add_argument("--root", type=_complex, help="z as 're,im' for diagnose")
        sp.add_argument("--plot", help="CSV file for (re, im, residual)")
        sp.add_argument("--out", help="JSON-lines output file")
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; 2 is reserved for degenerate towers here
        return EXIT_OK if exc.code == 0 else EXIT_PARSE
    opts = vars(args)
    if opts["workers"] is None:
        opts["workers"] = default_workers()
    try:
        cfg = RunConfig(**opts)
    except InputError as exc:
        return _fail("input", str(exc), EXIT_PARSE)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

"""Zeros of z - e^z in a rectangle: argument principle, certified solver, Lambert W.

The solver only reports roots it can certify from lattice seeds 2 pi i t q, so roots close
to the real axis (small |t q|) are out of its reach; the census makes that visible.

    python scripts/zero_census.py --region=-1,0,3,10
    python scripts/zero_census.py --region=-1,-60,6,60
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass

import mpmath

from iets.exptower import ExpTower
from iets.massersys import MasserSystem
from iets.seedcert import enumerate_roots
from iets.verify import count_zeros_detail, roots_in_rect


@dataclass
class CensusConfig:
    region: tuple = (-1.0, 0.0, 3.0, 10.0)
    max_scale: int = 64
    depth: int = 6


def run(cfg: CensusConfig) -> dict:
    counted = count_zeros_detail(ExpTower.parse(1, "x - y1"), cfg.region, depth=cfg.depth)
    s = MasserSystem.from_polys(["x0"])
    enum = enumerate_roots(s, 4 * cfg.max_scale, t_schedule=list(range(1, cfg.max_scale + 1)))
    solver = [complex(r.solution[0]) for r in enum.roots]
    reach = int(max(abs(cfg.region[1]), abs(cfg.region[3])) / 6) + 3
    oracle = [complex(-mpmath.lambertw(-1, k)) for k in range(-reach, reach + 1)]
    inside = [z for z in oracle if roots_in_rect([z], cfg.region)]
    return {"argument_principle": counted.count, "pieces": len(counted.pieces),
            "solver": roots_in_rect(solver, cfg.region), "lambert": len(inside),
            "missed": [z for z in inside if min((abs(z - w) for w in solver), default=1) > 1e-6],
            "failures": len(enum.failures)}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--region", default="-1,0,3,10", help="x0,y0,x1,y1 (use --region=...)")
    ap.add_argument("--max-scale", type=int, default=CensusConfig.max_scale)
    a = ap.parse_args(argv)
    cfg = CensusConfig(tuple(float(v) for v in a.region.split(",")), a.max_scale)
    out = run(cfg)
    print(f"region {cfg.region}")
    print(f"  argument principle : {out['argument_principle']} ({out['pieces']} pieces)")
    print(f"  Lambert W oracle   : {out['lambert']}")
    print(f"  certified solver   : {out['solver']}  (seed failures: {out['failures']})")
    for z in out["missed"]:
        print(f"  not reached by a certified seed: {z.real:.6f}{z.imag:+.6f}i")


if __name__ == "__main__":
    main()

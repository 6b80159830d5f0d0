"""Seed-certificate quantities along the ray t*q for growing t.

Prints eta, eta*T/log T, ||J(0) - I|| and the Kantorovich condition for each t, and the
least-squares constant c in eta ~ c log T / T.

    python scripts/eta_asymptotics.py --eq x0 --t-min 4 --t-max 12 --csv eta.csv
"""

from __future__ import annotations

import argparse
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from iets.massersys import MasserSystem
from iets.seedcert import certificate_profile, find_seed_vector


@dataclass
class EtaConfig:
    equations: list = field(default_factory=lambda: ["x0"])
    log2_t_min: int = 4
    log2_t_max: int = 10
    csv_path: str | None = None


def run(cfg: EtaConfig) -> list:
    s = MasserSystem.from_polys(cfg.equations)
    q = find_seed_vector(s)
    ts = [2 ** j for j in range(cfg.log2_t_min, cfg.log2_t_max + 1)]
    rows = []
    for seed, cert in certificate_profile(s, q, ts):
        rows.append({"t": seed.t, "T": seed.T, "eta": cert.eta,
                     "eta_scaled": cert.eta * seed.T / math.log(seed.T),
                     "jac_dev": cert.jac_deviation, "condition": cert.condition,
                     "verdict": cert.verdict})
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eq", action="append", dest="equations")
    ap.add_argument("--t-min", type=int, default=EtaConfig.log2_t_min, help="log2 of the first t")
    ap.add_argument("--t-max", type=int, default=EtaConfig.log2_t_max, help="log2 of the last t")
    ap.add_argument("--csv")
    a = ap.parse_args(argv)
    cfg = EtaConfig(a.equations or ["x0"], a.t_min, a.t_max, a.csv)
    rows = run(cfg)
    print(f"system: e^x = f(x) with f = {cfg.equations}")
    print(f"{'t':>6} {'T':>8} {'eta':>11} {'eta*T/logT':>11} {'|J-I|':>11} {'condition':>11}  verdict")
    for r in rows:
        print(f"{r['t']:>6} {r['T']:>8.0f} {r['eta']:>11.4e} {r['eta_scaled']:>11.4f} "
              f"{r['jac_dev']:>11.4e} {r['condition']:>11.4e}  {r['verdict']}")
    T = np.array([r["T"] for r in rows])
    eta = np.array([r["eta"] for r in rows])
    basis = np.log(T) / T
    print(f"fit: eta ~ {basis @ eta / (basis @ basis):.4f} * log T / T")
    if cfg.csv_path:
        with open(cfg.csv_path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()

"""Seed battery comparing Monte Carlo moments with exact enumeration on
small 2D lattices."""

import argparse
from dataclasses import dataclass, field
from pathlib import Path

from trivlab.artifacts import write_csv
from trivlab.lattice_phi4 import LatticeSpec, exact_enumeration, run_mc


@dataclass
class BatteryConfig:
    sides: list = field(default_factory=lambda: [2, 4])
    kappas: list = field(default_factory=lambda: [0.1, 0.3, 0.5])
    n_seeds: int = 100
    sweeps: int = 10000
    therm: int = 500
    n_sigma: float = 3.0


def run(cfg: BatteryConfig, out: Path) -> float:
    rows = []
    for side in cfg.sides:
        for kappa in cfg.kappas:
            spec = LatticeSpec.nearest_neighbor(2, side, kappa)
            exact = exact_enumeration(spec)
            for seed in range(cfg.n_seeds):
                mc = run_mc(spec, cfg.sweeps, cfg.therm, seed)
                z2 = (mc.m2.value - exact.m2.value) / mc.m2.error
                z4 = (mc.m4.value - exact.m4.value) / mc.m4.error
                rows.append((side, kappa, seed, z2, z4, max(abs(z2), abs(z4)) <= cfg.n_sigma))
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "battery.csv", ["side", "kappa", "seed", "z_m2", "z_m4", "agree"], rows)
    return sum(r[-1] for r in rows) / len(rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=BatteryConfig.n_seeds)
    ap.add_argument("--sweeps", type=int, default=BatteryConfig.sweeps)
    ap.add_argument("--out", type=Path, default=Path("runs/mc_vs_enumeration"))
    args = ap.parse_args()
    frac = run(BatteryConfig(n_seeds=args.seeds, sweeps=args.sweeps), args.out)
    print(f"fraction within 3 sigma: {frac:.4f}")


if __name__ == "__main__":
    main()

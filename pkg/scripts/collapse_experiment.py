"""Nearest-neighbour vs improved-stencil 2D Ising runs: does xi/L as a
function of the renormalized coupling fall on one curve for both cutoffs?"""

import argparse
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from trivlab.artifacts import write_csv, write_json
from trivlab.lattice_phi4 import LatticeSpec, collapse_test, run_mc
from trivlab.runners import POINT_HEADER, run_seeds


@dataclass
class CollapseConfig:
    side: int = 16
    nn_kappas: list = field(default_factory=lambda: list(np.linspace(0.395, 0.44, 7)))
    improved_kappas: list = field(default_factory=lambda: list(np.linspace(0.333, 0.363, 7)))
    sweeps: int = 50000
    therm: int = 2000
    threshold: float = 2.0
    seed: int = 11


def run(cfg: CollapseConfig):
    specs = [LatticeSpec.nearest_neighbor(2, cfg.side, float(k)) for k in cfg.nn_kappas]
    specs += [LatticeSpec.improved(2, cfg.side, float(k)) for k in cfg.improved_kappas]
    runs = [(s, run_mc(s, cfg.sweeps, cfg.therm, seed)) for s, seed in zip(specs, run_seeds(cfg.seed, len(specs)))]
    return collapse_test(runs, threshold=cfg.threshold)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[CollapseConfig.seed])
    ap.add_argument("--sweeps", type=int, default=CollapseConfig.sweeps)
    ap.add_argument("--side", type=int, default=CollapseConfig.side)
    ap.add_argument("--out", type=Path, default=Path("runs/collapse_experiment"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for seed in args.seeds:
        rep = run(CollapseConfig(side=args.side, sweeps=args.sweeps, seed=seed))
        write_csv(args.out / f"points_seed{seed}.csv", POINT_HEADER, [p.to_row() for p in rep.points])
        d = rep.to_dict()
        d.pop("points")
        write_json(args.out / f"collapse_seed{seed}.json", d)
        print(f"seed {seed}: statistic {rep.statistic:.3f} (dof {rep.dof}, degree {rep.degree}) -> {'pass' if rep.passed else 'fail'}")


if __name__ == "__main__":
    main()

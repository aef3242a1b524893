"""Scan the structural constant c = sigma/m^2 against a toy renormalized
beta function with stable roots at 1 and 2 (and an unstable one at 1.5),
and against the Wilson strong-coupling curve sigma/m^2(g0^2)."""

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from trivlab import gauge_sc, rgflow
from trivlab.artifacts import write_csv


@dataclass
class ScanConfig:
    c_min: float = 1e-3
    c_max: float = 5.0
    n_c: int = 60
    lo: float = 0.01
    hi: float = 10.0


TOY = rgflow.BetaFunction((-3.0, 6.5, -4.5, 1.0), 1)  # u (u - 1)(u - 1.5)(u - 2)


def toy_ratio(g: float) -> float:
    return g - 0.5 if g < 1.75 else 3.0 + (g - 2.0) ** 2


def run(cfg: ScanConfig, out: Path) -> list:
    cs = sorted(set(np.geomspace(cfg.c_min, cfg.c_max, cfg.n_c).tolist()) | {0.5, 3.0})
    verdicts = [gauge_sc.mass_gap_scan(TOY, toy_ratio, c, lo=cfg.lo, hi=cfg.hi) for c in cs]
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "verdicts.csv", ["c", "verdict", "wilson_regime"], [(v.c, v.verdict.value, v.wilson_regime) for v in verdicts])
    g = np.linspace(0.2, 3.0, 300)
    write_csv(out / "toy_ratio.csv", ["g", "sigma_over_m2"], [(x, toy_ratio(x)) for x in g])
    wilson = gauge_sc.sigma_over_m2_table(gauge_sc.StrongCouplingModel(3.0), np.geomspace(0.5, 1e4, 200))
    write_csv(out / "wilson_ratio.csv", ["g0_sq", "sigma", "mass", "sigma_over_m2"], wilson)
    return verdicts


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("runs/mass_gap_construction"))
    ap.add_argument("--n-c", type=int, default=ScanConfig.n_c)
    args = ap.parse_args()
    verdicts = run(ScanConfig(n_c=args.n_c), args.out)
    print(f"fixed points {verdicts[0].fixed_points}, special values {verdicts[0].special_values}")
    print(f"Wilson window: c <= {gauge_sc.wilson_window():.5f}")
    wilson = [v.c for v in verdicts if v.wilson_regime]
    print(f"{len(wilson)} values of c in the Wilson regime, up to c = {max(wilson, default=float('nan')):.4g}")
    for v in verdicts:
        if v.verdict is not gauge_sc.GapVerdict.FINITE:
            print(f"c = {v.c:.6g}: {v.verdict.value}")


if __name__ == "__main__":
    main()

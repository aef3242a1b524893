"""Coupling flows u(lnL) for the three reference beta functions, with their
triviality verdicts: u^2 (Landau pole), 4u (Wilson-trivial only) and the
strong-coupling Yang-Mills form (asymptotically free)."""

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from trivlab import rgflow
from trivlab.artifacts import write_csv, write_json


@dataclass
class PanelConfig:
    u_init: float = 1.0
    lnL_down: float = -3.0
    lnL_up: float = 10.0
    n_samples: int = 400


PANELS = {
    "quadratic": rgflow.BetaFunction((1.0,), 2, asymptote=(1.0, 2.0)),
    "linear": rgflow.BetaFunction((4.0,), 1, asymptote=(4.0, 1.0)),
    "yang_mills": rgflow.BetaFunction((-0.1, -0.01), 2, crossover_u=1.0, closed_form_id="yang_mills_strong"),
}


def run(cfg: PanelConfig, out: Path) -> dict:
    rows, verdicts = [], {}
    for name, beta in PANELS.items():
        for target in (cfg.lnL_down, cfg.lnL_up):
            res = rgflow.integrate_flow(beta, cfg.u_init, 0.0, target, sample_at=np.linspace(0.0, target, cfg.n_samples))
            rows.extend((name, lnl, u) for lnl, u in zip(res.lnL, res.u))
        v = rgflow.classify_triviality(beta)
        verdicts[name] = {"verdict": v.verdict.value, "pole_lnL": rgflow.detect_landau_pole(beta, cfg.u_init, 0.0, cfg.lnL_down - 50)}
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "flow_panels.csv", ["panel", "lnL", "u"], sorted(rows, key=lambda r: (r[0], r[1])))
    write_json(out / "verdicts.json", verdicts)
    return verdicts


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("runs/flow_panels"))
    ap.add_argument("--u-init", type=float, default=PanelConfig.u_init)
    args = ap.parse_args()
    for name, v in run(PanelConfig(u_init=args.u_init), args.out).items():
        print(f"{name:12s} {v['verdict']:20s} pole at lnL = {v['pole_lnL']}")


if __name__ == "__main__":
    main()

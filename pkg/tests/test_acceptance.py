"""Acceptance suite: twelve end-to-end criteria, one PASS/FAIL line each.

Under pytest the lines are printed in the terminal summary; running this
file directly prints them as each criterion finishes.
"""

import filecmp
import math
import time
from pathlib import Path

import numpy as np
import pytest
import yaml

from trivlab import gauge_sc, rgflow, wilson_space
from trivlab.cli import main
from trivlab.config import load_config
from trivlab.lattice_phi4 import (
    IncomparableRunsError,
    LatticeSpec,
    build_spectrum,
    collapse_test,
    exact_enumeration,
    improved_couplings,
    nearest_neighbor_couplings,
    run_mc,
)
from trivlab.runners import run_seeds
from trivlab.selfcheck import run_selfcheck

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
RESULTS: dict[int, str] = {}


def record(number: int, title: str, budget_s: float, fn):
    """Run one criterion, record its line and fail the test on a miss."""
    t0 = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - t0
    in_time = elapsed < budget_s
    verdict = "PASS" if ok and in_time else "FAIL"
    line = f"criterion {number:2d} {verdict}  {title}: {detail}; {elapsed:.2f} s (budget {budget_s:g} s)"
    RESULTS[number] = line
    print(line, flush=True)
    assert ok, line
    assert in_time, line


# -- 1 -------------------------------------------------------------------------


def closed_form_flow():
    beta = rgflow.BetaFunction((1.0,), 2, asymptote=(1.0, 2.0))
    worst = 0.0
    for target in (-0.9, 10.0):
        grid = np.linspace(0.0, target, 401)
        res = rgflow.integrate_flow(beta, 1.0, 0.0, target, sample_at=grid)
        worst = max(worst, float(np.max(np.abs(res.u - 1.0 / (1.0 + res.lnL)))))
    pole = rgflow.detect_landau_pole(beta, 1.0, 0.0, -5.0)
    ok = worst <= 1e-8 and pole is not None and abs(pole + 1.0) <= 1e-6
    return ok, f"max |u - 1/(1+lnL)| = {worst:.2e}, pole at {pole!r}"


def test_criterion_01_closed_form_flow():
    record(1, "closed-form flow oracle", 1.0, closed_form_flow)


# -- 2 -------------------------------------------------------------------------


def trichotomy():
    cases = [
        (rgflow.BetaFunction((1.0,), 2, asymptote=(1.0, 2.0)), rgflow.Verdict.TRULY_TRIVIAL),
        (rgflow.BetaFunction((4.0,), 1, asymptote=(4.0, 1.0)), rgflow.Verdict.WILSON_TRIVIAL_ONLY),
        (rgflow.BetaFunction((-0.1, -0.01), 2, crossover_u=1.0, closed_form_id="yang_mills_strong"), rgflow.Verdict.NON_TRIVIAL),
    ]
    got = [rgflow.classify_triviality(b).verdict for b, _ in cases]
    return all(g is w for g, (_, w) in zip(got, cases)), ", ".join(g.value for g in got)


def test_criterion_02_trichotomy():
    record(2, "triviality trichotomy", 1.0, trichotomy)


# -- 3 -------------------------------------------------------------------------


def bare_charge_limit():
    worst_end = 0.0
    monotone = True
    for g2 in (0.1, 1.0, 10.0):
        for b0 in (0.05, 1.0, 4.0):
            end = 1e6 / (abs(b0) * g2)
            xs = np.geomspace(1e-6, end, 200)
            vals = np.array([rgflow.one_loop_bare_charge(g2, b0, x) for x in xs])
            monotone &= bool(np.all(np.diff(vals) < 0))
            worst_end = max(worst_end, float(vals[-1]))
    return monotone and worst_end < 1e-3, f"strictly decreasing: {monotone}, largest end value {worst_end:.2e}"


def test_criterion_03_bare_charge_limit():
    record(3, "one-loop bare charge vanishes", 1.0, bare_charge_limit)


# -- 4 -------------------------------------------------------------------------


def manifold_oracle():
    quad = wilson_space.FlowField.from_velocity(2, (((1.0, (1, 0)),), ((-1.0, (0, 1)), (1.0, (2, 0)))))
    fp = wilson_space.linearize_at(quad, [0.0, 0.0])
    dev = 0.0
    for branch in (1, -1):
        tr = wilson_space.trace_unstable_manifold(quad, fp, 1.5, branch=branch)
        sel = np.abs(tr.p[:, 0]) <= 1.0
        dev = max(dev, float(np.max(np.abs(tr.p[sel, 1] - tr.p[sel, 0] ** 2 / 3.0))))
    saddle = wilson_space.FlowField.from_velocity(2, (((1.0, (1, 0)),), ((-1.0, (0, 1)),)))
    tr = wilson_space.trace_trajectory(saddle, [1e-3, 1.0], 6.0, n_samples=300)
    drift = float(np.max(np.abs(tr.p[:, 0] * tr.p[:, 1] - 1e-3)))
    return dev <= 1e-5 and drift <= 1e-8, f"max |p2 - p1^2/3| = {dev:.2e}, p1 p2 drift = {drift:.2e}"


def test_criterion_04_manifold_oracle():
    record(4, "manifold oracle", 5.0, manifold_oracle)


# -- 5 -------------------------------------------------------------------------


def two_step_limit():
    quad = wilson_space.FlowField.from_velocity(2, (((1.0, (1, 0)),), ((-1.0, (0, 1)), (1.0, (2, 0)))))
    fp = wilson_space.linearize_at(quad, [0.0, 0.0])
    eps = wilson_space.LAUNCH_EPS
    tab = wilson_space.parametric_representation(
        quad,
        {"p1": lambda p: float(p[0]), "p2": lambda p: float(p[1])},
        fp,
        np.linspace(0.1, 0.9, 17),
        mass_key="p1",
        launch_offsets=(eps, eps / 2, eps / 4),
    )
    spread = tab.spread("p2")
    return spread <= 1e-4, f"spread of p2(p1) across offsets (eps, eps/2, eps/4) = {spread:.2e}"


def test_criterion_05_two_step_limit():
    record(5, "two-step-limit independence", 10.0, two_step_limit)


# -- 6 -------------------------------------------------------------------------


def sum_rules():
    nn = build_spectrum(nearest_neighbor_couplings(2))
    imp = build_spectrum(improved_couplings(2))
    ok = abs(nn.p2_coeff - 1.0) <= 1e-10 and abs(nn.p4_coeff + 1.0 / 12.0) <= 1e-8 and abs(imp.p4_coeff) <= 1e-10
    return ok, f"p2 = {nn.p2_coeff!r}, p4(nn) = {nn.p4_coeff!r}, p4(improved) = {imp.p4_coeff!r}"


def test_criterion_06_sum_rules():
    record(6, "spectrum sum rules", 1.0, sum_rules)


# -- 7 -------------------------------------------------------------------------


def mc_battery():
    total = agree = 0
    worst = (101, None)
    for side in (2, 4):
        for kappa in (0.1, 0.3, 0.5):
            spec = LatticeSpec.nearest_neighbor(2, side, kappa)
            exact = exact_enumeration(spec)
            good = 0
            for seed in range(100):
                mc = run_mc(spec, 10000, 500, seed)
                good += abs(mc.m2.value - exact.m2.value) <= 3 * mc.m2.error and abs(mc.m4.value - exact.m4.value) <= 3 * mc.m4.error
            total += 100
            agree += good
            worst = min(worst, (good, f"{side}x{side} kappa={kappa}"), key=lambda w: w[0])
    frac = agree / total
    return frac >= 0.99, f"{agree}/{total} runs within 3 sigma on M^2 and M^4 ({frac:.2%}); worst {worst[1]} with {worst[0]}/100"


def test_criterion_07_mc_battery():
    record(7, "MC vs enumeration battery", 300.0, mc_battery)


# -- 8 -------------------------------------------------------------------------


def collapse_property():
    exp = load_config(CONFIGS / "collapse_2d.yaml")
    p = exp.params
    specs = [r.build() for r in p.runs]
    runs = [(s, run_mc(s, p.sweeps, p.therm, seed, n_cluster=p.n_cluster, n_blocks=p.n_blocks)) for s, seed in zip(specs, run_seeds(exp.seed, len(specs)))]
    dup = collapse_test(runs[:4] + runs[:4]).statistic
    rep = collapse_test(runs, threshold=exp.tolerances["threshold"], max_degree=p.max_degree)
    spec3 = LatticeSpec.nearest_neighbor(3, 4, 0.2)
    try:
        collapse_test([runs[0], (spec3, run_mc(spec3, 500, 50, 1))])
        rejected = False
    except IncomparableRunsError:
        rejected = True
    ok = dup == 0.0 and rep.passed and rejected
    return ok, f"duplicate statistic {dup!r}; nn vs improved statistic {rep.statistic:.3f} (dof {rep.dof}, threshold {rep.threshold}); 2D vs 3D rejected: {rejected}"


def test_criterion_08_collapse():
    record(8, "collapse property", 1800.0, collapse_property)


# -- 9 -------------------------------------------------------------------------


def strong_coupling():
    p = gauge_sc.wilson_strong_coupling(gauge_sc.StrongCouplingModel(3.0))
    exact = math.isclose(p.sigma, math.log(9.0), rel_tol=1e-15) and math.isclose(p.mass, 4 * math.log(9.0), rel_tol=1e-15)
    worst = 0.0
    for g in np.geomspace(1.0 / 3.0 * (1 + 1e-9), 1e6, 200):
        for a in (0.1, 1.0, 7.0):
            q = gauge_sc.wilson_strong_coupling(gauge_sc.StrongCouplingModel(float(g), a))
            worst = max(worst, abs(gauge_sc.invert_bare_charge(q.sigma, a) / g - 1), abs(gauge_sc.invert_from_mass(q.mass, a) / g - 1))
    factors = [gauge_sc.plaquette_scaling(n).ratio_factor for n in (1, 2, 3, 4, 8)]
    scaling = all(math.isclose(f, n, rel_tol=1e-12) for f, n in zip(factors, (1, 2, 3, 4, 8)))
    return exact and worst <= 1e-12 and scaling, f"sigma = {p.sigma!r}, m = {p.mass!r}, round trip {worst:.1e}, ratio factors {factors}"


def test_criterion_09_strong_coupling():
    record(9, "strong-coupling formulas", 1.0, strong_coupling)


# -- 10 ------------------------------------------------------------------------


def transmutation():
    rep = gauge_sc.transmutation_check(
        rgflow.BetaFunction((-0.5,), 2), 1.0, np.linspace(0.1, 2.0, 50), constants=(1.0, 2.5), u_refs=(1.0, 0.3)
    )
    return rep.passed, f"|B - analytic| = {rep.analytic_deviation:.1e}, ratio spread = {rep.ratio_spread:.1e}"


def test_criterion_10_transmutation():
    record(10, "dimensional transmutation", 1.0, transmutation)


# -- 11 ------------------------------------------------------------------------


def mass_gap():
    single = rgflow.BetaFunction((-1.0, 1.0), 1)
    v_single = [gauge_sc.mass_gap_scan(single, lambda g: 1.0 / abs(g - 1.0), c, lo=0.01, hi=10.0).verdict for c in (0.01, 0.5, 1.7, 3.0, 100.0)]
    toy = rgflow.BetaFunction((-3.0, 6.5, -4.5, 1.0), 1)

    def ratio(g):
        return g - 0.5 if g < 1.75 else 3.0 + (g - 2.0) ** 2

    toy_v = {c: gauge_sc.mass_gap_scan(toy, ratio, c, lo=0.01, hi=10.0) for c in (0.5, 3.0, 1.7)}
    small = gauge_sc.mass_gap_scan(toy, ratio, 0.01, lo=0.01, hi=10.0)
    ok = (
        all(v is gauge_sc.GapVerdict.FINITE for v in v_single)
        and toy_v[0.5].verdict is gauge_sc.GapVerdict.VANISHES
        and toy_v[3.0].verdict is gauge_sc.GapVerdict.VANISHES
        and toy_v[1.7].verdict is gauge_sc.GapVerdict.FINITE
        and small.verdict is gauge_sc.GapVerdict.FINITE
        and small.wilson_regime
    )
    return ok, (
        f"single root: {sorted({v.value for v in v_single})}; toy c0 = {toy_v[1.7].special_values}: "
        f"0.5 -> {toy_v[0.5].verdict.value}, 3.0 -> {toy_v[3.0].verdict.value}, 1.7 -> {toy_v[1.7].verdict.value}; "
        f"c = 0.01 -> {small.verdict.value} (Wilson regime {small.wilson_regime})"
    )


def test_criterion_11_mass_gap():
    record(11, "mass-gap scan", 5.0, mass_gap)


# -- 12 ------------------------------------------------------------------------


def reproducibility(tmp: Path):
    identical = True
    for name in ("lattice_2x2.yaml", "flow_u2.yaml", "massgap_toy.yaml"):
        dirs = []
        for root in ("a", "b"):
            if main(["run", str(CONFIGS / name), "--output-root", str(tmp / root), "--quiet"]) != 0:
                return False, f"run of {name} failed"
        for root in ("a", "b"):
            dirs.append(next(d for d in (tmp / root).iterdir() if d.name.startswith(name[:-5])))
        files = sorted(f.name for f in dirs[0].iterdir() if f.name != "manifest.json")
        _, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], files, shallow=False)
        identical &= not mismatch and not errors
    t0 = time.perf_counter()
    rep = run_selfcheck()
    dt = time.perf_counter() - t0
    ok = identical and rep.passed and dt < 60.0
    return ok, f"artifacts byte-identical: {identical}; selfcheck {'passed' if rep.passed else 'failed'} in {dt:.1f} s"


def test_criterion_12_reproducibility(tmp_path):
    record(12, "reproducibility and selfcheck", 120.0, lambda: reproducibility(tmp_path))


if __name__ == "__main__":
    import tempfile

    failed = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_criterion_")):
        try:
            if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(Path(d))
            else:
                fn()
        except AssertionError:
            failed += 1
    raise SystemExit(1 if failed else 0)

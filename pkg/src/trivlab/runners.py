"""Experiment runners: one function per config kind, writing into a staged run."""

from __future__ import annotations

import numpy as np

from . import gauge_sc, rgflow, wilson_space
from .artifacts import StagedRun
from .config import Experiment
from .lattice_phi4 import collapse as collapse_mod
from .lattice_phi4 import exact_enumeration, run_mc


def run_flow(exp: Experiment, run: StagedRun) -> dict:
    p = exp.params
    beta = p.beta.build()
    tol = rgflow.FlowTolerances(**exp.tolerances)
    sample_at = None if p.n_samples is None else np.linspace(p.lnL_init, p.lnL_target, p.n_samples)
    with run.timed("integrate_flow"):
        res = rgflow.integrate_flow(beta, p.u_init, p.lnL_init, p.lnL_target, tol=tol, sample_at=sample_at)
    record = res.termination_record()
    if p.classify:
        with run.timed("classify_triviality"):
            v = rgflow.classify_triviality(beta)
        record["triviality"] = {"verdict": v.verdict.value, **v.rationale()}
    run.csv("flow.csv", ["lnL", "u"], res.samples)
    run.json("termination.json", record)
    return {
        "termination": res.termination.value,
        "pole_lnL": res.pole_lnL,
        "u_window": [float(res.u.min()), float(res.u.max())],
        "lnL_window": [float(res.lnL.min()), float(res.lnL.max())],
        **({"triviality": record["triviality"]["verdict"]} if p.classify else {}),
    }


def polynomial(terms, dim: int):
    coef = np.array([c for c, _ in terms], dtype=float)
    expo = np.array([e for _, e in terms], dtype=np.int64).reshape(-1, dim)

    def fn(x):
        x = np.asarray(x, dtype=float)
        return float(np.sum(coef * np.prod(x**expo, axis=1)))

    return fn


def run_space(exp: Experiment, run: StagedRun) -> dict:
    p = exp.params
    terms = [[(c, tuple(e)) for c, e in comp] for comp in p.terms]
    if p.convention == "velocity":
        field = wilson_space.FlowField.from_velocity(p.dim, terms)
    else:
        field = wilson_space.FlowField(p.dim, terms)
    with run.timed("find_fixed_points"):
        fps = wilson_space.find_fixed_points(field, p.box, p.seeds_per_axis, merge_radius=exp.tolerances["merge_radius"])
    run.json("fixed_points.json", [fp.to_dict() for fp in fps])
    rows = []
    with run.timed("trace_unstable_manifold"):
        for i, fp in enumerate(fps):
            if fp.n_relevant != 1:
                continue
            for branch in (1, -1):
                tr = wilson_space.trace_unstable_manifold(field, fp, p.arc_budget, eps=exp.tolerances["launch_eps"], branch=branch)
                rows.extend([i, branch, *r] for r in tr.rows())
    axes = [f"p{k + 1}" for k in range(p.dim)]
    run.csv("manifold.csv", ["fixed_point", "branch", "t", *axes, "kappa"], rows)
    summary = {"fixed_points": [fp.to_dict() for fp in fps]}
    if p.parametric is not None:
        spec = p.parametric
        if not 0 <= spec.fixed_point < len(fps):
            raise wilson_space.PreconditionError(f"fixed point index {spec.fixed_point} out of range ({len(fps)} found)")
        obs = {k: polynomial(v, p.dim) for k, v in spec.observables.items()}
        with run.timed("parametric_representation"):
            tab = wilson_space.parametric_representation(
                field,
                obs,
                fps[spec.fixed_point],
                spec.ratios,
                mass_key=spec.mass_key,
                launch_offsets=spec.launch_offsets,
                base_point=spec.base_point,
                base_distance=spec.base_distance,
            )
        run.csv("parametric.csv", ["offset", "ratio", "kappa", *obs], tab.rows())
        summary["parametric_spread"] = {k: tab.spread(k) for k in obs}
        summary["parametric_deviation_from_ideal"] = {k: tab.deviation_from_ideal(k) for k in obs}
    return summary


def run_lattice(exp: Experiment, run: StagedRun) -> dict:
    p = exp.params
    spec = p.lattice.build()
    with run.timed("run_mc"):
        if p.write_raw:
            with open(run.path("raw.csv"), "w", encoding="utf-8", newline="") as fh:
                obs = run_mc(spec, p.sweeps, p.therm, exp.seed, n_cluster=p.n_cluster, n_blocks=p.n_blocks, raw_out=fh)
        else:
            obs = run_mc(spec, p.sweeps, p.therm, exp.seed, n_cluster=p.n_cluster, n_blocks=p.n_blocks)
    out = {"lattice": spec.to_dict(), "seed": exp.seed, "observables": obs.to_dict()}
    if p.exact:
        with run.timed("exact_enumeration"):
            out["exact"] = exact_enumeration(spec).to_dict()
    run.json("observables.json", out)
    return {
        "lattice": spec.to_dict(),
        "m2": list(obs.m2),
        "xi": list(obs.xi),
        "g": list(obs.g_renorm),
        "tau_int": obs.tau_int,
        "equilibrated": obs.equilibrated,
    }


def run_seeds(seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n)]


POINT_HEADER = ["family", "side", "kappa", "g", "g_err", "y", "y_err"]


def run_collapse(exp: Experiment, run: StagedRun) -> dict:
    p = exp.params
    specs = [r.build() for r in p.runs]
    dims = {s.dim for s in specs}
    if len(dims) != 1:
        raise collapse_mod.IncomparableRunsError(f"runs mix dimensionalities {sorted(dims)}")
    runs = []
    with run.timed("run_mc"):
        for spec, seed in zip(specs, run_seeds(exp.seed, len(specs))):
            runs.append((spec, run_mc(spec, p.sweeps, p.therm, seed, n_cluster=p.n_cluster, n_blocks=p.n_blocks)))
    with run.timed("collapse_test"):
        rep = collapse_mod.collapse_test(runs, observable=p.observable, threshold=exp.tolerances["threshold"], max_degree=p.max_degree)
    run.csv("points.csv", POINT_HEADER, [pt.to_row() for pt in rep.points])
    run.json("collapse.json", rep.to_dict())
    return {"statistic": rep.statistic, "dof": rep.dof, "passed": rep.passed, "g_window": list(rep.g_window)}


def run_gauge(exp: Experiment, run: StagedRun) -> dict:
    p = exp.params
    c_mn = None if p.c_mn is None else {(m, n): c for m, n, c in p.c_mn}
    model = gauge_sc.StrongCouplingModel(p.g0_sq, p.a, p.k1, p.k2, c_mn, p.core)
    with run.timed("wilson_strong_coupling"):
        pred = gauge_sc.wilson_strong_coupling(model)
        ratio = gauge_sc.sigma_over_m2(model)
    out = {
        "model": {"g0_sq": model.g0_sq, "a": model.a, "k1": model.k1, "k2": model.k2},
        "prediction": pred.to_dict(),
        "sigma_over_m2": ratio,
        "round_trip": {
            "from_sigma": gauge_sc.invert_bare_charge(pred.sigma, model.a, model.k1),
            "from_mass": gauge_sc.invert_from_mass(pred.mass, model.a, model.k2),
        },
        "plaquette_scaling": {str(n): gauge_sc.plaquette_scaling(n, model.g0_sq)._asdict() for n in p.plaquette_n},
    }
    if p.g0_sq_grid:
        run.csv("ratio_table.csv", ["g0_sq", "sigma", "mass", "sigma_over_m2"], gauge_sc.sigma_over_m2_table(model, p.g0_sq_grid))
    if p.a_over_xi:
        # fixed m = 1/xi: g0^2 from the mass formula at spacing a
        run.csv("bare_charge.csv", ["a_over_xi", "g0_sq"], [(x, gauge_sc.invert_from_mass(1.0, x, model.k2)) for x in p.a_over_xi])
    if p.transmutation is not None:
        t = p.transmutation
        with run.timed("transmutation_check"):
            rep = gauge_sc.transmutation_check(
                t.beta.build(),
                t.mu,
                t.g0_grid,
                u_ref=t.u_ref,
                constants=t.constants,
                u_refs=t.u_refs,
                a=model.a,
                tol=exp.tolerances["transmutation_tol"],
            )
        out["transmutation"] = rep.to_dict()
    run.json("gauge.json", out)
    summary = {"sigma": pred.sigma, "mass": pred.mass, "sigma_over_m2": ratio, "a_over_xi": list(p.a_over_xi), "k2": model.k2}
    if p.transmutation is not None:
        summary["transmutation_passed"] = out["transmutation"]["passed"]
    return summary


def run_massgap(exp: Experiment, run: StagedRun) -> dict:
    p = exp.params
    beta = p.beta.build()
    fn = p.F_sigma.build()
    verdicts = []
    with run.timed("mass_gap_scan"):
        for c in p.c_values:
            verdicts.append(
                gauge_sc.mass_gap_scan(beta, fn, c, lo=p.lo, hi=p.hi, n_grid=p.n_grid, tol=exp.tolerances["tol"], g0_floor_sq=p.g0_floor_sq)
            )
    run.json("massgap.json", [v.to_dict() for v in verdicts])
    if p.curve is not None:
        g = np.linspace(p.curve.g_min, p.curve.g_max, p.curve.n)
        run.csv("ratio_curve.csv", ["g", "sigma_over_m2"], [(x, fn(x)) for x in g])
    return {
        "fixed_points": list(verdicts[0].fixed_points) if verdicts else [],
        "special_values": list(verdicts[0].special_values) if verdicts else [],
        "verdicts": {repr(v.c): v.verdict.value for v in verdicts},
    }


RUNNERS = {
    "flow": run_flow,
    "space": run_space,
    "lattice": run_lattice,
    "collapse": run_collapse,
    "gauge": run_gauge,
    "massgap": run_massgap,
}

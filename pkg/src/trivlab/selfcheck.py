"""Fast embedded oracle suite: closed-form flows, enumeration vs MC, round trips."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import gauge_sc, rgflow, wilson_space
from .lattice_phi4 import LatticeSpec, build_spectrum, exact_enumeration, improved_couplings, nearest_neighbor_couplings, run_mc


@dataclass
class CheckOutcome:
    name: str
    ok: bool
    detail: str


@dataclass
class SelfcheckReport:
    outcomes: list[CheckOutcome] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(o.ok for o in self.outcomes)

    @property
    def first_failure(self):
        return next((o for o in self.outcomes if not o.ok), None)

    def lines(self) -> list[str]:
        return [f"{'PASS' if o.ok else 'FAIL'} {o.name}: {o.detail}" for o in self.outcomes]


U2 = rgflow.BetaFunction((1.0,), 2)


def _closed_form_flow(tol):
    worst = 0.0
    for target in (10.0, -0.5):
        grid = np.linspace(0.0, target, 201)
        res = rgflow.integrate_flow(U2, 1.0, 0.0, target, tol=tol, sample_at=grid)
        if res.termination is not rgflow.Termination.HORIZON:
            return False, f"flow to lnL={target} ended with {res.termination.value}"
        worst = max(worst, float(np.max(np.abs(res.u - 1.0 / (1.0 + res.lnL)))))
    return worst <= 1e-8, f"max |u - 1/(1+lnL)| = {worst:.3e}"


def _pole_certification(tol):
    pole = rgflow.detect_landau_pole(U2, 1.0, 0.0, -5.0, tol=tol)
    if pole is None:
        res = rgflow.integrate_flow(U2, 1.0, 0.0, -5.0, tol=tol)
        return False, f"no certified pole ({res.termination.value}: {res.message})"
    return abs(pole + 1.0) <= 1e-6, f"pole at lnL = {pole:.12f}"


def _linear_flow(tol):
    beta = rgflow.BetaFunction((4.0,), 1)
    res = rgflow.integrate_flow(beta, 1.0, 0.0, -2.0, tol=tol, sample_at=np.linspace(0.0, -2.0, 41))
    err = float(np.max(np.abs(res.u / np.exp(-4.0 * res.lnL) - 1.0)))
    ok = res.termination is rgflow.Termination.HORIZON and err <= 1e-8
    return ok, f"{res.termination.value}, max relative error {err:.3e}"


def _trichotomy(tol):
    cases = [
        (rgflow.BetaFunction((1.0,), 2, asymptote=(1.0, 2.0)), rgflow.Verdict.TRULY_TRIVIAL),
        (rgflow.BetaFunction((4.0,), 1, asymptote=(4.0, 1.0)), rgflow.Verdict.WILSON_TRIVIAL_ONLY),
        (rgflow.BetaFunction((-0.1, -0.01), 2, crossover_u=1.0, closed_form_id="yang_mills_strong"), rgflow.Verdict.NON_TRIVIAL),
    ]
    got = [rgflow.classify_triviality(b).verdict for b, _ in cases]
    ok = all(g is want for g, (_, want) in zip(got, cases))
    return ok, ", ".join(g.value for g in got)


def _sum_rules(tol):
    nn = build_spectrum(nearest_neighbor_couplings(2))
    imp = build_spectrum(improved_couplings(2))
    ok = abs(nn.p2_coeff - 1) <= 1e-10 and abs(nn.p4_coeff + 1 / 12) <= 1e-8 and abs(imp.p4_coeff) <= 1e-10
    return ok, f"p2={nn.p2_coeff:.12f} p4(nn)={nn.p4_coeff:.12f} p4(improved)={imp.p4_coeff:.3e}"


def _enumeration_vs_mc(tol):
    spec = LatticeSpec.nearest_neighbor(2, 2, 0.3)
    exact = exact_enumeration(spec)
    mc = run_mc(spec, 20000, 500, 1)
    z2 = abs(mc.m2.value - exact.m2.value) / mc.m2.error
    z4 = abs(mc.m4.value - exact.m4.value) / mc.m4.error
    return max(z2, z4) <= 4.0, f"<M^2> off by {z2:.2f} sigma, <M^4> by {z4:.2f} sigma"


def _round_trip(tol):
    worst = 0.0
    for g in np.geomspace(1.0 / 3.0 * (1 + 1e-9), 1e6, 60):
        for a in (0.5, 1.0, 2.0):
            p = gauge_sc.wilson_strong_coupling(gauge_sc.StrongCouplingModel(float(g), a))
            for back in (gauge_sc.invert_bare_charge(p.sigma, a), gauge_sc.invert_from_mass(p.mass, a)):
                worst = max(worst, abs(back / g - 1.0))
    p = gauge_sc.wilson_strong_coupling(gauge_sc.StrongCouplingModel(3.0))
    ok = worst <= 1e-12 and math.isclose(p.sigma, math.log(9.0), rel_tol=1e-15) and math.isclose(p.mass, 4 * math.log(9.0), rel_tol=1e-15)
    return ok, f"max relative round-trip error {worst:.3e}"


def _transmutation(tol):
    rep = gauge_sc.transmutation_check(rgflow.BetaFunction((-0.5,), 2), 1.0, np.linspace(0.1, 2.0, 50), u_refs=(1.0, 0.5))
    return rep.passed, f"ratio spread {rep.ratio_spread:.3e}, |B - analytic| {rep.analytic_deviation:.3e}"


def _manifold(tol):
    field = wilson_space.FlowField.from_velocity(2, (((1.0, (1, 0)),), ((-1.0, (0, 1)), (1.0, (2, 0)))))
    fp = wilson_space.linearize_at(field, [0.0, 0.0])
    worst = 0.0
    for branch in (1, -1):
        tr = wilson_space.trace_unstable_manifold(field, fp, 1.5, branch=branch)
        sel = np.abs(tr.p[:, 0]) <= 1.0
        worst = max(worst, float(np.max(np.abs(tr.p[sel, 1] - tr.p[sel, 0] ** 2 / 3.0))))
    return worst <= 1e-5, f"max |p2 - p1^2/3| = {worst:.3e}"


CHECKS: list[tuple[str, Callable]] = [
    ("closed-form-flow", _closed_form_flow),
    ("pole-certification", _pole_certification),
    ("linear-flow", _linear_flow),
    ("triviality-trichotomy", _trichotomy),
    ("spectrum-sum-rules", _sum_rules),
    ("enumeration-vs-mc", _enumeration_vs_mc),
    ("strong-coupling-round-trip", _round_trip),
    ("transmutation", _transmutation),
    ("manifold-oracle", _manifold),
]


def run_selfcheck(overrides: dict[str, float] | None = None, *, stop_at_first: bool = True) -> SelfcheckReport:
    """Run the oracle suite; ``overrides`` replace flow tolerances (e.g. u_max)."""
    tol = rgflow.DEFAULT_TOLERANCES
    if overrides:
        unknown = set(overrides) - set(tol.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown tolerance override(s): {sorted(unknown)}")
        tol = replace(tol, **overrides)
    rep = SelfcheckReport()
    for name, fn in CHECKS:
        try:
            ok, detail = fn(tol)
        except Exception as exc:  # a crash is a failed check, reported by name
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        rep.outcomes.append(CheckOutcome(name, bool(ok), detail))
        if not ok and stop_at_first:
            break
    return rep

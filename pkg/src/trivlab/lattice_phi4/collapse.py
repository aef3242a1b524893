"""Data-collapse test: do runs with different cutoffs fall on one curve
y(g), y a dimensionless observable?"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .observables import ObservableSet, dimensionless_observable
from .spectrum import LatticeSpec

DEFAULT_THRESHOLD = 2.0
MAX_DEGREE = 3
ROUNDING_FLOOR = 1e-12


class IncomparableRunsError(ValueError):
    pass


@dataclass(frozen=True)
class CollapsePoint:
    family: str
    side: int
    kappa: float
    g: float
    g_err: float
    y: float
    y_err: float

    def to_row(self) -> list:
        return [self.family, self.side, repr(self.kappa), repr(self.g), repr(self.g_err), repr(self.y), repr(self.y_err)]


@dataclass(frozen=True)
class CollapseReport:
    """``statistic`` is chi^2 per degree of freedom about the common fit,
    with effective variance y_err^2 + (f'(g) g_err)^2."""

    points: tuple[CollapsePoint, ...] = field(repr=False)
    observable: str
    coefficients: tuple[float, ...]
    degree: int
    statistic: float
    dof: int
    threshold: float
    passed: bool
    g_window: tuple[float, float]
    g_centre: float = 0.0
    g_scale: float = 1.0

    def curve(self, g) -> np.ndarray:
        x = (np.asarray(g, dtype=float) - self.g_centre) / self.g_scale
        return np.polynomial.polynomial.polyval(x, np.array(self.coefficients))

    def to_dict(self) -> dict:
        return {
            "observable": self.observable,
            "degree": self.degree,
            "coefficients": list(self.coefficients),
            "statistic": self.statistic,
            "dof": self.dof,
            "threshold": self.threshold,
            "passed": self.passed,
            "g_window": list(self.g_window),
            "g_centre": self.g_centre,
            "g_scale": self.g_scale,
            "points": [p.__dict__ for p in self.points],
        }


def collapse_points(runs: Sequence[tuple[LatticeSpec, ObservableSet]], observable: str = "xi_over_side") -> list[CollapsePoint]:
    if len(runs) < 2:
        raise ValueError("collapse needs at least two runs")
    dims = {spec.dim for spec, _ in runs}
    if len(dims) != 1:
        raise IncomparableRunsError(f"runs mix dimensionalities {sorted(dims)}")
    pts = []
    for spec, obs in runs:
        if not obs.xi_defined:
            raise IncomparableRunsError(f"correlation length undefined for run at kappa={spec.kappa}")
        y = dimensionless_observable(obs, observable)
        pts.append(CollapsePoint(spec.family_key(), spec.side, spec.kappa, obs.g_renorm.value, obs.g_renorm.error, y.value, y.error))
    return pts


def collapse_test(
    runs: Sequence[tuple[LatticeSpec, ObservableSet]],
    *,
    observable: str = "xi_over_side",
    threshold: float = DEFAULT_THRESHOLD,
    max_degree: int = MAX_DEGREE,
) -> CollapseReport:
    return fit_collapse(collapse_points(runs, observable), observable=observable, threshold=threshold, max_degree=max_degree)


def _check_overlap(points: Sequence[CollapsePoint]) -> tuple[float, float]:
    fams: dict[str, list[CollapsePoint]] = {}
    for p in points:
        fams.setdefault(p.family, []).append(p)
    lo = max(min(p.g - p.g_err for p in ps) for ps in fams.values())
    hi = min(max(p.g + p.g_err for p in ps) for ps in fams.values())
    if len(fams) > 1 and lo > hi:
        ranges = {f: (min(p.g for p in ps), max(p.g for p in ps)) for f, ps in fams.items()}
        raise IncomparableRunsError(f"g ranges of the families do not overlap: {ranges}")
    return lo, hi


def _monotone(coef: np.ndarray, x_lo: float, x_hi: float) -> bool:
    if len(coef) <= 2:
        return True
    d = np.polynomial.polynomial.polyval(np.linspace(x_lo, x_hi, 201), np.polynomial.polynomial.polyder(coef))
    return bool(np.all(d >= 0) or np.all(d <= 0))


def fit_collapse(
    points: Sequence[CollapsePoint],
    *,
    observable: str = "xi_over_side",
    threshold: float = DEFAULT_THRESHOLD,
    max_degree: int = MAX_DEGREE,
) -> CollapseReport:
    """Fit a monotone polynomial y(g) to all points and return the reduced chi^2.

    The fit is done for y - y[0] in a centred, scaled g variable so that
    identical inputs give residuals of exactly zero.
    """
    if len(points) < 2:
        raise ValueError("collapse needs at least two points")
    window = _check_overlap(points)
    g = np.array([p.g for p in points])
    ge = np.array([p.g_err for p in points])
    y = np.array([p.y for p in points])
    ye = np.array([p.y_err for p in points])
    centre = 0.5 * (g.max() + g.min())
    half = 0.5 * (g.max() - g.min())
    x = (g - centre) / half if half > 0 else np.zeros_like(g)
    xe = ge / half if half > 0 else np.zeros_like(ge)
    dy = y - y[0]
    n = len(points)
    n_distinct = len(set(g.tolist()))
    deg = max(0, min(max_degree, n_distinct - 1, n - 2))
    var = np.where(ye > 0, ye**2, 0.0)
    while True:
        coef = _weighted_fit(x, dy, var, deg)
        # effective variance: one refinement with the fitted slope
        slope = np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(coef)) if deg else np.zeros_like(x)
        var_eff = var + (slope * xe) ** 2
        coef = _weighted_fit(x, dy, var_eff, deg)
        if deg <= 1 or _monotone(coef, x.min(), x.max()):
            break
        deg -= 1
    resid = dy - np.polynomial.polynomial.polyval(x, coef)
    # residuals at the rounding level of the data are exact fits (duplicated runs)
    resid[np.abs(resid) <= ROUNDING_FLOOR * max(float(np.max(np.abs(y))), 1e-300)] = 0.0
    dof = n - (deg + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(resid == 0.0, 0.0, resid**2 / var_eff)
    stat = float(np.sum(terms) / dof) if dof > 0 else math.nan
    # coefficients of y(g) in the scaled variable, with the y[0] offset restored
    full = coef.copy()
    full[0] += y[0]
    return CollapseReport(
        tuple(points),
        observable,
        tuple(float(c) for c in full),
        deg,
        stat,
        dof,
        threshold,
        bool(stat <= threshold),
        (float(window[0]), float(window[1])),
        float(centre),
        float(half) if half > 0 else 1.0,
    )


def _weighted_fit(x, y, var, deg) -> np.ndarray:
    w = np.where(var > 0, 1.0 / np.sqrt(np.where(var > 0, var, 1.0)), 1.0)
    a = np.vander(x, deg + 1, increasing=True) * w[:, None]
    coef, *_ = np.linalg.lstsq(a, y * w, rcond=None)
    return coef

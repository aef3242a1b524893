"""One-parameter Gell-Mann--Low flows.

The running coupling obeys ``-du/dlnL = beta(u)``.  Integrating toward
small ``L`` with a positive, fast-growing beta hits a Landau pole at a
finite scale; a beta that grows at most linearly reaches infinity only as
``L -> 0``.  The module also classifies a beta function as Wilson-trivial,
truly trivial, or non-trivial from its sign pattern and large-coupling law.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize


class BetaValidationError(ValueError):
    pass


class ClassificationRefused(ValueError):
    pass


def _yang_mills_strong(u: float) -> float:
    if u == 0.0:
        return 0.0
    return -u * math.log(3.0 * u)


# name -> (callable, effective power-law exponent of |beta| at infinity)
CLOSED_FORMS: dict[str, tuple[Callable[[float], float], float]] = {
    "yang_mills_strong": (_yang_mills_strong, 1.0),
}


@dataclass(frozen=True)
class BetaFunction:
    """Series plus optional large-coupling law.

    ``beta(u) = sum_k series_coeffs[k] * u**(power_offset + k)`` below
    ``crossover_u``.  Above ``2 * crossover_u`` the large-coupling branch is
    used: the closed form named by ``closed_form_id`` if given, otherwise
    ``A * u**alpha`` from ``asymptote``.  In between the two are blended
    linearly.  Without a crossover the series (or closed form alone, if
    there is no series) is used everywhere and ``asymptote`` only declares
    the law at infinity.
    """

    series_coeffs: tuple[float, ...] = ()
    power_offset: int = 1
    asymptote: Optional[tuple[float, float]] = None
    crossover_u: Optional[float] = None
    closed_form_id: Optional[str] = None
    variable: str = "g"

    def __post_init__(self):
        object.__setattr__(self, "series_coeffs", tuple(float(c) for c in self.series_coeffs))
        if self.asymptote is not None:
            object.__setattr__(self, "asymptote", tuple(float(x) for x in self.asymptote))
        if self.power_offset < 0:
            raise BetaValidationError("power_offset must be >= 0")
        if self.power_offset == 0 and self.series_coeffs and self.series_coeffs[0] != 0.0:
            raise BetaValidationError("constant term in beta series: beta(0) must vanish")
        if self.asymptote is not None and len(self.asymptote) != 2:
            raise BetaValidationError("asymptote must be (amplitude, exponent)")
        if self.closed_form_id is not None and self.closed_form_id not in CLOSED_FORMS:
            raise BetaValidationError(f"unknown closed form {self.closed_form_id!r}")
        if self.crossover_u is not None:
            if not self.crossover_u > 0:
                raise BetaValidationError("crossover_u must be positive")
            if self.asymptote is None and self.closed_form_id is None:
                raise BetaValidationError("crossover_u given without a large-coupling branch")
        if self.asymptote is not None and self.asymptote[1] < 0 and self.crossover_u is None:
            raise BetaValidationError("negative asymptotic exponent needs a crossover")

    def __call__(self, u: float) -> float:
        return eval_beta(self, u)

    @property
    def has_large_coupling_law(self) -> bool:
        return self.asymptote is not None or self.closed_form_id is not None

    def scaled(self, factor: float) -> "BetaFunction":
        """Same beta multiplied by ``factor``."""
        asym = None if self.asymptote is None else (self.asymptote[0] * factor, self.asymptote[1])
        if self.closed_form_id is not None and factor != 1.0:
            raise BetaValidationError("closed forms cannot be rescaled")
        return BetaFunction(
            tuple(c * factor for c in self.series_coeffs),
            self.power_offset,
            asym,
            self.crossover_u,
            self.closed_form_id,
            self.variable,
        )

    def _closed_form_at_infinity(self) -> bool:
        return self.closed_form_id is not None and (self.crossover_u is not None or not self.series_coeffs)

    def large_coupling_law(self) -> Optional[tuple[float, float]]:
        """(amplitude, exponent) governing beta at infinity, if it is a power law."""
        if self._closed_form_at_infinity():
            return None
        if self.asymptote is not None:
            return self.asymptote
        for k in range(len(self.series_coeffs) - 1, -1, -1):
            if self.series_coeffs[k] != 0.0:
                return (self.series_coeffs[k], float(self.power_offset + k))
        return None

    def asymptotic_exponent(self) -> Optional[float]:
        if self._closed_form_at_infinity():
            return CLOSED_FORMS[self.closed_form_id][1]
        law = self.large_coupling_law()
        return None if law is None else law[1]


def _series(beta: BetaFunction, u: float) -> float:
    acc = 0.0
    for c in reversed(beta.series_coeffs):
        acc = acc * u + c
    return acc * u**beta.power_offset if beta.power_offset else acc


def _large(beta: BetaFunction, u: float) -> float:
    if beta.closed_form_id is not None:
        return CLOSED_FORMS[beta.closed_form_id][0](u)
    amp, alpha = beta.asymptote
    return amp * u**alpha


def eval_beta(beta: BetaFunction, u: float) -> float:
    if u < 0 or math.isnan(u):
        raise ValueError(f"coupling must be nonnegative, got {u}")
    if u == 0.0:
        return 0.0
    c = beta.crossover_u
    if c is None:
        if beta.series_coeffs or beta.closed_form_id is None:
            return _series(beta, u)
        return _large(beta, u)
    if u <= c:
        return _series(beta, u)
    if u >= 2.0 * c:
        return _large(beta, u)
    w = (u - c) / c
    return (1.0 - w) * _series(beta, u) + w * _large(beta, u)


# ---------------------------------------------------------------------------
# flow integration


@dataclass(frozen=True)
class FlowTolerances:
    u_max: float = 1e12
    stall_tol: float = 1e-14
    rtol: float = 1e-12
    atol: float = 1e-14
    pole_tol: float = 1e-6


DEFAULT_TOLERANCES = FlowTolerances()


class Termination(enum.Enum):
    POLE = "PoleDetected"
    HORIZON = "HorizonReached"
    FIXED_POINT = "FixedPointReached"
    UNDERFLOW = "Underflow"
    # threshold crossed but the blow-up is not certifiable as a finite-scale pole
    RUNAWAY = "Runaway"


@dataclass(frozen=True)
class FlowResult:
    lnL: np.ndarray
    u: np.ndarray
    termination: Termination
    pole_lnL: Optional[float] = None
    fixed_point_u: Optional[float] = None
    message: str = ""

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.lnL.tolist(), self.u.tolist()))

    def termination_record(self) -> dict:
        return {
            "termination": self.termination.value,
            "pole_lnL": self.pole_lnL,
            "fixed_point_u": self.fixed_point_u,
            "final_lnL": float(self.lnL[-1]),
            "final_u": float(self.u[-1]),
            "message": self.message,
        }


def _tail_length(beta: BetaFunction, u_end: float) -> Optional[float]:
    """Remaining log-scale distance to the pole, int_{u_end}^inf du/beta.

    Returns None when the large-coupling law does not guarantee convergence.
    """
    alpha = beta.asymptotic_exponent()
    if alpha is None or alpha <= 1.0:
        return None
    law = beta.large_coupling_law()
    if law is None or law[0] <= 0:
        return None
    amp, alpha = law
    c = beta.crossover_u
    analytic_from = u_end if c is None else max(u_end, 2.0 * c)
    if c is not None or len([x for x in beta.series_coeffs if x != 0.0]) <= 1:
        tail = analytic_from ** (1.0 - alpha) / (amp * (alpha - 1.0))
        if analytic_from > u_end:
            head, _ = integrate.quad(lambda x: 1.0 / eval_beta(beta, x), u_end, analytic_from)
            tail += head
        return tail
    tail, _ = integrate.quad(lambda x: 1.0 / eval_beta(beta, x), u_end, np.inf, epsrel=1e-10)
    return tail


def integrate_flow(
    beta: BetaFunction,
    u_init: float,
    lnL_init: float,
    lnL_target: float,
    *,
    tol: FlowTolerances = DEFAULT_TOLERANCES,
    sample_at: Optional[Sequence[float]] = None,
) -> FlowResult:
    """Integrate ``-du/dlnL = beta(u)`` from ``lnL_init`` toward ``lnL_target``.

    ``sample_at`` (ordered in the direction of integration) replaces the
    solver's own steps as output samples.
    """
    if u_init < 0:
        raise ValueError("u_init must be nonnegative")
    if lnL_target == lnL_init:
        raise ValueError("lnL_target must differ from lnL_init")
    b0 = eval_beta(beta, u_init)
    if abs(b0) < tol.stall_tol:
        return FlowResult(
            np.array([lnL_init, lnL_target], dtype=float),
            np.array([u_init, u_init], dtype=float),
            Termination.FIXED_POINT,
            fixed_point_u=float(u_init),
            message="beta vanishes at the initial coupling",
        )

    def rhs(t, y):
        return [-eval_beta(beta, max(y[0], 0.0))]

    def hit_threshold(t, y):
        return y[0] - tol.u_max

    hit_threshold.terminal = True
    hit_threshold.direction = 1

    def stall(t, y):
        return abs(eval_beta(beta, max(y[0], 0.0))) - tol.stall_tol

    stall.terminal = True
    stall.direction = -1

    sol = integrate.solve_ivp(
        rhs,
        (lnL_init, lnL_target),
        [float(u_init)],
        method="DOP853",
        rtol=tol.rtol,
        atol=tol.atol,
        events=[hit_threshold, stall],
        t_eval=None if sample_at is None else np.asarray(sample_at, dtype=float),
    )
    lnL = np.asarray(sol.t, dtype=float)
    u = np.asarray(sol.y[0], dtype=float)
    if len(lnL) == 0 or lnL[0] != lnL_init:
        lnL, u = np.insert(lnL, 0, lnL_init), np.insert(u, 0, u_init)

    if sol.status == 1 and len(sol.t_events[0]):
        t_e, u_e = float(sol.t_events[0][0]), float(sol.y_events[0][0][0])
        if lnL[-1] != t_e:
            lnL, u = np.append(lnL, t_e), np.append(u, u_e)
        tail = _tail_length(beta, u_e)
        sign = math.copysign(1.0, lnL_target - lnL_init)
        if tail is not None and tail <= tol.pole_tol:
            return FlowResult(lnL, u, Termination.POLE, pole_lnL=t_e + sign * tail)
        msg = (
            "divergence threshold crossed; large-coupling law admits no finite-scale pole"
            if tail is None
            else f"divergence threshold crossed; extrapolated remainder {tail:.3g} exceeds pole tolerance"
        )
        return FlowResult(lnL, u, Termination.RUNAWAY, message=msg)
    if sol.status == 1 and len(sol.t_events[1]):
        t_e, u_e = float(sol.t_events[1][0]), float(sol.y_events[1][0][0])
        if lnL[-1] != t_e:
            lnL, u = np.append(lnL, t_e), np.append(u, u_e)
        return FlowResult(lnL, u, Termination.FIXED_POINT, fixed_point_u=u_e, message="|beta| fell below stall tolerance")
    if sol.status < 0:
        return FlowResult(lnL, u, Termination.UNDERFLOW, message=sol.message)
    return FlowResult(lnL, u, Termination.HORIZON)


def detect_landau_pole(
    beta: BetaFunction,
    u_at_scale: float,
    lnL_scale: float,
    lnL_horizon: float,
    *,
    tol: FlowTolerances = DEFAULT_TOLERANCES,
) -> Optional[float]:
    """Location of a certified Landau pole between the horizon and the scale, else None."""
    if not lnL_horizon < lnL_scale:
        raise ValueError("poles are sought toward small L: need lnL_horizon < lnL_scale")
    res = integrate_flow(beta, u_at_scale, lnL_scale, lnL_horizon, tol=tol)
    if res.termination is Termination.POLE and res.pole_lnL >= lnL_horizon:
        return res.pole_lnL
    return None


# ---------------------------------------------------------------------------
# sign pattern and roots

SCAN_LO, SCAN_HI, SCAN_N = 1e-6, 1e6, 10_000


def scan_grid(lo: float = SCAN_LO, hi: float = SCAN_HI, n: int = SCAN_N) -> np.ndarray:
    return np.geomspace(lo, hi, n)


@dataclass(frozen=True)
class SignScan:
    grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    roots: tuple[float, ...]
    touching_roots: tuple[float, ...]
    negative_intervals: tuple[tuple[float, float], ...]


def sign_scan(beta: BetaFunction, lo: float = SCAN_LO, hi: float = SCAN_HI, n: int = SCAN_N) -> SignScan:
    """Locate sign changes (bisection) and touching zeros (local minima of |beta|)."""
    grid = scan_grid(lo, hi, n)
    vals = np.array([eval_beta(beta, x) for x in grid])
    sgn = np.sign(vals)
    roots = []
    for i in range(n - 1):
        if sgn[i] == 0.0:
            roots.append(float(grid[i]))
        elif sgn[i] * sgn[i + 1] < 0:
            roots.append(float(optimize.brentq(lambda x: eval_beta(beta, x), grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)))
    if sgn[-1] == 0.0:
        roots.append(float(grid[-1]))

    touching = []
    absv = np.abs(vals)
    for i in range(1, n - 1):
        if sgn[i] == 0.0 or sgn[i - 1] != sgn[i] or sgn[i + 1] != sgn[i]:
            continue
        if absv[i] <= absv[i - 1] and absv[i] <= absv[i + 1]:
            s = sgn[i]
            r = optimize.minimize_scalar(
                lambda x: s * eval_beta(beta, x),
                bounds=(grid[i - 1], grid[i + 1]),
                method="bounded",
                options={"xatol": 1e-14 * grid[i]},
            )
            scale = max(absv[i - 1], absv[i + 1])
            if s * eval_beta(beta, r.x) <= 1e-10 * scale:
                touching.append(float(r.x))

    neg = []
    start = None
    for i in range(n):
        if vals[i] < 0 and start is None:
            start = float(grid[i])
        if vals[i] >= 0 and start is not None:
            neg.append((start, float(grid[i - 1])))
            start = None
    if start is not None:
        neg.append((start, float(grid[-1])))
    return SignScan(grid, vals, tuple(roots), tuple(touching), tuple(neg))


def find_roots(beta: BetaFunction, lo: float = SCAN_LO, hi: float = SCAN_HI, n: int = SCAN_N) -> list[float]:
    """Positive zeros of beta on [lo, hi], sorted, including touching zeros."""
    s = sign_scan(beta, lo, hi, n)
    return sorted(set(s.roots) | set(s.touching_roots))


class Verdict(enum.Enum):
    TRULY_TRIVIAL = "TrulyTrivial"
    WILSON_TRIVIAL_ONLY = "WilsonTrivialOnly"
    NON_TRIVIAL = "NonTrivial"


@dataclass(frozen=True)
class TrivialityVerdict:
    verdict: Verdict
    nonnegative: bool
    interior_zeros: tuple[float, ...]
    negative_intervals: tuple[tuple[float, float], ...]
    asymptotic_exponent: Optional[float]
    pole_lnL: Optional[float]
    reason: str

    def rationale(self) -> dict:
        return {
            "nonnegative": self.nonnegative,
            "interior_zeros": list(self.interior_zeros),
            "negative_intervals": [list(iv) for iv in self.negative_intervals],
            "asymptotic_exponent": self.asymptotic_exponent,
            "pole_lnL": self.pole_lnL,
            "reason": self.reason,
        }


def classify_triviality(beta: BetaFunction) -> TrivialityVerdict:
    """Wilson triviality: beta >= 0 with its only zero at u = 0.  True
    triviality additionally needs beta ~ u**alpha with alpha > 1.

    The pole location recorded in the rationale is for the reference flow
    u(lnL=0) = 1 integrated toward lnL = -100.
    """
    if not beta.has_large_coupling_law:
        raise ClassificationRefused("beta declares no large-coupling law")
    alpha = beta.asymptotic_exponent()
    scan = sign_scan(beta)
    zeros = tuple(sorted(set(scan.roots) | set(scan.touching_roots)))
    if scan.negative_intervals or zeros:
        failed = []
        if scan.negative_intervals:
            failed.append("beta is negative on part of the coupling axis")
        if zeros:
            failed.append("beta has zeros away from u = 0")
        return TrivialityVerdict(Verdict.NON_TRIVIAL, False, zeros, scan.negative_intervals, alpha, None, "; ".join(failed))
    if alpha is not None and alpha > 1.0:
        pole = detect_landau_pole(beta, 1.0, 0.0, -100.0)
        return TrivialityVerdict(Verdict.TRULY_TRIVIAL, True, (), (), alpha, pole, "nonnegative, sole zero at 0, alpha > 1")
    return TrivialityVerdict(Verdict.WILSON_TRIVIAL_ONLY, True, (), (), alpha, None, "nonnegative, sole zero at 0, alpha <= 1")


def one_loop_bare_charge(g2: float, beta0_abs: float, ln_ratio: float) -> float:
    """Bare charge at the cutoff, g0^2 = g^2 / (1 + |beta0| g^2 ln(Lambda^2/m^2))."""
    if g2 < 0:
        raise ValueError("g2 must be nonnegative")
    if ln_ratio < 0:
        raise ValueError("ln_ratio must be nonnegative (cutoff below the mass scale)")
    return g2 / (1.0 + beta0_abs * g2 * ln_ratio)

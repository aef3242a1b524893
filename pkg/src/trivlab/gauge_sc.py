"""Leading-order strong-coupling lattice Yang-Mills.

String tension and glueball mass in the strong-coupling limit,
sigma = ln(3 g0^2) / a1^2 and m = 4 ln(3 g0^2) / a2 with a1 = k1 a,
a2 = k2 a, their inversions for the bare charge, the sigma/m^2 ratio,
dimensional transmutation, and the fixed-point scan that locates the
structural constants c = sigma/m^2 at which the mass gap could close.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple, Optional, Sequence

import numpy as np
from scipy import integrate

from .rgflow import BetaFunction, eval_beta, find_roots

# g0^2 where the Wilson-case window for small c is anchored
WILSON_FLOOR_G0_SQ = 10.0


class StrongCouplingRegimeError(ValueError):
    """g0^2 <= 1/3: the leading logarithm is not positive."""


class DomainError(ValueError):
    pass


class SingularIntegrandError(ValueError):
    def __init__(self, root: float, lo: float, hi: float):
        self.root = root
        super().__init__(f"beta vanishes at u = {root:.12g} inside the integration range [{lo:g}, {hi:g}]")


def _log3(g0_sq: float) -> float:
    if not 3.0 * g0_sq > 1.0:
        raise StrongCouplingRegimeError(f"g0^2 = {g0_sq!r} <= 1/3: ln(3 g0^2) <= 0, strong-coupling formulas do not apply")
    return math.log(3.0 * g0_sq)


def dominant_plaquette(c_mn: Mapping[tuple[int, int], float]) -> tuple[int, int]:
    """Loop (m, n), m <= n, with the largest |C_mn| * m * n."""
    best = max(c_mn.items(), key=lambda kv: (abs(kv[1]) * kv[0][0] * kv[0][1], -sum(kv[0])))
    m, n = sorted(best[0])
    return m, n


def scale_factors(m: int, n: int) -> tuple[float, float]:
    """(k1, k2) for an m x n dominated action: a1^2 = m n a^2, a2 = max(m, n) a.

    Reduces to the square (k1 = k2 = n) and 1 x n (k1^2 = n, k2 = n) cases.
    """
    m, n = sorted((int(m), int(n)))
    if m < 1:
        raise DomainError("loop sides must be >= 1")
    return math.sqrt(m * n), float(n)


def _check_decay(c_mn: Mapping[tuple[int, int], float], core: int) -> None:
    by_perimeter: dict[int, float] = {}
    for (m, n), c in c_mn.items():
        if m < 1 or n < 1:
            raise DomainError(f"loop ({m}, {n}) has a side < 1")
        by_perimeter[m + n] = max(by_perimeter.get(m + n, 0.0), abs(c))
    tail = [by_perimeter[p] for p in sorted(by_perimeter) if p > core]
    if any(b > a for a, b in zip(tail, tail[1:])):
        raise DomainError(f"|C_mn| must not grow with m + n beyond the core (m + n <= {core})")


@dataclass(frozen=True)
class StrongCouplingModel:
    """Bare coupling, spacing and effective scale factors a1 = k1 a, a2 = k2 a.

    When ``c_mn`` is given, (k1, k2) are taken from its dominant loop and
    the explicit values are ignored.  ``core`` is the largest m + n allowed
    to break the decay of |C_mn|.
    """

    g0_sq: float
    a: float = 1.0
    k1: float = 1.0
    k2: float = 1.0
    c_mn: Optional[Mapping[tuple[int, int], float]] = field(default=None, compare=False)
    core: int = 2

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError("lattice spacing must be positive")
        if self.c_mn is not None:
            if not self.c_mn:
                raise DomainError("empty C_mn table")
            table = {(int(m), int(n)): float(c) for (m, n), c in self.c_mn.items()}
            _check_decay(table, self.core)
            k1, k2 = scale_factors(*dominant_plaquette(table))
            object.__setattr__(self, "c_mn", table)
            object.__setattr__(self, "k1", k1)
            object.__setattr__(self, "k2", k2)
        if not (self.k1 > 0 and self.k2 > 0):
            raise DomainError("k1 and k2 must be positive")

    @property
    def a1(self) -> float:
        return self.k1 * self.a

    @property
    def a2(self) -> float:
        return self.k2 * self.a

    def with_g0_sq(self, g0_sq: float) -> "StrongCouplingModel":
        return StrongCouplingModel(g0_sq, self.a, self.k1, self.k2, None, self.core)


@dataclass(frozen=True)
class ConfinementPrediction:
    sigma: float
    mass: float
    ratio: float

    def potential(self, r):
        """Linear confining potential V(R) = sigma R."""
        return self.sigma * np.asarray(r, dtype=float)

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "mass": self.mass, "ratio": self.ratio, "potential_slope": self.sigma}


def wilson_strong_coupling(model: StrongCouplingModel) -> ConfinementPrediction:
    lg = _log3(model.g0_sq)
    sigma = lg / model.a1**2
    mass = 4.0 * lg / model.a2
    return ConfinementPrediction(sigma, mass, sigma / mass**2)


def invert_bare_charge(sigma: float, a: float, k1: float = 1.0) -> float:
    """g0^2 = exp(sigma a1^2) / 3."""
    if not (sigma > 0 and a > 0 and k1 > 0):
        raise DomainError("sigma, a and k1 must be positive")
    return math.exp(sigma * (k1 * a) ** 2) / 3.0


def invert_from_mass(m: float, a: float, k2: float = 1.0) -> float:
    """g0^2 = exp(m a2 / 4) / 3."""
    if not (m > 0 and a > 0 and k2 > 0):
        raise DomainError("m, a and k2 must be positive")
    return math.exp(m * k2 * a / 4.0) / 3.0


def sigma_over_m2(model: StrongCouplingModel) -> float:
    """k2^2 / (16 k1^2 ln(3 g0^2)); independent of a, small at strong coupling."""
    return model.k2**2 / (16.0 * model.k1**2 * _log3(model.g0_sq))


class PlaquetteScaling(NamedTuple):
    k1_sq: float
    k2: float
    ratio_factor: float


def plaquette_scaling(n: int, g0_sq: float = 3.0) -> PlaquetteScaling:
    """Scale factors of a 1 x n dominated action, k1^2 = n and k2 = n.

    ``ratio_factor`` is the sigma/m^2 ratio relative to the Wilson action at
    the same g0^2; it equals n.
    """
    if int(n) != n or n < 1:
        raise DomainError("n must be an integer >= 1")
    n = int(n)
    wilson = sigma_over_m2(StrongCouplingModel(g0_sq))
    k1, k2 = scale_factors(1, n)
    factor = sigma_over_m2(StrongCouplingModel(g0_sq, k1=k1, k2=k2)) / wilson
    if not math.isclose(factor, n, rel_tol=1e-12):
        raise ArithmeticError(f"ratio factor {factor!r} differs from n = {n}")
    return PlaquetteScaling(float(n), k2, factor)


def sigma_over_m2_table(model: StrongCouplingModel, g0_sq_grid: Sequence[float]) -> list[tuple[float, float, float, float]]:
    """Rows (g0^2, sigma, m, sigma/m^2) at fixed a, k1, k2."""
    rows = []
    for g in g0_sq_grid:
        p = wilson_strong_coupling(model.with_g0_sq(float(g)))
        rows.append((float(g), p.sigma, p.mass, p.ratio))
    return rows


# ---------------------------------------------------------------------------
# dimensional transmutation


def _power_law(beta: BetaFunction) -> Optional[tuple[float, float]]:
    nz = [(k, c) for k, c in enumerate(beta.series_coeffs) if c != 0.0]
    if beta.crossover_u is not None or beta.closed_form_id is not None or len(nz) != 1:
        return None
    k, c = nz[0]
    return c, float(beta.power_offset + k)


def analytic_antiderivative(amp: float, power: float, u: float, u_ref: float) -> float:
    """int_{u_ref}^{u} du / (amp u^power)."""
    if power == 1.0:
        return math.log(u / u_ref) / amp
    return (u ** (1.0 - power) - u_ref ** (1.0 - power)) / (amp * (1.0 - power))


def transmutation_integral(beta: BetaFunction, u: float, u_ref: float) -> float:
    """B(u) = int_{u_ref}^{u} du / beta(u)."""
    val, _ = integrate.quad(lambda x: 1.0 / eval_beta(beta, x), u_ref, u, epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def _check_nonvanishing(beta: BetaFunction, lo: float, hi: float) -> None:
    if not lo > 0:
        raise DomainError("couplings must be positive")
    for u in (lo, hi):
        if eval_beta(beta, u) == 0.0:
            raise SingularIntegrandError(u, lo, hi)
    roots = find_roots(beta, lo, hi, 2000) if hi > lo else []
    if roots:
        raise SingularIntegrandError(roots[0], lo, hi)


@dataclass(frozen=True)
class TransmutationReport:
    mu: float
    g0_grid: tuple[float, ...]
    u_refs: tuple[float, ...]
    constants: tuple[float, ...]
    B: np.ndarray = field(repr=False)
    quantities: np.ndarray = field(repr=False)
    ratio_spread: float
    analytic_deviation: Optional[float]
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "g0_grid": list(self.g0_grid),
            "u_refs": list(self.u_refs),
            "constants": list(self.constants),
            "B": self.B.tolist(),
            "quantities": self.quantities.tolist(),
            "ratio_spread": self.ratio_spread,
            "analytic_deviation": self.analytic_deviation,
            "tol": self.tol,
            "passed": self.passed,
        }


def transmutation_check(
    beta: BetaFunction,
    mu: float,
    g0_grid: Sequence[float],
    *,
    u_ref: float = 1.0,
    constants: Sequence[float] = (1.0, 2.0),
    u_refs: Optional[Sequence[float]] = None,
    a: float = 1.0,
    tol: float = 1e-8,
) -> TransmutationReport:
    """Build A_i = c_i a^mu exp(mu/2 B_i(g0^2)) for several quantity families.

    Family i has prefactor ``constants[i]`` and lower integration limit
    ``u_refs[i]`` (default ``u_ref`` for all).  Each B_i is computed by its
    own quadrature; the families' ratios must not depend on g0^2.  For a
    single-term power-law beta, B is also compared with the closed form.
    """
    grid = np.asarray(g0_grid, dtype=float)
    refs = tuple(float(r) for r in (u_refs if u_refs is not None else [u_ref] * len(constants)))
    if len(refs) != len(constants) or len(constants) < 1:
        raise DomainError("need one reference coupling per constant")
    lo = float(min(grid.min(), min(refs)))
    hi = float(max(grid.max(), max(refs)))
    _check_nonvanishing(beta, lo, hi)
    B = np.array([[transmutation_integral(beta, u, r) for u in grid] for r in refs])
    q = np.array(constants, dtype=float)[:, None] * a**mu * np.exp(0.5 * mu * B)
    spread = 0.0
    for i in range(1, len(refs)):
        ratio = q[i] / q[0]
        spread = max(spread, float(np.max(np.abs(ratio / ratio[0] - 1.0))))
    dev = None
    law = _power_law(beta)
    if law is not None:
        exact = np.array([analytic_antiderivative(law[0], law[1], u, refs[0]) for u in grid])
        dev = float(np.max(np.abs(B[0] - exact)))
    ok = spread <= tol and (dev is None or dev <= tol)
    return TransmutationReport(float(mu), tuple(grid.tolist()), refs, tuple(float(c) for c in constants), B, q, spread, dev, tol, ok)


# ---------------------------------------------------------------------------
# mass-gap scan


class RatioVariant(enum.Enum):
    DIVERGES = "RatioDiverges"
    VANISHES = "RatioVanishes"
    FINITE = "RatioFinite"
    UNDETERMINED = "Undetermined"


class GapVerdict(enum.Enum):
    FINITE = "GapFinite"
    VANISHES = "GapVanishes"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class RootLimit:
    root: float
    stable: bool
    variant: Optional[RatioVariant]
    c0: Optional[float]
    diagnostic: str = ""

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "stable": self.stable,
            "variant": None if self.variant is None else self.variant.value,
            "c0": self.c0,
            "diagnostic": self.diagnostic,
        }


@dataclass(frozen=True)
class MassGapVerdict:
    c: float
    fixed_points: tuple[float, ...]
    limits: tuple[RootLimit, ...]
    special_values: tuple[float, ...]
    verdict: GapVerdict
    wilson_regime: bool
    diagnostic: str = ""

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "fixed_points": list(self.fixed_points),
            "limits": [lim.to_dict() for lim in self.limits],
            "special_values": list(self.special_values),
            "verdict": self.verdict.value,
            "wilson_regime": self.wilson_regime,
            "diagnostic": self.diagnostic,
        }


def _richardson(values: np.ndarray, levels: int) -> tuple[float, float]:
    """Extrapolate F(h_k), h_k = h0 2^-k, to h = 0 assuming a power series in h.

    Returns (estimate, error estimate from the last two diagonal entries).
    """
    t = np.array(values[-(levels + 1):], dtype=float)
    prev = t[-1]
    diag = [t[-1]]
    for j in range(1, levels + 1):
        t = (2.0**j * t[1:] - t[:-1]) / (2.0**j - 1.0)
        diag.append(t[-1])
        prev = t[-1]
    return float(prev), float(abs(diag[-1] - diag[-2]))


def one_sided_limit(
    fn: Callable[[float], float],
    root: float,
    side: float,
    h0: float,
    *,
    tol: float = 1e-6,
    n_steps: int = 40,
    levels: int = 4,
) -> tuple[RatioVariant, Optional[float], str]:
    """Classify lim fn(root + side h) as h -> 0+ from h_k = h0 2^-k."""
    h = h0 * 2.0 ** -np.arange(n_steps)
    with np.errstate(all="ignore"):
        vals = np.array([fn(root + side * x) for x in h], dtype=float)
    if not np.all(np.isfinite(vals[:-1])):
        bad = int(np.argmin(np.isfinite(vals)))
        return RatioVariant.UNDETERMINED, None, f"non-finite value at h = {h[bad]:.3g}"
    tail = np.abs(vals[n_steps // 2:])
    if tail[-1] > 1.0 / tol and np.all(np.diff(tail) > 0):
        return RatioVariant.DIVERGES, None, f"|F| reaches {tail[-1]:.3g} and grows monotonically"
    # extrapolate from a window well above round-off
    window = vals[: n_steps // 2]
    est, err = _richardson(window, levels)
    est_prev, _ = _richardson(window[:-1], levels)
    scale = max(1.0, abs(est))
    if err > math.sqrt(tol) * scale or abs(est - est_prev) > math.sqrt(tol) * scale:
        return RatioVariant.UNDETERMINED, None, f"extrapolation not converged (change {abs(est - est_prev):.3g})"
    if abs(est) <= tol:
        return RatioVariant.VANISHES, 0.0, ""
    return RatioVariant.FINITE, est, ""


def _root_stability(beta: BetaFunction, root: float, h: float) -> bool:
    """Attractive as m decreases: beta goes from negative to positive through the root."""
    left = eval_beta(beta, max(root - h, 0.0))
    right = eval_beta(beta, root + h)
    return left < 0.0 < right


def wilson_window(g0_floor_sq: float = WILSON_FLOOR_G0_SQ) -> float:
    """Largest c reached by the Wilson action for g0^2 above the floor."""
    return sigma_over_m2(StrongCouplingModel(g0_floor_sq))


def mass_gap_scan(
    beta_renorm: BetaFunction,
    F_sigma: Callable[[float], float],
    c: float,
    *,
    lo: float = 1e-6,
    hi: float = 1e6,
    n_grid: int = 10_000,
    tol: float = 1e-6,
    g0_floor_sq: float = WILSON_FLOOR_G0_SQ,
) -> MassGapVerdict:
    """Mark the stable roots of the renormalized beta, take the limit of
    F_sigma = sigma/m^2 approaching each, and decide whether c is special.

    A root is stable when ``d g^2 / d ln m^2 = beta`` drives g into it as
    m -> 0, i.e. beta changes sign from - to +.  Touching roots attract from
    one side and are treated as stable.  The limit is taken from both sides
    with a geometric sequence and Richardson extrapolation; disagreeing
    sides make the root Undetermined.
    """
    if not c >= 0 or not math.isfinite(c):
        raise DomainError("c must be a finite nonnegative number")
    roots = find_roots(beta_renorm, lo, hi, n_grid)
    limits = []
    for r in roots:
        h0 = 0.1 * min([abs(r - x) for x in roots if x != r] + [r])
        stable = _root_stability(beta_renorm, r, 1e-6 * h0)
        touching = np.sign(eval_beta(beta_renorm, r - 1e-3 * h0)) == np.sign(eval_beta(beta_renorm, r + 1e-3 * h0))
        if touching:
            stable = True
        if not stable:
            limits.append(RootLimit(r, False, None, None, "repelling as m -> 0"))
            continue
        sides = []
        for side in (-1.0, 1.0):
            if r - h0 <= 0 and side < 0:
                continue
            if touching:
                # only the side the flow arrives from
                b = eval_beta(beta_renorm, r + side * 1e-3 * h0)
                if side * b > 0:
                    continue
            sides.append(one_sided_limit(F_sigma, r, side, h0, tol=tol))
        kinds = {s[0] for s in sides}
        if len(kinds) == 1 and RatioVariant.UNDETERMINED not in kinds:
            kind = kinds.pop()
            c0s = [s[1] for s in sides if s[1] is not None]
            if kind is RatioVariant.FINITE and max(c0s) - min(c0s) > math.sqrt(tol) * max(1.0, abs(c0s[0])):
                limits.append(RootLimit(r, True, RatioVariant.UNDETERMINED, None, f"one-sided limits differ: {c0s}"))
                continue
            c0 = None if kind is RatioVariant.DIVERGES else float(np.mean(c0s))
            limits.append(RootLimit(r, True, kind, c0))
        else:
            diag = "; ".join(f"side {'-+'[j]}: {s[0].value} {s[2]}".strip() for j, s in enumerate(sides))
            limits.append(RootLimit(r, True, RatioVariant.UNDETERMINED, None, diag))

    specials = tuple(lim.c0 for lim in limits if lim.variant is RatioVariant.FINITE)
    undetermined = [lim for lim in limits if lim.variant is RatioVariant.UNDETERMINED]
    vanishing = any(lim.variant is RatioVariant.VANISHES for lim in limits)
    diverging = any(lim.variant is RatioVariant.DIVERGES for lim in limits)
    in_wilson = c <= wilson_window(g0_floor_sq)

    if any(abs(c - c0) <= tol * max(1.0, abs(c0)) for c0 in specials):
        verdict, diag = GapVerdict.VANISHES, "c matches a special value"
    elif undetermined:
        verdict, diag = GapVerdict.UNDETERMINED, "; ".join(f"root {lim.root:.6g}: {lim.diagnostic}" for lim in undetermined)
    elif (vanishing and c <= tol) or (diverging and c >= 1.0 / tol):
        verdict, diag = GapVerdict.UNDETERMINED, "c is not bounded away from a vanishing or divergent limit"
    else:
        verdict, diag = GapVerdict.FINITE, ""
    if in_wilson and verdict is GapVerdict.FINITE:
        diag = "verified in Wilson regime"
    return MassGapVerdict(float(c), tuple(roots), tuple(limits), specials, verdict, bool(in_wilson), diag)

"""Many-parameter Wilson RG flows on polynomial vector fields.

Convention: ``-dp/dt = F(p)`` with ``t = ln(l/a)``, i.e. the flow is
``dp/dt = -F(p)``.  A relevant (unstable) direction of a fixed point is an
eigenvector of ``-J`` with positive real part, where ``J = dF/dp``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

ROOT_TOL = 1e-10
MARGINAL_TOL = 1e-9
LAUNCH_EPS = 1e-6
RTOL, ATOL = 1e-11, 1e-13


class PreconditionError(ValueError):
    pass


class NonMonotoneObservableError(ValueError):
    pass


Term = tuple[float, tuple[int, ...]]


@dataclass(frozen=True)
class FlowField:
    """Polynomial field: ``F_i(p) = sum_j coeff_ij * prod_k p_k**exp_ijk``."""

    dim: int
    terms: tuple[tuple[Term, ...], ...]

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        terms = tuple(tuple((float(c), tuple(int(e) for e in ex)) for c, ex in comp) for comp in self.terms)
        if len(terms) != self.dim:
            raise ValueError(f"expected {self.dim} components, got {len(terms)}")
        for comp in terms:
            for _, ex in comp:
                if len(ex) != self.dim or min(ex, default=0) < 0:
                    raise ValueError(f"bad multi-exponent {ex} for dim {self.dim}")
        object.__setattr__(self, "terms", terms)
        coef = [np.array([c for c, _ in comp], dtype=float) for comp in terms]
        expo = [np.array([ex for _, ex in comp], dtype=np.int64).reshape(-1, self.dim) for comp in terms]
        object.__setattr__(self, "_coef", coef)
        object.__setattr__(self, "_expo", expo)

    def __call__(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        out = np.empty(self.dim)
        for i in range(self.dim):
            out[i] = np.sum(self._coef[i] * np.prod(p ** self._expo[i], axis=1)) if len(self._coef[i]) else 0.0
        return out

    def jacobian(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        jac = np.zeros((self.dim, self.dim))
        for i in range(self.dim):
            for c, ex in zip(self._coef[i], self._expo[i]):
                for k in range(self.dim):
                    if ex[k] == 0:
                        continue
                    dex = ex.copy()
                    dex[k] -= 1
                    jac[i, k] += c * ex[k] * np.prod(p**dex)
        return jac

    def flow(self, p) -> np.ndarray:
        """Velocity dp/dt = -F(p)."""
        return -self(p)

    def scaled(self, c: float) -> "FlowField":
        return FlowField(self.dim, tuple(tuple((c * a, ex) for a, ex in comp) for comp in self.terms))

    @classmethod
    def from_velocity(cls, dim: int, terms) -> "FlowField":
        """Build from terms of the velocity dp/dt (signs flipped into F)."""
        return cls(dim, tuple(tuple((-c, ex) for c, ex in comp) for comp in terms))


class FixedPointKind(enum.Enum):
    SADDLE = "Saddle"
    SINK = "Sink"
    SOURCE = "Source"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class FixedPointInfo:
    location: np.ndarray
    eigenvalues: np.ndarray  # of the flow matrix -J
    eigenvectors: np.ndarray  # columns
    n_relevant: int
    n_irrelevant: int
    n_marginal: int
    kind: FixedPointKind
    residual: float
    diagnostic: str = ""

    def relevant_directions(self) -> np.ndarray:
        idx = np.flatnonzero(self.eigenvalues.real > MARGINAL_TOL)
        return self.eigenvectors[:, idx]

    def irrelevant_directions(self) -> np.ndarray:
        idx = np.flatnonzero(self.eigenvalues.real < -MARGINAL_TOL)
        return self.eigenvectors[:, idx]

    def to_dict(self) -> dict:
        return {
            "location": self.location.tolist(),
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "n_relevant": self.n_relevant,
            "n_irrelevant": self.n_irrelevant,
            "n_marginal": self.n_marginal,
            "classification": self.kind.value,
            "residual": self.residual,
            "diagnostic": self.diagnostic,
        }


def linearize_at(field: FlowField, p_star, *, root_tol: float = 1e-8) -> FixedPointInfo:
    p_star = np.asarray(p_star, dtype=float)
    res = float(np.linalg.norm(field(p_star)))
    if res > root_tol:
        raise PreconditionError(f"|F(p*)| = {res:.3g} exceeds root tolerance {root_tol:g}")
    m = -field.jacobian(p_star)
    vals, vecs = np.linalg.eig(m)
    order = np.lexsort((vals.imag, -vals.real))
    vals, vecs = vals[order], vecs[:, order]
    for k in range(vecs.shape[1]):
        v = vecs[:, k]
        j = np.flatnonzero(np.abs(v) > 1e-12)[0]
        vecs[:, k] = v * (abs(v[j]) / v[j])
    if np.all(np.abs(vecs.imag) < 1e-14):
        vecs = vecs.real
    if np.all(np.abs(vals.imag) == 0):
        vals = vals.real
    n_rel = int(np.sum(vals.real > MARGINAL_TOL))
    n_irr = int(np.sum(vals.real < -MARGINAL_TOL))
    n_mar = field.dim - n_rel - n_irr
    diag = ""
    cond = np.linalg.cond(vecs)
    if n_mar:
        kind = FixedPointKind.DEGENERATE
        diag = f"{n_mar} marginal eigenvalue(s)"
    elif not np.isfinite(cond) or cond > 1e8:
        kind = FixedPointKind.DEGENERATE
        diag = f"defective Jacobian (eigenvector condition number {cond:.3g})"
    elif n_rel and n_irr:
        kind = FixedPointKind.SADDLE
    elif n_rel:
        kind = FixedPointKind.SOURCE
    else:
        kind = FixedPointKind.SINK
    return FixedPointInfo(p_star, vals, vecs, n_rel, n_irr, n_mar, kind, res, diag)


def find_fixed_points(
    field: FlowField,
    box: Sequence[tuple[float, float]],
    seeds_per_axis: int = 5,
    *,
    merge_radius: float = 1e-6,
) -> list[FixedPointInfo]:
    """Multi-start root search of F = 0 inside ``box``; roots sorted lexicographically."""
    box = np.asarray(box, dtype=float).reshape(field.dim, 2)
    if np.any(box[:, 1] <= box[:, 0]):
        raise ValueError("degenerate box")
    if seeds_per_axis < 2:
        raise ValueError("seeds_per_axis must be >= 2")
    axes = [np.linspace(lo, hi, seeds_per_axis) for lo, hi in box]
    centre = box.mean(axis=1)
    seeds = [centre] + [np.array(s) for s in itertools.product(*axes)]
    slack = 1e-9 * np.maximum(1.0, box[:, 1] - box[:, 0])
    found: list[np.ndarray] = []
    for s in seeds:
        sol = optimize.root(field, s, jac=field.jacobian, method="hybr", options={"xtol": 1e-14})
        x = sol.x
        for _ in range(5):
            fx = field(x)
            if np.linalg.norm(fx) <= ROOT_TOL * 1e-3:
                break
            try:
                x = x - np.linalg.solve(field.jacobian(x), fx)
            except np.linalg.LinAlgError:
                break
        if not np.all(np.isfinite(x)) or np.linalg.norm(field(x)) > ROOT_TOL:
            continue
        if np.any(x < box[:, 0] - slack) or np.any(x > box[:, 1] + slack):
            continue
        found.append(x)
    found.sort(key=tuple)
    merged: list[np.ndarray] = []
    for x in found:
        if all(np.linalg.norm(x - y) > merge_radius for y in merged):
            merged.append(x)
    merged = [np.where(np.abs(x) < 1e-13, 0.0, x) for x in merged]
    return [linearize_at(field, x, root_tol=ROOT_TOL) for x in sorted(merged, key=tuple)]


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    p: np.ndarray  # shape (n, dim)
    kappa: Optional[np.ndarray] = None
    ref_distance: Optional[np.ndarray] = None
    diagnostic: str = ""

    def rows(self):
        for i in range(len(self.t)):
            row = [float(self.t[i]), *map(float, self.p[i])]
            if self.kappa is not None:
                row.append(float(self.kappa[i]))
            yield row


def _unit_relevant(fp: FixedPointInfo) -> np.ndarray:
    if fp.n_relevant != 1:
        raise PreconditionError(
            f"need exactly one relevant direction, got n_relevant={fp.n_relevant} "
            f"(n_irrelevant={fp.n_irrelevant}, n_marginal={fp.n_marginal})"
        )
    v = np.real(fp.relevant_directions()[:, 0])
    return v / np.linalg.norm(v)


def trace_unstable_manifold(
    field: FlowField,
    fp: FixedPointInfo,
    arc_budget: float,
    *,
    eps: float = LAUNCH_EPS,
    branch: int = 1,
    t_max: float = 1e3,
) -> Trajectory:
    """Ideal trajectory: launch at p* + eps * v along the relevant eigenvector.

    ``kappa`` is arc length from p*.  ``branch=-1`` follows the mirror branch.
    """
    v = _unit_relevant(fp)
    sol = _arc_solve(field, fp.location + branch * eps * v, eps, arc_budget, t_max=t_max)
    return _as_trajectory(sol, field.dim)


def _arc_solve(field, p0, s0, arc_budget, *, events=(), t_max=1e3, backward=False):
    """Integrate (p, arc length) until the arc budget; event 0 is the budget."""
    dim = field.dim
    sign = 1.0 if backward else -1.0

    def rhs(t, y):
        v = sign * field(y[:dim])
        return np.append(v, np.linalg.norm(v))

    def arc_done(t, y):
        return y[dim] - arc_budget

    arc_done.terminal = True
    return integrate.solve_ivp(
        rhs, (0.0, t_max), np.append(p0, s0), method="DOP853", rtol=RTOL, atol=ATOL, events=[arc_done, *events]
    )


def _as_trajectory(sol, dim) -> Trajectory:
    diag = "" if sol.status == 1 else f"arc budget not reached: {sol.message}"
    return Trajectory(sol.t, sol.y[:dim].T.copy(), sol.y[dim].copy(), diagnostic=diag)


def trace_stable_manifold(field: FlowField, fp: FixedPointInfo, arc_budget: float, *, eps: float = LAUNCH_EPS, branch: int = 1) -> Trajectory:
    """Reverse-time tracing of a one-dimensional stable manifold (the critical surface in 2D)."""
    irr = fp.irrelevant_directions()
    if irr.shape[1] != 1:
        raise PreconditionError(f"need exactly one irrelevant direction, got {irr.shape[1]}")
    v = np.real(irr[:, 0])
    v /= np.linalg.norm(v)
    sol = _arc_solve(field, fp.location + branch * eps * v, eps, arc_budget, backward=True)
    return _as_trajectory(sol, field.dim)


def _polyline_distance(points: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Distance from each point to the polyline through ``ref`` rows."""
    a, b = ref[:-1], ref[1:]
    ab = b - a
    ab2 = np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-300)
    out = np.empty(len(points))
    for i, x in enumerate(points):
        s = np.clip(np.einsum("ij,ij->i", x - a, ab) / ab2, 0.0, 1.0)
        d = a + s[:, None] * ab - x
        out[i] = np.sqrt(np.min(np.einsum("ij,ij->i", d, d)))
    return out


def trace_trajectory(
    field: FlowField,
    p_init,
    t_span: float,
    *,
    reference: Optional[Trajectory | np.ndarray] = None,
    p_max: float = 1e6,
    n_samples: Optional[int] = None,
) -> Trajectory:
    """Plain flow integration over ``[0, t_span]``.

    With ``reference``, each sample carries its distance to that polyline.
    """
    p_init = np.asarray(p_init, dtype=float)

    def blow_up(t, y):
        return np.linalg.norm(y) - p_max

    blow_up.terminal = True
    t_eval = None if n_samples is None else np.linspace(0.0, t_span, n_samples)
    sol = integrate.solve_ivp(
        lambda t, y: -field(y), (0.0, t_span), p_init, method="DOP853", rtol=RTOL, atol=ATOL, events=[blow_up], t_eval=t_eval
    )
    diag = ""
    if sol.status == 1:
        diag = f"trajectory truncated at t={sol.t_events[0][0]:.6g}: |p| exceeded {p_max:g}"
    elif sol.status < 0:
        diag = sol.message
    p = sol.y.T.copy()
    dist = None
    if reference is not None:
        ref = reference.p if isinstance(reference, Trajectory) else np.asarray(reference, dtype=float)
        dist = _polyline_distance(p, ref)
    return Trajectory(sol.t, p, None, dist, diag)


# ---------------------------------------------------------------------------
# two-step limit


@dataclass(frozen=True)
class ParametricTable:
    """Observables at fixed values of the mass-like ratio.

    ``ideal[name][j]`` is the value on the ideal trajectory at ``ratios[j]``;
    ``launched[name][i, j]`` the value on the trajectory launched at
    ``offsets[i]`` from the critical surface.  ``kappa[j]`` is the arc length
    along the ideal trajectory where the ratio equals ``ratios[j]``.
    """

    ratios: np.ndarray
    kappa: np.ndarray
    mass_key: str
    offsets: np.ndarray
    base_point: np.ndarray
    ideal: dict[str, np.ndarray] = field(repr=False)
    launched: dict[str, np.ndarray] = field(repr=False)

    def spread(self, name: str) -> float:
        """Largest disagreement across launch offsets of the eliminated relation."""
        v = self.launched[name]
        return float(np.max(np.ptp(v, axis=0)))

    def deviation_from_ideal(self, name: str) -> float:
        return float(np.max(np.abs(self.launched[name] - self.ideal[name][None, :])))

    def rows(self):
        names = list(self.ideal)
        for j, r in enumerate(self.ratios):
            for i, off in enumerate(self.offsets):
                yield [float(off), float(r), float(self.kappa[j]), *(float(self.launched[n][i, j]) for n in names)]


def _crossing_events(obs: Callable, ratios: Sequence[float], dim: int):
    evs = []
    for r in ratios:
        def ev(t, y, r=r):
            return obs(y[:dim]) - r

        evs.append(ev)
    return evs


def _values_at_crossings(t_events, y_events, observables, dim, what: str) -> dict[str, np.ndarray]:
    out = {k: np.empty(len(t_events)) for k in observables}
    for j in range(len(t_events)):
        if len(t_events[j]) == 0:
            raise NonMonotoneObservableError(f"{what}: ratio index {j} never reached")
        if len(t_events[j]) > 1:
            raise NonMonotoneObservableError(f"{what}: designated observable crosses a ratio more than once")
        y = y_events[j][0][:dim]
        for k, f in observables.items():
            out[k][j] = f(y)
    return out


def parametric_representation(
    field: FlowField,
    observables: Mapping[str, Callable],
    fp: FixedPointInfo,
    ratio_grid: Sequence[float],
    *,
    mass_key: Optional[str] = None,
    launch_offsets: Sequence[float] = (LAUNCH_EPS, LAUNCH_EPS / 2, LAUNCH_EPS / 4),
    base_point=None,
    base_distance: float = 1.0,
    branch: int = 1,
    t_max: float = 200.0,
) -> ParametricTable:
    """Tabulate observables along trajectories launched ever closer to the critical surface.

    Each launch starts at ``base_point + offset * v`` with ``v`` the relevant
    eigenvector; ``base_point`` defaults to the point at arc length
    ``base_distance`` on the (one-dimensional) stable manifold.  The rows
    record the observables where the mass-like observable equals each
    ratio.  Launch independence of the result is the statement that the
    eliminated relations carry no residual dependence on the launch.
    """
    if mass_key is None:
        mass_key = next(iter(observables))
    obs_m = observables[mass_key]
    dim = field.dim
    ratios = np.asarray(ratio_grid, dtype=float)
    v = branch * _unit_relevant(fp)

    evs = _crossing_events(obs_m, ratios, dim)
    p_launch = fp.location + LAUNCH_EPS * v
    arc = 1.0
    while True:
        sol = _arc_solve(field, p_launch, LAUNCH_EPS, arc, events=evs, t_max=t_max)
        mvals = np.array([obs_m(x) for x in sol.y[:dim].T])
        covered = mvals.min() <= ratios.min() and mvals.max() >= ratios.max()
        if covered or arc > 1e4 or sol.status != 1:
            break
        arc *= 2
    d = np.diff(mvals)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise NonMonotoneObservableError(
            f"observable {mass_key!r} is not monotone along the ideal trajectory; choose another parameterization"
        )
    if not covered:
        raise NonMonotoneObservableError(f"ratio grid outside the range of {mass_key!r} on the ideal trajectory")
    ideal_obs = _values_at_crossings(sol.t_events[1:], sol.y_events[1:], observables, dim, "ideal trajectory")
    kappa = np.array([sol.y_events[j + 1][0][dim] for j in range(len(ratios))])

    if base_point is None:
        base = trace_stable_manifold(field, fp, base_distance).p[-1]
    else:
        base = np.asarray(base_point, dtype=float)

    launched = {k: np.empty((len(launch_offsets), len(ratios))) for k in observables}
    target = ratios[np.argmax(np.abs(ratios - obs_m(fp.location)))]

    def past_grid(t, y):
        return (obs_m(y) - target) - 0.05 * (target - obs_m(fp.location))

    past_grid.terminal = True
    for i, off in enumerate(launch_offsets):
        p0 = base + off * v
        s = integrate.solve_ivp(
            lambda t, y: -field(y), (0.0, t_max), p0, method="DOP853", rtol=RTOL, atol=ATOL, events=[*evs, past_grid]
        )
        got = _values_at_crossings(s.t_events[: len(evs)], s.y_events[: len(evs)], observables, dim, f"launch offset {off:g}")
        for k in observables:
            launched[k][i] = got[k]
    return ParametricTable(ratios, kappa, mass_key, np.asarray(launch_offsets, float), base, ideal_obs, launched)


# ---------------------------------------------------------------------------
# blocking semigroup


@dataclass(frozen=True)
class BlockingReport:
    n: float
    semigroup_error: float
    identity_error: float
    valid: bool
    generator: np.ndarray = field(repr=False)
    generator_error: Optional[float] = None
    points: np.ndarray = field(repr=False, default=None)
    diagnostic: str = ""


def blocking_semigroup_check(
    block_map: Callable[[float, np.ndarray], np.ndarray],
    n: float,
    *,
    points=None,
    dim: Optional[int] = None,
    field: Optional[FlowField] = None,
    fd_step: float = 1e-4,
    tol: float = 1e-8,
    gen_tol: float = 1e-6,
    seed: int = 0,
) -> BlockingReport:
    """Check ``H(n*m, p) = H(n, H(m, p))`` and ``H(1, p) = p``; recover the generator.

    Composition is checked for (m, n) in {(n, n), (n, n^2), (n^2, n)}, which
    includes the square rule ``H(n^2) = H(n) o H(n)``.  The generator
    ``dH/dn`` at ``n = 1`` is dp/dln(l), to be compared with ``-F``.
    """
    if not n > 1:
        raise ValueError("n must exceed 1")
    if points is None:
        if dim is None:
            dim = field.dim if field is not None else None
        if dim is None:
            raise ValueError("give points, dim or field")
        points = np.random.default_rng(seed).uniform(-1.0, 1.0, size=(16, dim))
    points = np.atleast_2d(np.asarray(points, dtype=float))

    def h(m, p):
        return np.asarray(block_map(m, p), dtype=float)

    sg = 0.0
    for a, b in ((n, n), (n, n * n), (n * n, n)):
        for p in points:
            lhs, rhs = h(a * b, p), h(a, h(b, p))
            sg = max(sg, float(np.max(np.abs(lhs - rhs)) / max(1.0, np.max(np.abs(lhs)))))
    ident = max(float(np.max(np.abs(h(1.0, p) - p))) for p in points)
    gen = np.array([(h(1.0 + fd_step, p) - h(1.0 - fd_step, p)) / (2 * fd_step) for p in points])
    gen_err = None
    diag = []
    if field is not None:
        gen_err = float(max(np.max(np.abs(g + field(p))) for g, p in zip(gen, points)))
        if gen_err > gen_tol:
            diag.append(f"generator differs from -F by {gen_err:.3g}")
    valid = sg <= tol and ident <= tol
    if sg > tol:
        diag.append(f"composition violated by {sg:.3g}")
    if ident > tol:
        diag.append(f"H(1, p) != p by {ident:.3g}")
    return BlockingReport(n, sg, ident, valid, gen, gen_err, points, "; ".join(diag))

"""Experiment configuration: strict YAML schemas, one per experiment kind."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, field
from typing import Literal, Optional, Union

import yaml
from pydantic import ConfigDict, ValidationError, model_validator
from pydantic.dataclasses import dataclass

from . import __version__

STRICT = ConfigDict(extra="forbid")
KINDS = ("flow", "space", "lattice", "gauge", "collapse", "massgap")
STOCHASTIC = ("lattice", "collapse")

# defaults of every overridable tolerance, per kind
TOLERANCE_DEFAULTS: dict[str, dict[str, float]] = {
    "flow": {"u_max": 1e12, "stall_tol": 1e-14, "rtol": 1e-12, "atol": 1e-14, "pole_tol": 1e-6},
    "space": {"merge_radius": 1e-6, "launch_eps": 1e-6},
    "lattice": {},
    "collapse": {"threshold": 2.0},
    "gauge": {"transmutation_tol": 1e-8},
    "massgap": {"tol": 1e-6},
}


class ConfigError(ValueError):
    pass


@dataclass(config=STRICT)
class BetaSpec:
    series: list[float] = field(default_factory=list)
    power_offset: int = 1
    asymptote: Optional[tuple[float, float]] = None
    crossover_u: Optional[float] = None
    closed_form: Optional[str] = None
    variable: str = "g"

    def build(self):
        from .rgflow import BetaFunction

        return BetaFunction(tuple(self.series), self.power_offset, self.asymptote, self.crossover_u, self.closed_form, self.variable)


@dataclass(config=STRICT)
class FlowParams:
    beta: BetaSpec
    u_init: float
    lnL_target: float
    lnL_init: float = 0.0
    n_samples: Optional[int] = None
    classify: bool = False


Monomial = tuple[float, list[int]]


@dataclass(config=STRICT)
class ParametricSpec:
    observables: dict[str, list[Monomial]]
    ratios: list[float]
    mass_key: Optional[str] = None
    launch_offsets: list[float] = field(default_factory=lambda: [1e-6, 5e-7, 2.5e-7])
    base_point: Optional[list[float]] = None
    base_distance: float = 1.0
    fixed_point: int = 0


@dataclass(config=STRICT)
class SpaceParams:
    dim: int
    terms: list[list[Monomial]]
    box: list[tuple[float, float]]
    convention: Literal["velocity", "field"] = "velocity"
    seeds_per_axis: int = 5
    arc_budget: float = 2.0
    parametric: Optional[ParametricSpec] = None


@dataclass(config=STRICT)
class StencilSpec:
    dim: int
    side: int
    kappa: float
    stencil: Literal["nearest_neighbor", "improved", "custom"] = "nearest_neighbor"
    couplings: Optional[list[tuple[list[int], float]]] = None

    @model_validator(mode="after")
    def _custom_needs_table(self):
        if (self.stencil == "custom") != (self.couplings is not None):
            raise ValueError("couplings must be given exactly when stencil is 'custom'")
        return self

    def build(self):
        from .lattice_phi4 import LatticeSpec

        if self.stencil == "nearest_neighbor":
            return LatticeSpec.nearest_neighbor(self.dim, self.side, self.kappa)
        if self.stencil == "improved":
            return LatticeSpec.improved(self.dim, self.side, self.kappa)
        return LatticeSpec(self.dim, self.side, {tuple(k): v for k, v in self.couplings}, self.kappa)


@dataclass(config=STRICT)
class LatticeParams:
    lattice: StencilSpec
    sweeps: int
    therm: int = 1000
    n_cluster: int = 1
    n_blocks: int = 100
    exact: bool = False
    write_raw: bool = True


@dataclass(config=STRICT)
class CollapseParams:
    runs: list[StencilSpec]
    sweeps: int
    therm: int = 1000
    n_cluster: int = 1
    n_blocks: int = 100
    observable: Literal["xi_over_side", "chi_ratio"] = "xi_over_side"
    max_degree: int = 3


@dataclass(config=STRICT)
class TransmutationSpec:
    beta: BetaSpec
    g0_grid: list[float]
    mu: float = 1.0
    u_ref: float = 1.0
    constants: list[float] = field(default_factory=lambda: [1.0, 2.0])
    u_refs: Optional[list[float]] = None


@dataclass(config=STRICT)
class GaugeParams:
    g0_sq: float
    a: float = 1.0
    k1: float = 1.0
    k2: float = 1.0
    c_mn: Optional[list[tuple[int, int, float]]] = None
    core: int = 2
    g0_sq_grid: list[float] = field(default_factory=list)
    plaquette_n: list[int] = field(default_factory=list)
    a_over_xi: list[float] = field(default_factory=list)
    transmutation: Optional[TransmutationSpec] = None


@dataclass(config=STRICT)
class CurveSpec:
    g_min: float
    g_max: float
    n: int = 200


@dataclass(config=STRICT)
class FSigmaSpec:
    expr: Optional[str] = None
    table: Optional[list[tuple[float, float]]] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.expr is None) == (self.table is None):
            raise ValueError("give exactly one of 'expr' or 'table'")
        return self

    def build(self):
        if self.expr is not None:
            import sympy

            g = sympy.Symbol("g")
            try:
                e = sympy.sympify(self.expr, locals={"g": g})
            except (sympy.SympifyError, SyntaxError) as exc:
                raise ConfigError(f"F_sigma expression does not parse: {exc}") from None
            if e.free_symbols - {g}:
                raise ConfigError(f"F_sigma may only depend on g, found {sorted(map(str, e.free_symbols))}")
            f = sympy.lambdify(g, e, modules="math")

            def fn(x):
                try:
                    return float(f(float(x)))
                except (ZeroDivisionError, OverflowError, ValueError, TypeError):
                    return math.nan

            return fn
        import numpy as np
        from scipy.interpolate import PchipInterpolator

        pts = sorted(self.table)
        x = np.array([p[0] for p in pts])
        if np.any(np.diff(x) <= 0):
            raise ConfigError("F_sigma table needs strictly increasing g")
        interp = PchipInterpolator(x, [p[1] for p in pts], extrapolate=False)
        return lambda g: float(interp(g))


@dataclass(config=STRICT)
class MassGapParams:
    beta: BetaSpec
    F_sigma: FSigmaSpec
    c_values: list[float]
    lo: float = 1e-6
    hi: float = 1e6
    n_grid: int = 10_000
    g0_floor_sq: float = 10.0
    curve: Optional[CurveSpec] = None


PARAMS = {
    "flow": FlowParams,
    "space": SpaceParams,
    "lattice": LatticeParams,
    "gauge": GaugeParams,
    "collapse": CollapseParams,
    "massgap": MassGapParams,
}
ParamBlock = Union[FlowParams, SpaceParams, LatticeParams, GaugeParams, CollapseParams, MassGapParams]


@dataclass(config=STRICT)
class ExperimentConfig:
    kind: str
    params: dict
    name: Optional[str] = None
    seed: Optional[int] = None
    tolerances: dict[str, float] = field(default_factory=dict)


class Experiment:
    """A validated config: typed parameter block plus effective tolerances."""

    def __init__(self, kind: str, name: str, seed: Optional[int], params: ParamBlock, tolerances: dict[str, float]):
        self.kind = kind
        self.name = name
        self.seed = seed
        self.params = params
        self.tolerances = tolerances

    def canonical(self) -> dict:
        return {
            "kind": self.kind,
            "name": self.name,
            "seed": self.seed,
            "params": asdict(self.params),
            "tolerances": dict(sorted(self.tolerances.items())),
        }

    def digest(self) -> str:
        return config_digest(self.canonical())


def config_digest(data: dict) -> str:
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _format_validation(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"])
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_config(data: dict, *, seed_override: Optional[int] = None) -> Experiment:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    try:
        top = ExperimentConfig(**data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from None
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    if top.kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {top.kind!r}; expected one of {', '.join(KINDS)}")
    try:
        params = PARAMS[top.kind](**top.params)
    except ValidationError as exc:
        raise ConfigError("params." + _format_validation(exc)) from None
    except TypeError as exc:
        raise ConfigError(f"params: {exc}") from None
    defaults = TOLERANCE_DEFAULTS[top.kind]
    unknown = sorted(set(top.tolerances) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown tolerance keys for kind {top.kind!r}: {unknown}")
    tol = {**defaults, **{k: float(v) for k, v in top.tolerances.items()}}
    seed = seed_override if seed_override is not None else top.seed
    if top.kind in STOCHASTIC and seed is None:
        raise ConfigError(f"seed is mandatory for {top.kind!r} experiments")
    return Experiment(top.kind, top.name or top.kind, seed, params, tol)


def load_config(path, *, seed_override: Optional[int] = None) -> Experiment:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML error: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(data, seed_override=seed_override)


def toolkit_version() -> str:
    return __version__

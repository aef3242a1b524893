"""Bare lattice spectra and Ising-limit lattice specifications."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

Offset = tuple[int, ...]

SUM_RULE_TOL = 1e-10
MAX_RANGE = 4


class NormalizationError(ValueError):
    pass


class SymmetryError(ValueError):
    pass


class RegimeError(ValueError):
    pass


class MarginalLimitWarning(UserWarning):
    pass


def nearest_neighbor_couplings(dim: int) -> dict[Offset, float]:
    """Overlap integrals with eps(p) = sum_i 2 (1 - cos p_i)."""
    out = {(0,) * dim: 2.0 * dim}
    for i in range(dim):
        for s in (1, -1):
            e = [0] * dim
            e[i] = s
            out[tuple(e)] = -1.0
    return out


def improved_couplings(dim: int) -> dict[Offset, float]:
    """Fourth-order stencil (-1, 16, -30, 16, -1)/12 per axis: no p^4 term."""
    out = {(0,) * dim: 30.0 / 12.0 * dim}
    for i in range(dim):
        for step, w in ((1, -16.0 / 12.0), (2, 1.0 / 12.0)):
            for s in (1, -1):
                e = [0] * dim
                e[i] = s * step
                out[tuple(e)] = w
    return out


def _point_group(dim: int):
    for perm in itertools.permutations(range(dim)):
        for signs in itertools.product((1, -1), repeat=dim):
            yield perm, signs


def check_symmetry(couplings: Mapping[Offset, float], *, tol: float = 1e-12) -> None:
    dims = {len(x) for x in couplings}
    if len(dims) != 1:
        raise SymmetryError("offsets of mixed dimensionality")
    (dim,) = dims
    for x, j in couplings.items():
        if max(abs(c) for c in x) > MAX_RANGE:
            raise SymmetryError(f"offset {x} beyond declared range {MAX_RANGE}")
        for perm, signs in _point_group(dim):
            y = tuple(signs[k] * x[perm[k]] for k in range(dim))
            if abs(couplings.get(y, 0.0) - j) > tol * max(1.0, abs(j)):
                raise SymmetryError(f"J{x} = {j} but J{y} = {couplings.get(y, 0.0)}")


@dataclass(frozen=True)
class Spectrum:
    """eps(p) = sum_x J_x cos(p.x) with its small-momentum Taylor coefficients.

    ``p2_coeff`` and ``p4_coeff`` are per-axis coefficients along a lattice
    axis, from the moment sums -1/2 sum J_x x_1^2 and 1/24 sum J_x x_1^4.
    """

    offsets: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    p2_coeff: float
    p4_coeff: float
    zero_mode: float

    def __call__(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return np.cos(p @ self.offsets.T) @ self.weights

    @property
    def small_p_coeffs(self) -> tuple[float, float]:
        return self.p2_coeff, self.p4_coeff

    def fit_small_p(self, q_max: float = 0.05, n: int = 41) -> tuple[float, float]:
        """Least-squares (p^2, p^4) coefficients along axis 1 on a grid near p = 0."""
        dim = self.offsets.shape[1]
        q = np.linspace(-q_max, q_max, n)
        pts = np.zeros((n, dim))
        pts[:, 0] = q
        eps = self(pts)
        design = np.stack([q**2, q**4, q**6, q**8], axis=1)
        coef, *_ = np.linalg.lstsq(design, eps, rcond=None)
        return float(coef[0]), float(coef[1])


def build_spectrum(couplings: Mapping[Offset, float]) -> Spectrum:
    if not couplings:
        raise NormalizationError("empty coupling map: eps(0) = 0 holds but the p^2 coefficient is 0, not 1")
    check_symmetry(couplings)
    offs = np.array(list(couplings.keys()), dtype=float)
    w = np.array(list(couplings.values()), dtype=float)
    dim = offs.shape[1]
    zero = float(np.sum(w))
    scale = max(1.0, float(np.sum(np.abs(w))))
    if abs(zero) > SUM_RULE_TOL * scale:
        raise NormalizationError(f"sum rule eps(0) = sum_x J_x = 0 violated: got {zero:.6g}")
    second = -0.5 * np.einsum("k,ki,kj->ij", w, offs, offs)
    if np.max(np.abs(second - np.eye(dim))) > SUM_RULE_TOL * scale:
        raise NormalizationError(
            f"sum rule -1/2 sum_x J_x x_i x_j = delta_ij (unit p^2 coefficient) violated: got {np.diag(second).tolist()}"
        )
    p4 = float(np.sum(w * offs[:, 0] ** 4) / 24.0)
    return Spectrum(offs, w, float(second[0, 0]), p4, zero)


@dataclass(frozen=True)
class LatticeSpec:
    """Periodic Ising lattice with Boltzmann weight exp(-kappa * E).

    ``E = -1/2 sum_x sum_r K_r s_x s_{x+r}`` with ferromagnetic couplings
    ``K_r = -J_r`` for r != 0, so the nearest-neighbour stencil gives the
    standard Ising model with kappa playing the inverse temperature.
    """

    dim: int
    side: int
    couplings: Mapping[Offset, float]
    kappa: float
    model: str = "ising"

    def __post_init__(self):
        if self.dim not in (1, 2, 3, 4):
            raise ValueError("dim must be 1..4")
        if self.side < 2:
            raise ValueError("side must be >= 2")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if self.model != "ising":
            raise ValueError("only Ising spins are supported")
        cp = {tuple(int(c) for c in k): float(v) for k, v in self.couplings.items()}
        if any(len(k) != self.dim for k in cp):
            raise ValueError("coupling offsets do not match dim")
        object.__setattr__(self, "couplings", cp)
        build_spectrum(cp)

    @classmethod
    def nearest_neighbor(cls, dim: int, side: int, kappa: float) -> "LatticeSpec":
        return cls(dim, side, nearest_neighbor_couplings(dim), kappa)

    @classmethod
    def improved(cls, dim: int, side: int, kappa: float) -> "LatticeSpec":
        return cls(dim, side, improved_couplings(dim), kappa)

    @property
    def n_sites(self) -> int:
        return self.side**self.dim

    def with_kappa(self, kappa: float) -> "LatticeSpec":
        return LatticeSpec(self.dim, self.side, self.couplings, kappa, self.model)

    def family_key(self) -> str:
        """Label shared by specs that differ only in kappa and side."""
        items = sorted((k, round(v, 12)) for k, v in self.couplings.items())
        return f"d{self.dim}:" + ";".join(f"{k}={v}" for k, v in items)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "side": self.side,
            "kappa": self.kappa,
            "couplings": [[list(k), v] for k, v in sorted(self.couplings.items())],
        }

    def displacement_table(self):
        """Per-site neighbour table over displacement classes mod side.

        Returns ``(nbr, keff, is_nn)``: ``nbr[x, k]`` is the site at
        displacement class k from x, ``keff[k]`` the summed ferromagnetic
        coupling of the class, ``is_nn[k]`` whether the class contains a unit
        vector.  Classes congruent to zero are dropped (constant energy).
        """
        L, d = self.side, self.dim
        classes: dict[tuple[int, ...], float] = {}
        nn_classes = set()
        for r, j in self.couplings.items():
            cls_ = tuple(c % L for c in r)
            if not any(cls_):
                continue
            classes[cls_] = classes.get(cls_, 0.0) - j
            if sum(abs(c) for c in r) == 1:
                nn_classes.add(cls_)
        keys = sorted(classes)
        n = L**d
        coords = site_coords(d, L)
        strides = L ** np.arange(d)
        nbr = np.empty((n, len(keys)), dtype=np.int64)
        for k, disp in enumerate(keys):
            nbr[:, k] = ((coords + np.array(disp)) % L) @ strides
        keff = np.array([classes[k] for k in keys], dtype=float)
        is_nn = np.array([k in nn_classes for k in keys], dtype=np.bool_)
        return nbr, keff, is_nn


def site_coords(dim: int, side: int) -> np.ndarray:
    """Coordinates of site index x = sum_i x_i side**i, shape (side**dim, dim)."""
    idx = np.arange(side**dim)
    return np.stack([(idx // side**i) % side for i in range(dim)], axis=1)


def ising_kappa(
    g0: float,
    m0_sq_a_sq: float,
    *,
    g0_floor: float = 1e3,
    divergence_threshold: float = 10.0,
) -> float:
    """Ising hopping parameter from bare phi^4 data: kappa = -m0^2 a^2 / g0.

    Valid in the limit g0 -> inf with g0^(-1/2) m0^2 a^2 -> -inf; at finite
    values the two conditions are checked against ``g0_floor`` and
    ``divergence_threshold`` and a warning is issued when marginal.
    """
    if m0_sq_a_sq > 0:
        raise ValueError("m0^2 a^2 must be nonpositive")
    if g0 < g0_floor:
        raise RegimeError(f"g0 = {g0:g} below strong-coupling floor {g0_floor:g}")
    if m0_sq_a_sq / math.sqrt(g0) > -divergence_threshold:
        warnings.warn(
            f"g0^(-1/2) m0^2 a^2 = {m0_sq_a_sq / math.sqrt(g0):g} is not far below zero; Ising limit is marginal",
            MarginalLimitWarning,
            stacklevel=2,
        )
    return -m0_sq_a_sq / g0 + 0.0

"""Observable estimation: jackknife errors, second-moment correlation length,
dimensionless renormalized coupling."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .spectrum import LatticeSpec


class Estimate(NamedTuple):
    value: float
    error: float


@dataclass(frozen=True)
class RawSeries:
    """Per-sweep measurements: magnetization M, energy E, and |M(k_min)|^2
    averaged over the lattice axes."""

    m: np.ndarray
    e: np.ndarray
    mk2: np.ndarray

    def __len__(self):
        return len(self.m)


@dataclass(frozen=True)
class ObservableSet:
    n_sites: int
    side: int
    dim: int
    m1: Estimate
    m2: Estimate
    m4: Estimate
    energy: Estimate
    chi0: Estimate
    chik: Estimate
    xi: Estimate
    mass: Estimate
    g_renorm: Estimate
    xi_defined: bool
    n_samples: int
    tau_int: float
    equilibrated: bool
    exact: bool = False

    def to_dict(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = {"value": _num(v[0]), "error": _num(v[1])}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ObservableSet":
        kw = {}
        for k, v in d.items():
            kw[k] = Estimate(_unnum(v["value"]), _unnum(v["error"])) if isinstance(v, dict) else v
        return cls(**kw)


def _num(x: float):
    return x if math.isfinite(x) else repr(float(x))


def _unnum(x):
    return float(x)


def derived_quantities(m2: float, m4: float, mk2: float, dim: int, side: int) -> tuple[float, float, float]:
    """(xi, mass, g) from the moments.

    xi is the second-moment length from chi(0)/chi(k_min) with
    k_min = 2 pi / side; g = (side/xi)^d (3 - <M^4>/<M^2>^2).  Returns NaNs
    when chi(k_min) >= chi(0).
    """
    ratio = m2 / mk2 - 1.0 if mk2 > 0 else math.inf
    cumulant = 3.0 - m4 / (m2 * m2) if m2 > 0 else math.nan
    if not ratio > 0 or not math.isfinite(ratio):
        return math.nan, math.nan, math.nan
    xi = math.sqrt(ratio) / (2.0 * math.sin(math.pi / side))
    return xi, 1.0 / xi, (side / xi) ** dim * cumulant


def jackknife(blocks: np.ndarray, fn: Callable[[np.ndarray], np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Jackknife over rows of ``blocks`` for a function of the column means."""
    nb = blocks.shape[0]
    full = np.asarray(fn(blocks.mean(axis=0)), dtype=float)
    total = blocks.sum(axis=0)
    loo = np.array([fn((total - blocks[i]) / (nb - 1)) for i in range(nb)], dtype=float)
    mean_loo = loo.mean(axis=0)
    err = np.sqrt((nb - 1) / nb * np.sum((loo - mean_loo) ** 2, axis=0))
    return full, err


def integrated_autocorr_time(x: np.ndarray, c: float = 5.0) -> float:
    """Integrated autocorrelation time with automatic windowing (window W >= c * tau)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 4 or np.var(x) == 0:
        return 0.5
    y = x - x.mean()
    f = np.fft.rfft(y, n=2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n]
    acf /= acf[0]
    tau = 0.5
    for w in range(1, n):
        tau += acf[w]
        if w >= c * tau:
            break
    return float(max(tau, 0.5))


def _block(x: np.ndarray, nb: int) -> np.ndarray:
    n = (len(x) // nb) * nb
    return x[:n].reshape(nb, -1).mean(axis=1)


def equilibration_ok(x: np.ndarray, n_sigma: float = 3.0) -> bool:
    """First and last quarter of the series agree within ``n_sigma``."""
    q = len(x) // 4
    if q < 20:
        return True
    a, b = _block(x[:q], 10), _block(x[-q:], 10)
    err = math.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b))
    return abs(a.mean() - b.mean()) <= n_sigma * err if err > 0 else a.mean() == b.mean()


def estimate_observables(raw: RawSeries, spec: LatticeSpec, *, n_blocks: int = 100) -> ObservableSet:
    n = len(raw)
    nb = min(n_blocks, n)
    if nb < 2:
        raise ValueError("need at least two measurements")
    m = np.asarray(raw.m, dtype=float)
    m2 = m * m
    cols = np.stack([m, m2, m2 * m2, raw.e, raw.mk2], axis=1)
    usable = (n // nb) * nb
    blocks = cols[:usable].reshape(nb, -1, cols.shape[1]).mean(axis=1)
    N, L, d = spec.n_sites, spec.side, spec.dim

    def fn(mu):
        xi, mass, g = derived_quantities(mu[1], mu[2], mu[4], d, L)
        return np.array([mu[0], mu[1], mu[2], mu[3], mu[1] / N, mu[4] / N, xi, mass, g])

    val, err = jackknife(blocks, fn)
    tau = integrated_autocorr_time(m2)
    return _assemble(spec, val, err, n, tau, equilibration_ok(m2), exact=False)


def exact_observables(spec: LatticeSpec, m1: float, m2: float, m4: float, e: float, mk2: float) -> ObservableSet:
    N = spec.n_sites
    xi, mass, g = derived_quantities(m2, m4, mk2, spec.dim, spec.side)
    val = np.array([m1, m2, m4, e, m2 / N, mk2 / N, xi, mass, g])
    return _assemble(spec, val, np.zeros_like(val), 0, 0.0, True, exact=True)


def _assemble(spec, val, err, n, tau, equilibrated, exact) -> ObservableSet:
    est = [Estimate(float(v), float(e)) for v, e in zip(val, err)]
    return ObservableSet(
        spec.n_sites,
        spec.side,
        spec.dim,
        *est,
        xi_defined=bool(math.isfinite(val[6])),
        n_samples=n,
        tau_int=tau,
        equilibrated=bool(equilibrated),
        exact=exact,
    )


def gaussian_cumulant(m2: float, m4: float) -> float:
    """Quartic cumulant factor 3 - <M^4>/<M^2>^2 entering the renormalized coupling."""
    return 3.0 - m4 / (m2 * m2)


def dimensionless_observable(obs: ObservableSet, name: str = "xi_over_side") -> Optional[Estimate]:
    """A * m^(-d_A) for the built-in observables.

    ``xi_over_side``: A = 1/side (dimension of mass), so A/m = xi/side.
    ``chi_ratio``: chi(k_min)/chi(0), already dimensionless.
    """
    if name == "xi_over_side":
        return Estimate(obs.xi.value / obs.side, obs.xi.error / obs.side)
    if name == "chi_ratio":
        v = obs.chik.value / obs.chi0.value
        rel = math.hypot(obs.chik.error / obs.chik.value, obs.chi0.error / obs.chi0.value)
        return Estimate(v, abs(v) * rel)
    raise KeyError(name)

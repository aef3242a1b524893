from __future__ import annotations

import csv
import io
from typing import Optional

import numpy as np

from . import _kernels
from .observables import ObservableSet, RawSeries, estimate_observables, exact_observables
from .spectrum import LatticeSpec, site_coords

MAX_ENUM_SITES = 24


class CapacityError(ValueError):
    pass


def _phase_tables(spec: LatticeSpec) -> tuple[np.ndarray, np.ndarray]:
    k = 2.0 * np.pi / spec.side
    coords = site_coords(spec.dim, spec.side).astype(float)
    return np.ascontiguousarray(np.cos(k * coords)), np.ascontiguousarray(np.sin(k * coords))


def exact_enumeration(spec: LatticeSpec) -> ObservableSet:
    """Exact Boltzmann averages over all 2^N configurations (N <= 24)."""
    if spec.n_sites > MAX_ENUM_SITES:
        raise CapacityError(f"{spec.n_sites} sites exceed the enumeration limit of {MAX_ENUM_SITES}")
    nbr, keff, _ = spec.displacement_table()
    cos_t, sin_t = _phase_tables(spec)
    m1, m2, m4, e, mk2 = _kernels.enumerate_sums(nbr, keff, float(spec.kappa), cos_t, sin_t)
    return exact_observables(spec, m1, m2, m4, e, mk2)


def sample(spec: LatticeSpec, sweeps: int, therm: int, seed: int, *, n_cluster: int = 1) -> RawSeries:
    """Raw per-sweep series: one Metropolis sweep plus ``n_cluster`` cluster updates per sweep."""
    if sweeps < 2:
        raise ValueError("sweeps must be >= 2")
    nbr, keff, is_nn = spec.displacement_table()
    cos_t, sin_t = _phase_tables(spec)
    m, e, mk2 = _kernels.simulate(
        nbr, keff, is_nn, float(spec.kappa), int(therm), int(sweeps), int(n_cluster), int(seed) % 2**32, cos_t, sin_t
    )
    return RawSeries(m, e, mk2)


def run_mc(
    spec: LatticeSpec,
    sweeps: int,
    therm: int,
    seed: int,
    *,
    n_cluster: int = 1,
    n_blocks: int = 100,
    raw_out: Optional[io.TextIOBase] = None,
) -> ObservableSet:
    """Monte Carlo estimate of the observables; deterministic for a fixed seed.

    With ``raw_out`` the per-sweep measurements are written as CSV
    (sweep, M, M2, M4, E).
    """
    raw = sample(spec, sweeps, therm, seed, n_cluster=n_cluster)
    if raw_out is not None:
        write_raw_csv(raw, raw_out, first_sweep=therm)
    return estimate_observables(raw, spec, n_blocks=n_blocks)


def write_raw_csv(raw: RawSeries, fh, *, first_sweep: int = 0) -> None:
    w = csv.writer(fh, lineterminator="\r\n")
    w.writerow(["sweep", "M", "M2", "M4", "E"])
    for i, (m, e) in enumerate(zip(raw.m.tolist(), raw.e.tolist())):
        m2 = m * m
        w.writerow([first_sweep + i, repr(m), repr(m2), repr(m2 * m2), repr(e)])

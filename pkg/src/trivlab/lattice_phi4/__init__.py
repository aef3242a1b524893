"""Lattice phi^4 theory in its Ising limit."""

from .collapse import CollapsePoint, CollapseReport, IncomparableRunsError, collapse_points, collapse_test, fit_collapse
from .observables import Estimate, ObservableSet, RawSeries, estimate_observables
from .sampling import CapacityError, exact_enumeration, run_mc, sample, write_raw_csv
from .spectrum import (
    LatticeSpec,
    NormalizationError,
    RegimeError,
    Spectrum,
    build_spectrum,
    improved_couplings,
    ising_kappa,
    nearest_neighbor_couplings,
)

__all__ = [
    "CapacityError",
    "CollapsePoint",
    "CollapseReport",
    "Estimate",
    "IncomparableRunsError",
    "LatticeSpec",
    "NormalizationError",
    "ObservableSet",
    "RawSeries",
    "RegimeError",
    "Spectrum",
    "build_spectrum",
    "collapse_points",
    "collapse_test",
    "estimate_observables",
    "exact_enumeration",
    "fit_collapse",
    "improved_couplings",
    "ising_kappa",
    "nearest_neighbor_couplings",
    "run_mc",
    "sample",
    "write_raw_csv",
]

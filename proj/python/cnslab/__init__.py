"""Compressible Navier-Stokes laboratory on the periodic square."""

from ._core import (
    AssertionFailure,
    Error,
    InvalidArgument,
    NonFiniteValue,
    NumericalFailure,
    RunConfig,
    __version__,
    check_conditions,
    csv_columns,
    divergence,
    grid_coordinates,
    leray_project,
    make_density,
    make_velocity,
    poincare_weighted,
    potential_energy,
    pressure,
    read_cnsf,
    run,
    verify_inequalities,
    write_cnsf,
)
from .formats import load_cnsf, load_diagnostics, load_manifest, load_polylines

__all__ = [
    "AssertionFailure",
    "Error",
    "InvalidArgument",
    "NonFiniteValue",
    "NumericalFailure",
    "RunConfig",
    "__version__",
    "check_conditions",
    "csv_columns",
    "divergence",
    "grid_coordinates",
    "leray_project",
    "load_cnsf",
    "load_diagnostics",
    "load_manifest",
    "load_polylines",
    "make_density",
    "make_velocity",
    "poincare_weighted",
    "potential_energy",
    "pressure",
    "read_cnsf",
    "run",
    "verify_inequalities",
    "write_cnsf",
]

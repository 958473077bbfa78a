"""Steady states, stability, and quantum noise of a Kerr cavity with
dissipative optomechanical coupling."""

__version__ = "0.1.0"

from .params import (
    ConfigError,
    OperatingPoint,
    SystemParams,
    derive_drive,
    load_config,
    normalize_config,
    preset,
    serialize_config,
    thermal_occupation,
    with_updates,
)
from .response import evaluate as response
from .spectra import (
    SpectraResult,
    approx_phonon_number,
    integrate_variances,
    s_backaction,
    s_position,
    s_thermal,
    transfer_matrix_spectra,
)
from .stability import StabilityReport, assess, drift_matrix, routh_hurwitz
from .steady_state import NoConvergence, SteadyBranch, classify_branches, solve_selfconsistent
from .sweep import SweepGrid, figure_dataset, phase_diagram, sweep_1d, write_csv, write_sidecar

__all__ = [
    "ConfigError",
    "NoConvergence",
    "OperatingPoint",
    "SpectraResult",
    "StabilityReport",
    "SteadyBranch",
    "SweepGrid",
    "SystemParams",
    "__version__",
    "approx_phonon_number",
    "assess",
    "classify_branches",
    "derive_drive",
    "drift_matrix",
    "figure_dataset",
    "integrate_variances",
    "load_config",
    "normalize_config",
    "phase_diagram",
    "preset",
    "response",
    "routh_hurwitz",
    "s_backaction",
    "s_position",
    "s_thermal",
    "serialize_config",
    "solve_selfconsistent",
    "sweep_1d",
    "thermal_occupation",
    "transfer_matrix_spectra",
    "with_updates",
    "write_csv",
    "write_sidecar",
]

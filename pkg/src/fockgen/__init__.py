"""Photon-number state preparation in a driven atom-cavity system.

A two-level atom crosses a quantized cavity mode and, after a delay, a
near-resonant classical beam.  Slow delayed Gaussian pulses steer the coupled
system across the degeneracy points of its dressed-energy surfaces, moving a
chosen number of photons from the beam into the cavity.  The package builds
the reduced exchanged-photon model, maps its energy surfaces and their
degeneracies, propagates the time-dependent dynamics (including a full
lab-frame cross-check), scans transfer robustness over peak amplitudes, and
designs pulse amplitudes for a target photon number.
"""

__version__ = "0.1.0"

from .dynamics import (
    AdiabaticityReport,
    PulseSchedule,
    TrajectoryRecord,
    TruncationReport,
    adiabaticity_metric,
    basis_state,
    default_window,
    envelope,
    ground_state,
    propagate,
    propagate_semiclassical,
    rwa_ratio,
    truncation_check,
)
from .errors import ConfigError, FockgenError, PropagationError, ValidationError
from .explore import (
    DesignResult,
    PlateauRectangle,
    ScanResult,
    design_pulses,
    largest_plateau,
    robustness_scan,
)
from .model import (
    BasisIndex,
    HermitianOperator,
    ModelParams,
    PhysicalRealization,
    RealizedPulses,
    SemiclassicalParams,
    angular_to_cyclic,
    basis_labels,
    build_effective_hamiltonian,
    build_semiclassical_hamiltonian,
    cyclic_to_angular,
    dimension,
    effective_terms,
    flat_index,
    realize,
)
from .spectra import (
    DegeneracyScanWarning,
    FollowedSheet,
    IntersectionRecord,
    NearThresholdWarning,
    SurfaceGrid,
    eigen_decompose,
    exchange_plane_thresholds,
    follow_sheet,
    locate_intersections,
    maser_plane_thresholds,
    predict_transfer,
    surface_grid,
)

__all__ = [
    "AdiabaticityReport",
    "BasisIndex",
    "ConfigError",
    "DegeneracyScanWarning",
    "DesignResult",
    "FockgenError",
    "FollowedSheet",
    "HermitianOperator",
    "IntersectionRecord",
    "ModelParams",
    "NearThresholdWarning",
    "PhysicalRealization",
    "PlateauRectangle",
    "PropagationError",
    "PulseSchedule",
    "RealizedPulses",
    "ScanResult",
    "SemiclassicalParams",
    "SurfaceGrid",
    "TrajectoryRecord",
    "TruncationReport",
    "ValidationError",
    "adiabaticity_metric",
    "angular_to_cyclic",
    "basis_labels",
    "basis_state",
    "build_effective_hamiltonian",
    "build_semiclassical_hamiltonian",
    "cyclic_to_angular",
    "default_window",
    "design_pulses",
    "dimension",
    "effective_terms",
    "eigen_decompose",
    "envelope",
    "exchange_plane_thresholds",
    "flat_index",
    "follow_sheet",
    "ground_state",
    "largest_plateau",
    "locate_intersections",
    "maser_plane_thresholds",
    "predict_transfer",
    "propagate",
    "propagate_semiclassical",
    "realize",
    "robustness_scan",
    "rwa_ratio",
    "surface_grid",
    "truncation_check",
]

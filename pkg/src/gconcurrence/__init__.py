"""Distribution of the determinant and G-concurrence of random pure states."""

from .asymptotics import (
    EdgeExpansion,
    left_edge_coeffs_complex,
    left_edge_coeffs_real,
    left_edge_eval,
    right_edge_density,
    right_edge_density_g,
)
from .ensembles import SchmidtSpectrum, SystemSpec, sample_arrays, sample_batch
from .errors import (
    AccuracyError,
    CapabilityError,
    ContractError,
    DegenerateInputError,
    DomainError,
    GConcurrenceError,
    PartialResultError,
    PoleError,
)
from .harness import compare_density, concentration_scan, moment_check, run_histogram_experiment
from .inverse_transform import DensityCurve, density_d, density_g, density_n2_closed
from .moments import (
    MomentValue,
    concentration_point,
    det_moment_hs,
    det_moment_induced,
    det_moment_stirling,
    g_moment_hs,
    g_moment_induced,
    limit_moment,
)

__all__ = [
    "AccuracyError",
    "CapabilityError",
    "ContractError",
    "DegenerateInputError",
    "DensityCurve",
    "DomainError",
    "EdgeExpansion",
    "GConcurrenceError",
    "MomentValue",
    "PartialResultError",
    "PoleError",
    "SchmidtSpectrum",
    "SystemSpec",
    "compare_density",
    "concentration_point",
    "concentration_scan",
    "density_d",
    "density_g",
    "density_n2_closed",
    "det_moment_hs",
    "det_moment_induced",
    "det_moment_stirling",
    "g_moment_hs",
    "g_moment_induced",
    "left_edge_coeffs_complex",
    "left_edge_coeffs_real",
    "left_edge_eval",
    "limit_moment",
    "moment_check",
    "right_edge_density",
    "right_edge_density_g",
    "run_histogram_experiment",
    "sample_arrays",
    "sample_batch",
]

"""Super-recurrence of linear operators on C^n: spectra, orbits, certificates."""

__version__ = "0.1.0"

from .exceptions import InconclusiveError, RejectedInputError, UnsupportedSizeError
from .operators import (
    Dense,
    Diagonal,
    DirectSum,
    Polynomial,
    Power,
    Scaled,
    WeightedBackwardShift,
    dense_range_check,
    operator_norm_estimate,
)
from .spectral import (
    adjoint_point_spectrum_check,
    characteristic_polynomial,
    component_circle_check,
    polynomial_roots,
    spectrum,
)
from .orbit import best_scalar, iterate_orbit, projective_gap
from .diophantine import AngleSystem, lll_reduce, scan_return, simultaneous_return_lll, torus_distance
from .recurrence import (
    DetectionParams,
    ReturnCertificate,
    detect_recurrence,
    detect_super_recurrence,
    hyperplane_restriction,
    perturbed_characterization_check,
    refine_srec_vector,
    verify_certificate,
)
from .verdict import classify, property_suite, sufficient_condition_check

__all__ = [
    "AngleSystem", "Dense", "DetectionParams", "Diagonal", "DirectSum", "InconclusiveError",
    "Polynomial", "Power", "RejectedInputError", "ReturnCertificate", "Scaled",
    "UnsupportedSizeError", "WeightedBackwardShift", "adjoint_point_spectrum_check", "best_scalar",
    "characteristic_polynomial", "classify", "component_circle_check", "dense_range_check",
    "detect_recurrence", "detect_super_recurrence", "hyperplane_restriction", "iterate_orbit",
    "lll_reduce", "operator_norm_estimate", "perturbed_characterization_check", "polynomial_roots",
    "projective_gap", "property_suite", "refine_srec_vector", "scan_return",
    "simultaneous_return_lll", "spectrum", "sufficient_condition_check", "torus_distance",
    "verify_certificate",
]

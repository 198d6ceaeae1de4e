"""Perceptual color-to-grayscale conversion.

Converts color images to grayscale by minimizing an energy that trades
brightness fidelity against preservation of multi-scale color contrast,
with l2 (conjugate gradient) and l1 (reweighted least squares) solvers and
a per-scale evaluation metric.
"""

from .colorspace import LabImage, gray_to_rgb, lab_roundtrip_check, load_rgb, save_png, srgb_to_lab
from .contrast import (
    DEFAULT_BETAS,
    ContrastConfig,
    apply_contrast,
    apply_contrast_adjoint,
    config_from_viewing,
    dog_band,
    gaussian_blur,
    gaussian_kernel,
)
from .energy import (
    EnergyBreakdown,
    EnergyParams,
    brightness_energy,
    brightness_weight,
    color_variance_bound,
    contrast_energy,
    total_energy,
)
from .metrics import CSV_HEADER, ScaleScore, ScoreReport, full_report, pscore_at_scale, scale_losses
from .solver import (
    IrlsState,
    SolverConfig,
    SolverError,
    apply_system,
    assemble_rhs,
    convert,
    solve_l1,
    solve_l2,
)

__version__ = "0.1.0"

__all__ = [
    "LabImage",
    "srgb_to_lab",
    "gray_to_rgb",
    "lab_roundtrip_check",
    "load_rgb",
    "save_png",
    "ContrastConfig",
    "DEFAULT_BETAS",
    "config_from_viewing",
    "gaussian_kernel",
    "gaussian_blur",
    "dog_band",
    "apply_contrast",
    "apply_contrast_adjoint",
    "EnergyParams",
    "EnergyBreakdown",
    "brightness_weight",
    "brightness_energy",
    "contrast_energy",
    "total_energy",
    "color_variance_bound",
    "SolverConfig",
    "SolverError",
    "IrlsState",
    "apply_system",
    "assemble_rhs",
    "solve_l2",
    "solve_l1",
    "convert",
    "ScaleScore",
    "ScoreReport",
    "CSV_HEADER",
    "pscore_at_scale",
    "scale_losses",
    "full_report",
]

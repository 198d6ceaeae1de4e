"""Perceptual-consistency energy.

Two ingredients: a chroma-aware brightness-fidelity term, weighted per pixel
so that fidelity matters most where color itself carries little information
(low chroma, extreme lightness), and a contrast-preservation term that asks
the gray field's multi-scale band response to track the band responses of all
three Lab channels.

All reductions use ``np.sum`` (pairwise summation), so energies are
deterministic across runs and thread counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .colorspace import LabImage
from .contrast import ContrastConfig, apply_contrast

_NORMS = ("l1", "l2")


@dataclass
class EnergyParams:
    """Channel weights, weight regulator and norm selector."""

    alpha_l: float = 0.5
    alpha_ab: float = 1.5
    epsilon: float = 1.0
    norm: str = "l2"

    def __post_init__(self):
        if not (math.isfinite(self.alpha_l) and self.alpha_l > 0):
            raise ValueError(f"alpha_l must be positive, got {self.alpha_l}")
        if not (math.isfinite(self.alpha_ab) and self.alpha_ab > 0):
            raise ValueError(f"alpha_ab must be positive, got {self.alpha_ab}")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.norm not in _NORMS:
            raise ValueError(f"norm must be one of {_NORMS}, got {self.norm!r}")


@dataclass
class EnergyBreakdown:
    """Itemized energy: brightness term plus raw per-channel contrast norms.

    ``contrast_l``/``contrast_a``/``contrast_b`` are unweighted; ``total``
    applies the channel weights.
    """

    brightness_term: float
    contrast_l: float
    contrast_a: float
    contrast_b: float
    total: float

    def to_dict(self) -> dict:
        return {
            "brightness_term": self.brightness_term,
            "contrast_l": self.contrast_l,
            "contrast_a": self.contrast_a,
            "contrast_b": self.contrast_b,
            "total": self.total,
        }


def color_variance_bound(l):
    """Maximum admissible chroma at lightness ``l`` in the spherical gamut model.

    Evaluates sqrt(100^2 - 4 (l - 50)^2); zero at the poles, 100 at l = 50.
    """
    arr = np.asarray(l, dtype=np.float64)
    if np.any(arr < 0) or np.any(arr > 100):
        raise ValueError("lightness must lie in [0, 100]")
    out = np.sqrt(np.clip(100.0**2 - 4.0 * (arr - 50.0) ** 2, 0.0, None))
    return float(out) if np.isscalar(l) or arr.ndim == 0 else out


def brightness_weight(lab: LabImage, epsilon: float = 1.0) -> np.ndarray:
    """Per-pixel brightness-fidelity weight.

    w = 1 / ((sqrt(100^2 - v^2) + eps) * (sqrt(100^2 - (2l-100)^2) + eps))
    with chroma v = sqrt(a^2 + b^2) clamped to <= 100 (colors outside the
    spherical gamut model saturate at the maximal weight instead of turning
    the radical imaginary). Strictly positive, bounded by 1/eps^2.
    """
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    v = np.minimum(np.hypot(lab.a, lab.b), 100.0)
    chroma_margin = np.sqrt(np.clip(100.0**2 - v * v, 0.0, None))
    light_margin = np.sqrt(np.clip(100.0**2 - (2.0 * lab.L - 100.0) ** 2, 0.0, None))
    return 1.0 / ((chroma_margin + epsilon) * (light_margin + epsilon))


def _check_same_shape(g: np.ndarray, lab: LabImage) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    if g.shape != lab.shape:
        raise ValueError(f"gray field shape {g.shape} does not match image {lab.shape}")
    return g


def _norm_sum(x: np.ndarray, norm: str) -> float:
    if norm == "l1":
        return float(np.sum(np.abs(x)))
    if norm == "l2":
        return float(np.sum(x * x))
    raise ValueError(f"norm must be one of {_NORMS}, got {norm!r}")


def brightness_energy(g: np.ndarray, lab: LabImage, w: np.ndarray, norm: str = "l2") -> float:
    """Weighted brightness-fidelity term: sum of w |l - g| or w (l - g)^2."""
    g = _check_same_shape(g, lab)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != lab.shape:
        raise ValueError(f"weight shape {w.shape} does not match image {lab.shape}")
    d = lab.L - g
    if norm == "l1":
        return float(np.sum(w * np.abs(d)))
    if norm == "l2":
        return float(np.sum(w * d * d))
    raise ValueError(f"norm must be one of {_NORMS}, got {norm!r}")


def _contrast_residual_norms(
    g: np.ndarray, lab: LabImage, cfg: ContrastConfig, norm: str
) -> tuple[float, float, float]:
    cg = apply_contrast(g, cfg)
    return (
        _norm_sum(apply_contrast(lab.L, cfg) - cg, norm),
        _norm_sum(apply_contrast(lab.a, cfg) - cg, norm),
        _norm_sum(apply_contrast(lab.b, cfg) - cg, norm),
    )


def contrast_energy(g: np.ndarray, lab: LabImage, cfg: ContrastConfig, params: EnergyParams) -> float:
    """Contrast-preservation term: the gray band response versus all three channels."""
    g = _check_same_shape(g, lab)
    nl, na, nb = _contrast_residual_norms(g, lab, cfg, params.norm)
    return params.alpha_l * nl + params.alpha_ab * (na + nb)


def total_energy(g: np.ndarray, lab: LabImage, cfg: ContrastConfig, params: EnergyParams) -> EnergyBreakdown:
    """Brightness plus weighted contrast terms, itemized."""
    g = _check_same_shape(g, lab)
    w = brightness_weight(lab, params.epsilon)
    bright = brightness_energy(g, lab, w, params.norm)
    nl, na, nb = _contrast_residual_norms(g, lab, cfg, params.norm)
    total = bright + params.alpha_l * nl + params.alpha_ab * (na + nb)
    return EnergyBreakdown(
        brightness_term=bright, contrast_l=nl, contrast_a=na, contrast_b=nb, total=total
    )

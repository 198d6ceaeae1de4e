"""Per-scale contrast-preservation scoring.

A candidate gray field is scored one band at a time: the configuration is
restricted to a single scale (that band's weight set to 1, all others 0), the
mean absolute band-residual against each Lab channel is computed, and the
weighted mean energy Ebar is mapped to pscore = 1/(1 + Ebar) so that higher
is better and a perfect match scores 1. The raw per-channel losses are kept
in the report so any other normalization can be recomputed downstream.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .colorspace import LabImage
from .contrast import ContrastConfig, apply_contrast
from .energy import EnergyParams, total_energy

CSV_HEADER = "image_id,scale_index,sigma_px,loss_L,loss_A,loss_B,pscore,method"


@dataclass
class ScaleScore:
    """Scores of one band: mean absolute residual per channel, and pscore."""

    scale_index: int
    sigma_px: float
    loss_l: float
    loss_a: float
    loss_b: float
    pscore: float

    def to_dict(self) -> dict:
        return {
            "scale_index": self.scale_index,
            "sigma_px": self.sigma_px,
            "loss_l": self.loss_l,
            "loss_a": self.loss_a,
            "loss_b": self.loss_b,
            "pscore": self.pscore,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScaleScore":
        return cls(**d)


@dataclass
class ScoreReport:
    """Per-image evaluation: one ScaleScore per configured scale plus totals."""

    image_id: str
    per_scale: list[ScaleScore]
    brightness_term: float
    total_energy: float

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "per_scale": [s.to_dict() for s in self.per_scale],
            "brightness_term": self.brightness_term,
            "total_energy": self.total_energy,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreReport":
        return cls(
            image_id=d["image_id"],
            per_scale=[ScaleScore.from_dict(s) for s in d["per_scale"]],
            brightness_term=d["brightness_term"],
            total_energy=d["total_energy"],
        )

    def csv_rows(self, method: str) -> list[str]:
        rows = []
        for s in self.per_scale:
            rows.append(
                f"{self.image_id},{s.scale_index},{s.sigma_px!r},{s.loss_l!r},"
                f"{s.loss_a!r},{s.loss_b!r},{s.pscore!r},{method}"
            )
        return rows


def _single_scale_cfg(cfg: ContrastConfig, scale_index: int) -> ContrastConfig:
    if not 0 <= scale_index < len(cfg.scales):
        raise ValueError(
            f"scale_index {scale_index} out of range for {len(cfg.scales)} scales"
        )
    betas = tuple(1.0 if i == scale_index else 0.0 for i in range(len(cfg.scales)))
    return dataclasses.replace(cfg, betas=betas)


def scale_losses(lab: LabImage, g: np.ndarray, scale_index: int,
                 cfg: ContrastConfig) -> tuple[float, float, float]:
    """Mean absolute single-band residual of g against each Lab channel."""
    g = np.asarray(g, dtype=np.float64)
    if g.shape != lab.shape:
        raise ValueError(f"gray field shape {g.shape} does not match image {lab.shape}")
    sub = _single_scale_cfg(cfg, scale_index)
    bg = apply_contrast(g, sub)
    loss_l = float(np.mean(np.abs(apply_contrast(lab.L, sub) - bg)))
    loss_a = float(np.mean(np.abs(apply_contrast(lab.a, sub) - bg)))
    loss_b = float(np.mean(np.abs(apply_contrast(lab.b, sub) - bg)))
    return loss_l, loss_a, loss_b


def pscore_at_scale(lab: LabImage, g: np.ndarray, scale_index: int,
                    cfg: ContrastConfig, params: EnergyParams) -> float:
    """Contrast-preservation score of one band, in (0, 1], higher is better."""
    loss_l, loss_a, loss_b = scale_losses(lab, g, scale_index, cfg)
    ebar = params.alpha_l * loss_l + params.alpha_ab * (loss_a + loss_b)
    return 1.0 / (1.0 + ebar)


def full_report(lab: LabImage, g: np.ndarray, cfg: ContrastConfig,
                params: EnergyParams, image_id: str = "") -> ScoreReport:
    """Score every configured scale and attach the total-energy breakdown."""
    per_scale = []
    for i, sigma in enumerate(cfg.scales):
        loss_l, loss_a, loss_b = scale_losses(lab, g, i, cfg)
        ebar = params.alpha_l * loss_l + params.alpha_ab * (loss_a + loss_b)
        per_scale.append(
            ScaleScore(
                scale_index=i,
                sigma_px=float(sigma),
                loss_l=loss_l,
                loss_a=loss_a,
                loss_b=loss_b,
                pscore=1.0 / (1.0 + ebar),
            )
        )
    breakdown = total_energy(np.asarray(g, dtype=np.float64), lab, cfg, params)
    return ScoreReport(
        image_id=image_id,
        per_scale=per_scale,
        brightness_term=breakdown.brightness_term,
        total_energy=breakdown.total,
    )

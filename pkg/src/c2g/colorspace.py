"""sRGB <-> CIELAB conversion and 8-bit image I/O.

All conversions assume the sRGB primaries with the D65 white point (2 degree
observer) and the IEC 61966-2-1 transfer curve. Lightness L* lies in [0, 100].
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

# sRGB (D65) -> XYZ, rows X, Y, Z
_M = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)

# CIE constants, exact rationals
_EPS = 216.0 / 24389.0
_KAPPA = 24389.0 / 27.0


@dataclass
class LabImage:
    """Planar CIELAB image: three float64 arrays of shape (H, W)."""

    L: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if not (self.L.shape == self.a.shape == self.b.shape):
            raise ValueError("L, a, b planes must share a shape")
        if self.L.ndim != 2:
            raise ValueError("Lab planes must be 2-D")

    @property
    def shape(self) -> tuple[int, int]:
        return self.L.shape


def _srgb_decode(c: np.ndarray) -> np.ndarray:
    # gamma-encoded [0,1] -> linear light
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _srgb_encode(y: np.ndarray) -> np.ndarray:
    # linear light -> gamma-encoded [0,1]
    y = np.maximum(y, 0.0)
    return np.where(y <= 0.0031308, 12.92 * y, 1.055 * y ** (1.0 / 2.4) - 0.055)


def _f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _EPS, np.cbrt(t), (_KAPPA * t + 16.0) / 116.0)


def _weighted_sum(row, r, g, b):
    # fixed left-to-right association so scalar and array paths round alike
    return row[0] * r + row[1] * g + row[2] * b


def srgb_to_lab(img: np.ndarray) -> LabImage:
    """Convert an 8-bit sRGB image of shape (H, W, 3) to planar CIELAB.

    The white point is derived by pushing (1, 1, 1) through the same
    expression as the image data, which makes pure white decode to exactly
    L = 100 and keeps L inside [0, 100] for every 8-bit input.
    """
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError(f"expected integer 8-bit image, got dtype {arr.dtype}")
    if arr.min() < 0 or arr.max() > 255:
        raise ValueError("sample values must lie in [0, 255]")

    lin = _srgb_decode(arr.astype(np.float64) / 255.0)
    lr, lg, lb = lin[..., 0], lin[..., 1], lin[..., 2]

    x = _weighted_sum(_M[0], lr, lg, lb)
    y = _weighted_sum(_M[1], lr, lg, lb)
    z = _weighted_sum(_M[2], lr, lg, lb)
    xn = _weighted_sum(_M[0], 1.0, 1.0, 1.0)
    yn = _weighted_sum(_M[1], 1.0, 1.0, 1.0)
    zn = _weighted_sum(_M[2], 1.0, 1.0, 1.0)

    fx, fy, fz = _f(x / xn), _f(y / yn), _f(z / zn)
    # clip strips +/- 1 ulp of roundoff dust at the ends of the range
    L = np.clip(116.0 * fy - 16.0, 0.0, 100.0)
    a = 500.0 * (fx - fy)
    b = 200.0 * (fy - fz)
    return LabImage(L, a, b)


def gray_to_rgb(g: np.ndarray) -> np.ndarray:
    """Render a lightness plane (values in [0, 100]) as an 8-bit gray image.

    Inverts the L* channel back through luminance and the sRGB transfer so
    that ``srgb_to_lab(gray_to_rgb(g)).L`` recovers ``g`` to within one
    8-bit quantization step. Values are clipped to [0, 100] first; non-finite
    input is rejected.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2:
        raise ValueError(f"expected 2-D gray field, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise ValueError("gray field contains non-finite values")
    g = np.clip(g, 0.0, 100.0)

    y = np.where(g > 8.0, ((g + 16.0) / 116.0) ** 3, g / _KAPPA)
    v = np.clip(np.rint(255.0 * _srgb_encode(y)), 0, 255).astype(np.uint8)
    return np.repeat(v[:, :, None], 3, axis=2)


def lab_roundtrip_check(img: np.ndarray) -> int:
    """Max absolute 8-bit error of decode->re-encode over the gray pixels.

    Returns 0 when the image has no gray (R == G == B) pixels.
    """
    arr = np.asarray(img)
    lab = srgb_to_lab(arr)
    out = gray_to_rgb(lab.L)
    mask = (arr[..., 0] == arr[..., 1]) & (arr[..., 1] == arr[..., 2])
    if not mask.any():
        return 0
    diff = np.abs(out.astype(np.int64) - arr.astype(np.int64))
    return int(diff[mask].max())


def load_rgb(path: str | Path) -> np.ndarray:
    """Read a PNG or JPEG file as an (H, W, 3) uint8 array."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def save_png(path: str | Path, img: np.ndarray) -> None:
    """Write an (H, W, 3) uint8 array as an 8-bit PNG."""
    arr = np.asarray(img)
    if arr.dtype != np.uint8 or arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError("expected (H, W, 3) uint8 image")
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")

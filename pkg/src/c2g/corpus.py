"""Bundled 12-image mini corpus backing the test and evaluation suites.

All images are generated deterministically (fixed seeds, no external data).
The six ``iso_*`` images pair colors of equal lightness (|dL| < 0.5) whose
a and b channels step together, so the lightness plane carries essentially
no contrast while the chroma planes carry a lot — the regime this engine
exists for. The remaining six add ramps, noise, blobs and gradients for
variety.

Color constants were picked by a deterministic in-gamut search over the
sRGB cube (equal L*, both chroma axes stepping with aligned signs and
comparable magnitudes).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .colorspace import save_png

# iso-luminant pairs (L* given in comments, from this package's own decoder)
TEAL = (0, 144, 177)        # L=55.19  a=-20.2  b=-26.3
RED_ORANGE = (255, 45, 0)   # L=55.22  a=+74.4  b=+67.9
CYAN62 = (15, 165, 177)     # L=61.81  a=-30.4  b=-16.2
ORANGE62 = (255, 99, 0)     # L=61.82  a=+56.3  b=+71.1
SEA70 = (0, 192, 174)       # L=70.00  a=-44.1  b=-2.3
AMBER70 = (252, 144, 0)     # L=69.93  a=+33.6  b=+75.6
BLUE45 = (27, 114, 147)     # L=44.76  a=-13.0  b=-25.0
RED45 = (216, 3, 3)         # L=45.19  a=+70.4  b=+58.4
MAGENTA55 = (225, 0, 255)   # L=55.31  a=+93.8  b=-69.2
GREEN55 = (27, 153, 0)      # L=55.09  a=-56.7  b=+57.1

# a-dominant pair for red/green two-region tests (dL = -0.10, da = +139)
GREEN_RG = (0, 150, 21)     # L=53.88  a=-57.3  b=+52.1
RED_RG = (255, 0, 75)       # L=53.79  a=+81.6  b=+34.5

ISO_LUMINANT = (
    "iso_split_v",
    "iso_split_h",
    "iso_disk",
    "iso_quadrants",
    "iso_stripes",
    "iso_checker",
)

IMAGE_NAMES = ISO_LUMINANT + (
    "gray_ramp",
    "flat_olive",
    "noise_rgb",
    "blobs",
    "hue_blend",
    "sunset",
)


def _canvas(size: int, color) -> np.ndarray:
    img = np.empty((size, size, 3), dtype=np.uint8)
    img[:] = color
    return img


def _split_v(size, c1, c2):
    img = _canvas(size, c1)
    img[:, size // 2 :] = c2
    return img


def _split_h(size, c1, c2):
    img = _canvas(size, c1)
    img[size // 2 :, :] = c2
    return img


def _disk(size, bg, fg, radius_frac=0.32):
    img = _canvas(size, bg)
    yy, xx = np.mgrid[0:size, 0:size]
    c = (size - 1) / 2.0
    mask = (yy - c) ** 2 + (xx - c) ** 2 <= (radius_frac * size) ** 2
    img[mask] = fg
    return img


def _quadrants(size, colors):
    img = _canvas(size, colors[0])
    h = size // 2
    img[:h, h:] = colors[1]
    img[h:, :h] = colors[2]
    img[h:, h:] = colors[3]
    return img


def _stripes(size, c1, c2, width):
    img = _canvas(size, c1)
    xx = np.arange(size)
    img[:, (xx // width) % 2 == 1] = c2
    return img


def _checker(size, c1, c2, cell):
    yy, xx = np.mgrid[0:size, 0:size]
    img = _canvas(size, c1)
    img[((yy // cell) + (xx // cell)) % 2 == 1] = c2
    return img


def _gray_ramp(size):
    row = np.clip(np.round(np.linspace(0, 255, size)), 0, 255).astype(np.uint8)
    return np.repeat(np.repeat(row[None, :, None], size, axis=0), 3, axis=2)


def _noise_rgb(size, seed=11, block=8):
    rng = np.random.default_rng(seed)
    coarse = rng.integers(0, 256, size=(size // block, size // block, 3))
    img = np.kron(coarse, np.ones((block, block, 1), dtype=np.int64))
    return img.astype(np.uint8)


def _blobs(size, seed=23, count=6):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    img = np.zeros((size, size, 3))
    for _ in range(count):
        cy, cx = rng.uniform(0, size, 2)
        s = rng.uniform(size / 12, size / 4)
        color = rng.uniform(40, 255, 3)
        bump = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s * s))
        img += bump[:, :, None] * color[None, None, :]
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def _hue_blend(size, c1, c2):
    t = np.linspace(0.0, 1.0, size)[None, :, None]
    a = np.asarray(c1, dtype=np.float64)[None, None, :]
    b = np.asarray(c2, dtype=np.float64)[None, None, :]
    row = np.clip(np.round(a + (b - a) * t), 0, 255).astype(np.uint8)
    return np.repeat(row, size, axis=0)


def _sunset(size):
    t = np.linspace(0.0, 1.0, size)[:, None, None]
    top = np.array([252.0, 150.0, 38.0])[None, None, :]
    bottom = np.array([84.0, 26.0, 114.0])[None, None, :]
    img = np.broadcast_to(top + (bottom - top) * t, (size, size, 3)).copy()
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    disk = ((yy - 0.3 * size) ** 2 + (xx - 0.62 * size) ** 2) <= (0.11 * size) ** 2
    img[disk] = np.array([255.0, 230.0, 180.0])
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def make_image(name: str, size: int = 16) -> np.ndarray:
    """Render one corpus image by name at the given square size.

    The default stays small on purpose: the normal-equation conditioning
    grows with image size, and 16 px is the largest square at which both
    solvers finish inside the default CG iteration cap with ~30% headroom
    on every corpus image. Larger renders work with a raised cap.
    """
    if size < 8:
        raise ValueError("size must be >= 8")
    builders = {
        "iso_split_v": lambda: _split_v(size, TEAL, RED_ORANGE),
        "iso_split_h": lambda: _split_h(size, CYAN62, ORANGE62),
        "iso_disk": lambda: _disk(size, TEAL, RED_ORANGE),
        "iso_quadrants": lambda: _quadrants(size, (TEAL, RED_ORANGE, GREEN55, MAGENTA55)),
        "iso_stripes": lambda: _stripes(size, SEA70, AMBER70, max(size // 6, 4)),
        "iso_checker": lambda: _checker(size, BLUE45, RED45, max(size // 4, 4)),
        "gray_ramp": lambda: _gray_ramp(size),
        "flat_olive": lambda: _canvas(size, (110, 110, 40)),
        "noise_rgb": lambda: _noise_rgb(size, block=max(size // 12, 2)),
        "blobs": lambda: _blobs(size),
        "hue_blend": lambda: _hue_blend(size, TEAL, RED_ORANGE),
        "sunset": lambda: _sunset(size),
    }
    if name not in builders:
        raise ValueError(f"unknown corpus image {name!r}")
    return builders[name]()


def generate(out_dir: str | Path, size: int = 16) -> list[Path]:
    """Write the full corpus as PNGs into ``out_dir``; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in IMAGE_NAMES:
        p = out / f"{name}.png"
        save_png(p, make_image(name, size))
        paths.append(p)
    return paths

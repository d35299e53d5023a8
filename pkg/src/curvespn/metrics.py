"""Structural similarity between a reconstruction and its source region."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

SIGMA = 1.5
TRUNCATE = 3.5  # radius 5: an 11 x 11 window at sigma 1.5
K1, K2 = 0.01, 0.03
DATA_RANGE = 255.0


def to_gray(img) -> np.ndarray:
    a = np.asarray(img, dtype=np.float64)
    if a.ndim == 3:
        a = a[..., :3] @ np.array([0.299, 0.587, 0.114])
    return a


def _blur(z: np.ndarray) -> np.ndarray:
    return gaussian_filter(z, SIGMA, truncate=TRUNCATE)


def ssim(a, b) -> float:
    """Mean SSIM over all fully-contained 11 x 11 Gaussian windows (sigma 1.5)."""
    x, y = to_gray(a), to_gray(b)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if min(x.shape) < 11:
        raise ValueError("images must be at least 11 x 11")
    mx, my = _blur(x), _blur(y)
    vx = _blur(x * x) - mx * mx
    vy = _blur(y * y) - my * my
    cxy = _blur(x * y) - mx * my
    c1, c2 = (K1 * DATA_RANGE) ** 2, (K2 * DATA_RANGE) ** 2
    s = ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
    return float(s[5:-5, 5:-5].mean())

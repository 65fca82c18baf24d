"""Deterministic synthetic test images."""

from __future__ import annotations

import numpy as np

__all__ = ["texture_image"]


def texture_image(size: int = 128) -> np.ndarray:
    """Two oriented sinusoidal gratings with a flat square patch.

    Values stay within roughly ``[40, 220]`` so the image is strictly
    positive, as the multiplicative models require.
    """
    i, j = np.meshgrid(np.arange(size, dtype=np.float64), np.arange(size, dtype=np.float64), indexing="ij")
    img = (
        128.0
        + 45.0 * np.sin(2.0 * np.pi * (0.8 * i + 0.6 * j) / 16.0)
        + 35.0 * np.sin(2.0 * np.pi * (-0.5 * i + 0.866 * j) / 9.0)
    )
    lo, hi = size // 8, size // 8 + size * 3 // 8
    img[lo:hi, lo:hi] = 180.0
    return img

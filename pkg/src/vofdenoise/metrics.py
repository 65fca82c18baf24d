"""PSNR and SSIM on the 0-255 intensity scale."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .filters import convolve, gaussian_kernel
from .image import as_image

__all__ = ["SsimParams", "PERFECT_PSNR_LABEL", "psnr", "ssim", "ssim_map", "format_psnr"]

PEAK = 255.0
# CSV spelling of psnr() == inf (identical images)
PERFECT_PSNR_LABEL = "identical"


@dataclass(frozen=True)
class SsimParams:
    sigma: float = 1.5
    radius: int = 5
    c1: float = (0.01 * PEAK) ** 2
    c2: float = (0.03 * PEAK) ** 2

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError("SSIM constants must be positive")
        if not self.sigma > 0 or self.radius < 1:
            raise ValueError("SSIM window needs sigma > 0 and radius >= 1")


def _pair(u, reference):
    u = as_image(u)
    reference = as_image(reference)
    if u.shape != reference.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {reference.shape}")
    return u, reference


def psnr(u: np.ndarray, reference: np.ndarray) -> float:
    """``10 log10(255^2 / MSE)`` in dB; ``math.inf`` when the images agree."""
    u, reference = _pair(u, reference)
    diff = u - reference
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)


def format_psnr(value: float) -> str:
    return PERFECT_PSNR_LABEL if math.isinf(value) else f"{value:.4f}"


def ssim_map(u: np.ndarray, reference: np.ndarray, params: SsimParams = SsimParams()) -> np.ndarray:
    """Local SSIM with Gaussian-weighted statistics and mirror boundaries."""
    x, y = _pair(u, reference)
    window = 2 * params.radius + 1
    if min(x.shape) < window:
        raise ValueError(f"image {x.shape} smaller than the {window}x{window} SSIM window")
    g = gaussian_kernel(params.sigma, params.radius)
    mu_x = convolve(x, g)
    mu_y = convolve(y, g)
    mu_xx = mu_x * mu_x
    mu_yy = mu_y * mu_y
    mu_xy = mu_x * mu_y
    var_x = convolve(x * x, g) - mu_xx
    var_y = convolve(y * y, g) - mu_yy
    cov = convolve(x * y, g) - mu_xy
    num = (2.0 * mu_xy + params.c1) * (2.0 * cov + params.c2)
    den = (mu_xx + mu_yy + params.c1) * (var_x + var_y + params.c2)
    return num / den


def ssim(u: np.ndarray, reference: np.ndarray, params: SsimParams = SsimParams()) -> float:
    """Mean structural similarity, in ``[-1, 1]``."""
    return float(np.mean(ssim_map(u, reference, params)))

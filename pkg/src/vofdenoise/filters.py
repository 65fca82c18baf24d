"""Gaussian smoothing and the Gabor filter bank.

Kernels are square float64 arrays of odd side ``2 * radius + 1``. All
filtering is 2-D correlation with mirror boundaries (reflection about the
edge pixel, which is not repeated: ``d c b | a b c d | c b a``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .image import as_image

__all__ = [
    "GaborBank",
    "gaussian_kernel",
    "default_radius",
    "convolve",
    "crop_kernel",
    "gabor_kernel",
    "gabor_bank",
    "scale_frequencies",
    "texture_feature",
]


def default_radius(sigma: float) -> int:
    return max(1, math.ceil(3.0 * sigma))


def gaussian_kernel(sigma: float, radius: int | None = None) -> np.ndarray:
    """Sampled isotropic Gaussian, renormalized to unit sum."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    if radius is None:
        radius = default_radius(sigma)
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius!r}")
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g1 = np.exp(-(x * x) / (2.0 * sigma * sigma))
    kernel = np.outer(g1, g1)
    return kernel / kernel.sum()


def _radius(kernel: np.ndarray) -> int:
    if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1] or kernel.shape[0] % 2 != 1:
        raise ValueError(f"kernel must be square with odd side, got shape {kernel.shape}")
    return kernel.shape[0] // 2


def crop_kernel(kernel: np.ndarray, radius: int) -> np.ndarray:
    """Central ``(2*radius+1)**2`` window of ``kernel`` (no renormalization)."""
    r = _radius(kernel)
    if radius >= r:
        return kernel
    return kernel[r - radius:r + radius + 1, r - radius:r + radius + 1]


def convolve(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Correlate ``img`` with ``kernel`` using mirror boundaries.

    Raises
    ------
    ValueError
        If the kernel radius is not smaller than both image dimensions.
    """
    img = as_image(img)
    kernel = np.asarray(kernel, dtype=np.float64)
    r = _radius(kernel)
    if r and r >= min(img.shape):
        raise ValueError(
            f"kernel radius {r} too large for image of shape {img.shape}"
        )
    padded = np.pad(img, r, mode="reflect")
    out = np.empty_like(img)
    _correlate_valid(padded, np.ascontiguousarray(kernel), out)
    return out


@numba.njit(cache=True)
def _correlate_valid(padded, kernel, out):
    height, width = out.shape
    n = kernel.shape[0]
    for i in range(height):
        for j in range(width):
            acc = 0.0
            for a in range(n):
                for b in range(n):
                    acc += padded[i + a, j + b] * kernel[a, b]
            out[i, j] = acc


def gabor_kernel(wavelength: float, theta: float, sigma: float, radius: int) -> np.ndarray:
    """``exp(-|x|^2 / (2 sigma^2)) * cos(2 pi / wavelength * <b, x>)``.

    ``b = (cos theta, sin theta)`` and ``x = (col, row)`` offsets from the
    center. The kernel is used unnormalized.
    """
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    y, x = np.meshgrid(t, t, indexing="ij")
    envelope = np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
    carrier = np.cos(2.0 * np.pi / wavelength * (np.cos(theta) * x + np.sin(theta) * y))
    return envelope * carrier


@dataclass(frozen=True)
class GaborBank:
    """Filters ``H_k`` with their ``(wavelength, orientation, sigma)`` triples."""

    filters: tuple[np.ndarray, ...]
    params: tuple[tuple[float, float, float], ...]
    orientations: int
    scales: int
    summed: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.filters) != len(self.params):
            raise ValueError("filters and params differ in length")
        if len(self.filters) != self.orientations * self.scales:
            raise ValueError("bank size must equal orientations * scales")
        object.__setattr__(self, "summed", np.sum(np.stack(self.filters), axis=0))

    def __len__(self):
        return len(self.filters)

    @property
    def radius(self) -> int:
        return _radius(self.summed)


def scale_frequencies(scales: int, u_low: float, u_high: float) -> tuple[np.ndarray, float]:
    """Geometric center frequencies from ``u_low`` to ``u_high`` and their ratio."""
    if scales == 1:
        return np.array([u_high]), u_high / u_low
    ratio = (u_high / u_low) ** (1.0 / (scales - 1))
    return u_low * ratio ** np.arange(scales), ratio


def gabor_bank(
    orientations: int = 4,
    scales: int = 8,
    u_low: float = 0.05,
    u_high: float = 0.4,
    radius: int | None = None,
) -> GaborBank:
    """Manjunath-Ma style bank of isotropic-envelope Gabor filters.

    Frequencies are spaced geometrically across scales and orientations
    evenly over ``[0, pi)``. The envelope width at center frequency ``f``
    follows the half-peak contact rule between adjacent scales,
    ``sigma_u = (a - 1) f / ((a + 1) sqrt(2 ln 2))`` and
    ``sigma = 1 / (2 pi sigma_u)``.
    """
    if orientations < 1 or scales < 1:
        raise ValueError("orientations and scales must be >= 1")
    if not 0.0 < u_low < u_high < 0.5:
        raise ValueError(f"need 0 < u_low < u_high < 0.5, got {u_low}, {u_high}")
    freqs, ratio = scale_frequencies(scales, u_low, u_high)
    spread = (ratio - 1.0) / ((ratio + 1.0) * math.sqrt(2.0 * math.log(2.0)))
    sigmas = 1.0 / (2.0 * np.pi * spread * freqs)
    if radius is None:
        radius = default_radius(float(sigmas.max()))

    filters = []
    params = []
    for s in range(scales):
        for o in range(orientations):
            theta = o * np.pi / orientations
            wavelength = 1.0 / freqs[s]
            filters.append(gabor_kernel(wavelength, theta, sigmas[s], radius))
            params.append((float(wavelength), float(theta), float(sigmas[s])))
    return GaborBank(tuple(filters), tuple(params), orientations, scales)


def texture_feature(f: np.ndarray, bank: GaborBank, radius: int | None = None) -> np.ndarray:
    """Response of ``f`` to the summed bank kernel ``H = sum_k H_k``.

    ``radius`` optionally crops ``H`` to a smaller window, e.g. for images
    smaller than the bank's support.
    """
    kernel = bank.summed if radius is None else crop_kernel(bank.summed, radius)
    return convolve(f, kernel)

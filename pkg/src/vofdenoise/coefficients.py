"""Pairwise kernel fields over the square neighbor window.

For every pixel ``p`` and every offset ``o`` with ``max(|di|, |dj|) <= eta``
(``o != 0``) the pair field stores

* ``k = a * b``: gray-level detector times edge detector,
* ``s``: the variable fractional order driven by Gabor texture contrast,
* ``kw = k / (grid_h * |o|) ** (2 + s * p)``: the premultiplied stencil
  weight consumed by the steppers (``p = 1`` for the 1-Laplacian).

Each unordered pixel pair is evaluated once and mirrored, so
``field[o][p] == field[-o][p + o]`` holds bitwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .filters import GaborBank, convolve, crop_kernel, default_radius, gaussian_kernel
from .image import as_image

__all__ = [
    "CoeffConfig",
    "PairField",
    "window_offsets",
    "gray_detector_a",
    "edge_detector_b",
    "order_field_s",
    "distance_weight",
    "default_texture_scale",
    "build_pair_field",
    "uniform_pair_field",
    "assemble_pair_field",
    "pair_slices",
]

A_MODES = ("constant_one", "gray_detector")


def default_texture_scale(looks: int | None) -> float:
    """``log2((2L + 4) / 3)`` when the number of looks is known, else 1."""
    if looks is None:
        return 1.0
    return math.log2((2 * looks + 4) / 3)


@dataclass(frozen=True)
class CoeffConfig:
    a_mode: str = "gray_detector"
    r: float = 0.6
    sigma_f: float = 1.0
    sigma_g: float = 15.0
    h_g: float = 10.0
    eta: int = 3
    s_minus: float = 0.5
    s_plus: float = 0.99
    # None: derive from the noise level, see default_texture_scale
    m: float | None = None
    grid_h: float = 1.0

    def __post_init__(self):
        if self.a_mode not in A_MODES:
            raise ValueError(f"a_mode must be one of {A_MODES}, got {self.a_mode!r}")
        if not 0.0 < self.s_minus <= self.s_plus < 1.0:
            raise ValueError(
                f"need 0 < s_minus <= s_plus < 1, got {self.s_minus}, {self.s_plus}"
            )
        if int(self.eta) != self.eta or self.eta < 1:
            raise ValueError(f"eta must be an integer >= 1, got {self.eta!r}")
        for name in ("r", "sigma_f", "sigma_g", "h_g", "grid_h"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.m is not None and not self.m > 0:
            raise ValueError(f"m must be positive, got {self.m!r}")

    def texture_scale(self, looks: int | None = None) -> float:
        return default_texture_scale(looks) if self.m is None else self.m


def window_offsets(eta: int) -> list[tuple[int, int]]:
    """Row-major offsets of the ``(2 eta + 1)**2`` window minus the center.

    Offset ``i`` and offset ``len - 1 - i`` are negatives of each other.
    """
    return [
        (di, dj)
        for di in range(-eta, eta + 1)
        for dj in range(-eta, eta + 1)
        if (di, dj) != (0, 0)
    ]


# Pair formulas. Each is symmetric in its two pixel arguments.

def _gray(fp, fq, M, r):
    return (fp * fq / (M * M)) ** r


def _edge(gp, gq, h_g):
    d = gp - gq
    return np.exp(-(d * d) / h_g)


def _order(hp, hq, s_minus, s_plus, m):
    d = hp - hq
    return s_minus + (s_plus - s_minus) * np.exp(-m * (d * d))


def distance_weight(di: int, dj: int, s, grid_h: float = 1.0, p: float = 1.0):
    """``1 / (grid_h * sqrt(di^2 + dj^2)) ** (2 + s p)``."""
    return 1.0 / (grid_h * math.sqrt(di * di + dj * dj)) ** (2.0 + s * p)


def gray_detector_a(f_sigma: np.ndarray, M: float, r: float, p, q) -> float:
    """Gray-value detector ``(f_sigma(p) f_sigma(q) / M^2) ** r``."""
    if not M > 0:
        raise ValueError(
            "maximum of the smoothed image is zero; use a_mode='constant_one'"
        )
    return float(_gray(f_sigma[p], f_sigma[q], M, r))


def edge_detector_b(g: np.ndarray, h_g: float, eta: int, p, q) -> float:
    """Edge detector ``exp(-|g(p) - g(q)|^2 / h_g)``, zero outside the window."""
    if max(abs(p[0] - q[0]), abs(p[1] - q[1])) > eta:
        return 0.0
    return float(_edge(g[p], g[q], h_g))


def order_field_s(h_tex: np.ndarray, s_minus: float, s_plus: float, m: float, p, q) -> float:
    """Variable order ``s- + (s+ - s-) exp(-m |h(p) - h(q)|^2)``."""
    return float(_order(h_tex[p], h_tex[q], s_minus, s_plus, m))


@dataclass(frozen=True)
class PairField:
    """Per-pixel, per-offset kernel arrays of shape ``(n_offsets, H, W)``.

    Entries whose neighbor falls outside the image are marked invalid and
    hold ``k = kw = 0`` and ``s = nan``.
    """

    eta: int
    grid_h: float
    offsets: tuple[tuple[int, int], ...]
    k: np.ndarray
    s: np.ndarray
    valid: np.ndarray
    p: float = 1.0
    kw: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 1.0 <= self.p <= 2.0:
            raise ValueError(f"p must lie in [1, 2], got {self.p!r}")
        kw = np.zeros_like(self.k)
        for i, (di, dj) in enumerate(self.offsets):
            v = self.valid[i]
            kw[i][v] = self.k[i][v] * distance_weight(di, dj, self.s[i][v], self.grid_h, self.p)
        for arr in (self.k, self.s, self.valid, kw):
            arr.flags.writeable = False
        object.__setattr__(self, "kw", kw)

    @property
    def shape(self) -> tuple[int, int]:
        return self.k.shape[1:]

    @property
    def w(self) -> np.ndarray:
        """Distance weights alone (``kw / k`` without the division)."""
        out = np.zeros_like(self.s)
        for i, (di, dj) in enumerate(self.offsets):
            v = self.valid[i]
            out[i][v] = distance_weight(di, dj, self.s[i][v], self.grid_h, self.p)
        return out

    def with_p(self, p: float) -> "PairField":
        """Same ``k`` and ``s`` with weights for the ``p``-Laplacian exponent."""
        return replace(self, p=float(p))

    def weight_sum(self) -> np.ndarray:
        """``sum_o kw(p, o)`` per pixel, the bound on one step's increment / tau."""
        return self.kw.sum(axis=0)


def pair_slices(shape, di, dj):
    """Slices (dst, src) so that ``src`` pixels are ``dst`` pixels shifted by (di, dj)."""
    height, width = shape
    rows = max(0, height - abs(di))
    cols = max(0, width - abs(dj))
    r0, c0 = max(0, -di), max(0, -dj)
    dst = (slice(r0, r0 + rows), slice(c0, c0 + cols))
    src = (slice(r0 + di, r0 + di + rows), slice(c0 + dj, c0 + dj + cols))
    return dst, src


def assemble_pair_field(
    shape: tuple[int, int],
    eta: int,
    pair: Callable[[tuple, tuple], tuple[np.ndarray, np.ndarray]],
    grid_h: float = 1.0,
    p: float = 1.0,
) -> PairField:
    """Fill a PairField from ``pair(dst, src) -> (k, s)``.

    ``pair`` receives index slices of the pixels and of their neighbors and is
    called once per unordered offset pair; the mirrored offset is copied.
    """
    offsets = window_offsets(eta)
    n = len(offsets)
    k = np.zeros((n, *shape))
    s = np.full((n, *shape), np.nan)
    valid = np.zeros((n, *shape), dtype=bool)
    for i in range(n // 2, n):
        di, dj = offsets[i]
        dst, src = pair_slices(shape, di, dj)
        kv, sv = pair(dst, src)
        j = n - 1 - i
        k[i][dst] = kv
        s[i][dst] = sv
        valid[i][dst] = True
        k[j][src] = kv
        s[j][src] = sv
        valid[j][src] = True
    return PairField(eta, float(grid_h), tuple(offsets), k, s, valid, float(p))


def uniform_pair_field(
    shape: tuple[int, int],
    eta: int = 3,
    s: float = 0.99,
    k: float = 1.0,
    grid_h: float = 1.0,
    p: float = 1.0,
) -> PairField:
    """Pair field with constant ``k`` and ``s``, e.g. for the ``k == 1`` model."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s!r}")

    def pair(dst, src):
        region = np.empty((dst[0].stop - dst[0].start, dst[1].stop - dst[1].start))
        return np.full_like(region, k), np.full_like(region, s)

    return assemble_pair_field(tuple(shape), eta, pair, grid_h, p)


def _smooth(img: np.ndarray, sigma: float) -> np.ndarray:
    max_r = min(img.shape) - 1
    if max_r < 1:
        return img.copy()
    return convolve(img, gaussian_kernel(sigma, min(default_radius(sigma), max_r)))


def build_pair_field(
    f: np.ndarray,
    cfg: CoeffConfig,
    bank: GaborBank,
    looks: int | None = None,
    p: float = 1.0,
) -> PairField:
    """Build ``k = a * b`` and ``s`` from the observed image ``f``.

    Smoothing and Gabor kernels wider than the image are cropped to radius
    ``min(H, W) - 1``; the Gaussian crops are renormalized. ``looks`` feeds
    the default texture scale ``m``.
    """
    f = as_image(f)
    g = _smooth(f, cfg.sigma_g)
    max_r = min(f.shape) - 1
    h_tex = convolve(f, crop_kernel(bank.summed, max_r)) if max_r >= 1 else f * bank.summed.sum()
    m = cfg.texture_scale(looks)

    if cfg.a_mode == "gray_detector":
        f_sigma = _smooth(f, cfg.sigma_f)
        M = float(f_sigma.max())
        if not M > 0:
            raise ValueError(
                "maximum of the smoothed image is zero; use a_mode='constant_one'"
            )
    else:
        f_sigma = None

    def pair(dst, src):
        k = _edge(g[dst], g[src], cfg.h_g)
        if f_sigma is not None:
            k = _gray(f_sigma[dst], f_sigma[src], M, cfg.r) * k
        s = _order(h_tex[dst], h_tex[src], cfg.s_minus, cfg.s_plus, m)
        return k, s

    return assemble_pair_field(f.shape, cfg.eta, pair, cfg.grid_h, p)

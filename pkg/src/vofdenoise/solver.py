"""Explicit time stepping for the variable-order fractional diffusion models.

Four steppers share the Jacobi update ``u_next = u + tau * rate(u)``:

``vo_f1l``
    fractional 1-Laplacian, ``rate = sum_o kw * sign0(u(p+o) - u(p))``
``vo_fpl``
    fractional p-Laplacian (``1 < p <= 2``), ``sign0`` replaced by
    ``|du| ** (p - 2) * du``
``f1p_aa``
    ``vo_f1l`` plus the fidelity source ``lam * (f - u) / u**2``
``aa``
    regularized TV curvature plus the same source, Neumann boundary

The nonlocal steppers accumulate offsets in window order for every pixel,
which is what makes them reproducible against a scalar reference loop.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .coefficients import CoeffConfig, PairField, pair_slices, build_pair_field
from .filters import GaborBank
from .image import as_image, mean
from .metrics import SsimParams, format_psnr, psnr, ssim

logger = logging.getLogger(__name__)

__all__ = [
    "MODELS",
    "STOP_POLICIES",
    "SolverConfig",
    "IterationRecord",
    "RunReport",
    "sign0",
    "step_vo_f1l",
    "step_vo_fpl",
    "step_f1p_aa",
    "step_aa",
    "tv_curvature",
    "discrete_energy",
    "run",
]

MODELS = ("vo_f1l", "vo_fpl", "f1p_aa", "aa")
STOP_POLICIES = ("max_psnr", "fixed_iters", "mean_change")


@dataclass(frozen=True)
class SolverConfig:
    tau: float = 0.5
    max_iters: int = 300
    stop_policy: str = "max_psnr"
    patience: int = 5
    # mean |u_next - u| threshold for stop_policy="mean_change"
    tol: float = 1e-4
    p: float | None = None
    lam: float = 100.0
    eps_tv: float = 1e-3
    u_floor: float = 1e-6

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be an integer >= 1, got {self.max_iters!r}")
        if self.stop_policy not in STOP_POLICIES:
            raise ValueError(f"stop_policy must be one of {STOP_POLICIES}, got {self.stop_policy!r}")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.p is not None and not 1.0 < self.p <= 2.0:
            raise ValueError(f"p must lie in (1, 2], got {self.p!r}")
        if not self.lam >= 0:
            raise ValueError(f"lam must be >= 0, got {self.lam!r}")
        if not (self.eps_tv > 0 and self.u_floor > 0):
            raise ValueError("eps_tv and u_floor must be positive")


def sign0(x):
    """Sign with ``sign0(0) == 0``."""
    return np.sign(x)


@numba.njit(cache=True)
def _rate_kernel(u, kw, offsets, p, out):
    height, width = u.shape
    for i in range(height):
        for j in range(width):
            center = u[i, j]
            acc = 0.0
            for n in range(offsets.shape[0]):
                ii = i + offsets[n, 0]
                jj = j + offsets[n, 1]
                if ii < 0 or ii >= height or jj < 0 or jj >= width:
                    continue
                du = u[ii, jj] - center
                if du == 0.0:
                    continue
                if p == 1.0:
                    flux = 1.0 if du > 0.0 else -1.0
                elif p == 2.0:
                    flux = du
                else:
                    flux = abs(du) ** (p - 1.0)
                    if du < 0.0:
                        flux = -flux
                acc += kw[n, i, j] * flux
            out[i, j] = acc


def _nonlocal_rate(u: np.ndarray, pf: PairField, p: float) -> np.ndarray:
    """``sum_o kw(., o) * phi_p(u(. + o) - u(.))``, offsets summed in window order."""
    if u.shape != pf.shape:
        raise ValueError(f"image shape {u.shape} does not match pair field {pf.shape}")
    out = np.empty_like(u)
    offsets = np.asarray(pf.offsets, dtype=np.int64)
    _rate_kernel(np.ascontiguousarray(u), pf.kw, offsets, float(p), out)
    return out


def step_vo_f1l(u: np.ndarray, pf: PairField, tau: float) -> np.ndarray:
    """One explicit step of the variable-order fractional 1-Laplacian flow."""
    u = as_image(u)
    if pf.p != 1.0:
        raise ValueError(f"pair field weights were built for p={pf.p}, expected 1")
    return u + tau * _nonlocal_rate(u, pf, 1.0)


def step_vo_fpl(u: np.ndarray, pf_p: PairField, tau: float, p: float) -> np.ndarray:
    """One explicit step of the variable-order fractional p-Laplacian flow."""
    if not 1.0 < p <= 2.0:
        raise ValueError(f"p must lie in (1, 2], got {p!r}")
    if pf_p.p != p:
        raise ValueError(f"pair field weights were built for p={pf_p.p}, got p={p}")
    u = as_image(u)
    return u + tau * _nonlocal_rate(u, pf_p, float(p))


def _source(u, f, lam, u_floor):
    return lam * (f - u) / np.maximum(u, u_floor) ** 2


def step_f1p_aa(
    u: np.ndarray,
    pf: PairField,
    tau: float,
    lam: float,
    f: np.ndarray,
    u_floor: float = 1e-6,
) -> np.ndarray:
    """``step_vo_f1l`` plus ``tau * lam * (f - u) / max(u, u_floor)**2``."""
    u = as_image(u)
    f = as_image(f)
    if f.shape != u.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {f.shape}")
    return step_vo_f1l(u, pf, tau) + tau * _source(u, f, lam, u_floor)


def tv_curvature(u: np.ndarray, eps: float) -> np.ndarray:
    """``div(grad u / sqrt(|grad u|^2 + eps^2))`` with zero boundary flux.

    Fluxes live on cell faces: the normal component is the difference of
    the two adjacent pixels, the tangential one the mean of the two central
    differences next to the face. Ghost cells mirror the edge pixel.
    """
    height, width = u.shape
    P = np.pad(u, 1, mode="edge")
    eps2 = eps * eps

    # faces between rows i and i+1
    dn = P[2:-1, 1:-1] - P[1:-2, 1:-1]
    dt = 0.25 * ((P[1:-2, 2:] - P[1:-2, :-2]) + (P[2:-1, 2:] - P[2:-1, :-2]))
    fy = np.zeros((height + 1, width))
    fy[1:-1] = dn / np.sqrt(dn * dn + dt * dt + eps2)

    # faces between columns j and j+1
    dn = P[1:-1, 2:-1] - P[1:-1, 1:-2]
    dt = 0.25 * ((P[2:, 1:-2] - P[:-2, 1:-2]) + (P[2:, 2:-1] - P[:-2, 2:-1]))
    fx = np.zeros((height, width + 1))
    fx[:, 1:-1] = dn / np.sqrt(dn * dn + dt * dt + eps2)

    return (fy[1:] - fy[:-1]) + (fx[:, 1:] - fx[:, :-1])


def step_aa(
    u: np.ndarray,
    tau: float,
    lam: float,
    f: np.ndarray,
    eps_tv: float = 1e-3,
    u_floor: float = 1e-6,
) -> np.ndarray:
    """Explicit step of the regularized TV flow with the multiplicative source."""
    u = as_image(u)
    f = as_image(f)
    if f.shape != u.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {f.shape}")
    if not eps_tv > 0:
        raise ValueError("eps_tv must be positive")
    return u + tau * (tv_curvature(u, eps_tv) + _source(u, f, lam, u_floor))


def discrete_energy(u: np.ndarray, pf: PairField) -> float:
    """``1/2 sum_p sum_o kw(p, o) |u(p+o) - u(p)| ** pf.p``."""
    u = as_image(u)
    if u.shape != pf.shape:
        raise ValueError(f"image shape {u.shape} does not match pair field {pf.shape}")
    parts = []
    for i, (di, dj) in enumerate(pf.offsets):
        dst, src = pair_slices(u.shape, di, dj)
        du = np.abs(u[src] - u[dst])
        if pf.p != 1.0:
            du = du ** pf.p
        parts.append(float(np.sum(pf.kw[i][dst] * du)))
    return 0.5 * math.fsum(parts)


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    psnr: float | None
    ssim: float | None
    mass: float
    min: float
    max: float
    energy: float

    CSV_HEADER = ("iter", "psnr", "ssim", "mass", "min", "max", "energy")

    def csv_row(self) -> list[str]:
        return [
            str(self.iter),
            "" if self.psnr is None else format_psnr(self.psnr),
            "" if self.ssim is None else f"{self.ssim:.4f}",
            f"{self.mass:.10g}",
            f"{self.min:.10g}",
            f"{self.max:.10g}",
            f"{self.energy:.10g}",
        ]


@dataclass
class RunReport:
    """Diagnostics of one solver run.

    ``records[n]`` describes iterate ``n`` (``records[0]`` is the input).
    ``final_image`` is the best-PSNR iterate under ``max_psnr`` and the
    last iterate otherwise.
    """

    records: list[IterationRecord]
    final_image: np.ndarray
    stopped_at: int
    stop_reason: str
    best_iter: int
    model: str = "vo_f1l"
    pair_field: PairField | None = field(default=None, repr=False)

    @property
    def best(self) -> IterationRecord:
        return self.records[self.best_iter]

    def write_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(IterationRecord.CSV_HEADER)
            for rec in self.records:
                writer.writerow(rec.csv_row())


def _stepper(model: str, pf: PairField, cfg: SolverConfig, f: np.ndarray):
    if model == "vo_f1l":
        return lambda u: step_vo_f1l(u, pf, cfg.tau)
    if model == "vo_fpl":
        return lambda u: step_vo_fpl(u, pf, cfg.tau, cfg.p)
    if model == "f1p_aa":
        return lambda u: step_f1p_aa(u, pf, cfg.tau, cfg.lam, f, cfg.u_floor)
    if model == "aa":
        return lambda u: step_aa(u, cfg.tau, cfg.lam, f, cfg.eps_tv, cfg.u_floor)
    raise ValueError(f"model must be one of {MODELS}, got {model!r}")


def run(
    f: np.ndarray,
    solver_cfg: SolverConfig,
    coeff_cfg: CoeffConfig,
    bank: GaborBank,
    reference: np.ndarray | None = None,
    *,
    model: str = "vo_f1l",
    looks: int | None = None,
    pair_field: PairField | None = None,
    ssim_params: SsimParams = SsimParams(),
) -> RunReport:
    """Denoise ``f`` with ``model`` and record per-iteration diagnostics.

    The pair field is built once from ``f`` (or taken from ``pair_field``)
    and frozen for the whole run. PSNR/SSIM are recorded only when a
    ``reference`` is given; ``max_psnr`` requires one.
    """
    f = as_image(f)
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")
    if solver_cfg.stop_policy == "max_psnr" and reference is None:
        raise ValueError("stop_policy 'max_psnr' needs a reference image")
    if model == "vo_fpl" and solver_cfg.p is None:
        raise ValueError("model 'vo_fpl' needs solver p")
    if reference is not None:
        reference = as_image(reference)
        if reference.shape != f.shape:
            raise ValueError(f"reference shape {reference.shape} != input shape {f.shape}")

    pf = pair_field if pair_field is not None else build_pair_field(f, coeff_cfg, bank, looks)
    pf = pf.with_p(solver_cfg.p) if model == "vo_fpl" else pf.with_p(1.0)
    if model == "vo_fpl" and solver_cfg.p == 2.0:
        bound = 1.0 / float(pf.weight_sum().max())
        if solver_cfg.tau > bound:
            logger.warning("tau=%g exceeds the p=2 stability bound %.4g; expect divergence",
                           solver_cfg.tau, bound)
    step = _stepper(model, pf, solver_cfg, f)
    with_ssim = reference is not None and min(f.shape) >= 2 * ssim_params.radius + 1

    def record(n, u):
        return IterationRecord(
            iter=n,
            psnr=None if reference is None else psnr(u, reference),
            ssim=ssim(u, reference, ssim_params) if with_ssim else None,
            mass=mean(u),
            min=float(u.min()),
            max=float(u.max()),
            energy=discrete_energy(u, pf),
        )

    u = f.copy()
    records = [record(0, u)]
    best_iter, best_u = 0, u
    stalled = 0
    stop_reason = "max_iters"
    n = 0
    for n in range(1, solver_cfg.max_iters + 1):
        u_next = step(u)
        if not np.all(np.isfinite(u_next)):
            raise FloatingPointError(f"non-finite values at iteration {n}; reduce tau")
        change = float(np.mean(np.abs(u_next - u)))
        u = u_next
        rec = record(n, u)
        records.append(rec)
        logger.debug("iter %d psnr %s", n, rec.psnr)

        if solver_cfg.stop_policy == "max_psnr":
            if rec.psnr > records[best_iter].psnr:
                best_iter, best_u = n, u
                stalled = 0
            else:
                stalled += 1
                if stalled >= solver_cfg.patience:
                    stop_reason = "patience"
                    break
        elif solver_cfg.stop_policy == "mean_change" and change < solver_cfg.tol:
            stop_reason = "converged"
            break

    if solver_cfg.stop_policy != "max_psnr":
        best_iter, best_u = n, u
    if reference is not None:
        logger.info(
            "%s stopped at %d (%s), best iter %d psnr %s",
            model, n, stop_reason, best_iter, format_psnr(records[best_iter].psnr),
        )
    return RunReport(records, best_u, n, stop_reason, best_iter, model, pf)

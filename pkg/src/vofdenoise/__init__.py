"""Variable-order fractional 1-Laplacian diffusion for speckle noise removal."""

from .coefficients import CoeffConfig, PairField, build_pair_field, uniform_pair_field
from .config import ExperimentConfig, load_config, parse_config, serialize_config
from .experiment import run_experiment, run_suite
from .filters import GaborBank, convolve, gabor_bank, gaussian_kernel, texture_feature
from .image import load_image, mean, save_image
from .metrics import SsimParams, psnr, ssim
from .noise import NoiseSpec, add_speckle, apply_multiplicative, gamma_noise_field
from .solver import (
    RunReport,
    SolverConfig,
    discrete_energy,
    run,
    step_aa,
    step_f1p_aa,
    step_vo_f1l,
    step_vo_fpl,
)

__version__ = "0.1.0"

"""Maximum entropy on the mean deconvolution and symbology-based blind deblurring."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .conv_op import ConvOperator, blur, check_nonsingular, make_operator, singular_extrema
from .fista_reform import ProxProblem, fista_deblur, fista_solve, prox_v, regularizer_value
from .image_core import (Image, Kernel, SymbologyMask, add_gaussian_noise, devectorize, psnr,
                         read_image, read_kernel, vectorize, write_image, write_kernel)
from .kernel_est import KernelProblem, blind_deblur, build_kernel_operator, estimate_kernel
from .mem_dual import (DualProblem, DualState, SolverConfig, deconvolve, dual_value_and_gradient,
                       recover_expectation, solve_dual)
from .postprocess import PipelineConfig, gaussian_denoise, threshold, tv_denoise
from .priors import InadmissibleError, Prior, PriorSpec, exponential, poisson, uniform_box
from .stability_check import fidelity_sweep, verify_stability

__all__ = [
    "BACKEND", "ConvOperator", "DualProblem", "DualState", "Image", "InadmissibleError", "Kernel",
    "KernelProblem", "PipelineConfig", "Prior", "PriorSpec", "ProxProblem", "SolverConfig",
    "SymbologyMask", "add_gaussian_noise", "blind_deblur", "blur", "build_kernel_operator",
    "check_nonsingular", "deconvolve", "devectorize", "dual_value_and_gradient", "estimate_kernel",
    "exponential", "fidelity_sweep", "fista_deblur", "fista_solve", "gaussian_denoise",
    "make_operator", "poisson", "prox_v", "psnr", "read_image", "read_kernel",
    "recover_expectation", "regularizer_value", "singular_extrema", "solve_dual", "threshold",
    "tv_denoise", "uniform_box", "vectorize", "verify_stability", "write_image", "write_kernel",
]

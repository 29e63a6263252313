"""PSF estimation from a known symbology patch, and blind deblurring.

Convolution is bilinear, so with the clean patch fixed the blurred patch is
a linear function of the kernel. The same entropic dual used for images is
then solved over kernel space, with the kernel-to-pixels map in place of C.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .image_core import Image, Kernel, SymbologyMask
from .mem_dual import DEFAULT_ALPHA, DualProblem, SolverConfig, deconvolve, recover_expectation, solve_dual
from .priors import DEFAULT_EPSILON, DEFAULT_POISSON_RATE, PriorSpec, poisson, uniform_box

DEFAULT_GAMMA = 1e5
DEFAULT_GAMMA_NOISY = 1e3


class UnderdeterminedWarning(UserWarning):
    pass


class KernelOperator:
    """Map from a flattened k x k kernel to the blurred values at selected pixels."""

    def __init__(self, matrix: np.ndarray, pixels: np.ndarray, k: int):
        self.matrix = matrix
        self.pixels = pixels  # (m, 2) array of (row, col)
        self.k = k

    @property
    def shape(self):
        return self.matrix.shape

    def apply(self, c):
        return self.matrix @ np.asarray(c, dtype=np.float64).ravel()

    def transpose_apply(self, y):
        return self.matrix.T @ np.asarray(y, dtype=np.float64)


def valid_pixels(mask: SymbologyMask, k: int) -> np.ndarray:
    """Boolean map of pixels whose whole k x k neighborhood is known and in bounds."""
    r = k // 2
    known = mask.known
    out = np.zeros_like(known)
    if known.shape[0] < k or known.shape[1] < k:
        return out
    windows = sliding_window_view(known, (k, k))
    out[r:known.shape[0] - r, r:known.shape[1] - r] = windows.all(axis=(2, 3))
    return out


def build_kernel_operator(xtilde: np.ndarray, mask: SymbologyMask, k: int) -> KernelOperator:
    """Rows hold the flipped k x k neighborhood of ``xtilde`` at each valid pixel.

    Falls back to every known pixel (zero padding outside the image) with an
    :class:`UnderdeterminedWarning` when fewer than ``k*k`` pixels are valid.
    """
    if k % 2 == 0 or k < 1:
        raise ValueError(f"kernel size must be odd and positive, got {k}")
    xtilde = np.asarray(xtilde, dtype=np.float64)
    if xtilde.shape != mask.known.shape:
        raise ValueError("symbology patch and mask differ in shape")
    r = k // 2
    sel = valid_pixels(mask, k)
    if sel.sum() < k * k:
        warnings.warn(
            f"only {int(sel.sum())} fully known pixels for a {k}x{k} kernel; "
            "using every known pixel instead",
            UnderdeterminedWarning,
            stacklevel=2,
        )
        sel = mask.known
    pixels = np.argwhere(sel)
    if len(pixels) == 0:
        raise ValueError("symbology mask has no usable pixels")
    padded = np.pad(xtilde, r)
    windows = sliding_window_view(padded, (k, k))
    rows = windows[pixels[:, 0], pixels[:, 1]][:, ::-1, ::-1]
    return KernelOperator(rows.reshape(len(pixels), k * k).copy(), pixels, k)


@dataclass
class KernelProblem:
    xtilde: np.ndarray
    btilde: np.ndarray
    mask: SymbologyMask
    k: int
    gamma: float = DEFAULT_GAMMA
    prior: str = "uniform"
    epsilon: float = DEFAULT_EPSILON
    poisson_rate: float = DEFAULT_POISSON_RATE


def estimate_kernel(kp: KernelProblem, cfg: SolverConfig | None = None, full_output=False):
    op = build_kernel_operator(kp.xtilde, kp.mask, kp.k)
    btilde = np.asarray(kp.btilde, dtype=np.float64)
    b = btilde[op.pixels[:, 0], op.pixels[:, 1]]
    d = kp.k * kp.k
    if kp.prior == "uniform":
        prior = uniform_box(d, -kp.epsilon, 1.0 + kp.epsilon)
    elif kp.prior == "poisson":
        prior = poisson(d, kp.poisson_rate)
    else:
        raise ValueError(f"unsupported kernel prior {kp.prior!r}")
    problem = DualProblem(op, b, prior, kp.gamma)
    state = solve_dual(problem, cfg)
    c = np.clip(recover_expectation(problem, state).reshape(kp.k, kp.k), 0.0, None)
    if c.sum() <= 0:
        c = np.zeros((kp.k, kp.k))
        c[kp.k // 2, kp.k // 2] = 1.0
    kernel = Kernel(c)
    return (kernel, state) if full_output else kernel


def blind_deblur(b: Image, mask: SymbologyMask, xtilde: Image, k: int,
                 gamma: float = DEFAULT_GAMMA, alpha: float = DEFAULT_ALPHA,
                 cfg: SolverConfig | None = None, prior: PriorSpec | None = None,
                 kernel_prior: str = "uniform", pin_known: bool = True,
                 kernel_cfg: SolverConfig | None = None):
    """One kernel-estimation step followed by one deconvolution step.

    Color inputs share a single kernel, estimated from the channel mean.
    With ``pin_known`` the symbology pixels are imposed on the image prior.
    Returns ``(image, kernel)``.
    """
    mask.check_matches(b)
    kp = KernelProblem(xtilde.to_gray(), b.to_gray(), mask, k, gamma, kernel_prior)
    kernel = estimate_kernel(kp, kernel_cfg or cfg)
    known = (mask.known, xtilde) if pin_known else None
    return deconvolve(b, kernel, prior, alpha, cfg, known=known), kernel

"""Periodic convolution operator and its spectral diagnostics.

Under periodic boundaries convolution by a kernel is a block-circulant
matrix with circulant blocks, diagonalized by the 2-D DFT. The kernel is
embedded with its center at index (0, 0) so the blur introduces no shift.
"""

from __future__ import annotations

import numpy as np

from .image_core import Image, Kernel

DEFAULT_FLOOR = 1e-8


def embed_kernel(weights: np.ndarray, height: int, width: int) -> np.ndarray:
    """Zero-pad ``weights`` to ``(height, width)`` and wrap its center to the origin."""
    k = weights.shape[0]
    if k > min(height, width):
        raise ValueError(f"kernel of size {k} does not fit a {height}x{width} image")
    r = k // 2
    psf = np.zeros((height, width))
    psf[:k, :k] = weights
    return np.roll(psf, (-r, -r), axis=(0, 1))


class ConvOperator:
    """The matrix C acting on row-major vectors of length ``height * width``."""

    def __init__(self, kernel: Kernel, height: int, width: int):
        self.kernel = kernel
        self.height = int(height)
        self.width = int(width)
        self.spectrum = np.fft.rfft2(embed_kernel(kernel.weights, self.height, self.width))
        self.spectrum.setflags(write=False)
        self._full_abs = None

    @property
    def shape(self):
        d = self.height * self.width
        return (d, d)

    @property
    def size(self) -> int:
        return self.height * self.width

    def _check(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.size != self.size:
            raise ValueError(f"expected vector of length {self.size}, got {x.size}")
        return x.reshape(self.height, self.width)

    def apply(self, x: np.ndarray) -> np.ndarray:
        X = np.fft.rfft2(self._check(x))
        return np.fft.irfft2(X * self.spectrum, s=(self.height, self.width)).ravel()

    def transpose_apply(self, y: np.ndarray) -> np.ndarray:
        Y = np.fft.rfft2(self._check(y))
        return np.fft.irfft2(Y * np.conj(self.spectrum), s=(self.height, self.width)).ravel()

    def abs_spectrum(self) -> np.ndarray:
        """Magnitudes of all ``height * width`` DFT coefficients (the singular values)."""
        if self._full_abs is None:
            psf = embed_kernel(self.kernel.weights, self.height, self.width)
            self._full_abs = np.abs(np.fft.fft2(psf))
        return self._full_abs

    def to_dense(self) -> np.ndarray:
        """Dense matrix, one column per unit vector. For small instances only."""
        d = self.size
        eye = np.eye(d)
        return np.column_stack([self.apply(eye[:, j]) for j in range(d)])


def make_operator(kernel: Kernel, height: int, width: int) -> ConvOperator:
    return ConvOperator(kernel, height, width)


def singular_extrema(op: ConvOperator) -> tuple[float, float]:
    s = op.abs_spectrum()
    return float(s.min()), float(s.max())


def check_nonsingular(op: ConvOperator, floor: float = DEFAULT_FLOOR) -> bool:
    if floor <= 0:
        raise ValueError("floor must be positive")
    return singular_extrema(op)[0] >= floor


def blur(img: Image, kernel: Kernel) -> Image:
    """Periodic blur of every channel."""
    op = ConvOperator(kernel, img.height, img.width)
    planes = [op.apply(img.channel(c)).reshape(img.height, img.width) for c in range(img.channels)]
    return Image.from_channels(planes)

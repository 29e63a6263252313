"""Image and kernel value types, metrics, noise and file I/O.

Images are stored as float64 arrays of shape ``(H, W, C)`` with ``C`` in
{1, 3}. Vectorization is row-major per channel everywhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

PSNR_CAP = 99.0
_UPCONVERT = {"1": "L", "LA": "L", "P": "RGB", "RGBA": "RGB"}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Image:
    """Immutable multi-channel image with intensities nominally in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=np.float64)
        if a.ndim == 2:
            a = a[:, :, None]
        if a.ndim != 3 or a.shape[2] not in (1, 3):
            raise ValueError(f"image data must be HxW or HxWx{{1,3}}, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("image contains non-finite values")
        object.__setattr__(self, "data", _frozen(a))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    def channel(self, c: int) -> np.ndarray:
        """2-D view of one channel."""
        if not 0 <= c < self.channels:
            raise IndexError(f"channel {c} out of range for {self.channels}-channel image")
        return self.data[:, :, c]

    @classmethod
    def from_channels(cls, planes) -> "Image":
        return cls(np.stack([np.asarray(p, dtype=np.float64) for p in planes], axis=2))

    def clamped(self) -> "Image":
        return Image(np.clip(self.data, 0.0, 1.0))

    def to_gray(self) -> np.ndarray:
        return self.data.mean(axis=2)


@dataclass(frozen=True, eq=False)
class Kernel:
    """Nonnegative, odd-sized, sum-normalized point spread function."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"kernel must be square, got shape {w.shape}")
        if w.shape[0] % 2 == 0:
            raise ValueError(f"kernel size must be odd, got {w.shape[0]}")
        if not np.all(np.isfinite(w)):
            raise ValueError("kernel contains non-finite values")
        if np.any(w < 0):
            raise ValueError("kernel weights must be nonnegative")
        total = w.sum()
        if total <= 0:
            raise ValueError("kernel has zero mass")
        object.__setattr__(self, "weights", _frozen(w / total))

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def delta(cls, size: int = 1) -> "Kernel":
        w = np.zeros((size, size))
        w[size // 2, size // 2] = 1.0
        return cls(w)

    @classmethod
    def gaussian(cls, size: int, sigma: float) -> "Kernel":
        if sigma <= 0:
            return cls.delta(size)
        r = np.arange(size) - size // 2
        g = np.exp(-0.5 * (r / sigma) ** 2)
        return cls(np.outer(g, g))

    @classmethod
    def uniform(cls, size: int) -> "Kernel":
        return cls(np.ones((size, size)))

    @classmethod
    def motion(cls, length: float, angle: float, size: int | None = None) -> "Kernel":
        """Linear motion blur of ``length`` pixels at ``angle`` degrees.

        The segment is sampled densely and each sample is deposited on its
        nearest pixel, so axis-aligned motion gives an exact box profile.
        """
        if length <= 0:
            raise ValueError("motion length must be positive")
        if size is None:
            size = int(np.ceil(length)) | 1
        c = size // 2
        theta = np.deg2rad(angle)
        n = max(int(np.ceil(length * 16)), 1)
        s = (np.arange(n) + 0.5) / n * length - 0.5 * length
        rows = np.rint(c - s * np.sin(theta)).astype(int)
        cols = np.rint(c + s * np.cos(theta)).astype(int)
        keep = (rows >= 0) & (rows < size) & (cols >= 0) & (cols < size)
        w = np.zeros((size, size))
        np.add.at(w, (rows[keep], cols[keep]), 1.0)
        return cls(w)


@dataclass(frozen=True, eq=False)
class SymbologyMask:
    """Boolean map of the pixels whose clean values are known."""

    known: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.known)
        if k.ndim == 3:
            k = k.any(axis=2)
        if k.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {k.shape}")
        k = k.astype(bool).copy()
        k.setflags(write=False)
        object.__setattr__(self, "known", k)

    @property
    def height(self) -> int:
        return self.known.shape[0]

    @property
    def width(self) -> int:
        return self.known.shape[1]

    def check_matches(self, img: Image) -> None:
        if (self.height, self.width) != (img.height, img.width):
            raise ValueError(
                f"mask is {self.height}x{self.width} but image is {img.height}x{img.width}"
            )


def vectorize(img: Image, channel: int) -> np.ndarray:
    """Row-major flattening of one channel."""
    return img.channel(channel).ravel().copy()


def devectorize(x: np.ndarray, height: int, width: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.size != height * width:
        raise ValueError(f"vector of length {x.size} cannot fill {height}x{width}")
    return x.reshape(height, width)


def psnr(a, b) -> float:
    """PSNR in dB for peak value 1, capped at ``PSNR_CAP``."""
    a = a.data if isinstance(a, Image) else np.asarray(a, dtype=np.float64)
    b = b.data if isinstance(b, Image) else np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse < 1e-10:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * np.log10(1.0 / mse))


def add_gaussian_noise(img: Image, percent: float, seed: int | np.random.Generator) -> Image:
    """Additive i.i.d. normal noise with sigma = percent / 100. Not clamped."""
    if percent < 0:
        raise ValueError("noise percent must be nonnegative")
    if percent == 0:
        return img
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return Image(img.data + rng.normal(0.0, percent / 100.0, size=img.shape))


def read_image(path) -> Image:
    path = Path(path)
    try:
        with PILImage.open(path) as im:
            im.load()
            if im.mode in _UPCONVERT:
                im = im.convert(_UPCONVERT[im.mode])
            elif im.mode not in ("L", "RGB"):
                raise ValueError(f"unsupported image mode {im.mode!r} (only 8-bit gray/RGB)")
            arr = np.asarray(im, dtype=np.float64) / 255.0
    except (OSError, SyntaxError) as exc:
        raise ValueError(f"cannot read image {path}: {exc}") from exc
    return Image(arr)


def write_image(img: Image, path) -> None:
    """Clamp to [0, 1], quantize to 8 bits and save; format from the suffix."""
    q = np.round(np.clip(img.data, 0.0, 1.0) * 255.0).astype(np.uint8)
    if img.channels == 1:
        out = PILImage.fromarray(q[:, :, 0], mode="L")
    else:
        out = PILImage.fromarray(q, mode="RGB")
    out.save(Path(path))


def read_kernel(path) -> Kernel:
    """Plain-text kernel: first line ``k``, then k rows of k decimals."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"empty kernel file {path}")
    try:
        k = int(lines[0])
        rows = [[float(v) for v in ln.split()] for ln in lines[1:]]
    except ValueError as exc:
        raise ValueError(f"malformed kernel file {path}: {exc}") from exc
    if len(rows) != k or any(len(r) != k for r in rows):
        raise ValueError(f"kernel file {path} does not hold a {k}x{k} array")
    return Kernel(np.array(rows))


def write_kernel(kernel: Kernel, path) -> None:
    k = kernel.size
    body = "\n".join(" ".join(f"{v:.17g}" for v in row) for row in kernel.weights)
    Path(path).write_text(f"{k}\n{body}\n")

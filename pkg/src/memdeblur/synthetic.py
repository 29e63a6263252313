"""Deterministic synthetic test scenes: smooth images, finder patterns, text."""

from __future__ import annotations

import numpy as np

from .image_core import Image, SymbologyMask


def smooth_scene(n: int = 32, seed: int = 0) -> Image:
    """Piecewise-smooth grayscale scene: a low-frequency field plus flat blocks."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:n, 0:n] / n
    img = 0.5 + 0.25 * np.sin(2 * np.pi * (xx + rng.random())) * np.cos(2 * np.pi * (yy + rng.random()))
    for _ in range(3):
        h, w = rng.integers(n // 8, n // 3, size=2)
        r0, c0 = rng.integers(0, n - h), rng.integers(0, n - w)
        img[r0:r0 + h, c0:c0 + w] = rng.uniform(0.1, 0.9)
    return Image(np.clip(img, 0.0, 1.0))


def finder_pattern(size: int = 16, seed: int = 0) -> np.ndarray:
    """Binary pattern in the spirit of a QR finder: nested squares plus random bits."""
    rng = np.random.default_rng(seed)
    p = rng.integers(0, 2, size=(size, size)).astype(np.float64)
    m = min(7, size)
    f = np.zeros((m, m))
    f[:, :] = 1.0
    if m >= 3:
        f[1:-1, 1:-1] = 0.0
    if m >= 5:
        f[2:-2, 2:-2] = 1.0
    p[:m, :m] = f
    return p


def with_symbology(img: Image, pattern: np.ndarray, corner=(0, 0)):
    """Paste ``pattern`` into every channel of ``img``.

    Returns ``(image, mask, clean_symbology)`` where ``clean_symbology`` is an
    Image holding the pattern and zeros elsewhere.
    """
    h, w = pattern.shape
    r0, c0 = corner
    data = img.data.copy()
    data[r0:r0 + h, c0:c0 + w, :] = pattern[:, :, None]
    known = np.zeros((img.height, img.width), dtype=bool)
    known[r0:r0 + h, c0:c0 + w] = True
    sym = np.zeros_like(data)
    sym[r0:r0 + h, c0:c0 + w, :] = pattern[:, :, None]
    return Image(data), SymbologyMask(known), Image(sym)


def text_like(n: int = 16, seed: int = 0, density: float = 0.15) -> Image:
    """Sparse bright strokes on a dark background (an inverted text patch)."""
    rng = np.random.default_rng(seed)
    img = np.zeros((n, n))
    for _ in range(max(1, int(density * n))):
        r, c = rng.integers(0, n, size=2)
        length = rng.integers(2, max(3, n // 3))
        if rng.random() < 0.5:
            img[r, c:c + length] = 1.0
        else:
            img[r:r + length, c] = 1.0
    return Image(img)

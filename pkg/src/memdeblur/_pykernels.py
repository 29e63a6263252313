"""Pure numpy implementations of the hot loops.

These are the reference versions; ``_ckernels.pyx`` mirrors them one for one.
"""

import numpy as np

# below this |t * (hi - lo)| the closed forms lose digits to cancellation
SERIES_EPS = 1e-2


def _series(t, lo, hi):
    w = hi - lo
    mid = 0.5 * (lo + hi)
    s = t * w
    s2 = s * s
    return t * mid + s2 / 24.0 - s2 * s2 / 2880.0, mid + w * (s / 12.0 - s * s2 / 720.0)


def _closed(t, lo, hi):
    w = hi - lo
    mid = 0.5 * (lo + hi)
    s = t * w
    a = np.abs(s)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # e^{tv} - e^{tu} factored around the dominant endpoint
        logm = np.where(s > 0, t * hi, t * lo) + np.log(-np.expm1(-a)) - np.log(a)
        y = 0.5 * s
        grad = mid + 0.5 * w * (1.0 / np.tanh(y) - 1.0 / y)
    return logm, grad


def uniform_logmgf_grad(t, lo, hi):
    """Summed log-MGF and its gradient for independent uniforms on [lo, hi].

    All three arrays share one shape. Returns ``(float, ndarray)``.
    """
    t = np.asarray(t, dtype=np.float64)
    small = np.abs(t * (hi - lo)) < SERIES_EPS
    log_s, grad_s = _series(t, lo, hi)
    log_c, grad_c = _closed(t, lo, hi)
    logm = np.where(small, log_s, log_c)
    grad = np.where(small, grad_s, grad_c)
    return float(logm.sum()), grad


def _forward_grad(u):
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:-1, :] = u[1:, :] - u[:-1, :]
    gy[:, :-1] = u[:, 1:] - u[:, :-1]
    return gx, gy


def _divergence(px, py):
    div = np.zeros_like(px)
    div[0, :] = px[0, :]
    div[1:-1, :] = px[1:-1, :] - px[:-2, :]
    div[-1, :] = -px[-2, :]
    div[:, 0] += py[:, 0]
    div[:, 1:-1] += py[:, 1:-1] - py[:, :-2]
    div[:, -1] += -py[:, -2]
    return div


def chambolle_tv(f, weight, n_iter, tau):
    """Chambolle's projection iteration for ROF denoising of a 2-D array."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape[0] < 2 or f.shape[1] < 2:
        return f.copy()
    px = np.zeros_like(f)
    py = np.zeros_like(f)
    for _ in range(n_iter):
        g = _divergence(px, py) - f / weight
        gx, gy = _forward_grad(g)
        denom = 1.0 + tau * np.sqrt(gx * gx + gy * gy)
        px = (px + tau * gx) / denom
        py = (py + tau * gy) / denom
    return f - weight * _divergence(px, py)

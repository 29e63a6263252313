"""Image-level formulation: the entropic penalty as a regularizer, solved by FISTA.

The regularizer ``v(x) = inf {KL(rho, mu) : E_rho[X] = x}`` is the Legendre
transform of the prior's log-MGF. Its proximal map is the tilted mean at the
maximizer of the small dual ``<u, lam> - t |lam|^2 / 2 - log M(lam)``, which
separates across coordinates for independent priors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conv_op import ConvOperator, singular_extrema
from .image_core import Image, Kernel
from .priors import EXPONENTIAL, POISSON, POISSON_T_CAP, UNIFORM, Prior, PriorSpec

NEWTON_TOL = 1e-10


@dataclass
class ProxProblem:
    u: np.ndarray
    t: float
    prior: Prior


def exponential_prox_dual(u, beta, t):
    """Smaller root of the exponential-prior prox dual, per coordinate."""
    u = np.asarray(u, dtype=np.float64)
    a = u - beta * t
    root = np.sqrt(a * a + 4.0 * t)
    # lam = (u + beta t - root) / (2t) rewritten to avoid cancellation
    return beta - 1.0 / _exp_prox_value(a, root, t)


def _exp_prox_value(a, root, t):
    with np.errstate(divide="ignore", invalid="ignore"):
        neg = 2.0 * t / (root - a)
    return np.where(a >= 0, 0.5 * (a + root), neg)


def _newton_decreasing(h, dh, lo, hi, x0=None, tol=NEWTON_TOL, max_iter=200):
    """Root of a strictly decreasing function per coordinate, bracketed in [lo, hi].

    Newton steps that leave the bracket are replaced by bisection.
    """
    lo = np.array(lo, dtype=np.float64)
    hi = np.array(hi, dtype=np.float64)
    x = 0.5 * (lo + hi) if x0 is None else np.clip(x0, lo, hi)
    for _ in range(max_iter):
        hx = h(x)
        lo = np.where(hx > 0, x, lo)
        hi = np.where(hx > 0, hi, x)
        step = hx / dh(x)
        x_new = x + step
        outside = (x_new <= lo) | (x_new >= hi) | ~np.isfinite(x_new)
        x_new = np.where(outside, 0.5 * (lo + hi), x_new)
        done = np.abs(x_new - x) <= tol * np.maximum(1.0, np.abs(x))
        x = x_new
        if np.all(done):
            break
    return x


def _prox_dual_bracket(prior: Prior, u, t):
    if prior.family == UNIFORM:
        return (u - prior.hi) / t, (u - prior.lo) / t
    # poisson: tilted mean lies in (0, inf) and is capped past POISSON_T_CAP
    hi = u / t
    lo = np.minimum(0.0, (u - prior.rate) / t) - 1.0
    return lo, np.maximum(hi, lo + 1.0)


def prox_v(pp: ProxProblem) -> np.ndarray:
    """``argmin_x v(x) + |x - u|^2 / (2 t)`` for the regularizer induced by the prior."""
    if pp.t <= 0:
        raise ValueError("prox step must be positive")
    u = np.asarray(pp.u, dtype=np.float64)
    prior, t = pp.prior, float(pp.t)
    if prior.family == EXPONENTIAL:
        a = u - prior.rate * t
        return _exp_prox_value(a, np.sqrt(a * a + 4.0 * t), t)

    def mean(lam):
        if prior.family == POISSON:
            return prior.rate * np.exp(np.minimum(lam, POISSON_T_CAP))
        return prior.grad_log_mgf(lam)

    lo, hi = _prox_dual_bracket(prior, u, t)
    lam = _newton_decreasing(
        lambda lam: u - t * lam - mean(lam),
        lambda lam: -t - prior.hess_log_mgf(lam),
        lo, hi,
    )
    return mean(lam)


def regularizer_value(x, prior: Prior) -> float:
    """``v(x)``, the convex conjugate of the log-MGF evaluated at ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if prior.family == EXPONENTIAL:
        if np.any(x <= 0):
            raise ValueError("exponential regularizer needs x > 0")
        xb = x * prior.rate
        return float(np.sum(xb - 1.0 - np.log(xb)))
    if prior.family == POISSON:
        if np.any(x <= 0):
            raise ValueError("poisson regularizer needs x > 0")
        return float(np.sum(x * np.log(x / prior.rate) - x + prior.rate))
    if np.any(x <= prior.lo) or np.any(x >= prior.hi):
        raise ValueError("uniform regularizer is infinite outside the open box")
    # invert the tilted mean; its range is the whole open interval
    span = 50.0 / (prior.hi - prior.lo)
    lo, hi = -span, span
    while True:
        g_lo, g_hi = prior.grad_log_mgf(np.full(prior.dim, lo)), prior.grad_log_mgf(np.full(prior.dim, hi))
        if np.all(g_lo < x) and np.all(g_hi > x):
            break
        lo, hi = 4 * lo, 4 * hi
    lam = _newton_decreasing(
        lambda lam: x - prior.grad_log_mgf(lam),
        lambda lam: -prior.hess_log_mgf(lam),
        np.full(prior.dim, lo), np.full(prior.dim, hi),
    )
    return float(lam.dot(x) - prior.log_mgf(lam))


@dataclass
class FistaResult:
    x: np.ndarray
    objective: list
    iterations: int
    lipschitz: float


def objective(x, op, b, prior, alpha) -> float:
    r = op.apply(x) - b
    return regularizer_value(x, prior) + 0.5 * alpha * r.dot(r)


def fista_solve(op, b, prior: Prior, alpha: float, iters: int = 500,
                backtracking: bool = False, tol: float = 0.0, x0=None) -> FistaResult:
    """Minimize ``v(x) + alpha/2 |Cx - b|^2`` with FISTA.

    The fixed step uses ``L = alpha * sigma_max(C)**2``. With ``backtracking``
    the step starts from a smaller guess and doubles ``L`` until the
    quadratic upper bound holds.
    """
    b = np.asarray(b, dtype=np.float64).ravel()
    if isinstance(op, ConvOperator):
        lip = alpha * singular_extrema(op)[1] ** 2
    else:
        lip = alpha * np.linalg.norm(op.matrix, 2) ** 2
    if backtracking:
        lip *= 0.01

    def smooth(z):
        r = op.apply(z) - b
        return 0.5 * alpha * r.dot(r), alpha * op.transpose_apply(r)

    x = prox_v(ProxProblem(b.copy() if x0 is None else np.asarray(x0, dtype=np.float64), 1.0 / lip, prior))
    y = x.copy()
    tk = 1.0
    history = [objective(x, op, b, prior, alpha)]
    it = 0
    for it in range(1, iters + 1):
        fy, gy = smooth(y)
        while True:
            x_new = prox_v(ProxProblem(y - gy / lip, 1.0 / lip, prior))
            if not backtracking:
                break
            dx = x_new - y
            if smooth(x_new)[0] <= fy + gy.dot(dx) + 0.5 * lip * dx.dot(dx) + 1e-12 * abs(fy):
                break
            lip *= 2.0
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        y = x_new + ((tk - 1.0) / t_next) * (x_new - x)
        change = np.linalg.norm(x_new - x) / max(np.linalg.norm(x_new), 1e-300)
        x, tk = x_new, t_next
        history.append(objective(x, op, b, prior, alpha))
        if tol and change <= tol:
            break
    return FistaResult(x=x, objective=history, iterations=it, lipschitz=lip)


def fista_deblur(b: Image, kernel: Kernel, prior: PriorSpec | None = None,
                 alpha: float = 1e4, iters: int = 500, backtracking: bool = False) -> Image:
    prior = prior or PriorSpec(family=EXPONENTIAL, rate=400.0)
    op = ConvOperator(kernel, b.height, b.width)
    planes = []
    for c in range(b.channels):
        res = fista_solve(op, b.channel(c), prior.build(op.size), alpha, iters, backtracking)
        planes.append(res.x.reshape(b.height, b.width))
    return Image.from_channels(planes)

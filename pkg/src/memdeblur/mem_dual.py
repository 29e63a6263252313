"""Entropic deconvolution through the finite-dimensional dual problem.

For a linear operator ``C``, observation ``b``, prior ``mu`` and fidelity
``alpha`` the dual objective is::

    D(lam) = <b, lam> - |lam|^2 / (2 alpha) - log M_mu(C^T lam)

which is strongly concave. Its maximizer ``lam*`` gives the estimate
``x = grad log M_mu(C^T lam*)``, the mean of the optimal tilted prior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lbfgs
from .conv_op import ConvOperator
from .image_core import Image, Kernel
from .priors import Prior, PriorSpec

DEFAULT_ALPHA = 1e6


@dataclass
class SolverConfig:
    memory: int = 10
    tol: float = 1e-8  # scaled by (1 + |b|_inf)
    max_iter: int = 2000

    def gtol(self, b) -> float:
        return self.tol * (1.0 + float(np.max(np.abs(b))))


@dataclass(frozen=True, eq=False)
class DualProblem:
    """``op`` is any object with ``apply``/``transpose_apply`` (a ConvOperator,
    or the kernel-estimation map)."""

    op: object
    b: np.ndarray
    prior: Prior
    alpha: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        object.__setattr__(self, "b", np.asarray(self.b, dtype=np.float64).ravel())


@dataclass
class DualState:
    lam: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    message: str = ""


def dual_value_and_gradient(p: DualProblem, lam) -> tuple[float, np.ndarray]:
    """Dual objective and gradient ``b - lam/alpha - C grad log M(C^T lam)``.

    Raises InadmissibleError when ``C^T lam`` leaves the MGF domain.
    """
    lam = np.asarray(lam, dtype=np.float64)
    logm, tilted_mean = p.prior.log_mgf_and_grad(p.op.transpose_apply(lam))
    value = p.b.dot(lam) - lam.dot(lam) / (2.0 * p.alpha) - logm
    grad = p.b - lam / p.alpha - p.op.apply(tilted_mean)
    return float(value), grad


def solve_dual(p: DualProblem, cfg: SolverConfig | None = None, lam0=None) -> DualState:
    """Maximize the dual by L-BFGS on its negation, starting from ``lam0`` (default 0)."""
    cfg = cfg or SolverConfig()
    x0 = np.zeros_like(p.b) if lam0 is None else np.asarray(lam0, dtype=np.float64)

    def neg(lam):
        v, g = dual_value_and_gradient(p, lam)
        return -v, -g

    res = lbfgs.minimize(neg, x0, gtol=cfg.gtol(p.b), max_iter=cfg.max_iter, memory=cfg.memory)
    return DualState(lam=res.x, value=-res.fun, grad_norm=float(np.max(np.abs(res.grad))),
                     iterations=res.iterations, converged=res.converged, message=res.message)


def recover_expectation(p: DualProblem, s: DualState) -> np.ndarray:
    return p.prior.grad_log_mgf(p.op.transpose_apply(s.lam))


def deconvolve(b: Image, kernel: Kernel, prior: PriorSpec | None = None,
               alpha: float = DEFAULT_ALPHA, cfg: SolverConfig | None = None,
               known=None, full_output: bool = False):
    """Deblur each channel of ``b`` independently.

    ``known`` optionally pins pixels: a pair ``(mask, values)`` with ``mask``
    an HxW boolean array and ``values`` an Image holding the clean values.
    With ``full_output`` the per-channel dual states are returned as well.
    """
    prior = prior or PriorSpec()
    op = ConvOperator(kernel, b.height, b.width)
    d = op.size
    planes, states = [], []
    for c in range(b.channels):
        pinned = None
        if known is not None:
            mask, values = known
            idx = np.flatnonzero(np.asarray(mask).ravel())
            vals = values.channel(min(c, values.channels - 1)).ravel()[idx]
            pinned = dict(zip(idx.tolist(), vals.tolist()))
        problem = DualProblem(op, b.channel(c), prior.build(d, pinned), alpha)
        state = solve_dual(problem, cfg)
        planes.append(recover_expectation(problem, state).reshape(b.height, b.width))
        states.append(state)
    out = Image.from_channels(planes)
    return (out, states) if full_output else out

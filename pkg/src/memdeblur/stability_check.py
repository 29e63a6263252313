"""Executable checks of the stability estimate and the role of alpha.

For two observations the recovered expectations satisfy
``|x1 - x2| <= 2 / sigma_min(C) * |b1 - b2|``; :func:`verify_stability`
measures the worst observed ratio against that bound.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .conv_op import ConvOperator, check_nonsingular, singular_extrema
from .image_core import Kernel
from .mem_dual import DualProblem, SolverConfig, recover_expectation, solve_dual
from .priors import PriorSpec

SOLVER_SLACK = 1e-3


class SingularOperatorError(ValueError):
    pass


@dataclass
class StabilityReport:
    sigma_min: float
    bound: float
    ratios: list = field(default_factory=list)

    @property
    def max_ratio(self) -> float:
        return max(self.ratios, default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.bound * (1.0 + SOLVER_SLACK)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["trial", "ratio", "bound"])
        for i, r in enumerate(self.ratios):
            w.writerow([i, f"{r:.10g}", f"{self.bound:.10g}"])
        return buf.getvalue()

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict}: max ratio {self.max_ratio:.6g} vs bound 2/sigma_min = {self.bound:.6g} "
                f"(sigma_min {self.sigma_min:.6g}, {len(self.ratios)} trials)")


def _solve(op, b, prior, alpha, cfg):
    p = DualProblem(op, b, prior, alpha)
    return recover_expectation(p, solve_dual(p, cfg))


def stability_ratio(op, b1, b2, prior, alpha, cfg) -> float:
    gap = np.linalg.norm(np.asarray(b1) - np.asarray(b2))
    if gap == 0:
        return 0.0
    x1 = _solve(op, b1, prior, alpha, cfg)
    x2 = _solve(op, b2, prior, alpha, cfg)
    return float(np.linalg.norm(x1 - x2) / gap)


def verify_stability(kernel: Kernel, prior: PriorSpec | None = None, alpha: float = 1e4,
                     trials: int = 50, seed: int = 0, size: tuple = (16, 16),
                     delta: float = 1e-3, cfg: SolverConfig | None = None) -> StabilityReport:
    """Draw random ``b1`` and ``b2 = b1 + delta * noise`` and compare recoveries."""
    if trials < 1:
        raise ValueError("need at least one trial")
    prior = prior or PriorSpec()
    cfg = cfg or SolverConfig(tol=1e-11, max_iter=20000)
    op = ConvOperator(kernel, *size)
    if not check_nonsingular(op):
        raise SingularOperatorError("blur operator is numerically singular")
    smin = singular_extrema(op)[0]
    report = StabilityReport(sigma_min=smin, bound=2.0 / smin)
    rng = np.random.default_rng(seed)
    built = prior.build(op.size)
    for _ in range(trials):
        b1 = op.apply(rng.random(op.size))
        b2 = b1 + delta * rng.standard_normal(op.size)
        report.ratios.append(stability_ratio(op, b1, b2, built, alpha, cfg))
    return report


@dataclass
class FidelityRow:
    alpha: float
    residual_sq: float
    bound: float


def fidelity_sweep(b, kernel: Kernel, prior: PriorSpec | None = None, alphas=(1e2, 1e4, 1e6),
                   cfg: SolverConfig | None = None, shape: tuple | None = None) -> list[FidelityRow]:
    """Squared residual ``|C x(alpha) - b|^2`` next to ``1/(2 alpha)`` for each alpha."""
    alphas = list(alphas)
    if alphas != sorted(alphas):
        raise ValueError("alphas must be sorted ascending")
    b = np.asarray(b, dtype=np.float64)
    if shape is None:
        shape = b.shape if b.ndim == 2 else (int(round(np.sqrt(b.size))),) * 2
    b = b.ravel()
    prior = prior or PriorSpec()
    op = ConvOperator(kernel, *shape)
    built = prior.build(op.size)
    rows = []
    for a in alphas:
        c = cfg or SolverConfig(tol=1e-6 / a, max_iter=20000)
        x = _solve(op, b, built, a, c)
        r = op.apply(x) - b
        rows.append(FidelityRow(alpha=a, residual_sq=float(r.dot(r)), bound=1.0 / (2.0 * a)))
    return rows


def fidelity_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["alpha", "residual_sq", "half_inv_alpha"])
    for r in rows:
        w.writerow([f"{r.alpha:g}", f"{r.residual_sq:.10g}", f"{r.bound:.10g}"])
    return buf.getvalue()

"""Limited-memory BFGS with Armijo backtracking.

Minimizes ``f`` given a callable returning ``(f(x), grad f(x))``. Steps are
accepted on the Armijo condition, or, once the decrease drowns in rounding
error, on the approximate Wolfe conditions of Hager and Zhang. The
callable may raise :class:`~memdeblur.priors.InadmissibleError` to reject a
trial point; the line search then halves the step.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .priors import InadmissibleError


@dataclass
class LBFGSResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    iterations: int
    converged: bool
    message: str


def minimize(fun_and_grad, x0, gtol=1e-8, max_iter=2000, memory=10,
             c1=1e-4, max_backtracks=60, approx_eps=1e-12, callback=None) -> LBFGSResult:
    x = np.array(x0, dtype=np.float64, copy=True)
    f, g = fun_and_grad(x)
    pairs: deque = deque(maxlen=memory)
    message = "maximum iterations reached"
    converged = False
    it = 0

    for it in range(1, max_iter + 1):
        if np.max(np.abs(g)) <= gtol:
            converged = True
            message = "gradient below tolerance"
            it -= 1
            break

        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y, rho in reversed(pairs):
            a = rho * s.dot(q)
            alphas.append(a)
            q -= a * y
        if pairs:
            s, y, _ = pairs[-1]
            q *= s.dot(y) / y.dot(y)
        else:
            q /= max(1.0, np.linalg.norm(g))
        for (s, y, rho), a in zip(pairs, reversed(alphas)):
            b = rho * y.dot(q)
            q += (a - b) * s
        direction = -q

        slope = g.dot(direction)
        if slope >= 0:
            # curvature history went stale; restart from steepest descent
            pairs.clear()
            direction = -g / max(1.0, np.linalg.norm(g))
            slope = g.dot(direction)

        step = 1.0
        accepted = False
        for _ in range(max_backtracks):
            x_new = x + step * direction
            try:
                f_new, g_new = fun_and_grad(x_new)
            except InadmissibleError:
                step *= 0.5
                continue
            if np.isfinite(f_new) and f_new <= f + c1 * step * slope:
                accepted = True
                break
            # near the optimum f is dominated by rounding; fall back on the
            # approximate Wolfe test, which only trusts the gradient
            new_slope = g_new.dot(direction)
            if (f_new <= f + approx_eps * abs(f)
                    and (2 * c1 - 1) * slope >= new_slope >= 0.9 * slope):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            message = "line search failed"
            it -= 1
            break

        s = x_new - x
        if not np.any(s):
            message = "no progress"
            it -= 1
            break
        y = g_new - g
        sy = s.dot(y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y, 1.0 / sy))
        x, f, g = x_new, f_new, g_new
        if callback is not None:
            callback(x)
    else:
        converged = bool(np.max(np.abs(g)) <= gtol)
        if converged:
            message = "gradient below tolerance"

    return LBFGSResult(x=x, fun=float(f), grad=g, iterations=it,
                       converged=converged, message=message)

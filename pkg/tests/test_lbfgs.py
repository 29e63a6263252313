import numpy as np
import pytest
from scipy.optimize import rosen, rosen_der

from memdeblur import InadmissibleError
from memdeblur.lbfgs import minimize


def test_rosenbrock():
    res = minimize(lambda x: (rosen(x), rosen_der(x)), np.array([-1.2, 1.0, -0.5, 0.8]),
                   gtol=1e-10, max_iter=5000)
    assert res.converged
    assert np.allclose(res.x, 1.0, atol=1e-8)


def test_quadratic_matches_linear_solve(rng):
    a = rng.standard_normal((30, 30))
    q = a @ a.T + 30 * np.eye(30)
    c = rng.standard_normal(30)
    res = minimize(lambda x: (0.5 * x @ q @ x - c @ x, q @ x - c), np.zeros(30), gtol=1e-12)
    assert res.converged
    assert np.allclose(res.x, np.linalg.solve(q, c), atol=1e-11)


def test_respects_inadmissible_region():
    # -log(1 - x) + x^2 raises for x >= 1; minimizer at (1 - sqrt 3) / 2
    def f(x):
        if x[0] >= 1:
            raise InadmissibleError("outside domain")
        return -np.log1p(-x[0]) + x[0] ** 2, np.array([1 / (1 - x[0]) + 2 * x[0]])

    res = minimize(f, np.array([0.9]), gtol=1e-12)
    assert res.converged and res.x[0] == pytest.approx((1 - np.sqrt(3)) / 2, abs=1e-12)


def test_reaches_tight_tolerance_on_large_offset():
    # the function value sits far from zero, so Armijo alone stalls in rounding
    d = np.linspace(1.0, 1e3, 50)
    res = minimize(lambda x: (1e6 + 0.5 * np.sum(d * (x - 1) ** 2), d * (x - 1)),
                   np.zeros(50), gtol=1e-10, max_iter=10000)
    assert res.converged
    assert np.max(np.abs(res.grad)) <= 1e-10


def test_iteration_cap_reported():
    res = minimize(lambda x: (rosen(x), rosen_der(x)), np.array([-1.2, 1.0]), max_iter=3)
    assert not res.converged
    assert res.iterations == 3
    assert "maximum" in res.message


def test_already_optimal_start():
    res = minimize(lambda x: (x @ x, 2 * x), np.zeros(3))
    assert res.converged and res.iterations == 0


def test_callback_sees_every_iterate():
    seen = []
    res = minimize(lambda x: (x @ x, 2 * x), np.ones(4), callback=lambda x: seen.append(x.copy()))
    assert len(seen) == res.iterations
    assert np.array_equal(seen[-1], res.x)

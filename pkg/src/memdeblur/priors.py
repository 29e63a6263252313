"""Independent per-coordinate priors exposed through their log-MGF.

Only three things about a prior are ever needed: the log moment-generating
function, its gradient (the tilted mean) and, for Newton-type inner solves,
its diagonal Hessian (the tilted variance).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend

DEFAULT_EPSILON = 0.01
DEFAULT_POISSON_RATE = 0.05
POISSON_T_CAP = 700.0
ADMISSIBLE_MARGIN = 1e-12

UNIFORM = "uniform"
EXPONENTIAL = "exponential"
POISSON = "poisson"
FAMILIES = (UNIFORM, EXPONENTIAL, POISSON)


class InadmissibleError(ValueError):
    """Dual argument outside the domain of the log-MGF."""


def _frozen(a, d):
    a = np.array(np.broadcast_to(np.asarray(a, dtype=np.float64), (d,)), copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Prior:
    """A product of ``d`` scalar distributions from one family.

    ``lo``/``hi`` are the box bounds for the uniform family and ``rate`` the
    rate parameter for the exponential and Poisson families.
    """

    family: str
    dim: int
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    rate: np.ndarray | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown prior family {self.family!r}")
        if self.family == UNIFORM:
            lo, hi = _frozen(self.lo, self.dim), _frozen(self.hi, self.dim)
            if np.any(lo >= hi):
                raise ValueError("degenerate uniform interval (need lo < hi)")
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", hi)
        else:
            rate = _frozen(self.rate, self.dim)
            if np.any(rate <= 0):
                raise ValueError("rate parameters must be positive")
            object.__setattr__(self, "rate", rate)

    @property
    def mgf_domain(self) -> np.ndarray:
        """Open upper bound on each dual coordinate."""
        if self.family == EXPONENTIAL:
            return self.rate
        return np.full(self.dim, np.inf)

    def mean(self) -> np.ndarray:
        if self.family == UNIFORM:
            return 0.5 * (self.lo + self.hi)
        if self.family == EXPONENTIAL:
            return 1.0 / self.rate
        return self.rate.copy()

    def _check(self, t):
        t = np.asarray(t, dtype=np.float64)
        if t.shape != (self.dim,):
            raise ValueError(f"expected argument of shape ({self.dim},), got {t.shape}")
        if self.family == EXPONENTIAL and np.any(self.rate - t <= ADMISSIBLE_MARGIN * np.maximum(1.0, self.rate)):
            raise InadmissibleError("argument reaches the exponential rate")
        return t

    def log_mgf_and_grad(self, t) -> tuple[float, np.ndarray]:
        t = self._check(t)
        if self.family == UNIFORM:
            return _backend.uniform_logmgf_grad(t, self.lo, self.hi)
        if self.family == EXPONENTIAL:
            gap = self.rate - t
            return float(-np.log1p(-t / self.rate).sum()), 1.0 / gap
        e = np.exp(np.minimum(t, POISSON_T_CAP))
        return float((self.rate * (e - 1.0)).sum()), self.rate * e

    def log_mgf(self, t) -> float:
        return self.log_mgf_and_grad(t)[0]

    def grad_log_mgf(self, t) -> np.ndarray:
        return self.log_mgf_and_grad(t)[1]

    def hess_log_mgf(self, t) -> np.ndarray:
        """Diagonal of the Hessian, i.e. the variance of each tilted coordinate."""
        t = self._check(t)
        if self.family == UNIFORM:
            w = self.hi - self.lo
            y = 0.5 * t * w
            small = np.abs(y) < 5e-3
            y2 = y * y
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                big = 1.0 / y2 - 1.0 / np.sinh(y) ** 2
                big = np.where(np.abs(y) > 350, 1.0 / y2, big)
            lp = np.where(small, 1.0 / 3.0 - y2 / 15.0 + 2.0 * y2 * y2 / 189.0, big)
            return 0.25 * w * w * lp
        if self.family == EXPONENTIAL:
            return 1.0 / (self.rate - t) ** 2
        return self.rate * np.exp(np.minimum(t, POISSON_T_CAP))

    def admissible(self, t) -> bool:
        try:
            self._check(t)
        except InadmissibleError:
            return False
        return True


def uniform_box(d: int, lo: float, hi: float, overrides=()) -> Prior:
    """Uniform box prior with optional per-pixel ``(index, u, v)`` overrides."""
    if lo >= hi:
        raise ValueError("degenerate interval (need lo < hi)")
    los = np.full(d, float(lo))
    his = np.full(d, float(hi))
    for idx, u, v in overrides:
        if u >= v:
            raise ValueError(f"degenerate override interval at index {idx}")
        los[idx] = u
        his[idx] = v
    return Prior(UNIFORM, d, lo=los, hi=his)


def exponential(d: int, rate) -> Prior:
    return Prior(EXPONENTIAL, d, rate=rate)


def poisson(d: int, rate=DEFAULT_POISSON_RATE) -> Prior:
    return Prior(POISSON, d, rate=rate)


@dataclass
class PriorSpec:
    """Dimension-free description of a prior, as given in a run config.

    Known pixel values (symbology) can be pinned per channel by
    :meth:`build`, giving them a narrow interval ``[l - eps, l + eps]``.
    """

    family: str = UNIFORM
    epsilon: float = DEFAULT_EPSILON
    lo: float = 0.0
    hi: float = 1.0
    rate: float | None = None
    overrides: list = field(default_factory=list)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown prior family {self.family!r}")

    def build(self, d: int, pinned: dict | None = None) -> Prior:
        if self.family == UNIFORM:
            ov = list(self.overrides)
            if pinned:
                eps = self.epsilon
                ov.extend((i, v - eps, v + eps) for i, v in pinned.items())
            return uniform_box(d, self.lo - self.epsilon, self.hi + self.epsilon, ov)
        if self.family == EXPONENTIAL:
            return exponential(d, 400.0 if self.rate is None else self.rate)
        return poisson(d, DEFAULT_POISSON_RATE if self.rate is None else self.rate)

    @classmethod
    def parse(cls, text: str, epsilon: float = DEFAULT_EPSILON) -> "PriorSpec":
        """Parse ``uniform``, ``exponential[:RATE]`` or ``poisson[:RATE]``."""
        name, _, arg = text.partition(":")
        name = name.strip().lower()
        if name not in FAMILIES:
            raise ValueError(f"unknown prior {text!r}; expected one of {', '.join(FAMILIES)}")
        rate = float(arg) if arg else None
        return cls(family=name, epsilon=epsilon, rate=rate)

"""Reference problems with closed-form solutions for validating the
integrator, including an integro-differential equation whose memory term
is reconstructed from the trajectory history by end-corrected quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .integrator import HistoryRHS, PCScheme, TrajectoryView, integrate

__all__ = [
    "gregory_integral",
    "BenchmarkProblem",
    "OrderCheck",
    "order_check",
    "integro_problem",
    "harmonic_problem",
    "decay_problem",
]

_GREGORY_END = np.array([3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0])


def gregory_integral(values: np.ndarray, h: float) -> float:
    """Integral of uniformly sampled data over its whole span.

    Uses the trapezoid rule with third-difference Gregory end corrections
    (degree-3 exact) once seven or more samples are available; shorter
    windows fall back to Newton-Cotes compounds of at least Simpson
    quality, except the two-sample window which is a plain trapezoid.
    """
    v = np.asarray(values, dtype=float)
    n = v.size - 1
    if n <= 0:
        return 0.0
    if n == 1:
        return 0.5 * h * (v[0] + v[1])
    if n == 2:
        return h / 3.0 * (v[0] + 4.0 * v[1] + v[2])
    if n == 3:
        return 0.375 * h * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3])
    if n == 4:
        return gregory_integral(v[:3], h) + gregory_integral(v[2:], h)
    if n == 5:
        return gregory_integral(v[:3], h) + gregory_integral(v[2:], h)
    w = np.ones(n + 1)
    w[:3] = _GREGORY_END
    w[-3:] = _GREGORY_END[::-1]
    return h * float(w @ v)


@dataclass(frozen=True, eq=False)
class BenchmarkProblem:
    """Initial value problem with a known solution.

    ``make_rhs`` builds a fresh right-hand side per run so stateful
    memory never leaks between resolutions.
    """

    name: str
    make_rhs: Callable[[], HistoryRHS]
    X0: np.ndarray
    T: float
    exact: Callable[[float], np.ndarray]


@dataclass(frozen=True)
class OrderCheck:
    """Endpoint errors over a step sweep and their log-log slope."""

    dts: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float
    is_exact: bool


def order_check(problem: BenchmarkProblem, scheme: PCScheme, dts) -> OrderCheck:
    """Measure the observed convergence order on ``problem``.

    Runs one integration per step size, records the endpoint error in the
    max norm and fits ``log(error)`` against ``log(dt)``.  Errors at
    roundoff level short-circuit the fit (``is_exact``).
    """
    dts = tuple(float(h) for h in dts)
    errors = []
    ref = problem.exact(problem.T)
    for h in dts:
        n = round(problem.T / h)
        if abs(n * h - problem.T) > 1e-9 * problem.T:
            raise ValueError(f"step {h} does not divide the horizon {problem.T}")
        traj = integrate(problem.make_rhs(), problem.X0, h, n, scheme)
        errors.append(float(np.max(np.abs(traj.final - ref))))
    if max(errors) < 1e-12:
        return OrderCheck(dts, tuple(errors), float("nan"), True)
    if len(dts) < 2:
        return OrderCheck(dts, tuple(errors), float("nan"), False)
    slope = float(np.polyfit(np.log(dts), np.log(errors), 1)[0])
    return OrderCheck(dts, tuple(errors), slope, False)


class _IntegroRHS(HistoryRHS):
    """u' = 1 - 2 u - 5 * integral(u); the integral is rebuilt from the
    trajectory nodes at every evaluation."""

    def __call__(self, t: float, view: TrajectoryView) -> np.ndarray:
        u = view.states()[:, 0]
        memory = gregory_integral(u, view.dt)
        return np.array([1.0 - 2.0 * u[-1] - 5.0 * memory])


def integro_problem(T: float = 2.0) -> BenchmarkProblem:
    """Integro-differential benchmark with solution
    ``u(x) = exp(-x) sin(2 x) / 2``."""

    def exact(x: float) -> np.ndarray:
        return np.array([0.5 * np.exp(-x) * np.sin(2.0 * x)])

    return BenchmarkProblem("integro", _IntegroRHS, np.array([0.0]), T, exact)


def harmonic_problem(T: float = 10.0) -> BenchmarkProblem:
    """Undamped oscillator ``x'' = -x`` started at unit displacement."""

    def rhs(t, view):
        X = view.final
        return np.array([X[1], -X[0]])

    def exact(t: float) -> np.ndarray:
        return np.array([np.cos(t), -np.sin(t)])

    return BenchmarkProblem("harmonic", lambda: rhs, np.array([1.0, 0.0]), T, exact)


def decay_problem(lam: float = -1.0, T: float = 1.0) -> BenchmarkProblem:
    """Scalar exponential decay ``x' = lam x`` from 1."""

    def rhs(t, view):
        return lam * view.final

    def exact(t: float) -> np.ndarray:
        return np.array([np.exp(lam * t)])

    return BenchmarkProblem("decay", lambda: rhs, np.array([1.0]), T, exact)

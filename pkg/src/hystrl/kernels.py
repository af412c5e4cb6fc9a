"""Generalized play operators with a configurable ridge nonlinearity.

The scalar building block is the two-threshold play: for thresholds
``s1 <= s2`` and a nondecreasing ridge function ``gamma``, the state
``kappa`` responds to a piecewise monotone input ``f`` by

* rising segments:   ``kappa <- max(kappa, gamma(f - s2))``
* falling segments:  ``kappa <- min(kappa, gamma(f - s1))``

which confines ``kappa`` to the moving envelope
``[gamma(f - s2), gamma(f - s1)]``.  All update functions broadcast over
arrays of threshold pairs, so a full bank of plays driven by one input is
a handful of vectorized operations per segment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonMonotoneGamma, NonMonotoneTime, TimeOutOfRange

__all__ = [
    "RidgeFunction",
    "PiecewiseLinearInput",
    "play_envelope",
    "play_init",
    "play_step",
    "play_eval",
]


@dataclass(frozen=True, eq=False)
class RidgeFunction:
    """Nondecreasing, bounded ridge nonlinearity ``gamma``.

    Two families are provided: the default unit saturation
    ``gamma(x) = clip(x, -1, 1)`` and piecewise linear interpolation of a
    monotone table, held constant outside the table's span.

    Attributes
    ----------
    alpha : float
        Holder exponent used by approximation-rate predictions.
    bound : float
        ``sup |gamma|``.
    lipschitz : float
        Smallest Lipschitz constant of the tabulated values (1 for
        saturation).
    """

    breakpoints: np.ndarray | None = None
    values: np.ndarray | None = None
    alpha: float = 1.0
    bound: float = 1.0
    lipschitz: float = 1.0

    @classmethod
    def saturation(cls) -> "RidgeFunction":
        """Unit saturation ridge, the package-wide default."""
        return cls()

    @classmethod
    def from_table(cls, breakpoints, values, alpha: float = 1.0) -> "RidgeFunction":
        """Piecewise linear ridge through ``(breakpoints, values)``.

        Raises
        ------
        NonMonotoneGamma
            If the values are not nondecreasing.
        ValueError
            If the breakpoints are not strictly increasing or shapes differ.
        """
        bp = np.asarray(breakpoints, dtype=float)
        va = np.asarray(values, dtype=float)
        if bp.ndim != 1 or bp.shape != va.shape or bp.size < 1:
            raise ValueError("breakpoints and values must be 1-d arrays of equal length")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(np.diff(va) < 0):
            raise NonMonotoneGamma("ridge table values must be nondecreasing")
        lip = float(np.max(np.diff(va) / np.diff(bp))) if bp.size > 1 else 0.0
        return cls(
            breakpoints=bp,
            values=va,
            alpha=float(alpha),
            bound=float(np.max(np.abs(va))),
            lipschitz=lip,
        )

    @property
    def is_saturation(self) -> bool:
        return self.breakpoints is None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.breakpoints is None:
            return np.clip(x, -1.0, 1.0)
        return np.interp(x, self.breakpoints, self.values)


@dataclass(frozen=True, eq=False)
class PiecewiseLinearInput:
    """Continuous piecewise linear signal given by node times and values."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise NonMonotoneTime("input node times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.times[0]) or np.any(t > self.times[-1]):
            raise TimeOutOfRange("evaluation time outside the input's span")
        return np.interp(t, self.times, self.values)

    def refined(self, factor: int) -> "PiecewiseLinearInput":
        """Same signal, each segment split into ``factor`` equal pieces."""
        if factor < 1:
            raise ValueError("factor must be >= 1")
        if factor == 1 or self.times.size == 1:
            return self
        t0, t1 = self.times[:-1], self.times[1:]
        frac = np.arange(factor) / factor
        tt = (t0[:, None] + frac[None, :] * (t1 - t0)[:, None]).ravel()
        tt = np.append(tt, self.times[-1])
        return PiecewiseLinearInput(tt, self(tt))


def play_envelope(gamma: RidgeFunction, s1, s2, f):
    """Admissible band ``(gamma(f - s2), gamma(f - s1))`` at input value ``f``."""
    return gamma(f - np.asarray(s2)), gamma(f - np.asarray(s1))


def play_init(gamma: RidgeFunction, s1, s2, f0, seed=0.0):
    """Initial play state: the seed clamped into the envelope at ``f0``.

    ``s1``/``s2`` may be scalars or arrays of equal shape with
    ``s1 <= s2``; the returned state has the broadcast shape.
    """
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    if np.any(s1 > s2):
        raise ValueError("thresholds must satisfy s1 <= s2")
    lo, hi = play_envelope(gamma, s1, s2, f0)
    return np.clip(np.asarray(seed, dtype=float), lo, hi)


def play_step(gamma: RidgeFunction, s1, s2, kappa, f_old, f_new):
    """Advance the play state across one monotone input segment.

    Only the endpoint values of the segment matter: the update is rate
    independent and an equal-endpoint segment is a no-op.
    """
    lo, hi = play_envelope(gamma, s1, s2, f_new)
    if f_new > f_old:
        kappa = np.maximum(kappa, lo)
    elif f_new < f_old:
        kappa = np.minimum(kappa, hi)
    return np.clip(kappa, lo, hi)


def play_eval(gamma: RidgeFunction, s1, s2, f: PiecewiseLinearInput, t, seed=0.0):
    """Play state at time ``t`` under the input ``f`` started at ``f.times[0]``.

    Replays the node sequence of ``f`` up to ``t`` (linearity between nodes
    makes each inter-node segment monotone), then the partial segment that
    ends at ``t``.

    Raises
    ------
    TimeOutOfRange
        If ``t`` lies outside ``[f.times[0], f.times[-1]]``.
    """
    t = float(t)
    if t < f.times[0] or t > f.times[-1]:
        raise TimeOutOfRange("evaluation time outside the input's span")
    kappa = play_init(gamma, s1, s2, f.values[0], seed)
    f_old = f.values[0]
    for tk, fk in zip(f.times[1:], f.values[1:]):
        if tk >= t:
            break
        kappa = play_step(gamma, s1, s2, kappa, f_old, fk)
        f_old = fk
    f_t = float(f(t))
    return play_step(gamma, s1, s2, kappa, f_old, f_t)

"""Hysteresis operator banks over refined threshold meshes.

A bank holds one play state per mesh cell and channel, all driven by the
same scalar reduction ``a(X)`` of the plant state.  Pairing the states
with a parameter field gives the operator output

    y(t) = b(X) @ [ sum_k kappa_ik(t) * mu_ik * area_ik ]_i

and freezing time gives a plain matrix acting on flattened parameter
values, whose adjoint (with respect to the area inner product) is the
gradient direction used by the adaptive laws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import LevelMismatch, NonMonotoneTime
from .kernels import PiecewiseLinearInput, RidgeFunction, play_init, play_step
from .mesh import (
    DistributedParameter,
    MeshLevel,
    TriDomain,
    project_analytic,
    refine,
    restrict,
)

__all__ = [
    "Scalarizer",
    "Mixer",
    "OperatorBank",
    "OperatorMatrix",
    "RateTable",
    "rate_experiment",
]


@dataclass(frozen=True, eq=False)
class Scalarizer:
    """Scalar reduction ``a(X)`` that drives every play in a bank."""

    fn: Callable[[np.ndarray], float]
    label: str = "custom"

    @classmethod
    def coordinate(cls, index: int) -> "Scalarizer":
        return cls(lambda X: float(X[index]), f"x[{index}]")

    @classmethod
    def linear(cls, weights) -> "Scalarizer":
        w = np.asarray(weights, dtype=float)
        return cls(lambda X: float(w @ X), "linear")

    def __call__(self, X) -> float:
        return float(self.fn(np.asarray(X, dtype=float)))


@dataclass(frozen=True, eq=False)
class Mixer:
    """State-dependent output mixing ``b(X)``, a ``(q, n_channels)`` matrix."""

    fn: Callable[[np.ndarray], np.ndarray]
    shape: tuple[int, int]

    @classmethod
    def constant(cls, matrix) -> "Mixer":
        m = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls(lambda X: m, (m.shape[0], m.shape[1]))

    def __call__(self, X) -> np.ndarray:
        out = np.atleast_2d(np.asarray(self.fn(X), dtype=float))
        if out.shape != self.shape:
            raise ValueError(f"mixer returned shape {out.shape}, declared {self.shape}")
        return out


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Frozen time snapshot of a bank: ``y = W @ mu.flat()``.

    ``W`` already contains the mixing ``b(X(t))``, the play states and the
    cell areas, so columns are indexed like the flattened parameter.
    """

    W: np.ndarray
    domain: TriDomain
    levels: tuple[int, ...]

    def apply(self, mu: DistributedParameter) -> np.ndarray:
        if mu.domain != self.domain or mu.levels != self.levels:
            raise LevelMismatch("parameter layout does not match operator matrix")
        return self.W @ mu.flat()

    def adjoint(self, z) -> DistributedParameter:
        """Field ``nu`` with ``<nu, dmu>_area = z @ W @ dmu.flat()`` for all ``dmu``.

        Dividing the plain transpose by cell areas converts the euclidean
        gradient into the area-inner-product representer.
        """
        z = np.asarray(z, dtype=float)
        g = self.W.T @ z
        vals, pos = [], 0
        for j in self.levels:
            n = 4**j
            areas = refine(self.domain, j).areas
            vals.append(g[pos : pos + n] / areas)
            pos += n
        return DistributedParameter(self.domain, self.levels, tuple(vals))


class OperatorBank:
    """Play states on one or more mesh levels, driven by ``a(X)``.

    The bank is the only stateful object in the operator layer.  It
    advances strictly forward in time; provisional advances (predictor
    evaluations) are handled by ``checkpoint``/``restore`` tokens.
    """

    def __init__(
        self,
        domain: TriDomain,
        levels,
        gamma: RidgeFunction | tuple[RidgeFunction, ...],
        scalarizer: Scalarizer,
        mixer: Mixer,
        X0,
        t0: float = 0.0,
        seed: float = 0.0,
    ):
        self.domain = domain
        self.levels = tuple(int(j) for j in np.atleast_1d(levels))
        n_ch = len(self.levels)
        if isinstance(gamma, RidgeFunction):
            gamma = (gamma,) * n_ch
        if len(gamma) != n_ch:
            raise ValueError("need one ridge function per channel")
        if mixer.shape[1] != n_ch:
            raise ValueError("mixer width must equal the number of channels")
        self.gammas = tuple(gamma)
        self.scalarizer = scalarizer
        self.mixer = mixer
        self.meshes: tuple[MeshLevel, ...] = tuple(refine(domain, j) for j in self.levels)
        X0 = np.asarray(X0, dtype=float)
        self.t = float(t0)
        self.f = self.scalarizer(X0)
        self.X = X0.copy()
        self.kappas = [
            play_init(g, m.centroids[:, 0], m.centroids[:, 1], self.f, seed)
            for g, m in zip(self.gammas, self.meshes)
        ]

    @property
    def n_channels(self) -> int:
        return len(self.levels)

    def advance(self, X, t: float) -> None:
        """Drive the bank along one monotone input segment to time ``t``.

        A repeated call at the current time with the same scalar input is
        a no-op; moving backwards (or redefining the present) raises
        :class:`NonMonotoneTime`.
        """
        t = float(t)
        X = np.asarray(X, dtype=float)
        f_new = self.scalarizer(X)
        if t < self.t:
            raise NonMonotoneTime(f"bank at t={self.t}, cannot advance to t={t}")
        if t == self.t and f_new != self.f:
            raise NonMonotoneTime("conflicting input value at the bank's current time")
        if f_new != self.f:
            for i, (g, m) in enumerate(zip(self.gammas, self.meshes)):
                self.kappas[i] = play_step(
                    g, m.centroids[:, 0], m.centroids[:, 1], self.kappas[i], self.f, f_new
                )
        self.t = t
        self.f = f_new
        self.X = X.copy()

    def drive(self, f: PiecewiseLinearInput) -> None:
        """Advance along every node of a piecewise linear scalar input.

        Only meaningful for banks whose scalarizer reads a 1-d state.
        """
        for tk, fk in zip(f.times, f.values):
            if tk > self.t or fk != self.f:
                self.advance(np.atleast_1d(fk), tk)

    def channel_weights(self, i: int) -> np.ndarray:
        """Row weights ``kappa * area`` of channel ``i``."""
        return self.kappas[i] * self.meshes[i].areas

    def output(self, mu: DistributedParameter) -> np.ndarray:
        """Per-channel pairing ``[ sum_k kappa v area ]_i`` with a field."""
        if mu.domain != self.domain or mu.levels != self.levels:
            raise LevelMismatch("parameter layout does not match bank layout")
        return np.array(
            [self.channel_weights(i) @ v for i, v in enumerate(mu.channel_values)]
        )

    def apply(self, mu: DistributedParameter) -> np.ndarray:
        """Mixed output ``b(X(t)) @ output(mu)``, a length-q vector."""
        return self.mixer(self.X) @ self.output(mu)

    def matrix(self) -> OperatorMatrix:
        bX = self.mixer(self.X)
        blocks = [np.outer(bX[:, i], self.channel_weights(i)) for i in range(self.n_channels)]
        return OperatorMatrix(np.concatenate(blocks, axis=1), self.domain, self.levels)

    def checkpoint(self):
        return (self.t, self.f, self.X.copy(), [k.copy() for k in self.kappas])

    def restore(self, token) -> None:
        self.t, self.f, X, kappas = token
        self.X = X.copy()
        self.kappas = [k.copy() for k in kappas]


@dataclass(frozen=True)
class RateTable:
    """Coarse-versus-fine operator errors across levels.

    ``errors[i]`` is the max-over-time output difference between the bank
    at ``levels[i]`` (with the restricted field) and the bank at
    ``fine_level``; ``constants[i] = errors[i] * 2**((alpha+1)*levels[i])``
    rescales by the predicted decay.
    """

    levels: tuple[int, ...]
    errors: tuple[float, ...]
    constants: tuple[float, ...]
    slope: float
    fine_level: int
    alpha: float

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("j,e_j,C_j\n")
            for j, e, c in zip(self.levels, self.errors, self.constants):
                fh.write(f"{j},{e:.17g},{c:.17g}\n")
            fh.write(f"slope,{self.slope:.17g},\n")


def rate_experiment(
    domain: TriDomain,
    gamma: RidgeFunction,
    f: PiecewiseLinearInput,
    mu,
    fine_level: int,
    levels,
) -> RateTable:
    """Measure the multilevel consistency error of the scalar operator.

    The field at ``fine_level`` (given directly or projected from a
    callable) is restricted to each coarser level; banks on all levels are
    driven by the same input and the outputs compared at every input node.

    Returns
    -------
    RateTable
        Errors, rescaled constants and the least-squares slope of
        ``log2(e_j)`` against ``j``.
    """
    levels = tuple(sorted(int(j) for j in np.atleast_1d(levels)))
    if levels and levels[-1] >= fine_level:
        raise LevelMismatch("comparison levels must be coarser than fine_level")
    if isinstance(mu, DistributedParameter):
        if mu.levels != (fine_level,):
            raise LevelMismatch("field must be single-channel at fine_level")
        mu_fine = mu
    else:
        mu_fine = project_analytic(domain, mu, fine_level)

    all_levels = levels + (fine_level,)
    fields = {j: restrict(mu_fine, j).channel_values[0] for j in all_levels}
    meshes = {j: refine(domain, j) for j in all_levels}
    kappas = {
        j: play_init(gamma, meshes[j].centroids[:, 0], meshes[j].centroids[:, 1], f.values[0])
        for j in all_levels
    }

    outputs = {j: np.empty(f.times.size) for j in all_levels}
    f_old = f.values[0]
    for n, fk in enumerate(f.values):
        for j in all_levels:
            m = meshes[j]
            if n > 0:
                kappas[j] = play_step(
                    gamma, m.centroids[:, 0], m.centroids[:, 1], kappas[j], f_old, fk
                )
            outputs[j][n] = (kappas[j] * m.areas) @ fields[j]
        f_old = fk

    errors = tuple(
        float(np.max(np.abs(outputs[j] - outputs[fine_level]))) for j in levels
    )
    constants = tuple(
        e * 2.0 ** ((gamma.alpha + 1.0) * j) for e, j in zip(errors, levels)
    )
    slope = float(np.polyfit(levels, np.log2(errors), 1)[0]) if len(levels) > 1 else np.nan
    return RateTable(levels, errors, constants, slope, fine_level, gamma.alpha)

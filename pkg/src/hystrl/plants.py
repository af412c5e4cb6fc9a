"""Plant models: a two-degree-of-freedom pitching and plunging wing
section in robotic (mass, Coriolis, potential) form, transforms that put
PD-compensated robotic dynamics into a linear first-order core with the
hysteresis force on the input channel, and the contraction-horizon
estimate for the fixed-point argument behind well-posedness.

State convention: the first-order state is ``X = (q, qdot)`` stacked, so
scalar reductions such as "pitch angle" index the same coordinate in both
the robotic and the transformed simulation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NotHurwitz
from .integrator import HistoryRHS, TrajectoryView
from .kernels import RidgeFunction
from .mesh import DistributedParameter
from .operator import Mixer, OperatorBank, Scalarizer

__all__ = [
    "LinearCore",
    "AeroChannel",
    "RoboticForm",
    "WingParams",
    "wing_model",
    "FeedbackLinearization",
    "regulator_transform",
    "tracking_transform",
    "FirstOrderPlant",
    "RoboticPlant",
    "ContractionEstimate",
    "contraction_horizon",
]


@dataclass(frozen=True, eq=False)
class LinearCore:
    """Linear drift and input injection ``Xdot = A X + B (...)``."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
            raise ValueError("A must be square and B row-compatible with A")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]

    @property
    def spectral_abscissa(self) -> float:
        return float(np.max(np.linalg.eigvals(self.A).real))


@dataclass(frozen=True, eq=False)
class AeroChannel:
    """Hysteretic force entering a robotic plant.

    The plays are driven by state coordinate ``scalar_index`` of the
    stacked state ``(q, qdot)``; channel outputs enter the generalized
    force balance through ``force_matrix`` (one column per channel).
    """

    gamma: RidgeFunction
    mu: DistributedParameter
    scalar_index: int
    force_matrix: np.ndarray
    seed: float = 0.0

    @property
    def n_channels(self) -> int:
        return self.force_matrix.shape[1]


@dataclass(frozen=True, eq=False)
class RoboticForm:
    """Mechanical system ``M(q) qdd + C(q, qd) qd + grad V(q) = Q_a + tau``.

    ``coriolis`` may fold in viscous damping; ``potential`` must be the
    antiderivative of ``grad_potential`` so energy audits make sense.
    """

    n_dof: int
    mass: Callable[[np.ndarray], np.ndarray]
    coriolis: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_potential: Callable[[np.ndarray], np.ndarray]
    potential: Callable[[np.ndarray], float]
    aero: AeroChannel | None = None

    def energy(self, q, qd) -> float:
        q = np.asarray(q, dtype=float)
        qd = np.asarray(qd, dtype=float)
        return float(0.5 * qd @ self.mass(q) @ qd + self.potential(q))

    def aero_mixer(self) -> Mixer:
        """Output mixing ``b(X) = M(q)^-1 @ force_matrix`` of the
        transformed plant."""
        if self.aero is None:
            raise ValueError("robotic form has no aero channel")
        n, F = self.n_dof, self.aero.force_matrix

        def fn(X):
            return np.linalg.solve(self.mass(X[:n]), F)

        return Mixer(fn, (n, F.shape[1]))

    def make_bank(self, levels, X0, t0: float = 0.0) -> OperatorBank:
        """Play bank for the aero channel at the given mesh levels."""
        if self.aero is None:
            raise ValueError("robotic form has no aero channel")
        a = self.aero
        return OperatorBank(
            a.mu.domain,
            levels,
            a.gamma,
            Scalarizer.coordinate(a.scalar_index),
            self.aero_mixer(),
            X0,
            t0,
            a.seed,
        )


@dataclass(frozen=True)
class WingParams:
    """Section constants of the pitch-plunge wing.

    ``x_theta`` is the static-unbalance offset coupling plunge and pitch;
    the flap matrix maps two flap deflections to generalized forces.
    """

    mass: float = 1.0
    x_theta: float = 0.2
    inertia_theta: float = 0.1
    k_h: float = 100.0
    k_theta: float = 25.0
    c_h: float = 1.0
    c_theta: float = 0.4
    flap_matrix: tuple = ((1.0, 0.0), (0.0, 1.0))

    def flap_forces(self, beta) -> np.ndarray:
        return np.asarray(self.flap_matrix, dtype=float) @ np.asarray(beta, dtype=float)


def wing_model(
    params: WingParams,
    mode: str = "simplified",
    aero: AeroChannel | None = None,
    include_gravity: bool = False,
    g: float = 9.81,
) -> RoboticForm:
    """Robotic form of the wing section, ``q = (h, theta)``.

    ``simplified`` freezes the pitch coupling at small angles (constant
    mass matrix, no Coriolis term); ``full`` keeps the ``cos theta``
    coupling and the quadratic-velocity term it induces.  Gravity adds
    ``m g (h + x_theta sin theta)`` to the potential (h measured upward)
    and is off by default.
    """
    m, xt, it = params.mass, params.x_theta, params.inertia_theta
    K = np.diag([params.k_h, params.k_theta])
    D = np.diag([params.c_h, params.c_theta])

    if mode == "simplified":
        M0 = np.array([[m, m * xt], [m * xt, m * xt**2 + it]])

        def mass(q):
            return M0

        def coriolis(q, qd):
            return D

        def grad_potential(q):
            return K @ q

        def potential(q):
            return float(0.5 * q @ K @ q)

    elif mode == "full":

        def mass(q):
            c = np.cos(q[1])
            return np.array([[m, m * xt * c], [m * xt * c, m * xt**2 + it]])

        def coriolis(q, qd):
            return np.array([[0.0, -m * xt * np.sin(q[1]) * qd[1]], [0.0, 0.0]]) + D

        def grad_potential(q):
            gp = K @ q
            if include_gravity:
                gp = gp + np.array([m * g, m * g * xt * np.cos(q[1])])
            return gp

        def potential(q):
            v = float(0.5 * q @ K @ q)
            if include_gravity:
                v += m * g * (q[0] + xt * np.sin(q[1]))
            return v

    else:
        raise ValueError("mode must be 'simplified' or 'full'")

    return RoboticForm(2, mass, coriolis, grad_potential, potential, aero)


@dataclass(frozen=True, eq=False)
class FeedbackLinearization:
    """Linear error core plus the torque that realizes it.

    ``tau(t, q, qd, u)`` is the generalized force which, applied to the
    robotic plant, makes the stacked state obey
    ``Xdot = A X + B (M(q)^-1 Q_a + u)``.
    """

    core: LinearCore
    tau: Callable[[float, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _companion_core(G0: np.ndarray, G1: np.ndarray) -> LinearCore:
    n = G0.shape[0]
    A = np.block([[np.zeros((n, n)), np.eye(n)], [-G0, -G1]])
    B = np.vstack([np.zeros((n, n)), np.eye(n)])
    core = LinearCore(A, B)
    if core.spectral_abscissa >= 0:
        raise NotHurwitz("PD gains leave the error dynamics unstable")
    return core


def regulator_transform(form: RoboticForm, G0, G1) -> FeedbackLinearization:
    """Cancel the robotic nonlinearities and impose PD error dynamics
    around the origin.

    Raises
    ------
    NotHurwitz
        If the companion matrix built from the gains is not Hurwitz.
    """
    G0 = np.atleast_2d(np.asarray(G0, dtype=float))
    G1 = np.atleast_2d(np.asarray(G1, dtype=float))
    core = _companion_core(G0, G1)

    def tau(t, q, qd, u):
        v = u - G1 @ qd - G0 @ q
        return form.mass(q) @ v + form.coriolis(q, qd) @ qd + form.grad_potential(q)

    return FeedbackLinearization(core, tau)


def tracking_transform(form: RoboticForm, G0, G1, reference) -> FeedbackLinearization:
    """Same error dynamics, but for the tracking error against a smooth
    reference ``reference(t) -> (q_d, qd_d, qdd_d)``."""
    G0 = np.atleast_2d(np.asarray(G0, dtype=float))
    G1 = np.atleast_2d(np.asarray(G1, dtype=float))
    core = _companion_core(G0, G1)

    def tau(t, q, qd, u):
        q_d, qd_d, qdd_d = reference(t)
        v = u + qdd_d - G1 @ (qd - qd_d) - G0 @ (q - q_d)
        return form.mass(q) @ v + form.coriolis(q, qd) @ qd + form.grad_potential(q)

    return FeedbackLinearization(core, tau)


class FirstOrderPlant(HistoryRHS):
    """Transformed plant ``Xdot = A X + B (b(X) (h a(X)) mu + u)``.

    The play bank initializes lazily at the first evaluation so the same
    instance definition can be reused across initial conditions.
    """

    def __init__(self, core: LinearCore, form: RoboticForm | None = None, u=None, levels=None):
        self.core = core
        self.form = form
        self.u = u
        self.levels = levels
        self.bank: OperatorBank | None = None
        if form is not None and form.aero is not None and levels is None:
            self.levels = form.aero.mu.levels

    def __call__(self, t: float, view: TrajectoryView) -> np.ndarray:
        X = view.final
        drive = np.zeros(self.core.n_inputs)
        if self.form is not None and self.form.aero is not None:
            if self.bank is None:
                self.bank = self.form.make_bank(self.levels, X, t)
            else:
                self.bank.advance(X, t)
            drive = drive + self.bank.apply(self.form.aero.mu)
        if self.u is not None:
            drive = drive + np.asarray(self.u(t), dtype=float)
        return self.core.A @ X + self.core.B @ drive

    def checkpoint(self):
        return None if self.bank is None else self.bank.checkpoint()

    def restore(self, token) -> None:
        if token is not None and self.bank is not None:
            self.bank.restore(token)


class RoboticPlant(HistoryRHS):
    """Robotic dynamics under an explicit generalized force
    ``tau(t, q, qd)``, with the hysteretic aero force if configured."""

    def __init__(self, form: RoboticForm, tau):
        self.form = form
        self.tau = tau
        self.bank: OperatorBank | None = None

    def __call__(self, t: float, view: TrajectoryView) -> np.ndarray:
        X = view.final
        n = self.form.n_dof
        q, qd = X[:n], X[n:]
        force = np.asarray(self.tau(t, q, qd), dtype=float)
        if self.form.aero is not None:
            if self.bank is None:
                self.bank = OperatorBank(
                    self.form.aero.mu.domain,
                    self.form.aero.mu.levels,
                    self.form.aero.gamma,
                    Scalarizer.coordinate(self.form.aero.scalar_index),
                    Mixer.constant(self.form.aero.force_matrix),
                    X,
                    t,
                    self.form.aero.seed,
                )
            else:
                self.bank.advance(X, t)
            force = force + self.bank.apply(self.form.aero.mu)
        qdd = np.linalg.solve(
            self.form.mass(q),
            force - self.form.coriolis(q, qd) @ qd - self.form.grad_potential(q),
        )
        return np.concatenate([qd, qdd])

    def checkpoint(self):
        return None if self.bank is None else self.bank.checkpoint()

    def restore(self, token) -> None:
        if token is not None and self.bank is not None:
            self.bank.restore(token)


@dataclass(frozen=True)
class ContractionEstimate:
    """Step bound for the fixed-point construction of local solutions."""

    delta: float
    growth_rate: float
    window: float
    confinement: float
    contraction: float


def contraction_horizon(
    core: LinearCore,
    window: float,
    radius: float,
    kernel_lipschitz: float,
    mu_norm: float,
    drift_bound: float,
    forcing_bound: float,
) -> ContractionEstimate:
    """Largest safe step for the local solution map, with margin.

    ``growth_rate = |A| + |B| mu_norm kernel_lipschitz`` controls both how
    fast iterates can leave the radius-``radius`` ball around the anchor
    state and how much the hysteresis feedback amplifies differences;
    ``drift_bound`` and ``forcing_bound`` cap the inhomogeneous terms.
    The returned ``delta`` is 99 percent of the binding constraint and is
    nonincreasing in every bound.
    """
    if window <= 0 or radius <= 0:
        raise ValueError("window and radius must be positive")
    nA = float(np.linalg.norm(core.A, 2))
    nB = float(np.linalg.norm(core.B, 2))
    rate = nA + nB * mu_norm * kernel_lipschitz
    confinement = radius / (rate * radius + drift_bound + nB * forcing_bound)
    contraction = np.inf if rate == 0 else 1.0 / rate
    delta = 0.99 * min(window, confinement, contraction)
    return ContractionEstimate(float(delta), rate, window, float(confinement), float(contraction))

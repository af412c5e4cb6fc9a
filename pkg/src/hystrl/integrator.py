"""Fixed-step predictor-corrector integration for right-hand sides that
read the solution history.

The marching scheme is PECE Adams-Bashforth / Adams-Moulton of order 1,
2 or 4.  Right-hand sides receive a read-only trajectory view whose last
node is the evaluation state, so memory terms (hysteresis banks, history
integrals) see a consistent uniform grid.  Stateful right-hand sides
expose ``checkpoint``/``restore`` so the predictor evaluation at the next
node can be rolled back before the corrected value is committed.

High-order startup: a multistep scheme has no history at t0.  Order 4
runs bootstrap the first three nodes on a scratch grid with a refined
substep, which keeps the startup error below the bulk O(h^4) budget; the
order-2 ramp (Euler predictor, trapezoid corrector on the first step) is
already order neutral.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NaNDetected, RunDiverged, StartupUnderflow

__all__ = [
    "Trajectory",
    "TrajectoryView",
    "PCScheme",
    "HistoryRHS",
    "as_history_rhs",
    "PCStepper",
    "integrate",
]

_AB = {
    1: np.array([1.0]),
    2: np.array([1.5, -0.5]),
    3: np.array([23.0, -16.0, 5.0]) / 12.0,
    4: np.array([55.0, -59.0, 37.0, -9.0]) / 24.0,
}
_AM = {
    1: np.array([1.0]),
    2: np.array([0.5, 0.5]),
    3: np.array([5.0, 8.0, -1.0]) / 12.0,
    4: np.array([9.0, 19.0, -5.0, 1.0]) / 24.0,
}


@dataclass(frozen=True)
class PCScheme:
    """Predictor-corrector scheme of a fixed nominal order (1, 2 or 4)."""

    order: int = 2

    def __post_init__(self):
        if self.order not in (1, 2, 4):
            raise ValueError("supported orders are 1, 2 and 4")

    def predictor_weights(self, available: int) -> np.ndarray:
        """Adams-Bashforth weights, shortened while history accumulates."""
        return _AB[min(self.order, available)]

    def corrector_weights(self, available: int) -> np.ndarray:
        """Adams-Moulton weights one order above the predictor, capped."""
        return _AM[min(self.order, available + 1, 4)]


class TrajectoryView:
    """Read-only window onto a trajectory, optionally with a provisional
    tip node one step past the committed history."""

    __slots__ = ("_base", "_tip", "t0", "dt")

    def __init__(self, base: np.ndarray, tip, t0: float, dt: float):
        self._base = base
        self._tip = None if tip is None else np.asarray(tip, dtype=float)
        self.t0 = t0
        self.dt = dt

    @property
    def n_nodes(self) -> int:
        return self._base.shape[0] + (self._tip is not None)

    @property
    def t_final(self) -> float:
        return self.t0 + (self.n_nodes - 1) * self.dt

    @property
    def final(self) -> np.ndarray:
        """State at the view's last node (the evaluation state)."""
        return self._tip if self._tip is not None else self._base[-1]

    def states(self) -> np.ndarray:
        """All node states, shape (n_nodes, dim).  Copies only if a
        provisional tip is present."""
        if self._tip is None:
            return self._base
        return np.vstack([self._base, self._tip[None, :]])

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_nodes)


class Trajectory:
    """Append-only uniform-grid solution record."""

    def __init__(self, t0: float, dt: float, X0):
        if dt <= 0:
            raise ValueError("dt must be positive")
        X0 = np.asarray(X0, dtype=float)
        self.t0 = float(t0)
        self.dt = float(dt)
        self.dim = X0.size
        self._buf = np.empty((16, self.dim))
        self._buf[0] = X0
        self._n = 1

    @property
    def n_nodes(self) -> int:
        return self._n

    @property
    def t_final(self) -> float:
        return self.t0 + (self._n - 1) * self.dt

    @property
    def states(self) -> np.ndarray:
        return self._buf[: self._n]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self._n)

    @property
    def final(self) -> np.ndarray:
        return self._buf[self._n - 1]

    def append(self, X) -> None:
        if self._n == self._buf.shape[0]:
            grown = np.empty((2 * self._buf.shape[0], self.dim))
            grown[: self._n] = self._buf[: self._n]
            self._buf = grown
        self._buf[self._n] = X
        self._n += 1

    def view(self) -> TrajectoryView:
        return TrajectoryView(self._buf[: self._n], None, self.t0, self.dt)

    def view_extended(self, tip) -> TrajectoryView:
        """View with one provisional node appended after the history."""
        return TrajectoryView(self._buf[: self._n], tip, self.t0, self.dt)

    def to_csv(self, path, extra=None) -> None:
        """Write ``t, x1..xm`` rows, plus named extra columns if given."""
        extra = extra or {}
        names = ["t"] + [f"x{i + 1}" for i in range(self.dim)] + list(extra)
        cols = [self.times, *self.states.T] + [np.asarray(extra[k]) for k in extra]
        with open(path, "w") as fh:
            fh.write(",".join(names) + "\n")
            for row in zip(*cols):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


class HistoryRHS:
    """Base class for right-hand sides ``F(t, view) -> dX/dt``.

    Subclasses holding internal memory must override ``checkpoint`` and
    ``restore`` so provisional evaluations can be rolled back.
    """

    def __call__(self, t: float, view: TrajectoryView) -> np.ndarray:
        raise NotImplementedError

    def checkpoint(self):
        return None

    def restore(self, token) -> None:
        pass


class _FunctionRHS(HistoryRHS):
    def __init__(self, fn):
        self._fn = fn

    def __call__(self, t, view):
        return np.asarray(self._fn(t, view), dtype=float)


def as_history_rhs(f) -> HistoryRHS:
    """Wrap a plain ``f(t, view)`` callable; pass HistoryRHS through."""
    if isinstance(f, HistoryRHS):
        return f
    if callable(f):
        return _FunctionRHS(f)
    raise TypeError("right-hand side must be callable")


class PCStepper:
    """Marches one trajectory with a PECE scheme, holding the derivative
    history the multistep formulas need.

    The step sequence is predict (Adams-Bashforth over committed
    derivatives), evaluate at the provisional node under a checkpoint,
    correct (Adams-Moulton), commit, then re-evaluate on the committed
    node so stateful memory advances along the accepted path.
    """

    def __init__(self, rhs, traj: Trajectory, scheme: PCScheme):
        self.rhs = as_history_rhs(rhs)
        self.traj = traj
        self.scheme = scheme
        self._fh: list[np.ndarray] = [np.asarray(self.rhs(traj.t_final, traj.view()), dtype=float)]

    def seed_history(self, states) -> None:
        """Commit externally computed startup nodes, advancing the memory."""
        for X in states:
            self.traj.append(X)
            t = self.traj.t_final
            self._fh.append(np.asarray(self.rhs(t, self.traj.view()), dtype=float))
        del self._fh[: -self.scheme.order]

    def step(self) -> np.ndarray:
        traj, dt = self.traj, self.traj.dt
        t_next = traj.t_final + dt
        Xn = traj.final

        ab = self.scheme.predictor_weights(len(self._fh))
        X_pred = Xn + dt * sum(w * f for w, f in zip(ab, self._fh[::-1]))

        token = self.rhs.checkpoint()
        F_pred = np.asarray(self.rhs(t_next, traj.view_extended(X_pred)), dtype=float)
        self.rhs.restore(token)

        am = self.scheme.corrector_weights(len(self._fh))
        X_new = Xn + dt * (
            am[0] * F_pred + sum(w * f for w, f in zip(am[1:], self._fh[::-1]))
        )
        if not np.all(np.isfinite(X_new)):
            raise NaNDetected(f"nonfinite state at t={t_next}")

        traj.append(X_new)
        self._fh.append(np.asarray(self.rhs(t_next, traj.view()), dtype=float))
        del self._fh[: -self.scheme.order]
        return X_new


def _refined_startup(rhs, traj: Trajectory, stepper: PCStepper) -> None:
    """Compute the first three nodes on a scratch grid with substep
    ``dt / R``, then replay them through the committed memory."""
    dt = traj.dt
    R = max(4, int(np.ceil(4.0 / np.sqrt(dt))))
    token = rhs.checkpoint()
    scratch = Trajectory(traj.t0, dt / R, traj.final)
    fine = PCStepper(rhs, scratch, PCScheme(2))
    for _ in range(3 * R):
        fine.step()
    rhs.restore(token)
    stepper.seed_history([scratch.states[k * R].copy() for k in (1, 2, 3)])


def integrate(
    rhs,
    X0,
    dt: float,
    n_steps: int,
    scheme: PCScheme = PCScheme(2),
    t0: float = 0.0,
    abort_norm: float | None = None,
) -> Trajectory:
    """Integrate ``n_steps`` fixed steps from ``X0`` and return the
    trajectory with ``n_steps + 1`` nodes.

    Parameters
    ----------
    rhs : HistoryRHS or callable
        Derivative map ``F(t, view)``; the view's last node is the
        evaluation state.
    abort_norm : float, optional
        Raise :class:`RunDiverged` once ``max|X|`` exceeds this bound.

    Raises
    ------
    StartupUnderflow
        If ``n_steps`` is smaller than the startup window of the scheme.
    NaNDetected
        On a nonfinite state.
    """
    rhs = as_history_rhs(rhs)
    if n_steps < scheme.order - 1:
        raise StartupUnderflow(
            f"order {scheme.order} needs at least {scheme.order - 1} steps, got {n_steps}"
        )
    traj = Trajectory(t0, dt, X0)
    stepper = PCStepper(rhs, traj, scheme)
    if scheme.order == 4:
        _refined_startup(rhs, traj, stepper)
    while traj.n_nodes < n_steps + 1:
        X = stepper.step()
        if abort_norm is not None and np.max(np.abs(X)) > abort_norm:
            raise RunDiverged(f"state norm exceeded {abort_norm} at t={traj.t_final}")
    return traj
